#pragma once

#include "gridswitch/case_model.hpp"

#include <Eigen/SparseCore>

#include <complex>
#include <cstdint>
#include <vector>

namespace gridswitch {

/// In-service flags for every switchable line, aligned with
/// switchable_lines(). The vector fully determines which branches are
/// energized; branch status_init is only the file's starting value.
struct TopologyStatus {
    std::vector<std::uint8_t> line_status;

    static TopologyStatus all_in(std::size_t n_lines) {
        return TopologyStatus{std::vector<std::uint8_t>(n_lines, 1)};
    }
    std::size_t size() const { return line_status.size(); }
    bool in_service(std::size_t k) const { return line_status[k] != 0; }
};

/// Per-branch pi-model admittances: s_from = v_f * conj(y_ff v_f + y_ft v_t),
/// s_to = v_t * conj(y_tf v_f + y_tt v_t). All zero for open branches.
struct BranchAdmittance {
    std::complex<double> y_ff{0.0, 0.0};
    std::complex<double> y_ft{0.0, 0.0};
    std::complex<double> y_tf{0.0, 0.0};
    std::complex<double> y_tt{0.0, 0.0};
};

struct AdmittanceModel {
    Eigen::SparseMatrix<std::complex<double>> y_bus;  // n_bus x n_bus, per-unit
    std::vector<BranchAdmittance> branch_admittances;
};

struct ConnectivityResult {
    bool connected = false;           // all load/gen buses reach the slack
    std::vector<int> component_of;    // dense bus position -> component id
                                      // (id = smallest bus position in component)
};

struct PowerFlowOptions {
    double tol = 1e-8;  // pu, infinity norm of the power mismatch
    int max_iter = 20;
};

struct PowerFlowSolution {
    std::vector<double> v_mag;    // pu; 0 for de-energized buses
    std::vector<double> v_ang;    // radians
    std::vector<double> p_gen_total;  // MW per generator, slack residual absorbed
    std::vector<std::complex<double>> s_from;  // MVA per branch
    std::vector<std::complex<double>> s_to;    // MVA per branch
    std::vector<double> p_loss_per_line;       // MW per branch
    double total_loss = 0.0;                   // MW
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;  // pu
    double slack_injection_mw = 0.0;
};

/// Assemble the nodal admittance matrix and per-branch quadruples for a
/// given switching status. Open lines contribute nothing; the row of a bus
/// isolated by switching holds only its shunt term.
AdmittanceModel build_admittance(const GridCase& grid, const TopologyStatus& status);

/// Connected components over in-service lines. connected is true iff every
/// bus with nonzero load or an in-service generator lies in the slack
/// bus's component.
ConnectivityResult check_connectivity(const GridCase& grid, const TopologyStatus& status);

struct BranchQuantities {
    std::vector<std::complex<double>> s_from;  // MVA
    std::vector<std::complex<double>> s_to;    // MVA
    std::vector<double> p_loss_per_line;       // MW
    double total_loss = 0.0;                   // MW
};

/// Complex branch flows and per-line losses from a converged voltage
/// profile. Open branches and branches between de-energized buses report
/// zeros.
BranchQuantities compute_branch_quantities(const GridCase& grid,
                                           const TopologyStatus& status,
                                           const std::vector<double>& v_mag,
                                           const std::vector<double>& v_ang);

/// Full Newton-Raphson AC power flow in polar form. Dispatch is fixed at
/// each generator's p_set; the slack bus absorbs losses and the residual.
/// Buses cut off from the slack by switching (necessarily without load or
/// in-service generation, or IslandedInput is thrown) are left de-energized
/// with v_mag = 0. A singular Jacobian or running out of iterations is
/// reported as converged = false, never as an exception.
PowerFlowSolution solve_newton_raphson(const GridCase& grid,
                                       const TopologyStatus& status,
                                       const PowerFlowOptions& options = {});

/// Total $/h generation cost of a solution (in-service units only).
double generation_cost(const GridCase& grid, const PowerFlowSolution& solution);

} // namespace gridswitch
