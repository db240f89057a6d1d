#include "gridswitch/powerflow.hpp"

#include "gridswitch/errors.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>

namespace gridswitch {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_status_size(const GridCase& grid, const TopologyStatus& status) {
    if (status.size() != grid.n_branch())
        throw DimensionMismatch("status length " + std::to_string(status.size()) +
                                " != branch count " + std::to_string(grid.n_branch()));
}

// Disjoint-set over dense bus positions.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
    }
    std::size_t find(std::size_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

struct BusPower {
    double p = 0.0;  // pu injection from in-service generators minus load
    double q = 0.0;
    bool has_gen = false;     // any in-service generator
    double v_set = 0.0;       // voltage setpoint of the first in-service gen
};

std::vector<BusPower> bus_injections(const GridCase& grid) {
    const double base = grid.base_mva;
    std::vector<BusPower> inj(grid.n_bus());
    for (std::size_t i = 0; i < grid.n_bus(); ++i) {
        inj[i].p = -grid.buses[i].p_load / base;
        inj[i].q = -grid.buses[i].q_load / base;
    }
    for (const Generator& gen : grid.generators) {
        if (!gen.status) continue;
        BusPower& bp = inj[grid.bus_pos(gen.bus)];
        bp.p += gen.p_set / base;
        bp.q += gen.q_set / base;
        if (!bp.has_gen) bp.v_set = gen.v_set;
        bp.has_gen = true;
    }
    return inj;
}

} // namespace

AdmittanceModel build_admittance(const GridCase& grid, const TopologyStatus& status) {
    check_status_size(grid, status);
    const std::size_t n = grid.n_bus();

    AdmittanceModel model;
    model.branch_admittances.resize(grid.n_branch());

    std::vector<Eigen::Triplet<std::complex<double>>> triplets;
    triplets.reserve(4 * grid.n_branch() + n);

    for (std::size_t k = 0; k < grid.n_branch(); ++k) {
        if (!status.in_service(k)) continue;  // open lines contribute nothing
        const Branch& br = grid.branches[k];
        const std::complex<double> y_s = 1.0 / std::complex<double>(br.r, br.x);
        const std::complex<double> y_sh(0.0, br.b_charging / 2.0);
        const std::complex<double> tap =
            std::polar(br.tap_ratio, br.phase_shift * kDegToRad);

        BranchAdmittance& ba = model.branch_admittances[k];
        ba.y_ff = (y_s + y_sh) / (br.tap_ratio * br.tap_ratio);
        ba.y_ft = -y_s / std::conj(tap);
        ba.y_tf = -y_s / tap;
        ba.y_tt = y_s + y_sh;

        const int f = static_cast<int>(grid.bus_pos(br.from_bus));
        const int t = static_cast<int>(grid.bus_pos(br.to_bus));
        triplets.emplace_back(f, f, ba.y_ff);
        triplets.emplace_back(f, t, ba.y_ft);
        triplets.emplace_back(t, f, ba.y_tf);
        triplets.emplace_back(t, t, ba.y_tt);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const Bus& bus = grid.buses[i];
        if (bus.g_shunt != 0.0 || bus.b_shunt != 0.0)
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(i),
                                  std::complex<double>(bus.g_shunt / grid.base_mva,
                                                       bus.b_shunt / grid.base_mva));
    }

    model.y_bus.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    model.y_bus.setFromTriplets(triplets.begin(), triplets.end());
    return model;
}

ConnectivityResult check_connectivity(const GridCase& grid, const TopologyStatus& status) {
    check_status_size(grid, status);
    const std::size_t n = grid.n_bus();

    UnionFind uf(n);
    for (std::size_t k = 0; k < grid.n_branch(); ++k) {
        if (!status.in_service(k)) continue;
        uf.unite(grid.bus_pos(grid.branches[k].from_bus),
                 grid.bus_pos(grid.branches[k].to_bus));
    }

    ConnectivityResult result;
    result.component_of.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        result.component_of[i] = static_cast<int>(uf.find(i));

    std::vector<bool> needs_power(n, false);
    for (std::size_t i = 0; i < n; ++i)
        needs_power[i] = grid.buses[i].p_load != 0.0 || grid.buses[i].q_load != 0.0;
    for (const Generator& gen : grid.generators)
        if (gen.status) needs_power[grid.bus_pos(gen.bus)] = true;

    const int slack_comp = result.component_of[grid.slack_pos()];
    result.connected = true;
    for (std::size_t i = 0; i < n; ++i)
        if (needs_power[i] && result.component_of[i] != slack_comp) {
            result.connected = false;
            break;
        }
    return result;
}

BranchQuantities compute_branch_quantities(const GridCase& grid,
                                           const TopologyStatus& status,
                                           const std::vector<double>& v_mag,
                                           const std::vector<double>& v_ang) {
    check_status_size(grid, status);
    AdmittanceModel model = build_admittance(grid, status);

    BranchQuantities bq;
    bq.s_from.assign(grid.n_branch(), {0.0, 0.0});
    bq.s_to.assign(grid.n_branch(), {0.0, 0.0});
    bq.p_loss_per_line.assign(grid.n_branch(), 0.0);

    for (std::size_t k = 0; k < grid.n_branch(); ++k) {
        if (!status.in_service(k)) continue;
        const Branch& br = grid.branches[k];
        const std::size_t f = grid.bus_pos(br.from_bus);
        const std::size_t t = grid.bus_pos(br.to_bus);
        const std::complex<double> v_f = std::polar(v_mag[f], v_ang[f]);
        const std::complex<double> v_t = std::polar(v_mag[t], v_ang[t]);
        const BranchAdmittance& ba = model.branch_admittances[k];
        // de-energized branches fall out naturally: both end voltages are 0
        bq.s_from[k] = v_f * std::conj(ba.y_ff * v_f + ba.y_ft * v_t) * grid.base_mva;
        bq.s_to[k] = v_t * std::conj(ba.y_tf * v_f + ba.y_tt * v_t) * grid.base_mva;
        bq.p_loss_per_line[k] = bq.s_from[k].real() + bq.s_to[k].real();
        bq.total_loss += bq.p_loss_per_line[k];
    }
    return bq;
}

PowerFlowSolution solve_newton_raphson(const GridCase& grid,
                                       const TopologyStatus& status,
                                       const PowerFlowOptions& options) {
    check_status_size(grid, status);
    const std::size_t n = grid.n_bus();
    const std::size_t slack = grid.slack_pos();

    const ConnectivityResult conn = check_connectivity(grid, status);
    if (!conn.connected)
        throw IslandedInput("load or generation outside the slack component");

    const int slack_comp = conn.component_of[slack];
    std::vector<bool> energized(n);
    for (std::size_t i = 0; i < n; ++i)
        energized[i] = conn.component_of[i] == slack_comp;

    const std::vector<BusPower> inj = bus_injections(grid);

    // Bus classification on the energized component. A PV bus without an
    // in-service generator has no voltage setpoint and is treated as PQ.
    enum class Kind { Dead, Slack, PV, PQ };
    std::vector<Kind> kind(n, Kind::Dead);
    for (std::size_t i = 0; i < n; ++i) {
        if (!energized[i]) continue;
        if (i == slack) kind[i] = Kind::Slack;
        else if (grid.buses[i].kind == BusKind::PV && inj[i].has_gen) kind[i] = Kind::PV;
        else kind[i] = Kind::PQ;
    }

    // Unknown ordering: angles of all non-slack energized buses, then
    // magnitudes of PQ buses.
    std::vector<int> theta_idx(n, -1), vm_idx(n, -1);
    int n_theta = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (kind[i] == Kind::PV || kind[i] == Kind::PQ)
            theta_idx[i] = n_theta++;
    int n_vm = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (kind[i] == Kind::PQ) vm_idx[i] = n_vm++;
    const int n_eq = n_theta + n_vm;

    // Warm start from the case file; PV and slack magnitudes pinned to the
    // generator setpoint.
    Eigen::VectorXd vm(n), va(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!energized[i]) {
            vm[static_cast<Eigen::Index>(i)] = 0.0;
            va[static_cast<Eigen::Index>(i)] = 0.0;
            continue;
        }
        const Bus& bus = grid.buses[i];
        double v0 = bus.v_mag_init > 0.0 ? bus.v_mag_init : 1.0;
        if ((kind[i] == Kind::PV || kind[i] == Kind::Slack) && inj[i].has_gen &&
            inj[i].v_set > 0.0)
            v0 = inj[i].v_set;
        vm[static_cast<Eigen::Index>(i)] = v0;
        va[static_cast<Eigen::Index>(i)] = bus.v_ang_init * kDegToRad;
    }

    const AdmittanceModel model = build_admittance(grid, status);
    const auto& ybus = model.y_bus;

    Eigen::VectorXcd v(n);
    Eigen::VectorXd p_calc(n), q_calc(n);
    auto eval_power = [&]() {
        for (std::size_t i = 0; i < n; ++i)
            v[static_cast<Eigen::Index>(i)] =
                std::polar(vm[static_cast<Eigen::Index>(i)],
                           va[static_cast<Eigen::Index>(i)]);
        Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
        p_calc = s.real();
        q_calc = s.imag();
    };

    auto max_mismatch = [&]() {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (kind[i] == Kind::PV || kind[i] == Kind::PQ) {
                double dp = inj[i].p - p_calc[static_cast<Eigen::Index>(i)];
                worst = std::max(worst, std::abs(dp));
            }
            if (kind[i] == Kind::PQ) {
                double dq = inj[i].q - q_calc[static_cast<Eigen::Index>(i)];
                worst = std::max(worst, std::abs(dq));
            }
        }
        return worst;
    };

    PowerFlowSolution sol;
    sol.iterations = 0;

    bool failed = false;
    double mismatch = 0.0;
    while (true) {
        eval_power();
        mismatch = max_mismatch();
        if (!std::isfinite(mismatch)) { failed = true; break; }
        if (mismatch < options.tol) break;
        if (sol.iterations >= options.max_iter) { failed = true; break; }

        // residual: specified minus calculated injection
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_eq);
        for (std::size_t i = 0; i < n; ++i) {
            if (theta_idx[i] >= 0)
                rhs[theta_idx[i]] = inj[i].p - p_calc[static_cast<Eigen::Index>(i)];
            if (vm_idx[i] >= 0)
                rhs[n_theta + vm_idx[i]] = inj[i].q - q_calc[static_cast<Eigen::Index>(i)];
        }

        // Jacobian of the calculated injections in polar coordinates
        std::vector<Eigen::Triplet<double>> jt;
        jt.reserve(static_cast<std::size_t>(ybus.nonZeros()) * 4);
        for (int col = 0; col < ybus.outerSize(); ++col) {
            for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(ybus, col);
                 it; ++it) {
                const std::size_t i = static_cast<std::size_t>(it.row());
                const std::size_t j = static_cast<std::size_t>(it.col());
                if (kind[i] == Kind::Dead || kind[j] == Kind::Dead) continue;
                const double g = it.value().real();
                const double b = it.value().imag();
                const double vi = vm[static_cast<Eigen::Index>(i)];
                const double vj = vm[static_cast<Eigen::Index>(j)];
                if (i == j) {
                    const double pi = p_calc[static_cast<Eigen::Index>(i)];
                    const double qi = q_calc[static_cast<Eigen::Index>(i)];
                    if (theta_idx[i] >= 0) {
                        jt.emplace_back(theta_idx[i], theta_idx[i], -qi - b * vi * vi);
                        if (vm_idx[i] >= 0)
                            jt.emplace_back(theta_idx[i], n_theta + vm_idx[i],
                                            pi / vi + g * vi);
                    }
                    if (vm_idx[i] >= 0) {
                        jt.emplace_back(n_theta + vm_idx[i], theta_idx[i],
                                        pi - g * vi * vi);
                        jt.emplace_back(n_theta + vm_idx[i], n_theta + vm_idx[i],
                                        qi / vi - b * vi);
                    }
                } else {
                    const double th = va[static_cast<Eigen::Index>(i)] -
                                      va[static_cast<Eigen::Index>(j)];
                    const double a_ij = g * std::cos(th) + b * std::sin(th);
                    const double b_ij = g * std::sin(th) - b * std::cos(th);
                    if (theta_idx[i] >= 0 && theta_idx[j] >= 0)
                        jt.emplace_back(theta_idx[i], theta_idx[j], vi * vj * b_ij);
                    if (theta_idx[i] >= 0 && vm_idx[j] >= 0)
                        jt.emplace_back(theta_idx[i], n_theta + vm_idx[j], vi * a_ij);
                    if (vm_idx[i] >= 0 && theta_idx[j] >= 0)
                        jt.emplace_back(n_theta + vm_idx[i], theta_idx[j],
                                        -vi * vj * a_ij);
                    if (vm_idx[i] >= 0 && vm_idx[j] >= 0)
                        jt.emplace_back(n_theta + vm_idx[i], n_theta + vm_idx[j],
                                        vi * b_ij);
                }
            }
        }

        Eigen::SparseMatrix<double> jac(n_eq, n_eq);
        jac.setFromTriplets(jt.begin(), jt.end());
        jac.makeCompressed();

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(jac);
        if (lu.info() != Eigen::Success) { failed = true; break; }  // singular Jacobian
        Eigen::VectorXd dx = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !dx.allFinite()) { failed = true; break; }

        for (std::size_t i = 0; i < n; ++i) {
            if (theta_idx[i] >= 0) va[static_cast<Eigen::Index>(i)] += dx[theta_idx[i]];
            if (vm_idx[i] >= 0)
                vm[static_cast<Eigen::Index>(i)] += dx[n_theta + vm_idx[i]];
        }
        ++sol.iterations;
    }

    sol.converged = !failed;
    sol.max_mismatch = mismatch;
    sol.v_mag.assign(n, 0.0);
    sol.v_ang.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        sol.v_mag[i] = vm[static_cast<Eigen::Index>(i)];
        sol.v_ang[i] = va[static_cast<Eigen::Index>(i)];
    }

    if (!sol.converged) {
        sol.p_gen_total.assign(grid.n_gen(), 0.0);
        sol.s_from.assign(grid.n_branch(), {0.0, 0.0});
        sol.s_to.assign(grid.n_branch(), {0.0, 0.0});
        sol.p_loss_per_line.assign(grid.n_branch(), 0.0);
        return sol;
    }

    BranchQuantities bq = compute_branch_quantities(grid, status, sol.v_mag, sol.v_ang);
    sol.s_from = std::move(bq.s_from);
    sol.s_to = std::move(bq.s_to);
    sol.p_loss_per_line = std::move(bq.p_loss_per_line);
    sol.total_loss = bq.total_loss;

    // Slack generation: converged injection plus local load, split across
    // the slack bus's in-service units in proportion to p_max.
    eval_power();
    const double slack_gen_mw =
        p_calc[static_cast<Eigen::Index>(slack)] * grid.base_mva +
        grid.buses[slack].p_load;
    sol.slack_injection_mw = slack_gen_mw;

    sol.p_gen_total.assign(grid.n_gen(), 0.0);
    double slack_pmax_sum = 0.0;
    int slack_units = 0;
    for (const Generator& gen : grid.generators)
        if (gen.status && grid.bus_pos(gen.bus) == slack) {
            slack_pmax_sum += std::max(gen.p_max, 0.0);
            ++slack_units;
        }
    for (std::size_t g = 0; g < grid.n_gen(); ++g) {
        const Generator& gen = grid.generators[g];
        if (!gen.status) continue;
        if (grid.bus_pos(gen.bus) == slack) {
            const double share = slack_pmax_sum > 0.0
                                     ? std::max(gen.p_max, 0.0) / slack_pmax_sum
                                     : 1.0 / slack_units;
            sol.p_gen_total[g] = slack_gen_mw * share;
        } else {
            sol.p_gen_total[g] = gen.p_set;
        }
    }
    return sol;
}

double generation_cost(const GridCase& grid, const PowerFlowSolution& solution) {
    double total = 0.0;
    for (std::size_t g = 0; g < grid.n_gen(); ++g)
        if (grid.generators[g].status)
            total += grid.generators[g].cost.eval(solution.p_gen_total[g]);
    return total;
}

} // namespace gridswitch
