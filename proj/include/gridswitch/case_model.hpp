#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace gridswitch {

enum class BusKind { PQ, PV, Slack };

/// One network bus. Loads and shunts are in physical units (MW / MVAr at
/// 1 pu voltage); voltage fields are per-unit except v_ang_init (degrees).
struct Bus {
    int id = 0;
    BusKind kind = BusKind::PQ;
    double p_load = 0.0;   // MW
    double q_load = 0.0;   // MVAr
    double g_shunt = 0.0;  // MW consumed at V = 1 pu
    double b_shunt = 0.0;  // MVAr injected at V = 1 pu
    double v_mag_init = 1.0;
    double v_ang_init = 0.0;  // degrees
    double base_kv = 0.0;
    double v_max = 1.1;
    double v_min = 0.9;
};

/// One branch (line or transformer) in the standard pi model.
/// tap_ratio 0 in the file means 1.0 (no off-nominal tap).
struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;           // pu
    double x = 0.0;           // pu
    double b_charging = 0.0;  // pu, total line charging
    double rate_a = 0.0;      // MVA, 0 = unlimited
    double tap_ratio = 1.0;
    double phase_shift = 0.0;  // degrees
    bool status_init = true;
};

/// Polynomial generation cost, $/h as a function of output in MW,
/// coefficients highest degree first.
struct CostPolynomial {
    std::vector<double> coefficients{0.0};

    double eval(double p_mw) const {
        double v = 0.0;
        for (double c : coefficients) v = v * p_mw + c;
        return v;
    }
};

struct Generator {
    int bus = 0;
    double p_set = 0.0;  // MW
    double q_set = 0.0;  // MVAr
    double v_set = 1.0;  // pu
    double p_max = 0.0;  // MW
    double p_min = 0.0;  // MW
    bool status = true;
    CostPolynomial cost;
};

/// Immutable parsed network. bus_index maps external bus ids to dense
/// positions 0..n_bus-1 in file order; all cross-references are resolved
/// at parse time.
struct GridCase {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::unordered_map<int, std::size_t> bus_index;

    std::size_t n_bus() const { return buses.size(); }
    std::size_t n_branch() const { return branches.size(); }
    std::size_t n_gen() const { return generators.size(); }

    std::size_t bus_pos(int external_id) const { return bus_index.at(external_id); }

    /// Dense position of the slack bus. Valid iff validate() reports no
    /// slack issues.
    std::size_t slack_pos() const;
};

bool operator==(const Bus&, const Bus&);
bool operator==(const Branch&, const Branch&);
bool operator==(const CostPolynomial&, const CostPolynomial&);
bool operator==(const Generator&, const Generator&);
bool operator==(const GridCase&, const GridCase&);

/// Validation findings; issues are data, not failures.
struct Issue {
    enum class Code {
        NoSlack,
        MultipleSlack,
        BadVoltageBand,   // v_min >= v_max
        BadInitVoltage,   // v_mag_init <= 0
        ZeroReactance,    // branch with x == 0
        NegativeResistance,
        NegativeRating,
        DispatchOutOfBounds,  // in-service gen with p_set outside [p_min, p_max]
        EmptyCostPolynomial,
        NonFiniteCost,
    };
    Code code;
    std::size_t index = 0;  // bus/branch/gen position where applicable
    std::string message;
};

/// Parse MATPOWER case text (baseMVA, bus, gen, branch, gencost subset).
/// Throws MalformedCase / MissingSection / DuplicateBusId.
GridCase parse_case(const std::string& text);

/// Load and parse a case file from disk. Throws CaseLoadError on I/O.
GridCase load_case(const std::string& path);

/// Check the Bus/Branch/Generator invariants; empty result means usable.
std::vector<Issue> validate(const GridCase& grid);

/// Branch positions eligible for switching, in file order. Every branch is
/// switchable, including those initially out of service; the position in
/// this list is the line index used by topology vectors and actions.
std::vector<std::size_t> switchable_lines(const GridCase& grid);

/// Emit the supported MATPOWER subset; parse(serialize_case(g)) == g.
std::string serialize_case(const GridCase& grid);

} // namespace gridswitch
