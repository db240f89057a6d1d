#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridswitch/case_model.hpp"
#include "gridswitch/errors.hpp"
#include "gridswitch/powerflow.hpp"
#include "gridswitch/rng.hpp"
#include "helpers.hpp"
#include "oracles/bfs_oracle.hpp"
#include "oracles/reference_powerflow.hpp"
#include "oracles/two_bus_oracle.hpp"

#include <cmath>
#include <complex>

using namespace gridswitch;
using namespace gridswitch::testing;

namespace {

TopologyStatus random_status(Rng& rng, std::size_t n, double p_open) {
    TopologyStatus st = TopologyStatus::all_in(n);
    for (auto& s : st.line_status)
        if (rng.uniform() < p_open) s = 0;
    return st;
}

} // namespace

TEST_CASE("two-bus admittance stamps") {
    GridCase grid = parse_case(kTwoBusCase);
    auto model = build_admittance(grid, TopologyStatus::all_in(1));
    std::complex<double> y(0.0, -10.0);  // 1/(j0.1)
    CHECK(std::abs(model.y_bus.coeff(0, 0) - y) < 1e-12);
    CHECK(std::abs(model.y_bus.coeff(1, 1) - y) < 1e-12);
    CHECK(std::abs(model.y_bus.coeff(0, 1) + y) < 1e-12);
    CHECK(std::abs(model.y_bus.coeff(1, 0) + y) < 1e-12);

    auto open_model = build_admittance(grid, TopologyStatus{{0}});
    CHECK(open_model.y_bus.nonZeros() == 0);
    CHECK(std::abs(open_model.branch_admittances[0].y_ff) == 0.0);
}

TEST_CASE("admittance matches independent per-branch stamp oracle on 118-bus") {
    GridCase grid = load_case(data_path("case118.m"));
    auto status = TopologyStatus::all_in(grid.n_branch());
    auto model = build_admittance(grid, status);

    // re-assemble densely from first principles
    const std::size_t n = grid.n_bus();
    std::vector<std::vector<std::complex<double>>> dense(
        n, std::vector<std::complex<double>>(n, {0.0, 0.0}));
    constexpr double d2r = 3.14159265358979323846 / 180.0;
    for (const Branch& br : grid.branches) {
        std::size_t f = grid.bus_pos(br.from_bus);
        std::size_t t = grid.bus_pos(br.to_bus);
        std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x);
        std::complex<double> ysh(0.0, br.b_charging / 2.0);
        std::complex<double> tap = std::polar(br.tap_ratio, br.phase_shift * d2r);
        dense[f][f] += (ys + ysh) / std::norm(tap);
        dense[f][t] += -ys / std::conj(tap);
        dense[t][f] += -ys / tap;
        dense[t][t] += ys + ysh;
    }
    for (std::size_t i = 0; i < n; ++i)
        dense[i][i] += std::complex<double>(grid.buses[i].g_shunt,
                                            grid.buses[i].b_shunt) / grid.base_mva;

    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            worst = std::max(worst, std::abs(model.y_bus.coeff(
                                        static_cast<int>(i), static_cast<int>(j)) -
                                    dense[i][j]));
    CHECK(worst < 1e-12);

    // sparsity pattern is symmetric: every stamped (i,j) has a (j,i) partner
    for (int k = 0; k < model.y_bus.outerSize(); ++k)
        for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(model.y_bus, k);
             it; ++it)
            if (std::abs(it.value()) > 0.0)
                CHECK(std::abs(model.y_bus.coeff(it.col(), it.row())) > 0.0);
}

TEST_CASE("dimension mismatch rejected") {
    GridCase grid = parse_case(kTwoBusCase);
    CHECK_THROWS_AS(build_admittance(grid, TopologyStatus{{1, 1}}), DimensionMismatch);
    CHECK_THROWS_AS(solve_newton_raphson(grid, TopologyStatus{{}}), DimensionMismatch);
}

TEST_CASE("two-bus solve matches the closed-form oracle") {
    GridCase grid = parse_case(kTwoBusCase);
    auto sol = solve_newton_raphson(grid, TopologyStatus::all_in(1));
    REQUIRE(sol.converged);
    CHECK(sol.iterations <= 5);
    CHECK(sol.max_mismatch < 1e-8);

    auto oracle = two_bus_solve(0.0, 0.1, 1.0, 0.0);
    CHECK(sol.v_mag[1] == doctest::Approx(std::abs(oracle.v2)).epsilon(1e-9));
    CHECK(sol.v_ang[1] == doctest::Approx(std::arg(oracle.v2)).epsilon(1e-9));
    // the closed form: |v2| = sqrt of the larger root of v^4 - v^2 + x^2 p^2...
    // for x=0.1, p=1: |v2|^2 = (1 + sqrt(1 - 0.04))/2
    double expected = std::sqrt((1.0 + std::sqrt(0.96)) / 2.0);
    CHECK(sol.v_mag[1] == doctest::Approx(expected).epsilon(1e-8));

    // lossless line: no active losses anywhere
    CHECK(sol.p_loss_per_line[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sol.total_loss == doctest::Approx(0.0).epsilon(1e-9));

    // slack covers exactly the load
    CHECK(sol.slack_injection_mw == doctest::Approx(100.0).epsilon(1e-8));
}

TEST_CASE("two-bus lossy solve reproduces oracle losses") {
    GridCase grid = parse_case(kTwoBusLossyCase);
    auto sol = solve_newton_raphson(grid, TopologyStatus::all_in(1));
    REQUIRE(sol.converged);
    auto oracle = two_bus_solve(0.01, 0.1, 1.0, 0.0);
    CHECK(sol.v_mag[1] == doctest::Approx(std::abs(oracle.v2)).epsilon(1e-9));
    CHECK(sol.p_loss_per_line[0] ==
          doctest::Approx(oracle.p_loss_pu * 100.0).epsilon(1e-8));
    // conservation: slack generation = load + loss
    CHECK(sol.p_gen_total[0] ==
          doctest::Approx(100.0 + sol.total_loss).epsilon(1e-8));
}

TEST_CASE("zero-load flat case converges in zero iterations") {
    std::string flat(kTwoBusCase);
    auto pos = flat.find("2  1  100");
    flat.replace(pos, 9, "2  1  0  ");
    GridCase grid = parse_case(flat);
    auto sol = solve_newton_raphson(grid, TopologyStatus::all_in(1));
    REQUIRE(sol.converged);
    CHECK(sol.iterations == 0);
    CHECK(sol.v_mag[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.v_ang[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("14-bus and 118-bus match the reference oracle") {
    for (const char* path : {"case14.m", "case118.m"}) {
        CAPTURE(path);
        GridCase grid = load_case(data_path(path));
        auto status = TopologyStatus::all_in(grid.n_branch());
        auto sol = solve_newton_raphson(grid, status);
        REQUIRE(sol.converged);
        CHECK(sol.iterations <= 10);
        CHECK(sol.max_mismatch < 1e-8);

        auto ref = reference_solve(grid, status);
        REQUIRE(ref.converged);
        for (std::size_t i = 0; i < grid.n_bus(); ++i) {
            CAPTURE(i);
            CHECK(std::abs(sol.v_mag[i] - ref.v_mag[i]) < 1e-3);
        }
    }
}

TEST_CASE("conservation holds on the 118-bus fixture") {
    GridCase grid = load_case(data_path("case118.m"));
    auto sol = solve_newton_raphson(grid, TopologyStatus::all_in(grid.n_branch()));
    REQUIRE(sol.converged);
    double gen = 0.0, load = 0.0;
    for (std::size_t g = 0; g < grid.n_gen(); ++g) gen += sol.p_gen_total[g];
    for (const Bus& b : grid.buses) load += b.p_load;
    CHECK(std::abs(gen - load - sol.total_loss) / grid.base_mva < 1e-6);
}

TEST_CASE("per-line loss is non-negative when r >= 0") {
    GridCase grid = load_case(data_path("case118.m"));
    Rng rng(20240811);
    int tested = 0;
    while (tested < 10) {
        auto status = random_status(rng, grid.n_branch(), 0.03);
        if (!check_connectivity(grid, status).connected) continue;
        auto sol = solve_newton_raphson(grid, status);
        if (!sol.converged) continue;
        for (std::size_t k = 0; k < grid.n_branch(); ++k)
            CHECK(sol.p_loss_per_line[k] >= -1e-9);
        ++tested;
    }
}

TEST_CASE("opening a line equals deleting the branch") {
    GridCase grid = load_case(data_path("case14.m"));
    const std::size_t victim = 5;  // a meshed line, grid stays connected
    TopologyStatus status = TopologyStatus::all_in(grid.n_branch());
    status.line_status[victim] = 0;
    auto sol_open = solve_newton_raphson(grid, status);
    REQUIRE(sol_open.converged);

    GridCase trimmed = grid;
    trimmed.branches.erase(trimmed.branches.begin() + victim);
    auto sol_del = solve_newton_raphson(trimmed, TopologyStatus::all_in(trimmed.n_branch()));
    REQUIRE(sol_del.converged);

    for (std::size_t i = 0; i < grid.n_bus(); ++i) {
        CHECK(std::abs(sol_open.v_mag[i] - sol_del.v_mag[i]) < 1e-10);
        CHECK(std::abs(sol_open.v_ang[i] - sol_del.v_ang[i]) < 1e-10);
    }
    CHECK(sol_open.s_from[victim] == std::complex<double>(0.0, 0.0));
    CHECK(sol_open.s_to[victim] == std::complex<double>(0.0, 0.0));
    CHECK(sol_open.p_loss_per_line[victim] == 0.0);
}

TEST_CASE("islanded input is rejected defensively") {
    GridCase grid = parse_case(kTwoBusCase);
    CHECK_THROWS_AS(solve_newton_raphson(grid, TopologyStatus{{0}}), IslandedInput);
}

TEST_CASE("connectivity on the three-bus ring") {
    GridCase grid = parse_case(kThreeBusRingCase);
    auto c1 = check_connectivity(grid, TopologyStatus{{1, 1, 0}});
    CHECK(c1.connected);
    auto c2 = check_connectivity(grid, TopologyStatus{{1, 0, 0}});
    CHECK(!c2.connected);
    CHECK(c2.component_of[0] != c2.component_of[2]);
    auto c3 = check_connectivity(grid, TopologyStatus{{0, 1, 1}});
    CHECK(c3.connected);
}

TEST_CASE("connectivity agrees with the BFS oracle on random topologies") {
    GridCase grid = load_case(data_path("case118.m"));
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        auto status = random_status(rng, grid.n_branch(), rng.uniform(0.0, 0.15));
        bool ours = check_connectivity(grid, status).connected;
        bool oracle = bfs_connected(grid, status);
        REQUIRE(ours == oracle);
    }
}

TEST_CASE("component labels partition consistently with BFS reachability") {
    GridCase grid = load_case(data_path("case118.m"));
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        auto status = random_status(rng, grid.n_branch(), 0.1);
        auto conn = check_connectivity(grid, status);
        auto seen = bfs_reachable_from_slack(grid, status);
        int slack_comp = conn.component_of[grid.slack_pos()];
        for (std::size_t i = 0; i < grid.n_bus(); ++i)
            CHECK((conn.component_of[i] == slack_comp) == (seen[i] != 0));
    }
}

TEST_CASE("de-energized pockets without load solve fine") {
    // strand bus 3 (zero load) of a 4-bus chain: slack-2-3 with spur 2-4
    std::string text = R"(
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0 0 0 1 1.0 0 138 1 1.1 0.9;
  2 1 50 0 0 0 1 1.0 0 138 1 1.1 0.9;
  3 1 0  0 0 0 1 1.0 0 138 1 1.1 0.9;
  4 1 30 0 0 0 1 1.0 0 138 1 1.1 0.9;
];
mpc.gen = [ 1 0 0 999 -999 1.0 100 1 999 0; ];
mpc.branch = [
  1 2 0.01 0.05 0 0 0 0 0 0 1 -360 360;
  2 3 0.01 0.05 0 0 0 0 0 0 1 -360 360;
  2 4 0.01 0.05 0 0 0 0 0 0 1 -360 360;
];
)";
    GridCase grid = parse_case(text);
    TopologyStatus status{{1, 0, 1}};
    CHECK(check_connectivity(grid, status).connected);
    auto sol = solve_newton_raphson(grid, status);
    REQUIRE(sol.converged);
    CHECK(sol.v_mag[2] == 0.0);  // dead bus reports zero voltage
    CHECK(sol.v_mag[1] > 0.9);
    CHECK(sol.s_from[1] == std::complex<double>(0.0, 0.0));
    double gen = sol.p_gen_total[0];
    CHECK(gen == doctest::Approx(80.0 + sol.total_loss).epsilon(1e-8));
}

TEST_CASE("unsolvable loading reports non-convergence, not an exception") {
    std::string heavy(kTwoBusCase);
    auto pos = heavy.find("2  1  100");
    heavy.replace(pos, 9, "2  1  900");  // far past the nose of the PV curve
    GridCase grid = parse_case(heavy);
    auto sol = solve_newton_raphson(grid, TopologyStatus::all_in(1));
    CHECK(!sol.converged);
}
