#include "reference_powerflow.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace gridswitch::testing {

namespace {

using cplx = std::complex<double>;

struct Model {
    std::size_t n = 0;
    std::size_t slack = 0;
    std::vector<double> p_spec, q_spec;  // pu
    std::vector<int> is_pv;              // 1 if magnitude pinned (non-slack)
    std::vector<double> v_pin;
    std::vector<cplx> shunt;
    struct Line { std::size_t f, t; cplx yff, yft, ytf, ytt; };
    std::vector<Line> lines;
};

Model build(const GridCase& grid, const TopologyStatus& status) {
    Model m;
    m.n = grid.n_bus();
    m.slack = grid.slack_pos();
    m.p_spec.assign(m.n, 0.0);
    m.q_spec.assign(m.n, 0.0);
    m.is_pv.assign(m.n, 0);
    m.v_pin.assign(m.n, 1.0);
    m.shunt.assign(m.n, cplx(0, 0));

    for (std::size_t i = 0; i < m.n; ++i) {
        m.p_spec[i] = -grid.buses[i].p_load / grid.base_mva;
        m.q_spec[i] = -grid.buses[i].q_load / grid.base_mva;
        m.shunt[i] = cplx(grid.buses[i].g_shunt, grid.buses[i].b_shunt) / grid.base_mva;
    }
    std::vector<int> has_gen(m.n, 0);
    for (const Generator& g : grid.generators) {
        if (!g.status) continue;
        std::size_t b = grid.bus_pos(g.bus);
        m.p_spec[b] += g.p_set / grid.base_mva;
        m.q_spec[b] += g.q_set / grid.base_mva;
        if (!has_gen[b]) m.v_pin[b] = g.v_set;
        has_gen[b] = 1;
    }
    for (std::size_t i = 0; i < m.n; ++i)
        if (grid.buses[i].kind == BusKind::PV && has_gen[i] && i != m.slack)
            m.is_pv[i] = 1;
    if (!has_gen[m.slack]) m.v_pin[m.slack] = grid.buses[m.slack].v_mag_init;

    constexpr double d2r = std::numbers::pi / 180.0;
    for (std::size_t k = 0; k < grid.n_branch(); ++k) {
        if (!status.in_service(k)) continue;
        const Branch& br = grid.branches[k];
        Model::Line ln;
        ln.f = grid.bus_pos(br.from_bus);
        ln.t = grid.bus_pos(br.to_bus);
        cplx ys = 1.0 / cplx(br.r, br.x);
        cplx ysh(0.0, br.b_charging / 2.0);
        cplx tap = std::polar(br.tap_ratio, br.phase_shift * d2r);
        ln.yff = (ys + ysh) / (br.tap_ratio * br.tap_ratio);
        ln.yft = -ys / std::conj(tap);
        ln.ytf = -ys / tap;
        ln.ytt = ys + ysh;
        m.lines.push_back(ln);
    }
    return m;
}

// injections at every bus from per-line stamps plus shunts
void injections(const Model& m, const std::vector<cplx>& v, std::vector<cplx>& s) {
    std::vector<cplx> current(m.n, cplx(0, 0));
    for (const auto& ln : m.lines) {
        current[ln.f] += ln.yff * v[ln.f] + ln.yft * v[ln.t];
        current[ln.t] += ln.ytf * v[ln.f] + ln.ytt * v[ln.t];
    }
    for (std::size_t i = 0; i < m.n; ++i) current[i] += m.shunt[i] * v[i];
    for (std::size_t i = 0; i < m.n; ++i) s[i] = v[i] * std::conj(current[i]);
}

} // namespace

ReferenceSolution reference_solve(const GridCase& grid, const TopologyStatus& status,
                                  double tol, int max_iter) {
    Model m = build(grid, status);
    const std::size_t n = m.n;

    // unknowns: angle for every non-slack bus, magnitude for every PQ bus
    std::vector<int> ai(n, -1), vi(n, -1);
    int na = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (i != m.slack) ai[i] = na++;
    int nv = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (i != m.slack && !m.is_pv[i]) vi[i] = nv++;
    const int dim = na + nv;

    std::vector<double> vm(n, 1.0), va(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        vm[i] = (i == m.slack || m.is_pv[i]) ? m.v_pin[i] : 1.0;
        va[i] = 0.0;
    }
    va[m.slack] = grid.buses[m.slack].v_ang_init * std::numbers::pi / 180.0;

    auto mismatch = [&](const Eigen::VectorXd& x, Eigen::VectorXd& f) {
        std::vector<cplx> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            double mag = vi[i] >= 0 ? x[na + vi[i]] : vm[i];
            double ang = ai[i] >= 0 ? x[ai[i]] : va[i];
            v[i] = std::polar(mag, ang);
        }
        std::vector<cplx> s(n);
        injections(m, v, s);
        for (std::size_t i = 0; i < n; ++i) {
            if (ai[i] >= 0) f[ai[i]] = m.p_spec[i] - s[i].real();
            if (vi[i] >= 0) f[na + vi[i]] = m.q_spec[i] - s[i].imag();
        }
    };

    Eigen::VectorXd x(dim);
    for (std::size_t i = 0; i < n; ++i) {
        if (ai[i] >= 0) x[ai[i]] = va[i];
        if (vi[i] >= 0) x[na + vi[i]] = vm[i];
    }

    ReferenceSolution out;
    Eigen::VectorXd f(dim), fp(dim), fm(dim);
    for (int iter = 0; iter <= max_iter; ++iter) {
        mismatch(x, f);
        if (f.lpNorm<Eigen::Infinity>() < tol) {
            out.converged = true;
            break;
        }
        if (iter == max_iter) break;
        // central-difference Jacobian of the calculated injections
        Eigen::MatrixXd jac(dim, dim);
        const double h = 1e-7;
        for (int c = 0; c < dim; ++c) {
            Eigen::VectorXd xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            mismatch(xp, fp);
            mismatch(xm, fm);
            jac.col(c) = (fp - fm) / (2.0 * h);  // d(spec - calc)/dx
        }
        Eigen::VectorXd dx = jac.fullPivLu().solve(-f);  // jac * dx = -f
        if (!dx.allFinite()) break;
        x += dx;
    }

    out.v_mag.assign(n, 0.0);
    out.v_ang.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        out.v_mag[i] = vi[i] >= 0 ? x[na + vi[i]] : vm[i];
        out.v_ang[i] = ai[i] >= 0 ? x[ai[i]] : va[i];
    }
    return out;
}

} // namespace gridswitch::testing
