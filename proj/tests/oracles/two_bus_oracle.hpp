#pragma once

// Closed-form-style oracle for the two-bus case: slack at v1 = 1 pu, 0 rad,
// a single series line z = r + jx feeding a load s_load (pu). Solves the
// complex node equation v2 * conj((v1 - v2) / z) = s_load directly with a
// 2-unknown Newton iteration on (Re v2, Im v2), independent of the library
// solver's polar formulation.

#include <complex>

namespace gridswitch::testing {

struct TwoBusResult {
    std::complex<double> v2;
    double p_loss_pu;  // series loss |i|^2 * r
};

inline TwoBusResult two_bus_solve(double r, double x, double p_load_pu,
                                  double q_load_pu) {
    using cplx = std::complex<double>;
    const cplx z(r, x);
    const cplx v1(1.0, 0.0);
    const cplx s_load(p_load_pu, q_load_pu);

    double a = 1.0, b = 0.0;
    for (int it = 0; it < 200; ++it) {
        const cplx v2(a, b);
        const cplx i = (v1 - v2) / z;          // current delivered into bus 2
        const cplx g = v2 * std::conj(i) - s_load;  // want g = 0

        // numeric 2x2 Jacobian
        const double h = 1e-9;
        auto eval = [&](double aa, double bb) {
            const cplx vv(aa, bb);
            return vv * std::conj((v1 - vv) / z) - s_load;
        };
        const cplx ga = (eval(a + h, b) - eval(a - h, b)) / (2.0 * h);
        const cplx gb = (eval(a, b + h) - eval(a, b - h)) / (2.0 * h);
        const double j11 = ga.real(), j12 = gb.real();
        const double j21 = ga.imag(), j22 = gb.imag();
        const double det = j11 * j22 - j12 * j21;
        const double da = (-g.real() * j22 + g.imag() * j12) / det;
        const double db = (-j11 * g.imag() + j21 * g.real()) / det;
        a += da;
        b += db;
        if (std::abs(da) + std::abs(db) < 1e-14) break;
    }
    const cplx v2(a, b);
    const cplx i = (v1 - v2) / z;
    return {v2, std::norm(i) * r};
}

} // namespace gridswitch::testing
