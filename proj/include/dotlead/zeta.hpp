#pragma once

// Half-line lattice resolvent kernel.
//
// zeta1(z) = (z/2) * (1 - sqrt(1 - 4/z^2)) with the principal square root
// (cut along (-inf,0)).  It is the small root of  x^2 - z*x + 1 = 0, so
// zeta1 + 1/zeta1 = z, |zeta1| < 1 off the band [-2,2], and the surface
// element of the Dirichlet half-line Laplacian is
//   <0|(h - z)^{-1}|0> = -zeta1(z).
// Boundary values on the band are taken from above (E+i0) or below (E-i0).

#include <cmath>
#include <complex>
#include <stdexcept>

namespace dotlead {

using cplx = std::complex<double>;

enum class Side { above, below };

namespace detail {

inline cplx pow_int(cplx base, int n) {
    cplx r{1.0, 0.0};
    for (int i = 0; i < n; ++i) r *= base;
    return r;
}

} // namespace detail

// Real evaluation for |x| >= 2.  Stable against cancellation for large |x|.
inline double zeta1(double x) {
    const double a = std::abs(x);
    if (a < 2.0) throw std::domain_error("zeta1: real argument inside the band (-2,2)");
    // 2 / (|x| + sqrt((|x|-2)(|x|+2))), sign restored by oddness
    const double z = 2.0 / (a + std::sqrt((a - 2.0) * (a + 2.0)));
    return x < 0.0 ? -z : z;
}

// d/dx zeta1(x) for real |x| > 2.
inline double zeta1_deriv(double x) {
    const double a = std::abs(x);
    if (a <= 2.0) throw std::domain_error("zeta1_deriv: |x| must exceed 2");
    return 0.5 * (1.0 - a / std::sqrt((a - 2.0) * (a + 2.0)));
}

// Complex evaluation off the band.  Real arguments inside (-2,2) have no
// unambiguous value and are rejected; use the Side overload instead.
inline cplx zeta1(cplx z) {
    if (z.imag() == 0.0) {
        if (std::abs(z.real()) < 2.0)
            throw std::domain_error("zeta1: boundary value requires a Side flag");
        return cplx(zeta1(z.real()), 0.0);
    }
    // zeta1 = 2 / (z * (1 + w)), w = sqrt(1 - 4/z^2).  Re(w) >= 0 for the
    // principal branch, so the denominator never suffers cancellation.
    const cplx w = std::sqrt(1.0 - 4.0 / (z * z));
    return 2.0 / (z * (1.0 + w));
}

// Boundary value zeta1(e +- i0) for e in [-2,2]:  e/2 -+ i sqrt(1 - e^2/4).
// With E = 2 cos k this is exp(-ik) from above, so that
// Im <0|(h - E - i0)^{-1}|0> = Im(-zeta1(E+i0)) = sin k > 0.
inline cplx zeta1_edge(double e, Side side) {
    if (std::abs(e) > 2.0) throw std::domain_error("zeta1_edge: |e| must not exceed 2");
    const double im = std::sqrt(std::max(0.0, 1.0 - 0.25 * e * e));
    return {0.5 * e, side == Side::above ? -im : im};
}

// One-sided limit valid for any real x: band interior uses the side flag,
// outside the band the value is real and side-independent.
inline cplx zeta1_limit(double x, Side side) {
    if (std::abs(x) < 2.0) return zeta1_edge(x, side);
    return cplx(zeta1(x), 0.0);
}

// <m|(h - z)^{-1}|n> for the Dirichlet half-line lead, m,n >= 0:
//   zeta1/(zeta1^2-1) * (zeta1^{|m-n|} - zeta1^{m+n+2});
// for n = 0 this telescopes to -zeta1^{m+1}.
inline cplx lead_resolvent_element(int m, int n, cplx zeta) {
    if (m < 0 || n < 0) throw std::domain_error("lead_resolvent_element: negative site index");
    if (m == 0 || n == 0) return -detail::pow_int(zeta, m + n + 1);
    const cplx z2 = zeta * zeta;
    return zeta / (z2 - 1.0) *
           (detail::pow_int(zeta, std::abs(m - n)) - detail::pow_int(zeta, m + n + 2));
}

inline cplx lead_resolvent_at(int m, int n, cplx z) {
    return lead_resolvent_element(m, n, zeta1(z));
}

inline cplx lead_resolvent_at(int m, int n, double e, Side side) {
    return lead_resolvent_element(m, n, zeta1_limit(e, side));
}

} // namespace dotlead
