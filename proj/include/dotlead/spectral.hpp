#pragma once

// Exact spectral analysis of the dot--two-lead Hamiltonian
//   h(v) = E0 |S><S| + h_- + h_+ + v Pi_- + tau * (couplings S <-> 0_-, 0_+).
//
// Everything here is closed-form in the Feshbach scalar
//   G(z; v) = E0 - z + tau^2 * (zeta1(z - v) + zeta1(z)),
// whose real zeros off the two bands [-2,2] and [-2+v,2+v] are the discrete
// eigenvalues of h(v).  G(.;v) is strictly decreasing on each allowed
// interval (slope <= -1), so bracketed bisection is unconditionally safe.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dotlead/zeta.hpp"

namespace dotlead {

struct ModelParams {
    double e0;
    double tau;

    ModelParams(double e0_, double tau_) : e0(e0_), tau(tau_) {
        if (!(e0 >= 10.0))
            throw std::invalid_argument("ModelParams: require E0 >= 10");
        if (!(tau != 0.0 && std::abs(tau) <= 1.0))
            throw std::invalid_argument("ModelParams: require 0 < |tau| <= 1");
    }
};

struct CriticalBiases {
    double vc1;
    double vc2;
};

enum class Lead { left, right };

enum class BoundInterval { above_left_band, between_bands };

// Closed-form bound state: psi(S) = psi_dot,
// psi(m_-) = tau * psi_dot * decay_left^{m+1},
// psi(m_+) = tau * psi_dot * decay_right^{m+1}, unit norm.
struct BoundState {
    double v;
    double lambda;
    BoundInterval interval;
    double psi_dot;
    double decay_left;
    double decay_right;
    double norm;

    double left_amp(int m) const { return tau_psi * std::pow(decay_left, m + 1); }
    double right_amp(int m) const { return tau_psi * std::pow(decay_right, m + 1); }

    double tau_psi = 0.0; // tau * psi_dot, cached
};

struct ThresholdData {
    double t_of_v;
    double gap;
};

namespace detail {

// Bisection on a strictly decreasing function; the bracket must satisfy
// f(lo) > 0 > f(hi).
template <class F>
double bisect_decreasing(F&& f, double lo, double hi, double xtol = 1e-12) {
    double flo = f(lo), fhi = f(hi);
    if (!(flo > 0.0) || !(fhi < 0.0))
        throw std::runtime_error("bisect_decreasing: invalid bracket (monotonicity bug?)");
    for (int it = 0; it < 200 && (hi - lo) > xtol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

inline cplx g_function(cplx z, double v, const ModelParams& p) {
    return p.e0 - z + p.tau * p.tau * (zeta1(z - v) + zeta1(z));
}

// Real evaluation for x off both bands.
inline double g_function(double x, double v, const ModelParams& p) {
    return p.e0 - x + p.tau * p.tau * (zeta1(x - v) + zeta1(x));
}

// Boundary value G(E + i0 or E - i0; v); each zeta factor picks the edge
// limit only where its own argument lies inside (-2,2).
inline cplx g_function_edge(double e, Side side, double v, const ModelParams& p) {
    return p.e0 - e + p.tau * p.tau * (zeta1_limit(e - v, side) + zeta1_limit(e, side));
}

// G at the moving band edges, as functions of v:
//   g1(v) = G(2+v; v)   (top of the shifted band; zero at vc1)
//   g2(v) = G(-2+v; v)  (bottom of the shifted band; zero at vc2)
inline double g_at_upper_edge(double v, const ModelParams& p) {
    return p.e0 - 2.0 - v + p.tau * p.tau * (1.0 + zeta1(v + 2.0));
}

inline double g_at_lower_edge(double v, const ModelParams& p) {
    return p.e0 + 2.0 - v + p.tau * p.tau * (-1.0 + zeta1(v - 2.0));
}

inline CriticalBiases critical_biases(const ModelParams& p) {
    const double vc1 = detail::bisect_decreasing(
        [&](double v) { return g_at_upper_edge(v, p); }, 4.0, p.e0 + 4.0, 1e-14);
    const double vc2 = detail::bisect_decreasing(
        [&](double v) { return g_at_lower_edge(v, p); }, p.e0 - 1.0, p.e0 + 4.0, 1e-14);
    return {vc1, vc2};
}

struct EigenvalueResult {
    double lambda;
    BoundInterval interval;
};

inline std::optional<EigenvalueResult> find_eigenvalue(double v, const ModelParams& p,
                                                       const CriticalBiases& vc) {
    if (v < 0.0) throw std::invalid_argument("find_eigenvalue: bias must be >= 0");
    if (v < vc.vc1) {
        const double lo = v + 2.0 + 1e-12;
        const double hi = v + 2.0 + p.e0 + 10.0;
        const double lam = detail::bisect_decreasing(
            [&](double x) { return g_function(x, v, p); }, lo, hi);
        return EigenvalueResult{lam, BoundInterval::above_left_band};
    }
    if (v > vc.vc2) {
        const double lo = 2.0 + 1e-12;
        const double hi = v - 2.0 - 1e-12;
        const double lam = detail::bisect_decreasing(
            [&](double x) { return g_function(x, v, p); }, lo, hi);
        return EigenvalueResult{lam, BoundInterval::between_bands};
    }
    return std::nullopt;
}

inline std::optional<EigenvalueResult> find_eigenvalue(double v, const ModelParams& p) {
    return find_eigenvalue(v, p, critical_biases(p));
}

inline constexpr double threshold_floor = 1e-6;      // minimal |v - vc|
inline constexpr double decay_floor = 1e-8;          // minimal 1 - |decay|

inline BoundState bound_state(double v, const ModelParams& p, const CriticalBiases& vc) {
    if (std::abs(v - vc.vc1) < threshold_floor || std::abs(v - vc.vc2) < threshold_floor)
        throw std::runtime_error("bound_state: bias within the threshold proximity floor");
    const auto ev = find_eigenvalue(v, p, vc);
    if (!ev) throw std::runtime_error("bound_state: no discrete eigenvalue at this bias");
    const double lam = ev->lambda;
    const double zl = zeta1(lam - v);
    const double zr = zeta1(lam);
    if (std::abs(zl) > 1.0 - decay_floor || std::abs(zr) > 1.0 - decay_floor)
        throw std::runtime_error("bound_state: decay factor too close to 1 (threshold)");
    const double t2 = p.tau * p.tau;
    const double norm2 =
        1.0 + t2 * (zl * zl / (1.0 - zl * zl) + zr * zr / (1.0 - zr * zr));
    BoundState b;
    b.v = v;
    b.lambda = lam;
    b.interval = ev->interval;
    b.psi_dot = 1.0 / std::sqrt(norm2);
    b.decay_left = zl;
    b.decay_right = zr;
    b.norm = 1.0;
    b.tau_psi = p.tau * b.psi_dot;
    return b;
}

inline BoundState bound_state(double v, const ModelParams& p) {
    return bound_state(v, p, critical_biases(p));
}

// <m_lead | P_d(v) | m_lead> = |psi(m_lead)|^2.
inline double projection_matrix_element(int m, Lead lead, double v, const ModelParams& p) {
    const BoundState b = bound_state(v, p);
    const double a = (lead == Lead::left) ? b.left_amp(m) : b.right_amp(m);
    return a * a;
}

inline ThresholdData threshold_data(double v, const ModelParams& p, const CriticalBiases& vc) {
    const auto ev = find_eigenvalue(v, p, vc);
    if (!ev) throw std::runtime_error("threshold_data: no discrete eigenvalue at this bias");
    const double gap = (ev->interval == BoundInterval::above_left_band)
                           ? ev->lambda - (v + 2.0)
                           : (v - 2.0) - ev->lambda;
    return {std::sqrt(std::max(0.0, gap)), gap};
}

inline ThresholdData threshold_data(double v, const ModelParams& p) {
    return threshold_data(v, p, critical_biases(p));
}

// Descriptor of the resolvent column R(z)|S>:
//   R(z)|S> = (1/G)|S> - (tau/G) r_-(z-v)|0_-> - (tau/G) r_+(z)|0_+>,
// i.e. amplitude on m_- is lead_coeff * decay_left^{m+1} and likewise on m_+
// (using <m|r(z)|0> = -zeta1^{m+1}; the minus sign is folded into lead_coeff).
struct ResolventColumn {
    cplx dot_coeff;     // 1/G
    cplx lead_coeff;    // +tau/G  (so that amplitude(m) = lead_coeff * decay^{m+1})
    cplx decay_left;    // zeta1(z - v)
    cplx decay_right;   // zeta1(z)

    cplx left_amp(int m) const { return lead_coeff * detail::pow_int(decay_left, m + 1); }
    cplx right_amp(int m) const { return lead_coeff * detail::pow_int(decay_right, m + 1); }
};

inline constexpr double resolvent_pole_tol = 1e-10;

inline ResolventColumn resolvent_column_dot(cplx z, double v, const ModelParams& p) {
    const cplx zl = zeta1(z - v);
    const cplx zr = zeta1(z);
    const cplx g = p.e0 - z + p.tau * p.tau * (zl + zr);
    if (std::abs(g) < resolvent_pole_tol)
        throw std::runtime_error("resolvent_column_dot: z at a pole of 1/G");
    return {1.0 / g, p.tau / g, zl, zr};
}

// dF/dt for F(t,v) = G(t^2+v+2; v), used by the threshold asymptote below.
inline double dF_dt(double t, double v, const ModelParams& p) {
    const double t2 = p.tau * p.tau;
    return -2.0 * t +
           2.0 * t * t2 * (zeta1_deriv(2.0 + t * t) + zeta1_deriv(v + 2.0 + t * t));
}

// Most singular rank-one piece of P_d(v) near the first threshold:
//   P_a(v) = -(2 tau^2 t / dF_dt) r_-(2+t^2)|0_-><0_-| r_-(2+t^2),
// realized through its left-lead matrix elements
//   <m_-|P_a|n_-> = -(2 tau^2 t / dF_dt) * zeta1(2+t^2)^{m+n+2}.
struct ProjectionAsymptote {
    double prefactor;  // -(2 tau^2 t / dF_dt)
    double decay;      // zeta1(2 + t^2)

    double element(int m, int n) const {
        return prefactor * std::pow(decay, m + n + 2);
    }
};

inline ProjectionAsymptote projection_asymptote(double v, const ModelParams& p,
                                                const CriticalBiases& vc) {
    const ThresholdData td = threshold_data(v, p, vc);
    const double t = td.t_of_v;
    return {-2.0 * p.tau * p.tau * t / dF_dt(t, v, p), zeta1(2.0 + t * t)};
}

// Diagnostic row for the spectrum dump (CSV columns
// v, lambda, gap, psi_dot_sq, decay_left, decay_right).
struct SpectrumRow {
    double v, lambda, gap, psi_dot_sq, decay_left, decay_right;
    bool has_bound;
};

inline SpectrumRow spectrum_row(double v, const ModelParams& p, const CriticalBiases& vc) {
    SpectrumRow r{v, 0, 0, 0, 0, 0, false};
    const auto ev = find_eigenvalue(v, p, vc);
    if (!ev) return r;
    r.has_bound = true;
    r.lambda = ev->lambda;
    r.gap = threshold_data(v, p, vc).gap;
    if (std::abs(v - vc.vc1) >= threshold_floor && std::abs(v - vc.vc2) >= threshold_floor) {
        const BoundState b = bound_state(v, p, vc);
        r.psi_dot_sq = b.psi_dot * b.psi_dot;
        r.decay_left = b.decay_left;
        r.decay_right = b.decay_right;
    }
    return r;
}

} // namespace dotlead
