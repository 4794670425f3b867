#pragma once

// Stationary scattering states of h(v) and the steady-state / memory-term
// quadratures.
//
// A channel-gamma state of free lead energy eps = 2 cos k (total energy
// E = eps + v for the left channel, E = eps for the right one) is the
// Lippmann-Schwinger combination
//   Phi = phi - tau * phi(0_gamma) * R(E+i0)|S>,
// with phi the free sine wave sin(k(m+1)) in the source lead.  All
// components are closed-form in zeta1 and the Feshbach scalar G:
//   Phi(S)      = -tau sin k / G,
//   Phi(m_src)  = sin(k(m+1)) - (tau^2 sin k / G) e^{-ik(m+1)},
//   Phi(m_far)  = -(tau^2 sin k / G) zeta_far^{m+1}.
// Completeness fixes the normalization: with the k-substitution the spectral
// integrals read  sum_gamma int_0^pi dk (2/pi) (...) |<Phi~|psi>|^2.
//
// The occupation weight in these integrals is f_eq(eps) with eps the
// unbiased lead energy in both channels: the bias phases commute with
// f_eq(h_L), so the shifted total energy never enters the weight.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dotlead/lattice.hpp"
#include "dotlead/profiles.hpp"
#include "dotlead/propagate.hpp"

namespace dotlead {

enum class Channel { left, right };

inline constexpr double band_edge_tol = 1e-9;

struct ScatteringState {
    Channel channel;
    double eps;   // free lead energy in (-2,2)
    double k;     // eps = 2 cos k, k in (0,pi)
    double e_total;
    double v;
    cplx g;           // G(E + i0; v)
    cplx amp_scatter; // tau^2 sin k / G
    cplx amp_dot;     // -tau sin k / G
    cplx zeta_far;    // zeta1 at the far-lead argument

    cplx dot_comp() const { return amp_dot; }
    cplx source_comp(int m) const {
        const double ph = k * (m + 1);
        return cplx{std::sin(ph), 0.0} - amp_scatter * cplx{std::cos(ph), -std::sin(ph)};
    }
    cplx far_comp(int m) const { return -amp_scatter * detail::pow_int(zeta_far, m + 1); }

    // <Phi | psi> for a chain-ordered lattice vector.
    cplx overlap(const cvec& psi, const LatticeLayout& lay) const {
        cplx acc = std::conj(dot_comp()) * psi[lay.dot_index()];
        const bool src_left = (channel == Channel::left);
        const int n_src = src_left ? lay.n_left : lay.n_right;
        const int n_far = src_left ? lay.n_right : lay.n_left;
        for (int m = 0; m < n_src; ++m) {
            const int i = src_left ? lay.left_index(m) : lay.right_index(m);
            acc += std::conj(source_comp(m)) * psi[i];
        }
        for (int m = 0; m < n_far; ++m) {
            const int i = src_left ? lay.right_index(m) : lay.left_index(m);
            acc += std::conj(far_comp(m)) * psi[i];
        }
        return acc;
    }
};

inline ScatteringState scattering_state(Channel ch, double eps, double v,
                                        const ModelParams& p) {
    if (!(std::abs(eps) < 2.0 - band_edge_tol))
        throw std::domain_error("scattering_state: eps too close to the band edge");
    ScatteringState st;
    st.channel = ch;
    st.eps = eps;
    st.k = std::acos(0.5 * eps);
    st.v = v;
    st.e_total = (ch == Channel::left) ? eps + v : eps;
    const cplx zl = zeta1_limit(st.e_total - v, Side::above);
    const cplx zr = zeta1_limit(st.e_total, Side::above);
    st.g = p.e0 - st.e_total + p.tau * p.tau * (zl + zr);
    const double sk = std::sin(st.k);
    st.amp_scatter = p.tau * p.tau * sk / st.g;
    st.amp_dot = -p.tau * sk / st.g;
    st.zeta_far = (ch == Channel::left) ? zr : zl;
    return st;
}

// ---------------------------------------------------------------------------
// Quadrature grid in k per channel.

struct GridNode {
    Channel channel;
    double k;
    double eps;
    double weight;  // plain dk-weight; integrands carry the 2/pi factor
};

struct ChannelGrid {
    std::vector<GridNode> nodes;
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

inline void append_panel(std::vector<GridNode>& nodes, Channel ch, double a, double b, int n) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    for (int i = 0; i < n; ++i) {
        const double k = 0.5 * (a + b) + 0.5 * (b - a) * x[i];
        nodes.push_back({ch, k, 2.0 * std::cos(k), 0.5 * (b - a) * w[i]});
    }
}

} // namespace detail

// Resonance energy in the left channel: the unique zero of Re G(E+i0; v)
// inside the shifted band, present exactly for v in (vc1, vc2).
inline std::optional<double> resonance_eps(double v, const ModelParams& p) {
    auto re_g = [&](double e_tot) {
        return (p.e0 - e_tot +
                p.tau * p.tau * (zeta1_limit(e_tot - v, Side::above) + zeta1_limit(e_tot, Side::above)))
            .real();
    };
    const double lo = v - 2.0 + 1e-9, hi = v + 2.0 - 1e-9;
    if (!(re_g(lo) > 0.0 && re_g(hi) < 0.0)) return std::nullopt;
    const double e = detail::bisect_decreasing(re_g, lo, hi, 1e-13);
    return e - v;
}

// Composite Gauss-Legendre grid in k.  The Wigner-Weisskopf resonance has
// k-width ~ tau^2/2, far below a single panel's resolution, so panels are
// refined geometrically around it.
inline ChannelGrid build_channel_grid(double v, const ModelParams& p, int base_nodes = 64) {
    ChannelGrid grid;
    const auto add_channel = [&](Channel ch, std::optional<double> eps_res) {
        std::vector<double> edges{0.0, M_PI};
        if (eps_res && std::abs(*eps_res) < 2.0 - 1e-6) {
            const double kr = std::acos(0.5 * *eps_res);
            const double w0 = std::max(0.5 * p.tau * p.tau, 1e-7);
            for (double f : {1.0, 4.0, 16.0, 64.0, 256.0}) {
                for (double sgn : {-1.0, 1.0}) {
                    const double e = kr + sgn * f * w0;
                    if (e > 1e-12 && e < M_PI - 1e-12) edges.push_back(e);
                }
            }
        }
        std::sort(edges.begin(), edges.end());
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            if (edges[i + 1] - edges[i] > 1e-14)
                detail::append_panel(grid.nodes, ch, edges[i], edges[i + 1], base_nodes);
    };
    add_channel(Channel::left, resonance_eps(v, p));
    add_channel(Channel::right, std::nullopt);
    return grid;
}

// ---------------------------------------------------------------------------
// Spectral integrals.

// sum_gamma int dk (2/pi) |<Phi|psi>|^2 — equals ||psi||^2 minus the bound
// state weight (completeness).
inline double spectral_weight_total(double v, const ModelParams& p, const cvec& psi,
                                    const LatticeLayout& lay, const ChannelGrid& grid) {
    double acc = 0.0;
    for (const auto& nd : grid.nodes) {
        const ScatteringState st = scattering_state(nd.channel, nd.eps, v, p);
        acc += nd.weight * (2.0 / M_PI) * std::norm(st.overlap(psi, lay));
    }
    return acc;
}

// Memory term: <psi| Omega f_eq(h_L) P_ac(h_L) Omega^* |psi> at bias v, the
// coefficient of the final bound-state projection after the last crossing.
inline double memory_term(double v, const cvec& psi, const FermiSpec& fermi,
                          const ModelParams& p, const LatticeLayout& lay,
                          const ChannelGrid& grid, const CriticalBiases& vc) {
    if (!(v > vc.vc1 && v < vc.vc2))
        throw std::domain_error("memory_term: bias must lie in (vc1, vc2)");
    double acc = 0.0;
    for (const auto& nd : grid.nodes) {
        const ScatteringState st = scattering_state(nd.channel, nd.eps, v, p);
        acc += nd.weight * (2.0 / M_PI) * fermi(nd.eps) * std::norm(st.overlap(psi, lay));
    }
    return acc;
}

// Diagnostic row per node for external plotting.
struct ScatterDiagRow {
    Channel channel;
    double eps;
    double overlap_sq;
    double fermi_weight;
};

inline std::vector<ScatterDiagRow> scatter_diagnostic(double v, const cvec& psi,
                                                      const FermiSpec& fermi,
                                                      const ModelParams& p,
                                                      const LatticeLayout& lay,
                                                      const ChannelGrid& grid) {
    std::vector<ScatterDiagRow> rows;
    rows.reserve(grid.nodes.size());
    for (const auto& nd : grid.nodes) {
        const ScatteringState st = scattering_state(nd.channel, nd.eps, v, p);
        rows.push_back({nd.channel, nd.eps, std::norm(st.overlap(psi, lay)), fermi(nd.eps)});
    }
    return rows;
}

// Steady-state expectation Tr{Omega(0) f_eq(h_L) P_ac(h_L) Omega(0)^* A} at
// the final bias, for a rank-one A = |Psi><Psi| or a bond-current tag.
inline double steady_state_expectation(double v, const FermiSpec& fermi, const Observable& a,
                                       const ModelParams& p, const LatticeLayout& lay,
                                       const ChannelGrid& grid) {
    double acc = 0.0;
    for (const auto& nd : grid.nodes) {
        const ScatteringState st = scattering_state(nd.channel, nd.eps, v, p);
        double val;
        if (std::holds_alternative<cvec>(a)) {
            val = std::norm(st.overlap(std::get<cvec>(a), lay));
        } else {
            // <Phi| i[h, Pi_lead] |Phi> = -2 tau Im[conj(Phi_S) Phi(0_lead)]
            const Lead lead = std::get<CurrentTag>(a).lead;
            const bool src_matches =
                (lead == Lead::left) == (st.channel == Channel::left);
            const cplx phi0 = src_matches ? st.source_comp(0) : st.far_comp(0);
            val = -2.0 * p.tau * (std::conj(st.dot_comp()) * phi0).imag();
        }
        acc += nd.weight * (2.0 / M_PI) * fermi(nd.eps) * val;
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Two-channel S-matrix where both bands are open (|E|<2 and |E-v|<2):
//   S = 1 + 2i (tau^2/G) * [[s_-, sqrt(s_- s_+)], [sqrt(s_- s_+), s_+]].
struct SMatrix {
    cplx s[2][2];
};

inline SMatrix smatrix(double e_total, double v, const ModelParams& p) {
    const double eps_l = e_total - v, eps_r = e_total;
    if (!(std::abs(eps_l) < 2.0 && std::abs(eps_r) < 2.0))
        throw std::domain_error("smatrix: both channels must be open");
    const double sl = std::sin(std::acos(0.5 * eps_l));
    const double sr = std::sin(std::acos(0.5 * eps_r));
    const cplx g = p.e0 - e_total +
                   p.tau * p.tau * (zeta1_edge(eps_l, Side::above) + zeta1_edge(eps_r, Side::above));
    const cplx pref = cplx{0.0, 2.0} * p.tau * p.tau / g;
    SMatrix s;
    s.s[0][0] = 1.0 + pref * sl;
    s.s[0][1] = pref * std::sqrt(sl * sr);
    s.s[1][0] = s.s[0][1];
    s.s[1][1] = 1.0 + pref * sr;
    return s;
}

inline double smatrix_unitarity_deviation(double e_total, double v, const ModelParams& p) {
    const SMatrix s = smatrix(e_total, v, p);
    double dev = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            cplx acc{0.0, 0.0};
            for (int l = 0; l < 2; ++l) acc += std::conj(s.s[l][i]) * s.s[l][j];
            dev = std::max(dev, std::abs(acc - (i == j ? 1.0 : 0.0)));
        }
    return dev;
}

// ---------------------------------------------------------------------------
// Wave operators by time limit (exact unitaries via the eigenbasis).

enum class WaveDirection { forward, adjoint };

inline cvec wave_operator_apply(double v, WaveDirection dir, const cvec& psi, double t_horizon,
                                const ModelParams& p, const LatticeLayout& lay) {
    if (2.0 * t_horizon + 32.0 > std::min(lay.n_left, lay.n_right))
        throw std::invalid_argument("wave_operator_apply: horizon incompatible with layout");
    const auto es = equilibrium_cache().get(v, p, lay);
    if (dir == WaveDirection::forward) {
        // e^{-iT h(v)} e^{+iT (h_L + v Pi_-)} psi
        cvec x = free_evolve_chain(psi, lay, v, -t_horizon);
        return eigenbasis_evolve(*es, x, t_horizon);
    }
    // P_ac(h_L) e^{-iT (h_L + v Pi_-)} e^{+iT h(v)} psi
    cvec x = eigenbasis_evolve(*es, psi, -t_horizon);
    x = free_evolve_chain(x, lay, v, t_horizon);
    x[lay.dot_index()] = cplx{0.0, 0.0};
    return x;
}

// Cauchy-monitored horizon: T doubles until the increment drops below tol,
// clamped to the largest horizon the layout supports.
inline cvec wave_operator_auto(double v, WaveDirection dir, const cvec& psi,
                               const ModelParams& p, const LatticeLayout& lay,
                               double t0 = 50.0, double tol = 1e-4,
                               double* out_increment = nullptr) {
    const double t_max = 0.5 * (std::min(lay.n_left, lay.n_right) - 32.0);
    double t = std::min(t0, t_max);
    cvec prev = wave_operator_apply(v, dir, psi, t, p, lay);
    while (t < t_max) {
        const double t2 = std::min(2.0 * t, t_max);
        cvec next = wave_operator_apply(v, dir, psi, t2, p, lay);
        double diff2 = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) diff2 += std::norm(next[i] - prev[i]);
        const double inc = std::sqrt(diff2);
        prev = std::move(next);
        t = t2;
        if (inc < tol) {
            if (out_increment) *out_increment = inc;
            return prev;
        }
    }
    if (out_increment) *out_increment = -1.0;  // ran into the layout cap
    return prev;
}

// <chi| f_eq(h_L) |chi> with h_L the unbiased decoupled leads (the dot
// component is excluded).
inline double free_equilibrium_expectation(const cvec& chi, const LatticeLayout& lay,
                                           const FermiSpec& fermi) {
    double acc = 0.0;
    for (int side = 0; side < 2; ++side) {
        const int n = side == 0 ? lay.n_left : lay.n_right;
        const FreeLeadBasis basis{n, 0.0};
        for (int k = 1; k <= n; ++k) {
            cplx c{0.0, 0.0};
            for (int m = 0; m < n; ++m) {
                const int i = side == 0 ? lay.left_index(m) : lay.right_index(m);
                c += basis.component(k, m) * chi[i];
            }
            acc += fermi(basis.eigenvalue(k)) * std::norm(c);
        }
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Gaussian wave packets and the finite-eta propagation estimate.

struct WavePacket {
    Lead lead = Lead::left;
    int m0 = 100;       // center site; the Gaussian tail at the contact must stay negligible
    double sigma = 12.0;
    double k0 = M_PI / 2;  // e^{-i k0 (m+1)} phase: moves toward the dot backwards
};

inline cvec make_packet(const WavePacket& pk, const LatticeLayout& lay) {
    const double kw = 1.5 / pk.sigma;  // momentum spread (3 sigma_k)
    if (!(pk.k0 - 3.0 * kw > 1e-3 && pk.k0 + 3.0 * kw < M_PI - 1e-3))
        throw std::invalid_argument("make_packet: energy support touches a band edge");
    cvec phi(lay.dim(), cplx{0.0, 0.0});
    const int n = pk.lead == Lead::left ? lay.n_left : lay.n_right;
    for (int m = 0; m < n; ++m) {
        const double g = std::exp(-(m - pk.m0) * (m - pk.m0) / (4.0 * pk.sigma * pk.sigma));
        const double ph = -pk.k0 * (m + 1);
        const int i = pk.lead == Lead::left ? lay.left_index(m) : lay.right_index(m);
        phi[i] = g * cplx{std::cos(ph), std::sin(ph)};
    }
    const double nn = vec_norm(phi);
    for (auto& c : phi) c /= nn;
    return phi;
}

struct EstimateSegment {
    double s_m1;  // nu constant to the left of s_m1
    double s_0;   // nu continuous at s_0
    double nu_a;
    double nu_b;

    // nu as a profile piece; quintic ramp between the endpoint values.
    BiasProfile as_profile() const {
        BiasProfile prof;
        prof.kind = ScenarioKind::smooth_no_crossing;
        prof.v_final = nu_b;
        prof.pieces = {{-1.0, s_m1, nu_a, nu_a},
                       {s_m1, s_0, nu_a, nu_b},
                       {s_0, 0.0, nu_b, nu_b}};
        return prof;
    }
};

// || U(s_m1/eta, s_0/eta) Omega_f phi
//    - Omega_i e^{-i((s_m1-s_0)/eta) h_L} e^{i(Delta_nu/eta) Pi_-} phi ||,
// Delta_nu = int_{s_m1}^{s_0} nu.  Decreases with eta (the o(1) of the
// finite-eta propagation estimate).
inline double propagation_estimate_check(const EstimateSegment& seg, double eta,
                                         const WavePacket& pk, const ModelParams& p,
                                         const LatticeLayout& lay, double dt,
                                         const CriticalBiases& vc, double wave_tol = 1e-4) {
    const BiasProfile nu = seg.as_profile();
    const cvec phi = make_packet(pk, lay);

    // packet must live in the AC subspace of both endpoint Hamiltonians
    for (double nv : {seg.nu_a, seg.nu_b}) {
        const auto ev = find_eigenvalue(nv, p, vc);
        if (ev) {
            const cvec b = to_complex(bound_state_vector(bound_state(nv, p, vc), lay));
            if (std::abs(inner(b, phi)) > 1e-8)
                throw std::invalid_argument(
                    "propagation_estimate_check: packet overlaps the discrete subspace");
        }
    }

    // LHS
    cvec lhs = wave_operator_auto(seg.nu_b, WaveDirection::forward, phi, p, lay, 50.0, wave_tol);
    {
        std::vector<cvec> cols{std::move(lhs)};
        PropagatorConfig cfg(eta, dt, lay);
        cn_evolve_batch(nu, p, cfg, seg.s_0 / eta, seg.s_m1 / eta, cols);
        lhs = std::move(cols.front());
    }

    // RHS
    const double dnu = nu.integral(seg.s_m1, seg.s_0);
    cvec rhs = phi;
    const double theta = dnu / eta;
    const cplx phase{std::cos(theta), std::sin(theta)};
    for (int m = 0; m < lay.n_left; ++m) rhs[lay.left_index(m)] *= phase;
    rhs = free_evolve_chain(rhs, lay, 0.0, (seg.s_m1 - seg.s_0) / eta);
    rhs = wave_operator_auto(seg.nu_a, WaveDirection::forward, rhs, p, lay, 50.0, wave_tol);

    double diff2 = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) diff2 += std::norm(lhs[i] - rhs[i]);
    return std::sqrt(diff2);
}

} // namespace dotlead
