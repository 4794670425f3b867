#pragma once

// Unitary propagation under h(v(eta*t)) on the truncated lattice.
//
// Trapezoidal (Crank-Nicolson) stepping with the Hamiltonian frozen at the
// midpoint bias of each step:
//   (1 + i dt/2 H_mid) psi' = (1 - i dt/2 H_mid) psi.
// One complex tridiagonal solve per step; exactly unitary up to the solve
// roundoff.  Jumps of the bias profile split the integration range so each
// step sees a one-sided limit only.
//
// The adiabatic expectation Tr{rho_eta A} is evaluated backwards: propagate
// the observable vector(s) from t = 0 to t = -1/eta and apply the
// equilibrium function of h(v(-1)) once.

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <variant>
#include <vector>

#include "dotlead/lattice.hpp"
#include "dotlead/profiles.hpp"

namespace dotlead {

struct PropagatorConfig {
    double eta;
    double dt;
    double solver_tol;
    LatticeLayout layout;

    PropagatorConfig(double eta_, double dt_, LatticeLayout lay, double tol = 1e-12)
        : eta(eta_), dt(dt_), solver_tol(tol), layout(lay) {
        if (!(eta > 0.0)) throw std::invalid_argument("PropagatorConfig: eta must be > 0");
        if (!(dt > 0.0)) throw std::invalid_argument("PropagatorConfig: dt must be > 0");
    }

    void check_against(const BiasProfile& prof, const ModelParams& p,
                       double extra_window = 0.0) const {
        const double rad = std::max(p.e0, prof.sup_value() + 2.0) + 2.0 * std::abs(p.tau) + 2.0;
        if (!(dt * rad < 0.5))
            throw std::invalid_argument("PropagatorConfig: dt * spectral-radius bound >= 0.5");
        const double t_total = 1.0 / eta + extra_window;
        const int needed = static_cast<int>(std::ceil(2.0 * t_total)) + 64;
        if (layout.n_left < needed || layout.n_right < needed)
            throw std::invalid_argument("PropagatorConfig: layout violates the sizing rule");
    }
};

struct EvolutionResult {
    cvec state;
    double drift = 0.0;       // | ||psi|| - 1 |
    long steps = 0;
    double wall_seconds = 0.0;
};

namespace detail {

// One CN step applied to a batch of columns.  The tridiagonal factorization
// of (1 + i dt/2 H) is computed once and reused across columns.
class CnStepper {
public:
    CnStepper(const LatticeLayout& lay, const ModelParams& p) : lay_(lay), p_(p) {
        const int n = lay.dim();
        diag_.assign(n, 0.0);
        diag_[lay.dot_index()] = p.e0;
        off_.assign(n - 1, 1.0);
        off_[lay.dot_index() - 1] = p.tau;
        off_[lay.dot_index()] = p.tau;
        cp_.resize(n - 1);
        inv_m_.resize(n);
        rhs_.resize(n);
    }

    // Factor (1 + alpha H(v)) with alpha = i*dt/2.
    void factor(double v, double dt) {
        const int n = lay_.dim();
        alpha_ = cplx{0.0, 0.5 * dt};
        v_ = v;
        cplx m = 1.0 + alpha_ * dval(0);
        if (std::abs(m) < 1e-14) throw std::runtime_error("CnStepper: solver breakdown (dt too large?)");
        inv_m_[0] = 1.0 / m;
        cp_[0] = alpha_ * off_[0] * inv_m_[0];
        for (int i = 1; i < n; ++i) {
            const cplx a = alpha_ * off_[i - 1];
            m = 1.0 + alpha_ * dval(i) - a * cp_[i - 1];
            if (std::abs(m) < 1e-14) throw std::runtime_error("CnStepper: solver breakdown (dt too large?)");
            inv_m_[i] = 1.0 / m;
            if (i < n - 1) cp_[i] = alpha_ * off_[i] * inv_m_[i];
        }
    }

    void step(cvec& psi) {
        const int n = lay_.dim();
        // rhs = (1 - alpha H) psi
        rhs_[0] = (1.0 - alpha_ * dval(0)) * psi[0] - alpha_ * off_[0] * psi[1];
        for (int i = 1; i < n - 1; ++i)
            rhs_[i] = (1.0 - alpha_ * dval(i)) * psi[i] -
                      alpha_ * (off_[i - 1] * psi[i - 1] + off_[i] * psi[i + 1]);
        rhs_[n - 1] = (1.0 - alpha_ * dval(n - 1)) * psi[n - 1] - alpha_ * off_[n - 2] * psi[n - 2];
        // forward sweep
        psi[0] = rhs_[0] * inv_m_[0];
        for (int i = 1; i < n; ++i)
            psi[i] = (rhs_[i] - alpha_ * off_[i - 1] * psi[i - 1]) * inv_m_[i];
        // back substitution
        for (int i = n - 2; i >= 0; --i) psi[i] -= cp_[i] * psi[i + 1];
    }

private:
    double dval(int i) const {
        if (i < lay_.n_left) return v_;
        return diag_[i];
    }

    LatticeLayout lay_;
    ModelParams p_;
    rvec diag_, off_;
    cplx alpha_{0.0, 0.0};
    double v_ = 0.0;
    std::vector<cplx> cp_, inv_m_, rhs_;
};

// Lab times where the bias has one-sided limits, restricted to (lo, hi).
inline std::vector<double> interior_breaks(const BiasProfile& prof, double eta, double lo,
                                           double hi) {
    std::vector<double> b;
    for (double s : prof.jump_points()) {
        const double t = s / eta;
        if (t > lo && t < hi) b.push_back(t);
    }
    std::sort(b.begin(), b.end());
    return b;
}

} // namespace detail

// Evolve a batch of columns from t0 to t1 (either direction) under
// h(v(eta*t)).  All columns share the per-step factorization.
inline long cn_evolve_batch(const BiasProfile& prof, const ModelParams& p,
                            const PropagatorConfig& cfg, double t0, double t1,
                            std::vector<cvec>& cols) {
    if (t0 == t1 || cols.empty()) return 0;
    detail::CnStepper stepper(cfg.layout, p);
    const bool forward = t1 > t0;
    const double lo = std::min(t0, t1), hi = std::max(t0, t1);
    std::vector<double> marks = detail::interior_breaks(prof, cfg.eta, lo, hi);
    marks.insert(marks.begin(), lo);
    marks.push_back(hi);
    if (!forward) std::reverse(marks.begin(), marks.end());
    long steps = 0;
    for (std::size_t seg = 0; seg + 1 < marks.size(); ++seg) {
        const double ta = marks[seg], tb = marks[seg + 1];
        const long n = std::max<long>(1, static_cast<long>(std::ceil(std::abs(tb - ta) / cfg.dt)));
        const double h = (tb - ta) / static_cast<double>(n);
        for (long j = 0; j < n; ++j) {
            const double tm = ta + (static_cast<double>(j) + 0.5) * h;
            stepper.factor(prof.evaluate(cfg.eta * tm), h);
            for (auto& c : cols) stepper.step(c);
            ++steps;
        }
    }
    return steps;
}

inline EvolutionResult evolve(const BiasProfile& prof, const ModelParams& p,
                              const PropagatorConfig& cfg, double t0, double t1, cvec psi) {
    const auto tic = std::chrono::steady_clock::now();
    std::vector<cvec> cols{std::move(psi)};
    const long steps = cn_evolve_batch(prof, p, cfg, t0, t1, cols);
    EvolutionResult r;
    r.state = std::move(cols.front());
    r.drift = std::abs(vec_norm(r.state) - 1.0);
    r.steps = steps;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    return r;
}

// Shared cache for the equilibrium eigensystem of h(v(-1)) per layout.
class EquilibriumCache {
public:
    std::shared_ptr<const EigenSystem> get(double v, const ModelParams& p,
                                           const LatticeLayout& lay) {
        const Key key{lay.n_left, lay.n_right, v, p.e0, p.tau};
        std::lock_guard<std::mutex> lock(mu_);
        auto it = map_.find(key);
        if (it != map_.end()) return it->second;
        if (map_.size() >= 2) map_.clear();  // keep the footprint small
        auto es = std::make_shared<EigenSystem>(diagonalize(assemble(v, p, lay)));
        map_.emplace(key, es);
        return es;
    }

private:
    using Key = std::tuple<int, int, double, double, double>;
    std::mutex mu_;
    std::map<Key, std::shared_ptr<const EigenSystem>> map_;
};

inline EquilibriumCache& equilibrium_cache() {
    static EquilibriumCache cache;
    return cache;
}

struct CurrentTag {
    Lead lead;
};

using Observable = std::variant<cvec, CurrentTag>;  // rank-one vector or a bond current

struct ExpectationResult {
    double value = 0.0;
    double drift = 0.0;
    long steps = 0;
    double wall_seconds = 0.0;
};

// Tr{rho_eta A} with rho_eta = U(0,-1/eta) f_eq(h(v(-1))) U(0,-1/eta)^*.
inline ExpectationResult adiabatic_expectation(const BiasProfile& prof, const ModelParams& p,
                                               const FermiSpec& fermi,
                                               const PropagatorConfig& cfg, const Observable& a) {
    cfg.check_against(prof, p);
    const auto tic = std::chrono::steady_clock::now();
    const double t_start = -1.0 / cfg.eta;
    const double v_init = prof.evaluate(-1.0);
    ExpectationResult out;

    std::vector<cvec> cols;
    if (std::holds_alternative<cvec>(a)) {
        cols.push_back(std::get<cvec>(a));
    } else {
        const Lead lead = std::get<CurrentTag>(a).lead;
        cvec e_s(cfg.layout.dim(), cplx{0.0, 0.0});
        e_s[cfg.layout.dot_index()] = 1.0;
        cvec e_0(cfg.layout.dim(), cplx{0.0, 0.0});
        e_0[lead == Lead::left ? cfg.layout.left_index(0) : cfg.layout.right_index(0)] = 1.0;
        cols.push_back(std::move(e_s));
        cols.push_back(std::move(e_0));
    }
    out.steps = cn_evolve_batch(prof, p, cfg, 0.0, t_start, cols);

    const auto es = equilibrium_cache().get(v_init, p, cfg.layout);
    if (std::holds_alternative<cvec>(a)) {
        out.value = equilibrium_expectation(fermi, *es, cols[0]);
        out.drift = std::abs(vec_norm(cols[0]) - 1.0);
    } else {
        // Tr{rho i[h,Pi_lead]} = -2 tau Im <0_lead| rho |S>
        //                      = -2 tau Im <chi_0| f_eq(h(-1)) |chi_S>.
        const cplx x = equilibrium_bilinear(fermi, *es, cols[1], cols[0]);
        out.value = -2.0 * p.tau * x.imag();
        out.drift = std::abs(vec_norm(cols[0]) - 1.0);
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
    return out;
}

// <P_d(0)> for the profile's final bound state.
inline ExpectationResult bound_state_occupation(const BiasProfile& prof, const ModelParams& p,
                                                const FermiSpec& fermi,
                                                const PropagatorConfig& cfg,
                                                const CriticalBiases& vc) {
    const BoundState b = bound_state(prof.v_final, p, vc);
    const rvec psi = bound_state_vector(b, cfg.layout);
    return adiabatic_expectation(prof, p, fermi, cfg, Observable{to_complex(psi)});
}

// Cesaro-averaged bond current: the switching ends at t = 0, the Hamiltonian
// stays frozen at v(0) for the averaging window T_c = window_frac/eta, and
// I(t) = -2 tau Im <0_lead| rho(t) |S> is sampled on the step grid.  Each
// sample needs the pair U(-1/eta, t)|S>, U(-1/eta, t)|0_lead>; the samples
// are injected during one shared backward sweep.
inline double cesaro_current(const BiasProfile& prof, const ModelParams& p,
                             const FermiSpec& fermi, const PropagatorConfig& cfg, Lead lead,
                             double window_frac = 0.1, int n_samples = 64) {
    cfg.check_against(prof, p, window_frac / cfg.eta);
    const double t_c = window_frac / cfg.eta;
    const int dot = cfg.layout.dot_index();
    const int site0 = (lead == Lead::left) ? cfg.layout.left_index(0) : cfg.layout.right_index(0);
    const int dim = cfg.layout.dim();

    // Frozen window: step backward from t_c to 0, injecting sample pairs.
    detail::CnStepper stepper(cfg.layout, p);
    const long n_steps = std::max<long>(1, static_cast<long>(std::ceil(t_c / cfg.dt)));
    const double h = -t_c / static_cast<double>(n_steps);
    const long stride = std::max<long>(1, n_steps / n_samples);
    std::vector<cvec> cols;
    cols.reserve(2 * static_cast<std::size_t>(n_samples) + 2);
    const double v0 = prof.v_final;
    for (long j = 0; j < n_steps; ++j) {
        if (j % stride == 0) {
            cvec e_s(dim, cplx{0.0, 0.0});
            e_s[dot] = 1.0;
            cvec e_0(dim, cplx{0.0, 0.0});
            e_0[site0] = 1.0;
            cols.push_back(std::move(e_s));
            cols.push_back(std::move(e_0));
        }
        stepper.factor(v0, h);
        for (auto& c : cols) stepper.step(c);
    }
    // Switching interval, all samples ride together.
    cn_evolve_batch(prof, p, cfg, 0.0, -1.0 / cfg.eta, cols);

    const auto es = equilibrium_cache().get(prof.evaluate(-1.0), p, cfg.layout);
    double acc = 0.0;
    const std::size_t pairs = cols.size() / 2;
    for (std::size_t j = 0; j < pairs; ++j) {
        const cplx x = equilibrium_bilinear(fermi, *es, cols[2 * j + 1], cols[2 * j]);
        acc += -2.0 * p.tau * x.imag();
    }
    return acc / static_cast<double>(pairs);
}

// |<psi(s_c-0)| U(s_c/eta, s'_c/eta) |psi(s'_c+0)>| for a crossing profile:
// the discrete channel's contribution to the final state.
inline double discrete_channel_overlap(const BiasProfile& prof, const ModelParams& p,
                                       const PropagatorConfig& cfg, const CriticalBiases& vc) {
    if (!prof.has_jumps())
        throw std::invalid_argument("discrete_channel_overlap: profile has no crossing");
    const BoundState b_before = bound_state(prof.evaluate(prof.s_c, EvalSide::left), p, vc);
    const BoundState b_after = bound_state(prof.evaluate(prof.s_c_prime, EvalSide::right), p, vc);
    std::vector<cvec> cols{to_complex(bound_state_vector(b_after, cfg.layout))};
    cn_evolve_batch(prof, p, cfg, prof.s_c_prime / cfg.eta, prof.s_c / cfg.eta, cols);
    const cvec psi_a = to_complex(bound_state_vector(b_before, cfg.layout));
    return std::abs(inner(psi_a, cols[0]));
}

} // namespace dotlead
