#pragma once

// Time-dependent bias v(s) on s in [-1,0] for the three switching scenarios.
//
// Smooth pieces are quintic smoothsteps (vanishing first and second
// derivatives at piece ends, so any two pieces join C^2).  The crossing
// scenarios carry a 2*delta jump at s_c and s'_c; v is defined at the jump
// points by the episode side, i.e. v(s_c) = v(s_c+0) and v(s'_c) = v(s'_c-0).

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dotlead/spectral.hpp"

namespace dotlead {

enum class ScenarioKind { smooth_no_crossing = 1, cross_and_return = 2, cross_to_second = 3 };

enum class EvalSide { left, right, point };

namespace detail {

inline double qstep(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
inline double qstep_d1(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }
inline double qstep_d2(double u) { return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u); }
inline double qstep_int(double u) {  // int_0^u qstep
    return u * u * u * u * (2.5 + u * (-3.0 + u));
}

} // namespace detail

struct ProfilePiece {
    double a, b;    // s-interval [a,b]
    double va, vb;  // endpoint values (quintic smoothstep between them)

    double value(double s) const {
        const double u = (s - a) / (b - a);
        return va + (vb - va) * detail::qstep(u);
    }
    double d1(double s) const {
        const double w = b - a, u = (s - a) / w;
        return (vb - va) * detail::qstep_d1(u) / w;
    }
    double d2(double s) const {
        const double w = b - a, u = (s - a) / w;
        return (vb - va) * detail::qstep_d2(u) / (w * w);
    }
    double integral(double s0, double s1) const {  // both inside [a,b]
        const double w = b - a;
        const double u0 = (s0 - a) / w, u1 = (s1 - a) / w;
        return va * (s1 - s0) +
               (vb - va) * w * (detail::qstep_int(u1) - detail::qstep_int(u0));
    }
};

struct BiasProfile {
    ScenarioKind kind = ScenarioKind::smooth_no_crossing;
    double delta = 0.0;
    double s_c = 0.0, s_c_prime = 0.0;  // meaningful for crossing kinds only
    std::vector<ProfilePiece> pieces;   // ordered, covering [-1,0]
    double v_final = 0.0;

    bool has_jumps() const { return kind != ScenarioKind::smooth_no_crossing; }

    // One-sided evaluation; s is clamped to the profile domain so that
    // v(s) = v(-1) left of -1 and v(s) = v(0) right of 0.
    double evaluate(double s, EvalSide side = EvalSide::point) const {
        if (s <= -1.0) return pieces.front().va;
        if (s >= 0.0) return v_final;
        const ProfilePiece* pc = locate(s, side);
        return pc->value(std::clamp(s, pc->a, pc->b));
    }

    double derivative(double s, EvalSide side = EvalSide::point) const {
        if (s <= -1.0 || s >= 0.0) return 0.0;
        const ProfilePiece* pc = locate(s, side);
        return pc->d1(std::clamp(s, pc->a, pc->b));
    }

    double second_derivative(double s, EvalSide side = EvalSide::point) const {
        if (s <= -1.0 || s >= 0.0) return 0.0;
        const ProfilePiece* pc = locate(s, side);
        return pc->d2(std::clamp(s, pc->a, pc->b));
    }

    // Exact piecewise-polynomial integral of v over [s0,s1], s0 <= s1.
    double integral(double s0, double s1) const {
        double acc = 0.0;
        if (s0 < -1.0) s0 = -1.0;
        if (s1 > 0.0) {
            acc += v_final * (s1 - 0.0);
            s1 = 0.0;
        }
        for (const auto& pc : pieces) {
            const double lo = std::max(s0, pc.a), hi = std::min(s1, pc.b);
            if (lo < hi) acc += pc.integral(lo, hi);
        }
        return acc;
    }

    std::vector<double> jump_points() const {
        if (!has_jumps()) return {};
        return {s_c, s_c_prime};
    }

    double sup_value() const {
        double m = 0.0;
        for (const auto& pc : pieces) m = std::max({m, pc.va, pc.vb});
        return m;  // pieces are monotone, extrema sit at endpoints
    }

    double max_abs_d2() const {
        // |q''| peaks at 10/sqrt(3)
        double m = 0.0;
        for (const auto& pc : pieces)
            m = std::max(m, 10.0 / std::sqrt(3.0) * std::abs(pc.vb - pc.va) /
                                ((pc.b - pc.a) * (pc.b - pc.a)));
        return m;
    }

private:
    const ProfilePiece* locate(double s, EvalSide side) const {
        // Jump points: s_c belongs to the episode (right piece), s'_c too
        // (left piece); explicit sides override.
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            const auto& pc = pieces[i];
            if (s < pc.a || s > pc.b) continue;
            if (s == pc.a && i > 0 && pieces[i - 1].b == s) {
                const bool take_left =
                    (side == EvalSide::left) ||
                    (side == EvalSide::point && has_jumps() && s == s_c_prime);
                if (take_left) return &pieces[i - 1];
                return &pc;
            }
            if (s == pc.b && i + 1 < pieces.size() && pieces[i + 1].a == s) {
                const bool take_left =
                    (side == EvalSide::left) ||
                    (side == EvalSide::point && has_jumps() && s == s_c_prime) ||
                    (side == EvalSide::point && !(has_jumps() && s == s_c));
                if (take_left) return &pc;
                return &pieces[i + 1];
            }
            return &pc;
        }
        throw std::out_of_range("BiasProfile: s outside [-1,0]");
    }
};

struct ScenarioOptions {
    std::optional<double> v_final;     // default: vc1-1 (kinds 1,2) or vc2+1 (kind 3)
    std::optional<double> v_plateau;   // kind 2: episode plateau, default (vc1+vc2)/2
    double rise_frac = 0.1;            // episode fraction spent entering/leaving
    double mid_window = 2.6;           // kind 3: bias span of the slow middle piece
};

// Default episode placement.  The episode must be long enough that the
// dissolved bound state fully decays during the crossing window at the
// smallest adiabatic parameter used by the sweeps.
inline constexpr double default_s_c = -0.87;
inline constexpr double default_s_c_prime = -0.18;

inline BiasProfile make_scenario(ScenarioKind kind, const CriticalBiases& vc, double delta = 0.0,
                                 double s_c = default_s_c, double s_c_prime = default_s_c_prime,
                                 const ScenarioOptions& opt = {}) {
    BiasProfile prof;
    prof.kind = kind;

    if (kind == ScenarioKind::smooth_no_crossing) {
        const double vf = opt.v_final.value_or(vc.vc1 - 1.0);
        if (!(vf < vc.vc1)) throw std::invalid_argument("make_scenario: scenario 1 must stay subcritical");
        prof.v_final = vf;
        prof.pieces = {{-1.0, 0.0, 0.0, vf}};
        return prof;
    }

    if (!(-1.0 < s_c && s_c < s_c_prime && s_c_prime < 0.0))
        throw std::invalid_argument("make_scenario: need -1 < s_c < s'_c < 0");
    const double delta_max = std::min(vc.vc1 - 4.0, vc.vc2 - vc.vc1) / 4.0;
    if (!(delta > 0.0 && delta < delta_max))
        throw std::invalid_argument("make_scenario: infeasible jump half-gap delta");

    prof.delta = delta;
    prof.s_c = s_c;
    prof.s_c_prime = s_c_prime;
    const double span = s_c_prime - s_c;
    const double r = opt.rise_frac * span;

    if (kind == ScenarioKind::cross_and_return) {
        const double vf = opt.v_final.value_or(vc.vc1 - 1.0);
        const double vpl = opt.v_plateau.value_or(0.5 * (vc.vc1 + vc.vc2));
        if (!(vc.vc1 + delta <= vpl && vpl < vc.vc2))
            throw std::invalid_argument("make_scenario: plateau outside [vc1+delta, vc2)");
        if (!(vf <= vc.vc1 - delta))
            throw std::invalid_argument("make_scenario: scenario 2 endpoint above vc1-delta");
        prof.v_final = vf;
        prof.pieces = {{-1.0, s_c, 0.0, vc.vc1 - delta},
                       {s_c, s_c + r, vc.vc1 + delta, vpl},
                       {s_c + r, s_c_prime - r, vpl, vpl},
                       {s_c_prime - r, s_c_prime, vpl, vc.vc1 + delta},
                       {s_c_prime, 0.0, vc.vc1 - delta, vf}};
        return prof;
    }

    // cross_to_second: increasing throughout; a slow middle piece keeps the
    // dissolved state inside the band interior for most of the episode.
    const double vf = opt.v_final.value_or(vc.vc2 + 1.0);
    if (!(vf > vc.vc2 + delta))
        throw std::invalid_argument("make_scenario: scenario 3 endpoint must exceed vc2+delta");
    const double vmid = 0.5 * (vc.vc1 + vc.vc2);
    double w = opt.mid_window;
    const double lo_lim = vc.vc1 + delta, hi_lim = vc.vc2 - delta;
    w = std::min(w, 1.6 * std::min(vmid - lo_lim, hi_lim - vmid));
    const double m_lo = vmid - 0.5 * w, m_hi = vmid + 0.5 * w;
    prof.v_final = vf;
    prof.pieces = {{-1.0, s_c, 0.0, vc.vc1 - delta},
                   {s_c, s_c + r, vc.vc1 + delta, m_lo},
                   {s_c + r, s_c_prime - r, m_lo, m_hi},
                   {s_c_prime - r, s_c_prime, m_hi, vc.vc2 - delta},
                   {s_c_prime, 0.0, vc.vc2 + delta, vf}};
    return prof;
}

// A C^2 two-stage profile with the same endpoints as scenario 1, for the
// path-independence cross-check.
inline BiasProfile make_alternate_no_crossing(const CriticalBiases& vc,
                                              std::optional<double> v_final = {}) {
    const double vf = v_final.value_or(vc.vc1 - 1.0);
    BiasProfile prof;
    prof.kind = ScenarioKind::smooth_no_crossing;
    prof.v_final = vf;
    prof.pieces = {{-1.0, -0.55, 0.0, 0.35 * vf},
                   {-0.55, -0.25, 0.35 * vf, 0.9 * vf},
                   {-0.25, 0.0, 0.9 * vf, vf}};
    return prof;
}

// Numerical re-check of every profile invariant on a dense grid.
inline std::vector<std::string> validate(const BiasProfile& prof, const CriticalBiases& vc,
                                         int grid = 4001) {
    std::vector<std::string> bad;
    auto flag = [&](const std::string& msg) { bad.push_back(msg); };

    if (std::abs(prof.evaluate(-1.0)) > 1e-14) flag("v(-1) != 0");
    if (prof.pieces.empty() || prof.pieces.front().a != -1.0 || prof.pieces.back().b != 0.0)
        flag("pieces do not cover [-1,0]");
    if (std::abs(prof.pieces.front().va) > 1e-14) flag("discontinuous at s = -1");
    if (std::abs(prof.pieces.back().vb - prof.v_final) > 1e-14) flag("discontinuous at s = 0");

    // Piece joints: continuous except at the declared jumps (size 2*delta).
    for (std::size_t i = 0; i + 1 < prof.pieces.size(); ++i) {
        const double s = prof.pieces[i].b;
        const double gap = prof.pieces[i + 1].va - prof.pieces[i].vb;
        const bool is_jump = prof.has_jumps() && (s == prof.s_c || s == prof.s_c_prime);
        if (is_jump) {
            if (std::abs(std::abs(gap) - 2.0 * prof.delta) > 1e-12)
                flag("jump size differs from 2*delta at s = " + std::to_string(s));
        } else if (std::abs(gap) > 1e-12) {
            flag("unexpected discontinuity at s = " + std::to_string(s));
        }
    }

    const double d2_bound = prof.max_abs_d2() * (1.0 + 1e-9) + 1e-9;
    for (int i = 0; i <= grid; ++i) {
        const double s = -1.0 + static_cast<double>(i) / grid;
        if (std::abs(prof.second_derivative(s)) > d2_bound) {
            flag("second derivative exceeds declared bound");
            break;
        }
    }

    switch (prof.kind) {
        case ScenarioKind::smooth_no_crossing:
            if (!(prof.sup_value() < vc.vc1)) flag("scenario 1 bias reaches vc1");
            break;
        case ScenarioKind::cross_and_return: {
            if (prof.delta <= 0.0) flag("degenerate profile: crossing requires delta > 0");
            for (int i = 0; i <= grid; ++i) {
                const double s = -1.0 + static_cast<double>(i) / grid;
                const double v = prof.evaluate(s);
                const bool inside = (s >= prof.s_c && s <= prof.s_c_prime);
                if (inside && !(v >= vc.vc1 + prof.delta - 1e-12 && v < vc.vc2)) {
                    flag("episode bias outside [vc1+delta, vc2)");
                    break;
                }
                if (!inside && !(v <= vc.vc1 - prof.delta + 1e-12)) {
                    flag("bias above vc1-delta outside the episode");
                    break;
                }
            }
            break;
        }
        case ScenarioKind::cross_to_second: {
            if (prof.delta <= 0.0) flag("degenerate profile: crossing requires delta > 0");
            double prev = 0.0;
            for (int i = 0; i <= grid; ++i) {
                const double s = -1.0 + static_cast<double>(i) / grid;
                const double v = prof.evaluate(s, EvalSide::right);
                if (v < prev - 1e-12) {
                    flag("scenario 3 bias not increasing");
                    break;
                }
                prev = v;
            }
            if (std::abs(prof.evaluate(prof.s_c, EvalSide::left) - (vc.vc1 - prof.delta)) > 1e-12)
                flag("v(s_c-0) != vc1-delta");
            if (std::abs(prof.evaluate(prof.s_c_prime, EvalSide::right) - (vc.vc2 + prof.delta)) > 1e-12)
                flag("v(s'_c+0) != vc2+delta");
            break;
        }
    }
    return bad;
}

} // namespace dotlead
