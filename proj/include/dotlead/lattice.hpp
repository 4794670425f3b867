#pragma once

// Finite truncations of h(v) in chain ordering
//   (..., 1_-, 0_-, S, 0_+, 1_+, ...)
// with Dirichlet ends, dense symmetric-tridiagonal diagonalization (LAPACK),
// equilibrium-function application, and the analytic free-lead eigenbasis.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <lapacke.h>

#include "dotlead/fermi.hpp"
#include "dotlead/spectral.hpp"

namespace dotlead {

using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

struct LatticeLayout {
    int n_left;
    int n_right;

    LatticeLayout(int nl, int nr) : n_left(nl), n_right(nr) {
        if (nl < 1 || nr < 1) throw std::invalid_argument("LatticeLayout: lead sizes must be >= 1");
    }

    int dim() const { return n_left + 1 + n_right; }
    int dot_index() const { return n_left; }
    int left_index(int m) const { return n_left - 1 - m; }   // site m_- of the left lead
    int right_index(int m) const { return n_left + 1 + m; }  // site m_+ of the right lead
};

// Truncation sizing rule: no wavefront (max group velocity 2) reflected off a
// Dirichlet end returns to the dot within the simulation window.
inline LatticeLayout layout_for_window(double t_total, int pad = 64) {
    const int n = static_cast<int>(std::ceil(2.0 * t_total)) + pad;
    return LatticeLayout(n, n);
}

struct TruncatedHamiltonian {
    LatticeLayout layout;
    double v;
    ModelParams params;
    rvec diag;  // size dim
    rvec off;   // size dim-1, off[i] couples sites i and i+1

    int dim() const { return layout.dim(); }
};

inline TruncatedHamiltonian assemble(double v, const ModelParams& p, const LatticeLayout& lay) {
    TruncatedHamiltonian h{lay, v, p, rvec(lay.dim(), 0.0), rvec(lay.dim() - 1, 1.0)};
    for (int i = 0; i < lay.n_left; ++i) h.diag[i] = v;
    h.diag[lay.dot_index()] = p.e0;
    h.off[lay.dot_index() - 1] = p.tau;  // 0_-  <-> S
    h.off[lay.dot_index()] = p.tau;      // S    <-> 0_+
    return h;
}

struct EigenSystem {
    rvec evals;       // ascending
    rvec evecs;       // column-major dim x dim; column k is the k-th eigenvector
    int n = 0;

    const double* vec(int k) const { return evecs.data() + static_cast<std::size_t>(k) * n; }
};

inline constexpr int diagonalize_cap = 8192;

inline EigenSystem diagonalize(const TruncatedHamiltonian& h, int cap = diagonalize_cap) {
    const int n = h.dim();
    if (n > cap) throw std::runtime_error("diagonalize: dimension exceeds the configured cap");
    EigenSystem es;
    es.n = n;
    es.evals = h.diag;
    rvec e = h.off;
    es.evecs.assign(static_cast<std::size_t>(n) * n, 0.0);
    const lapack_int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', n, es.evals.data(),
                                           e.data(), es.evecs.data(), n);
    if (info != 0) throw std::runtime_error("diagonalize: LAPACKE_dstevd failed");
    return es;
}

inline rvec eigenvalues_only(const TruncatedHamiltonian& h) {
    rvec d = h.diag;
    rvec e = h.off;
    const lapack_int info = LAPACKE_dsterf(static_cast<lapack_int>(d.size()), d.data(), e.data());
    if (info != 0) throw std::runtime_error("eigenvalues_only: LAPACKE_dsterf failed");
    return d;
}

// Eigenpair with 1-based index `idx` in ascending order (idx = dim for the top).
inline std::pair<double, rvec> eigenpair_by_index(const TruncatedHamiltonian& h, int idx) {
    const int n = h.dim();
    rvec d = h.diag, e = h.off, w(n), z(n);
    std::vector<lapack_int> isuppz(2);
    lapack_int m = 0;
    const lapack_int info =
        LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, idx, idx,
                       0.0, &m, w.data(), z.data(), n, isuppz.data());
    if (info != 0 || m != 1) throw std::runtime_error("eigenpair_by_index: LAPACKE_dstevr failed");
    return {w[0], z};
}

// f_eq(H) psi = sum_k f(E_k) <u_k|psi> u_k.
inline cvec apply_equilibrium(const FermiSpec& f, const EigenSystem& es, const cvec& psi) {
    const int n = es.n;
    if (static_cast<int>(psi.size()) != n)
        throw std::invalid_argument("apply_equilibrium: dimension mismatch");
    cvec coef(n), out(n, cplx{0.0, 0.0});
    for (int k = 0; k < n; ++k) {
        const double* u = es.vec(k);
        cplx c{0.0, 0.0};
        for (int i = 0; i < n; ++i) c += u[i] * psi[i];
        coef[k] = f(es.evals[k]) * c;
    }
    for (int k = 0; k < n; ++k) {
        const double* u = es.vec(k);
        const cplx c = coef[k];
        if (c == cplx{0.0, 0.0}) continue;
        for (int i = 0; i < n; ++i) out[i] += c * u[i];
    }
    return out;
}

// <a| f_eq(H) |b>.
inline cplx equilibrium_bilinear(const FermiSpec& f, const EigenSystem& es, const cvec& a,
                                 const cvec& b) {
    const int n = es.n;
    cplx acc{0.0, 0.0};
    for (int k = 0; k < n; ++k) {
        const double* u = es.vec(k);
        cplx ca{0.0, 0.0}, cb{0.0, 0.0};
        for (int i = 0; i < n; ++i) {
            ca += u[i] * std::conj(a[i]);
            cb += u[i] * b[i];
        }
        acc += f(es.evals[k]) * ca * cb;
    }
    return acc;
}

inline double equilibrium_expectation(const FermiSpec& f, const EigenSystem& es, const cvec& psi) {
    return equilibrium_bilinear(f, es, psi, psi).real();
}

// Free Dirichlet lead of length L shifted by `shift`:
//   E_k = 2 cos(k pi/(L+1)) + shift,       k = 1..L,
//   u_k(m) = sqrt(2/(L+1)) sin((m+1) k pi/(L+1)),   m = 0..L-1.
struct FreeLeadBasis {
    int length;
    double shift;

    double eigenvalue(int k) const { return 2.0 * std::cos(k * M_PI / (length + 1)) + shift; }
    double component(int k, int m) const {
        return std::sqrt(2.0 / (length + 1)) * std::sin((m + 1) * k * M_PI / (length + 1));
    }
};

// exp(-i T (h_lead + shift)) applied to a vector given in lead-site order
// (index m = distance from the contact site).
inline cvec free_lead_evolve(const cvec& psi, int length, double shift, double t_duration) {
    if (static_cast<int>(psi.size()) != length)
        throw std::invalid_argument("free_lead_evolve: size mismatch");
    const FreeLeadBasis basis{length, shift};
    cvec coef(length, cplx{0.0, 0.0});
    for (int k = 1; k <= length; ++k) {
        cplx c{0.0, 0.0};
        for (int m = 0; m < length; ++m) c += basis.component(k, m) * psi[m];
        const double phase = -t_duration * basis.eigenvalue(k);
        coef[k - 1] = c * cplx{std::cos(phase), std::sin(phase)};
    }
    cvec out(length, cplx{0.0, 0.0});
    for (int k = 1; k <= length; ++k) {
        const cplx c = coef[k - 1];
        for (int m = 0; m < length; ++m) out[m] += c * basis.component(k, m);
    }
    return out;
}

// exp(-i T (h_L + v_left Pi_-)) on a chain-ordered vector; the dot component
// is untouched (the decoupled operator vanishes on the dot).
inline cvec free_evolve_chain(const cvec& psi, const LatticeLayout& lay, double v_left,
                              double t_duration) {
    cvec left(lay.n_left), right(lay.n_right);
    for (int m = 0; m < lay.n_left; ++m) left[m] = psi[lay.left_index(m)];
    for (int m = 0; m < lay.n_right; ++m) right[m] = psi[lay.right_index(m)];
    left = free_lead_evolve(left, lay.n_left, v_left, t_duration);
    right = free_lead_evolve(right, lay.n_right, 0.0, t_duration);
    cvec out(psi.size());
    out[lay.dot_index()] = psi[lay.dot_index()];
    for (int m = 0; m < lay.n_left; ++m) out[lay.left_index(m)] = left[m];
    for (int m = 0; m < lay.n_right; ++m) out[lay.right_index(m)] = right[m];
    return out;
}

// Closed-form bound state truncated onto the lattice and re-normalized.
inline rvec bound_state_vector(const BoundState& b, const LatticeLayout& lay) {
    rvec psi(lay.dim(), 0.0);
    psi[lay.dot_index()] = b.psi_dot;
    for (int m = 0; m < lay.n_left; ++m) psi[lay.left_index(m)] = b.left_amp(m);
    for (int m = 0; m < lay.n_right; ++m) psi[lay.right_index(m)] = b.right_amp(m);
    double n2 = 0.0;
    for (double x : psi) n2 += x * x;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : psi) x *= inv;
    return psi;
}

inline cvec to_complex(const rvec& x) {
    cvec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = cplx{x[i], 0.0};
    return out;
}

inline double norm2(const cvec& x) {
    double s = 0.0;
    for (const cplx& c : x) s += std::norm(c);
    return s;
}

inline double vec_norm(const cvec& x) { return std::sqrt(norm2(x)); }

inline cplx inner(const cvec& a, const cvec& b) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

// exp(-i T H) psi through a cached eigensystem (exact unitary).
inline cvec eigenbasis_evolve(const EigenSystem& es, const cvec& psi, double t_duration) {
    const int n = es.n;
    cvec coef(n), out(n, cplx{0.0, 0.0});
    for (int k = 0; k < n; ++k) {
        const double* u = es.vec(k);
        cplx c{0.0, 0.0};
        for (int i = 0; i < n; ++i) c += u[i] * psi[i];
        const double phase = -t_duration * es.evals[k];
        coef[k] = c * cplx{std::cos(phase), std::sin(phase)};
    }
    for (int k = 0; k < n; ++k) {
        const double* u = es.vec(k);
        const cplx c = coef[k];
        for (int i = 0; i < n; ++i) out[i] += c * u[i];
    }
    return out;
}

} // namespace dotlead
