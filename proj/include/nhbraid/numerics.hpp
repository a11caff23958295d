#pragma once

// Small dense complex linear algebra: eigendecomposition of general (non-Hermitian) matrices,
// matrix exponential e^{-i m t}, Householder QR with a positive real R diagonal, and a Jacobi
// solver for Hermitian matrices.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nhbraid/errors.hpp"
#include "nhbraid/matrix.hpp"

namespace nhbraid {

struct EigenDecomposition {
    CVec eigenvalues;
    std::vector<CVec> right;                   ///< unit-norm right eigenvectors, aligned with eigenvalues
    std::optional<std::vector<CVec>> left;     ///< left eigenvectors l_i with <l_i|r_j> = δ_ij
    double residual = 0.0;                     ///< max_i ||m r_i - E_i r_i|| / ||m||_F
    double tracking_overlap = 1.0;             ///< smallest matched overlap when continuity-sorted

    std::size_t size() const { return eigenvalues.size(); }

    /// Apply a relabeling: new slot i takes old slot order[i].
    void reorder(const std::vector<std::size_t>& order) {
        CVec e(order.size());
        std::vector<CVec> r(order.size());
        std::optional<std::vector<CVec>> l;
        if (left) l.emplace(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            e[i] = eigenvalues[order[i]];
            r[i] = right[order[i]];
            if (left) (*l)[i] = (*left)[order[i]];
        }
        eigenvalues = std::move(e);
        right = std::move(r);
        left = std::move(l);
    }
};

namespace detail {

/// Coefficients c_0..c_{n-1} of the monic characteristic polynomial λ^n + Σ c_j λ^j
/// (Faddeev–LeVerrier; adequate at n ≤ 8 on a norm-scaled matrix).
inline CVec characteristic_polynomial(const CMatrix& b) {
    const std::size_t n = b.dim();
    CVec c(n + 1, cplx{});
    c[n] = 1.0;
    CMatrix mk = CMatrix::identity(n);
    CMatrix bm = b * mk;
    c[n - 1] = -bm.trace();
    for (std::size_t k = 2; k <= n; ++k) {
        mk = bm;
        for (std::size_t i = 0; i < n; ++i) mk(i, i) += c[n - k + 1];
        bm = b * mk;
        c[n - k] = -bm.trace() / static_cast<double>(k);
    }
    return c;
}

inline cplx poly_eval(const CVec& c, cplx z) {
    cplx p = c.back();
    for (std::size_t i = c.size() - 1; i-- > 0;) p = p * z + c[i];
    return p;
}

inline cplx poly_deriv_eval(const CVec& c, cplx z) {
    const std::size_t n = c.size() - 1;
    cplx p = c[n] * static_cast<double>(n);
    for (std::size_t i = n - 1; i >= 1; --i) p = p * z + c[i] * static_cast<double>(i);
    return p;
}

/// Durand–Kerner simultaneous iteration on a monic polynomial.
inline CVec durand_kerner(const CVec& c, int max_iter = 2000) {
    const std::size_t n = c.size() - 1;
    double radius = 1.0;
    for (std::size_t i = 0; i < n; ++i) radius = std::max(radius, 1.0 + std::abs(c[i]));
    CVec z(n);
    const cplx seed{0.4, 0.9};
    cplx w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = w * (0.5 * radius);
        w *= seed;
    }
    for (int it = 0; it < max_iter; ++it) {
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cplx denom = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) denom *= (z[i] - z[j]);
            if (std::abs(denom) < 1e-300) denom = 1e-300;
            const cplx step = poly_eval(c, z[i]) / denom;
            z[i] -= step;
            delta = std::max(delta, std::abs(step) / (1.0 + std::abs(z[i])));
        }
        if (delta < 1e-16) break;
    }
    // Newton polish; harmless near multiple roots because the step is rejected if it grows |p|.
    for (auto& zi : z) {
        for (int k = 0; k < 4; ++k) {
            const cplx d = poly_deriv_eval(c, zi);
            if (std::abs(d) < 1e-300) break;
            const cplx cand = zi - poly_eval(c, zi) / d;
            if (std::abs(poly_eval(c, cand)) < std::abs(poly_eval(c, zi))) zi = cand; else break;
        }
    }
    return z;
}

/// Inverse iteration for the null vector of (m - λ I), orthogonalised against `avoid`.
inline CVec inverse_iteration(const CMatrix& m, cplx lambda, const std::vector<CVec>& avoid, std::size_t start) {
    const std::size_t n = m.dim();
    const double scale = std::max(m.frobenius(), 1e-300);
    CMatrix a = m;
    for (std::size_t i = 0; i < n; ++i) a(i, i) -= lambda;
    CVec v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = cplx{1.0 + 0.1 * static_cast<double>((i + start) % n), 0.05 * static_cast<double>(i)};
    if (start < n) v[start] += 1.0;
    for (int it = 0; it < 4; ++it) {
        for (const auto& u : avoid) {
            const cplx p = inner(u, v);
            for (std::size_t i = 0; i < n; ++i) v[i] -= p * u[i];
        }
        CVec x;
        solve_linear(a, v, x, 1e-14 * scale);
        v = normalized(x);
    }
    for (const auto& u : avoid) {
        const cplx p = inner(u, v);
        for (std::size_t i = 0; i < n; ++i) v[i] -= p * u[i];
    }
    return normalized(v);
}

inline void default_order(EigenDecomposition& ed, double scale) {
    std::vector<std::size_t> idx(ed.size());
    std::iota(idx.begin(), idx.end(), 0);
    const double tie = 1e-9 * std::max(scale, 1.0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const cplx ea = ed.eigenvalues[a], eb = ed.eigenvalues[b];
        if (std::abs(ea.imag() - eb.imag()) > tie) return ea.imag() > eb.imag();
        return ea.real() > eb.real();
    });
    ed.reorder(idx);
}

}  // namespace detail

/// Greedy continuity matching: relabel `ed` so that slot i best overlaps `previous.right[i]`.
inline void track_continuity(EigenDecomposition& ed, const EigenDecomposition& previous) {
    const std::size_t n = ed.size();
    if (previous.size() != n) throw numerics_error("InvalidDimension", "continuity tracking across different sizes");
    std::vector<std::vector<double>> ov(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) ov[i][j] = fidelity_amplitude(previous.right[i], ed.right[j]);
    std::vector<std::size_t> order(n, n);
    std::vector<bool> used_old(n, false), used_new(n, false);
    double worst = 1.0;
    for (std::size_t step = 0; step < n; ++step) {
        double best = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (used_old[i]) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (!used_new[j] && ov[i][j] > best) { best = ov[i][j]; bi = i; bj = j; }
        }
        used_old[bi] = used_new[bj] = true;
        order[bi] = bj;
        worst = std::min(worst, best);
    }
    std::vector<bool> seen(n, false);
    for (auto o : order) {
        if (o >= n || seen[o]) throw numerics_error("TrackingFailure", "continuity assignment is not a permutation");
        seen[o] = true;
    }
    ed.reorder(order);
    ed.tracking_overlap = worst;
}

/// Left eigenvectors as the conjugated rows of V^{-1}, so that <l_i|r_j> = δ_ij.
inline void attach_left_eigenvectors(EigenDecomposition& ed) {
    const CMatrix v = CMatrix::from_columns(ed.right);
    const CMatrix vinv = inverse(v);
    std::vector<CVec> left(ed.size());
    for (std::size_t i = 0; i < ed.size(); ++i) {
        left[i] = vinv.row(i);
        for (auto& x : left[i]) x = std::conj(x);
    }
    ed.left = std::move(left);
}

/// Eigendecomposition of a small general complex matrix. Without `previous` the pairs are ordered
/// by descending imaginary part (real-part tiebreak); with it, by greedy continuity matching.
inline EigenDecomposition eig(const CMatrix& m, const EigenDecomposition* previous = nullptr, bool with_left = false) {
    const std::size_t n = m.dim();
    if (n == 0) throw numerics_error("InvalidDimension", "empty matrix");
    if (n > 8) throw numerics_error("InvalidDimension", "eig supports dimension <= 8");
    if (!m.finite()) throw numerics_error("NonFinite", "matrix has NaN/Inf entries");
    const double scale = m.frobenius();
    EigenDecomposition ed;
    if (scale == 0.0) {
        ed.eigenvalues.assign(n, cplx{});
        for (std::size_t i = 0; i < n; ++i) {
            CVec e(n, cplx{});
            e[i] = 1.0;
            ed.right.push_back(e);
        }
    } else {
        const CMatrix b = m * cplx{1.0 / scale, 0.0};
        const CVec coeffs = detail::characteristic_polynomial(b);
        CVec roots = detail::durand_kerner(coeffs);
        for (auto& r : roots) r *= scale;
        // Right vectors; exact-degenerate clusters are orthogonalised within the cluster.
        const double cluster_tol = 1e-7 * scale;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<CVec> avoid;
            for (std::size_t j = 0; j < i; ++j)
                if (std::abs(roots[j] - roots[i]) < cluster_tol) avoid.push_back(ed.right[j]);
            ed.right.push_back(detail::inverse_iteration(m, roots[i], avoid, avoid.size()));
        }
        // Two-sided Rayleigh refinement with left vectors from inverse iteration on m†.
        const CMatrix mh = m.adjoint();
        for (std::size_t i = 0; i < n; ++i) {
            bool clustered = false;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && std::abs(roots[j] - roots[i]) < cluster_tol) clustered = true;
            if (clustered) {
                const CVec mv = m * ed.right[i];
                roots[i] = inner(ed.right[i], mv);
                continue;
            }
            const CVec l = detail::inverse_iteration(mh, std::conj(roots[i]), {}, 0);
            const cplx lr = inner(l, ed.right[i]);
            if (std::abs(lr) > 1e-8) roots[i] = inner(l, m * ed.right[i]) / lr;
        }
        ed.eigenvalues = roots;
    }
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        CVec r = m * ed.right[i];
        for (std::size_t k = 0; k < n; ++k) r[k] -= ed.eigenvalues[i] * ed.right[i][k];
        res = std::max(res, norm2(r));
    }
    ed.residual = scale > 0.0 ? res / scale : res;
    if (ed.residual > 1e-7)
        throw numerics_error("NonConvergence", "eigen residual " + std::to_string(ed.residual));
    if (previous) track_continuity(ed, *previous);
    else detail::default_order(ed, scale);
    if (with_left) attach_left_eigenvectors(ed);
    return ed;
}

enum class ExpmPath { Eigen, TaylorScalingSquaring };

struct ExpmResult {
    CMatrix value;
    ExpmPath path = ExpmPath::Eigen;
    double condition = 1.0;  ///< ||V||_F ||V^{-1}||_F of the eigenvector matrix (Eigen path)
};

/// Taylor scaling-and-squaring evaluation of e^{a}.
inline CMatrix expm_taylor(const CMatrix& a) {
    const std::size_t n = a.dim();
    double norm1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += std::abs(a(i, j));
        norm1 = std::max(norm1, col);
    }
    int s = 0;
    if (norm1 > 0.25) s = static_cast<int>(std::ceil(std::log2(norm1 / 0.25)));
    const CMatrix b = a * cplx{std::ldexp(1.0, -s), 0.0};
    CMatrix term = CMatrix::identity(n);
    CMatrix sum = term;
    for (int k = 1; k <= 24; ++k) {
        term = term * b;
        term *= cplx{1.0 / k, 0.0};
        sum += term;
    }
    for (int i = 0; i < s; ++i) sum = sum * sum;
    return sum;
}

/// e^{-i m t}, via the eigendecomposition unless the eigenvector matrix is ill-conditioned (> 1e8),
/// in which case Taylor scaling-and-squaring is used. The path taken is reported.
inline ExpmResult expm_detailed(const CMatrix& m, double t) {
    if (!(t >= 0.0)) throw numerics_error("InvalidArgument", "expm requires t >= 0");
    ExpmResult out;
    const std::size_t n = m.dim();
    try {
        const EigenDecomposition ed = eig(m);
        const CMatrix v = CMatrix::from_columns(ed.right);
        const CMatrix vinv = inverse(v);
        out.condition = v.frobenius() * vinv.frobenius();
        if (out.condition <= 1e8) {
            CVec d(n);
            for (std::size_t i = 0; i < n; ++i) d[i] = std::exp(-kI * ed.eigenvalues[i] * t);
            out.value = v * CMatrix::diagonal(d) * vinv;
            out.path = ExpmPath::Eigen;
            return out;
        }
    } catch (const Error&) {
        out.condition = INFINITY;
    }
    out.value = expm_taylor(m * (-kI * t));
    out.path = ExpmPath::TaylorScalingSquaring;
    return out;
}

inline CMatrix expm(const CMatrix& m, double t) { return expm_detailed(m, t).value; }

struct QRResult {
    CMatrix q;
    CMatrix r;
};

/// Householder QR with R's diagonal made real and non-negative. Columns before `required_rank`
/// must have pivot norm >= 1e-12 (RankDeficient otherwise); later columns may be dependent, in
/// which case Q is still completed to a unitary.
inline QRResult qr_unitary(const CMatrix& m, std::size_t required_rank = static_cast<std::size_t>(-1)) {
    const std::size_t n = m.dim();
    if (required_rank > n) required_rank = n;
    CMatrix r = m;
    CMatrix q = CMatrix::identity(n);
    for (std::size_t k = 0; k < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k; i < n; ++i) alpha += std::norm(r(i, k));
        alpha = std::sqrt(alpha);
        if (alpha < 1e-12) {
            if (k < required_rank)
                throw numerics_error("RankDeficient", "Householder pivot norm below 1e-12 at column " + std::to_string(k));
            continue;
        }
        const cplx x0 = r(k, k);
        const cplx ph = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx{1.0, 0.0};
        CVec v(n, cplx{});
        for (std::size_t i = k; i < n; ++i) v[i] = r(i, k);
        v[k] += ph * alpha;
        const double vn = norm2(v);
        if (vn == 0.0) continue;
        for (auto& x : v) x /= vn;
        // r <- (I - 2 v v†) r
        for (std::size_t j = 0; j < n; ++j) {
            cplx s{};
            for (std::size_t i = k; i < n; ++i) s += std::conj(v[i]) * r(i, j);
            for (std::size_t i = k; i < n; ++i) r(i, j) -= 2.0 * v[i] * s;
        }
        // q <- q (I - 2 v v†)
        for (std::size_t i = 0; i < n; ++i) {
            cplx s{};
            for (std::size_t j = k; j < n; ++j) s += q(i, j) * v[j];
            for (std::size_t j = k; j < n; ++j) q(i, j) -= 2.0 * s * std::conj(v[j]);
        }
        for (std::size_t i = k + 1; i < n; ++i) r(i, k) = 0.0;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const cplx d = r(k, k);
        if (std::abs(d) == 0.0) continue;
        const cplx ph = d / std::abs(d);
        for (std::size_t j = 0; j < n; ++j) r(k, j) *= std::conj(ph);
        for (std::size_t i = 0; i < n; ++i) q(i, k) *= ph;
        r(k, k) = std::abs(d);
    }
    return {q, r};
}

struct HermitianEigen {
    std::vector<double> values;  ///< ascending
    CMatrix vectors;             ///< columns aligned with values
};

inline void require_hermitian(const CMatrix& m) {
    const double scale = std::max(1.0, m.max_abs());
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = i; j < m.dim(); ++j)
            if (std::abs(m(i, j) - std::conj(m(j, i))) > 1e-10 * scale)
                throw numerics_error("NotHermitian", "matrix fails the Hermitian symmetry check");
}

/// Cyclic complex Jacobi diagonalisation of a Hermitian matrix.
inline HermitianEigen hermitian_eigen(const CMatrix& m) {
    require_hermitian(m);
    const std::size_t n = m.dim();
    CMatrix a = m;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const cplx avg = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = avg;
            a(j, i) = std::conj(avg);
        }
    for (std::size_t i = 0; i < n; ++i) a(i, i) = a(i, i).real();
    CMatrix v = CMatrix::identity(n);
    const double scale = std::max(a.frobenius(), 1e-300);
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += std::norm(a(i, j));
        if (std::sqrt(off) <= 1e-17 * scale) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = std::abs(a(p, q));
                if (apq <= 1e-300) continue;
                const cplx phase = a(p, q) / apq;
                const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * apq);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // G = diag(1, conj(phase)) * [[c, s], [-s, c]] acting on (p, q)
                const cplx g_pp = c, g_pq = s, g_qp = -s * std::conj(phase), g_qq = c * std::conj(phase);
                for (std::size_t k = 0; k < n; ++k) {  // a <- a G
                    const cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = akp * g_pp + akq * g_qp;
                    a(k, q) = akp * g_pq + akq * g_qq;
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = vkp * g_pp + vkq * g_qp;
                    v(k, q) = vkp * g_pq + vkq * g_qq;
                }
                for (std::size_t k = 0; k < n; ++k) {  // a <- G† a
                    const cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = std::conj(g_pp) * apk + std::conj(g_qp) * aqk;
                    a(q, k) = std::conj(g_pq) * apk + std::conj(g_qq) * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
            }
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
    HermitianEigen out;
    out.vectors = CMatrix(n);
    for (std::size_t c = 0; c < n; ++c) {
        out.values.push_back(a(idx[c], idx[c]).real());
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, c) = v(i, idx[c]);
    }
    return out;
}

/// Largest eigenvalue of a Hermitian matrix (checked to 1e-10 relative symmetry).
inline double hermitian_max_eig(const CMatrix& m) { return hermitian_eigen(m).values.back(); }

}  // namespace nhbraid
