#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "nhbraid/errors.hpp"

namespace nhbraid {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

/// Dense square complex matrix, row-major. Dimensions in this library stay tiny (2, 4, 8).
class CMatrix {
public:
    CMatrix() = default;
    explicit CMatrix(std::size_t n) : n_(n), a_(n * n, cplx{}) {}
    CMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
        n_ = rows.size();
        a_.reserve(n_ * n_);
        for (const auto& r : rows) {
            if (r.size() != n_) throw numerics_error("InvalidDimension", "initializer rows must form a square");
            a_.insert(a_.end(), r.begin(), r.end());
        }
    }

    static CMatrix identity(std::size_t n) {
        CMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static CMatrix diagonal(const CVec& d) {
        CMatrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    /// Matrix whose columns are the given vectors.
    static CMatrix from_columns(const std::vector<CVec>& cols) {
        CMatrix m(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (std::size_t i = 0; i < cols.size(); ++i) m(i, j) = cols[j][i];
        return m;
    }

    std::size_t dim() const noexcept { return n_; }
    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    const std::vector<cplx>& entries() const noexcept { return a_; }

    CVec column(std::size_t j) const {
        CVec c(n_);
        for (std::size_t i = 0; i < n_; ++i) c[i] = (*this)(i, j);
        return c;
    }
    CVec row(std::size_t i) const { return CVec(a_.begin() + i * n_, a_.begin() + (i + 1) * n_); }

    CMatrix adjoint() const {
        CMatrix r(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) r(j, i) = std::conj((*this)(i, j));
        return r;
    }

    cplx trace() const {
        cplx t{};
        for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius() const {
        double s = 0.0;
        for (const auto& x : a_) s += std::norm(x);
        return std::sqrt(s);
    }

    double max_abs() const {
        double s = 0.0;
        for (const auto& x : a_) s = std::max(s, std::abs(x));
        return s;
    }

    bool finite() const {
        for (const auto& x : a_)
            if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
        return true;
    }

    CMatrix& operator+=(const CMatrix& o) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }
    CMatrix& operator-=(const CMatrix& o) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
        return *this;
    }
    CMatrix& operator*=(cplx s) {
        for (auto& x : a_) x *= s;
        return *this;
    }

    friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
    friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
    friend CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
    friend CMatrix operator*(cplx s, CMatrix a) { return a *= s; }

    friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
        const std::size_t n = a.n_;
        CMatrix r(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                const cplx aik = a(i, k);
                if (aik == cplx{}) continue;
                for (std::size_t j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }

    friend CVec operator*(const CMatrix& a, const CVec& v) {
        CVec r(a.n_, cplx{});
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t j = 0; j < a.n_; ++j) r[i] += a(i, j) * v[j];
        return r;
    }

private:
    std::size_t n_ = 0;
    std::vector<cplx> a_;
};

/// Kronecker product a ⊗ b.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    const std::size_t na = a.dim(), nb = b.dim();
    CMatrix r(na * nb);
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < na; ++j)
            for (std::size_t k = 0; k < nb; ++k)
                for (std::size_t l = 0; l < nb; ++l) r(i * nb + k, j * nb + l) = a(i, j) * b(k, l);
    return r;
}

inline cplx inner(const CVec& a, const CVec& b) {
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

inline double norm2(const CVec& v) { return std::sqrt(std::real(inner(v, v))); }

inline CVec normalized(CVec v) {
    const double n = norm2(v);
    if (n > 0.0)
        for (auto& x : v) x /= n;
    return v;
}

/// |<a|b>| / (|a||b|)
inline double fidelity_amplitude(const CVec& a, const CVec& b) {
    const double na = norm2(a), nb = norm2(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::abs(inner(a, b)) / (na * nb);
}

/// Solve a·x = b by Gaussian elimination with partial pivoting. Tiny pivots are replaced by
/// `pivot_floor` (used on purpose by inverse iteration); returns false if that happened.
inline bool solve_linear(CMatrix a, CVec b, CVec& x, double pivot_floor = 0.0) {
    const std::size_t n = a.dim();
    bool clean = true;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
        if (p != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(p, j));
            std::swap(b[c], b[p]);
        }
        if (std::abs(a(c, c)) <= pivot_floor) {
            a(c, c) = pivot_floor > 0.0 ? cplx{pivot_floor, 0.0} : cplx{1e-300, 0.0};
            clean = false;
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const cplx f = a(r, c) / a(c, c);
            if (f == cplx{}) continue;
            for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
            b[r] -= f * b[c];
        }
    }
    x.assign(n, cplx{});
    for (std::size_t i = n; i-- > 0;) {
        cplx s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return clean;
}

/// Matrix inverse by column-wise Gaussian elimination. Throws Singular on a zero pivot.
inline CMatrix inverse(const CMatrix& a) {
    const std::size_t n = a.dim();
    std::vector<CVec> cols;
    cols.reserve(n);
    const double scale = std::max(a.max_abs(), 1e-300);
    for (std::size_t j = 0; j < n; ++j) {
        CVec e(n, cplx{});
        e[j] = 1.0;
        CVec x;
        if (!solve_linear(a, e, x, 1e-15 * scale)) throw numerics_error("Singular", "matrix inverse hit a zero pivot");
        cols.push_back(std::move(x));
    }
    return CMatrix::from_columns(cols);
}

}  // namespace nhbraid
