#pragma once

// Braid-closure invariants in exact integer arithmetic.
//
// All polynomials share one exponent lattice: keys are quarter powers of s, so s^{q/4} has key q
// and A^e (with A = s^{-1/4}) has key -e.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nhbraid/braid.hpp"
#include "nhbraid/errors.hpp"
#include "nhbraid/link_class.hpp"
#include "nhbraid/parallel.hpp"

namespace nhbraid {

class LaurentPoly {
public:
    LaurentPoly() = default;

    static LaurentPoly quarter(long key, long long coeff = 1) {
        LaurentPoly p;
        if (coeff != 0) p.terms_[key] = coeff;
        return p;
    }
    static LaurentPoly constant(long long c) { return quarter(0, c); }
    static LaurentPoly s_pow(long e, long long c = 1) { return quarter(4 * e, c); }
    static LaurentPoly A_pow(long e, long long c = 1) { return quarter(-e, c); }

    /// Build from (s-exponent numerator over 2, coefficient) pairs, e.g. {{3,-1}} is -s^{3/2}.
    static LaurentPoly from_half_s(std::initializer_list<std::pair<long, long long>> half_terms) {
        LaurentPoly p;
        for (const auto& [h, c] : half_terms) p += quarter(2 * h, c);
        return p;
    }
    /// Build from (A-exponent, coefficient) pairs.
    static LaurentPoly from_A(std::initializer_list<std::pair<long, long long>> a_terms) {
        LaurentPoly p;
        for (const auto& [e, c] : a_terms) p += A_pow(e, c);
        return p;
    }

    const std::map<long, long long>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    long min_key() const { return terms_.begin()->first; }
    long max_key() const { return terms_.rbegin()->first; }
    long long coeff(long key) const {
        const auto it = terms_.find(key);
        return it == terms_.end() ? 0 : it->second;
    }

    LaurentPoly& operator+=(const LaurentPoly& o) {
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    LaurentPoly& operator-=(const LaurentPoly& o) {
        for (const auto& [k, c] : o.terms_) add_term(k, -c);
        return *this;
    }
    LaurentPoly operator-() const {
        LaurentPoly r = *this;
        for (auto& [k, c] : r.terms_) c = -c;
        return r;
    }
    friend LaurentPoly operator+(LaurentPoly a, const LaurentPoly& b) { return a += b; }
    friend LaurentPoly operator-(LaurentPoly a, const LaurentPoly& b) { return a -= b; }
    friend LaurentPoly operator*(const LaurentPoly& a, const LaurentPoly& b) {
        LaurentPoly r;
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_) r.add_term(ka + kb, ca * cb);
        return r;
    }
    LaurentPoly& operator*=(const LaurentPoly& o) { return *this = *this * o; }
    bool operator==(const LaurentPoly& o) const { return terms_ == o.terms_; }
    bool operator!=(const LaurentPoly& o) const { return !(*this == o); }

    /// Multiply by s^{key/4}.
    LaurentPoly shifted(long key) const {
        LaurentPoly r;
        for (const auto& [k, c] : terms_) r.terms_[k + key] = c;
        return r;
    }

    /// Representative under p ≐ ±s^a p: lowest exponent 0, lowest coefficient positive.
    LaurentPoly canonical() const {
        if (is_zero()) return *this;
        LaurentPoly r = shifted(-min_key());
        if (r.terms_.begin()->second < 0) r = -r;
        return r;
    }

    /// The A ↔ s substitution is the identity on this lattice; exposed for readability.
    std::map<long, long long> A_terms() const {
        std::map<long, long long> out;
        for (const auto& [k, c] : terms_) out[-k] = c;
        return out;
    }

    /// "-s^(3/2)-s^(7/2)+s^(9/2)-s^(11/2)"
    std::string str_s() const { return render(terms_, "s", 4); }
    /// "-A^12-A^4+1-A^-4"
    std::string str_A() const {
        std::map<long, long long, std::greater<>> desc;
        for (const auto& [k, c] : terms_) desc[-k] = c;
        return render(desc, "A", 1);
    }

private:
    std::map<long, long long> terms_;

    void add_term(long key, long long c) {
        if (c == 0) return;
        auto& slot = terms_[key];
        slot += c;
        if (slot == 0) terms_.erase(key);
    }

    static std::string exponent_text(long key, long denom) {
        const long g = std::gcd(std::abs(key), denom);
        const long num = key / g, den = denom / g;
        if (den == 1) return num == 1 ? "" : "^" + std::to_string(num);
        return "^(" + std::to_string(num) + "/" + std::to_string(den) + ")";
    }

    template <class Map>
    static std::string render(const Map& m, const std::string& var, long denom) {
        if (m.empty()) return "0";
        std::string out;
        bool first = true;
        for (const auto& [k, c] : m) {
            const long long mag = c < 0 ? -c : c;
            if (c < 0) out += '-';
            else if (!first) out += '+';
            if (k == 0) out += std::to_string(mag);
            else {
                if (mag != 1) out += std::to_string(mag) + "*";
                out += var + exponent_text(k, denom);
            }
            first = false;
        }
        return out;
    }
};

/// Exact division num / den in the quarter lattice; throws DivisionFailure on a remainder.
inline LaurentPoly divide_exact(LaurentPoly num, const LaurentPoly& den) {
    if (den.is_zero()) throw numerics_error("DivisionFailure", "division by the zero polynomial");
    LaurentPoly q;
    if (num.is_zero()) return q;
    const long floor_key = num.min_key() - den.min_key();
    const long hd = den.max_key();
    const long long cd = den.coeff(hd);
    while (!num.is_zero()) {
        const long hn = num.max_key();
        const long long cn = num.coeff(hn);
        if (hn - hd < floor_key || cn % cd != 0)
            throw numerics_error("DivisionFailure", "polynomial division leaves a remainder");
        const LaurentPoly t = LaurentPoly::quarter(hn - hd, cn / cd);
        q += t;
        num -= t * den;
    }
    return q;
}

using LaurentMatrix = std::vector<std::vector<LaurentPoly>>;

inline LaurentMatrix laurent_identity(std::size_t n) {
    LaurentMatrix m(n, std::vector<LaurentPoly>(n));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = LaurentPoly::constant(1);
    return m;
}

inline LaurentMatrix operator*(const LaurentMatrix& a, const LaurentMatrix& b) {
    const std::size_t n = a.size();
    LaurentMatrix r(n, std::vector<LaurentPoly>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            if (a[i][k].is_zero()) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (!b[k][j].is_zero()) r[i][j] += a[i][k] * b[k][j];
        }
    return r;
}

/// Laplace expansion; dimensions here are at most a handful.
inline LaurentPoly determinant(const LaurentMatrix& m) {
    const std::size_t n = m.size();
    if (n == 0) return LaurentPoly::constant(1);
    if (n == 1) return m[0][0];
    LaurentPoly det;
    for (std::size_t c = 0; c < n; ++c) {
        if (m[0][c].is_zero()) continue;
        LaurentMatrix minor(n - 1);
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (j != c) minor[i - 1].push_back(m[i][j]);
        const LaurentPoly term = m[0][c] * determinant(minor);
        if (c % 2 == 0) det += term; else det -= term;
    }
    return det;
}

/// Reduced Burau image of σ_i (or σ_i⁻¹) in B_n: identity except row i, which carries
/// s at column i-1, -s on the diagonal and 1 at column i+1 (1-based, dropped at the edges).
inline LaurentMatrix burau_generator(int n, int i, bool inverse = false) {
    if (n < 2 || i < 1 || i > n - 1) throw config_error("InvalidBraid", "generator index out of range");
    const std::size_t dim = static_cast<std::size_t>(n - 1);
    LaurentMatrix m = laurent_identity(dim);
    const std::size_t r = static_cast<std::size_t>(i - 1);
    if (!inverse) {
        m[r][r] = LaurentPoly::s_pow(1, -1);
        if (r > 0) m[r][r - 1] = LaurentPoly::s_pow(1);
        if (r + 1 < dim) m[r][r + 1] = LaurentPoly::constant(1);
    } else {
        // Row i of the inverse: 1/r_i on the diagonal and -r_j/r_i elsewhere, with r_i = -s.
        m[r][r] = LaurentPoly::s_pow(-1, -1);
        if (r > 0) m[r][r - 1] = LaurentPoly::constant(1);
        if (r + 1 < dim) m[r][r + 1] = LaurentPoly::s_pow(-1);
    }
    return m;
}

inline LaurentMatrix burau(const BraidWord& w) {
    w.validate();
    LaurentMatrix m = laurent_identity(static_cast<std::size_t>(std::max(w.strands - 1, 0)));
    for (int g : w.generators) m = m * burau_generator(w.strands, std::abs(g), g < 0);
    return m;
}

enum class AlexanderNormalization {
    Standard,        ///< (1 - s) det(I - B) / (1 - s^N)
    OneMinusSOnly,   ///< det(I - B) / (1 - s)
};

inline LaurentPoly alexander(const BraidWord& w, AlexanderNormalization norm = AlexanderNormalization::Standard) {
    const LaurentMatrix b = burau(w);
    LaurentMatrix d = laurent_identity(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) d[i][j] -= b[i][j];
    const LaurentPoly det = determinant(d);
    const LaurentPoly one_minus_s = LaurentPoly::constant(1) - LaurentPoly::s_pow(1);
    if (norm == AlexanderNormalization::OneMinusSOnly) return divide_exact(det, one_minus_s).canonical();
    const LaurentPoly den = LaurentPoly::constant(1) - LaurentPoly::s_pow(w.strands);
    return divide_exact(det * one_minus_s, den).canonical();
}

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

/// Loop count of the closed diagram for one smoothing state (bit c set = B-smoothing at crossing c).
inline int closure_loops(const BraidWord& w, std::uint64_t state) {
    const int n = w.strands, m = static_cast<int>(w.generators.size());
    auto node = [n](int level, int pos) { return level * n + pos; };
    UnionFind uf((m + 1) * n);
    for (int l = 0; l < m; ++l) {
        const int g = w.generators[l];
        const int p = std::abs(g) - 1;
        const bool b_smoothing = (state >> l) & 1u;
        // σ_i: A-smoothing keeps strands vertical; σ_i⁻¹ swaps the two roles.
        const bool vertical = (g > 0) != b_smoothing;
        for (int q = 0; q < n; ++q)
            if (q != p && q != p + 1) uf.unite(node(l, q), node(l + 1, q));
        if (vertical) {
            uf.unite(node(l, p), node(l + 1, p));
            uf.unite(node(l, p + 1), node(l + 1, p + 1));
        } else {
            uf.unite(node(l, p), node(l, p + 1));
            uf.unite(node(l + 1, p), node(l + 1, p + 1));
        }
    }
    for (int q = 0; q < n; ++q) uf.unite(node(m, q), node(0, q));
    int loops = 0;
    for (int x = 0; x < (m + 1) * n; ++x)
        if (uf.find(x) == x) ++loops;
    return loops;
}

}  // namespace detail

/// Kauffman bracket of the braid closure (normalised so that the unknot is 1), as a polynomial in A.
inline LaurentPoly kauffman_bracket(const BraidWord& w, std::size_t max_crossings = 24, unsigned workers = 1) {
    w.validate();
    const std::size_t m = w.generators.size();
    if (m > max_crossings)
        throw config_error("WordTooLong", "state sum capped at " + std::to_string(max_crossings) + " crossings");
    const int max_loops = w.strands * static_cast<int>(m + 1);
    const std::uint64_t states = std::uint64_t{1} << m;
    // tally[a_minus_b + m][loops] accumulated per worker slice, then expanded once.
    const std::size_t slices = std::max<std::size_t>(1, std::min<std::uint64_t>(states, workers == 0 ? default_workers() : workers));
    std::vector<std::vector<long long>> tally(slices, std::vector<long long>((2 * m + 1) * (max_loops + 1), 0));
    parallel_for(slices, workers, [&](std::size_t s) {
        const std::uint64_t lo = states * s / slices, hi = states * (s + 1) / slices;
        for (std::uint64_t st = lo; st < hi; ++st) {
            const int b = __builtin_popcountll(st);
            const int a_minus_b = static_cast<int>(m) - 2 * b;
            const int loops = detail::closure_loops(w, st);
            ++tally[s][(a_minus_b + m) * (max_loops + 1) + loops];
        }
    });
    const LaurentPoly delta = -(LaurentPoly::A_pow(2) + LaurentPoly::A_pow(-2));
    std::vector<LaurentPoly> delta_pow(max_loops + 1);
    delta_pow[0] = LaurentPoly::constant(1);
    for (int i = 1; i <= max_loops; ++i) delta_pow[i] = delta_pow[i - 1] * delta;
    LaurentPoly total;
    for (std::size_t ab = 0; ab <= 2 * m; ++ab)
        for (int loops = 1; loops <= max_loops; ++loops) {
            long long count = 0;
            for (const auto& t : tally) count += t[ab * (max_loops + 1) + loops];
            if (count == 0) continue;
            total += LaurentPoly::A_pow(static_cast<long>(ab) - static_cast<long>(m), count) * delta_pow[loops - 1];
        }
    return total;
}

/// V(s) = (-A^3)^{-w} <closure>, A = s^{-1/4}.
inline LaurentPoly jones(const BraidWord& w) {
    const int wr = writhe(w);
    LaurentPoly v = kauffman_bracket(w).shifted(3L * wr);
    return (wr % 2 == 0) ? v : -v;
}

struct LinkTableRow {
    LinkClass label;
    BraidWord word;
    LaurentPoly alexander;
    LaurentPoly jones;
    int components;
};

/// Reference rows: three two-band and eight four-band closures.
inline const std::vector<LinkTableRow>& link_table() {
    using LP = LaurentPoly;
    static const std::vector<LinkTableRow> rows = [] {
        const LP one = LP::constant(1), s = LP::s_pow(1);
        const LP hopf_v = LP::from_half_s({{1, -1}, {5, -1}});
        const LP unlink_v = LP::from_half_s({{-1, -1}, {1, -1}});
        const LP one_plus_s = one + s, one_plus_s2 = one + LP::s_pow(2);
        std::vector<LinkTableRow> r;
        r.push_back({LinkClass::HopfLink, BraidWord({1, 1}, 2), one - s, hopf_v, 2});
        r.push_back({LinkClass::Unknot, BraidWord({1}, 2), one, one, 1});
        r.push_back({LinkClass::Unlink, BraidWord({}, 2), LP{}, unlink_v, 2});
        r.push_back({LinkClass::SolomonKnot, BraidWord({1, 3, 2, 1, 3, 2}, 4), (one - s) * one_plus_s2,
                     LP::from_half_s({{3, -1}, {7, -1}, {9, 1}, {11, -1}}), 2});
        r.push_back({LinkClass::HopfChain, BraidWord({1, 3, 1, 3, 2}, 4), (one - s) * (one - s),
                     s * one_plus_s2 * one_plus_s2, 3});
        r.push_back({LinkClass::HopfLink, BraidWord({2, 1, 3, 2}, 4), one - s, hopf_v, 2});
        r.push_back({LinkClass::Unknot, BraidWord({2, 1, 3}, 4), one, one, 1});
        r.push_back({LinkClass::Unlink, BraidWord({1, 3}, 4), LP{}, unlink_v, 2});
        r.push_back({LinkClass::HopfLinkPlusUnlink, BraidWord({2, 2}, 4), LP{},
                     -(LP::from_half_s({{-1, 1}}) * one_plus_s * one_plus_s * one_plus_s2), 4});
        r.push_back({LinkClass::UnknotPlusUnlink, BraidWord({2}, 4), LP{}, LP::s_pow(-1) * one_plus_s * one_plus_s, 3});
        r.push_back({LinkClass::DoubleUnlinks, BraidWord({}, 4), LP{},
                     -(LP::from_half_s({{-3, 1}}) * one_plus_s * one_plus_s * one_plus_s), 4});
        return r;
    }();
    return rows;
}

/// Four-band topological winding matrices per class, in units of 1/4.
inline std::array<std::array<int, 4>, 4> table_winding_quarters(LinkClass c) {
    switch (c) {
        case LinkClass::Unknot: return {{{0, 1, 1, 1}, {1, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}}};
        case LinkClass::HopfChain: return {{{0, 2, 2, 0}, {2, 0, 2, 2}, {2, 2, 0, 2}, {0, 2, 2, 0}}};
        case LinkClass::SolomonKnot: return {{{0, 2, 2, 2}, {2, 0, 2, 2}, {2, 2, 0, 2}, {2, 2, 2, 0}}};
        case LinkClass::HopfLinkPlusUnlink: return {{{0, 0, 0, 0}, {0, 0, 4, 0}, {0, 4, 0, 0}, {0, 0, 0, 0}}};
        case LinkClass::UnknotPlusUnlink: return {{{0, 0, 0, 0}, {0, 0, 2, 0}, {0, 2, 0, 0}, {0, 0, 0, 0}}};
        case LinkClass::DoubleUnlinks: return {{{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}};
        case LinkClass::HopfLink: return {{{0, 0, 2, 2}, {0, 0, 2, 2}, {2, 2, 0, 0}, {2, 2, 0, 0}}};
        case LinkClass::Unlink: return {{{0, 2, 0, 0}, {2, 0, 0, 0}, {0, 0, 0, 2}, {0, 0, 2, 0}}};
    }
    return {};
}

/// Match (Jones, closure component count) against the summary table. A supplied 4×4 winding
/// matrix must then have the same multiset of off-diagonal entries as that class's table matrix.
inline LinkClass classify_link(const BraidWord& w, const std::optional<std::vector<std::vector<double>>>& winding = std::nullopt) {
    const LaurentPoly v = jones(w);
    const int comps = w.components();
    for (const auto& row : link_table()) {
        if (row.jones != v || row.components != comps) continue;
        if (winding && winding->size() == 4) {
            std::vector<int> got, want;
            const auto ref = table_winding_quarters(row.label);
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j) {
                    got.push_back(static_cast<int>(std::lround(4.0 * (*winding)[i][j])));
                    want.push_back(ref[i][j]);
                }
            std::sort(got.begin(), got.end());
            std::sort(want.begin(), want.end());
            if (got != want)
                throw classification_error("WindingMismatch", "winding matrix disagrees with " + to_string(row.label));
        }
        return row.label;
    }
    throw classification_error("Unclassified", "no table row matches braid '" + w.str() + "'");
}

}  // namespace nhbraid
