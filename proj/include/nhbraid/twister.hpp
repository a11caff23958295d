#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "nhbraid/errors.hpp"
#include "nhbraid/link_class.hpp"
#include "nhbraid/matrix.hpp"

namespace nhbraid {

/// N-band twister model: sigma_coeff·Σ + Σ_v harmonics[v-1]·T_v(k).
struct TwisterSpec {
    int n_bands = 2;
    cplx sigma_coeff{};          ///< i·m0 for the concrete models
    std::vector<cplx> harmonics;  ///< m_1 … m_V

    /// The concrete two-parameter models (N = 2 or 4): i·m0·Σ + m1·T_1 + T_2.
    static TwisterSpec model(int n, double m0, double m1) {
        return TwisterSpec{n, cplx{0.0, m0}, {cplx{m1, 0.0}, cplx{1.0, 0.0}}};
    }

    double m0() const { return sigma_coeff.imag(); }
    double m1() const { return harmonics.empty() ? 0.0 : harmonics[0].real(); }

    void validate() const {
        if (n_bands < 2) throw config_error("InvalidDimension", "n_bands must be >= 2");
        if (harmonics.empty()) throw config_error("InvalidSpec", "harmonics list must be non-empty");
    }
};

inline CMatrix shift_matrix(int n) {
    if (n < 2) throw numerics_error("InvalidDimension", "shift_matrix needs n >= 2");
    CMatrix s(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) s(p, p) = 1.0 - 2.0 * p / (n - 1);
    return s;
}

inline CMatrix twister_matrix(int n, int v, double k) {
    if (n < 2 || v < 1) throw numerics_error("InvalidDimension", "twister_matrix needs n >= 2, v >= 1");
    CMatrix t(static_cast<std::size_t>(n));
    for (int p = 1; p < n; ++p) t(p, p - 1) = 1.0;
    t(0, n - 1) = std::polar(1.0, v * k);
    return t;
}

inline CMatrix build_hamiltonian(const TwisterSpec& spec, double k) {
    spec.validate();
    CMatrix h = shift_matrix(spec.n_bands) * spec.sigma_coeff;
    for (std::size_t v = 0; v < spec.harmonics.size(); ++v) {
        if (spec.harmonics[v] == cplx{}) continue;
        h += twister_matrix(spec.n_bands, static_cast<int>(v) + 1, k) * spec.harmonics[v];
    }
    return h;
}

/// (E_+, E_-) with E_- = -E_+, principal square root.
inline std::array<cplx, 2> analytic_spectrum_2band(double m0, double m1, double k) {
    const cplx z = std::polar(1.0, k);
    const cplx e = std::sqrt(z * z * (m1 + 1.0) + m1 * z * (m1 + 1.0) - m0 * m0);
    return {e, -e};
}

/// E_{a,b} for (a,b) in {(+,+), (+,-), (-,+), (-,-)}.
inline std::array<cplx, 4> analytic_spectrum_4band(double m0, double m1, double k) {
    const cplx z = std::polar(1.0, k);
    const double a = m1 + 1.0;
    const cplx s = std::sqrt(16.0 * std::pow(m0, 4) + 81.0 * z * a * a * a * (m1 + z));
    std::array<cplx, 4> out{};
    int idx = 0;
    for (int sa : {1, -1})
        for (int sb : {1, -1}) out[idx++] = (sa / 3.0) * std::sqrt(-5.0 * m0 * m0 + static_cast<double>(sb) * s);
    return out;
}

/// Roots of λ^n = e^{ivk}: e^{i(vk + 2πj)/n}.
inline std::vector<cplx> pure_twister_eigenvalues(int n, int v, double k) {
    if (n < 2 || v < 1) throw numerics_error("InvalidDimension", "pure_twister_eigenvalues needs n >= 2, v >= 1");
    std::vector<cplx> e;
    for (int j = 0; j < n; ++j) e.push_back(std::polar(1.0, (v * k + 2.0 * kPi * j) / n));
    return e;
}

struct TorusLinkType {
    int components = 1;
    int v_prime = 1;
    int n_prime = 1;
};

inline TorusLinkType torus_link_components(int v, int n) {
    if (v < 1 || n < 1) throw numerics_error("InvalidArgument", "torus_link_components needs v, n >= 1");
    const int d = std::gcd(v, n);
    return {d, v / d, n / d};
}

inline std::array<double, 3> torus_embedding(int n, int v, int j, double k) {
    if (j < 0 || j >= n) throw numerics_error("InvalidArgument", "strand index out of range");
    const double phi = (v * k + 2.0 * kPi * j) / n;
    const double r = 2.0 + std::cos(phi);
    return {r * std::cos(k), r * std::sin(k), -std::sin(phi)};
}

// ---------------------------------------------------------------------------------------------
// Phase regions
// ---------------------------------------------------------------------------------------------

struct PhaseRegion {
    LinkClass label = LinkClass::Unlink;
    std::vector<double> boundary_values;  ///< NaN where a boundary function is outside its window
    std::vector<int> signs;               ///< +1 / -1, 0 where inactive
    bool via_flood_fill = false;
};

namespace detail {

inline constexpr double kBoundaryTol = 1e-9;

inline std::vector<double> boundary_functions(int model, double m0, double m1) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (model == 2) {
        return {(m1 + 1) * (m1 + 1) - m0 * m0, m1 * m1 - 1 + m0 * m0,
                std::abs(m1) <= 2.0 ? 1 + m0 * m0 + m1 : nan};
    }
    const double a = m1 + 1.0, m04 = std::pow(m0, 4), a3 = a * a * a;
    return {16 * m04 + 81 * a3 * (1 - m1),
            m04 - 9 * a3 * a,
            m04 - 9 * a3 * (1 - m1),
            std::abs(m1) <= 2.0 ? 16 * m04 - 81 * a3 : nan,
            (m1 >= -2.0 && m1 <= -1.0) ? m04 + 9 * a3 : nan};
}

inline std::vector<int> sign_pattern(const std::vector<double>& f) {
    std::vector<int> s;
    for (double x : f) s.push_back(std::isnan(x) ? 0 : (x > 0 ? 1 : -1));
    return s;
}

inline bool compatible(const std::vector<int>& a, const std::vector<int>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != 0 && b[i] != 0 && a[i] != b[i]) return false;
    return true;
}

struct Anchor {
    double m0, m1;
    LinkClass label;
};

inline const std::vector<Anchor>& anchors(int model) {
    static const std::vector<Anchor> two = {
        {0.5338, 0.6, LinkClass::HopfLink}, {1.273, 0.6, LinkClass::Unknot}, {1.8889, 0.6, LinkClass::Unlink}};
    static const std::vector<Anchor> four = {
        {1.5, 1.0, LinkClass::HopfChain},           {1.5, 0.5, LinkClass::SolomonKnot},
        {1.5, -0.08, LinkClass::HopfLinkPlusUnlink}, {1.5, -3.0, LinkClass::Unknot},
        {1.5, -0.18, LinkClass::UnknotPlusUnlink},   {1.5, -1.0, LinkClass::DoubleUnlinks},
        {1.0, -1.5, LinkClass::HopfLink},            {1.5, -1.8, LinkClass::Unlink}};
    return model == 2 ? two : four;
}

/// Coarse sign-pattern raster over [-4,4]² used to resolve patterns shared by several anchors.
struct CoarseGrid {
    static constexpr int kSide = 161;
    static constexpr double kLo = -4.0, kStep = 0.05;
    std::vector<std::vector<int>> pattern;  // empty when the node sits on a boundary
    std::vector<int> anchor_label;          // index into kAllLinkClasses or -1

    static double coord(int i) { return kLo + kStep * i; }

    explicit CoarseGrid(int model) {
        pattern.resize(kSide * kSide);
        anchor_label.assign(kSide * kSide, -1);
        for (int i = 0; i < kSide; ++i)
            for (int j = 0; j < kSide; ++j) {
                const auto f = boundary_functions(model, coord(i), coord(j));
                bool on = false;
                for (double x : f)
                    if (!std::isnan(x) && std::abs(x) <= 1e-6) on = true;
                if (!on) pattern[i * kSide + j] = sign_pattern(f);
            }
        for (const auto& a : anchors(model)) {
            const int i = static_cast<int>(std::lround((a.m0 - kLo) / kStep));
            const int j = static_cast<int>(std::lround((a.m1 - kLo) / kStep));
            const int cls = static_cast<int>(std::find(kAllLinkClasses.begin(), kAllLinkClasses.end(), a.label) -
                                             kAllLinkClasses.begin());
            anchor_label[i * kSide + j] = cls;
        }
    }
};

inline const CoarseGrid& coarse_grid(int model) {
    static const CoarseGrid g2(2), g4(4);
    return model == 2 ? g2 : g4;
}

inline std::vector<LinkClass> flood_fill_labels(int model, double m0, double m1, const std::vector<int>& query) {
    const auto& g = coarse_grid(model);
    constexpr int n = CoarseGrid::kSide;
    const int ci = static_cast<int>(std::lround((m0 - CoarseGrid::kLo) / CoarseGrid::kStep));
    const int cj = static_cast<int>(std::lround((m1 - CoarseGrid::kLo) / CoarseGrid::kStep));
    std::vector<char> seen(n * n, 0);
    std::queue<int> q;
    for (int di = -2; di <= 2; ++di)
        for (int dj = -2; dj <= 2; ++dj) {
            const int i = ci + di, j = cj + dj;
            if (i < 0 || j < 0 || i >= n || j >= n) continue;
            const auto& p = g.pattern[i * n + j];
            if (!p.empty() && compatible(p, query) && !seen[i * n + j]) {
                seen[i * n + j] = 1;
                q.push(i * n + j);
            }
        }
    std::vector<LinkClass> found;
    while (!q.empty()) {
        const int c = q.front();
        q.pop();
        if (g.anchor_label[c] >= 0) {
            const LinkClass l = kAllLinkClasses[g.anchor_label[c]];
            if (std::find(found.begin(), found.end(), l) == found.end()) found.push_back(l);
        }
        const int i = c / n, j = c % n;
        const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
        for (const auto& e : nb) {
            if (e[0] < 0 || e[1] < 0 || e[0] >= n || e[1] >= n) continue;
            const int d = e[0] * n + e[1];
            if (seen[d] || g.pattern[d].empty()) continue;
            if (!compatible(g.pattern[d], g.pattern[c])) continue;
            seen[d] = 1;
            q.push(d);
        }
    }
    return found;
}

inline PhaseRegion classify_region(int model, double m0, double m1) {
    if (std::abs(m0) < kBoundaryTol && std::abs(m1 + 1.0) < kBoundaryTol)
        throw classification_error("DegeneratePoint", "(m0, m1) = (0, -1) is the fully degenerate point");
    PhaseRegion out;
    out.boundary_values = boundary_functions(model, m0, m1);
    for (double x : out.boundary_values)
        if (!std::isnan(x) && std::abs(x) <= kBoundaryTol)
            throw classification_error("OnBoundary", "query point lies on a phase boundary");
    out.signs = sign_pattern(out.boundary_values);
    std::vector<LinkClass> matches;
    for (const auto& a : anchors(model))
        if (compatible(sign_pattern(boundary_functions(model, a.m0, a.m1)), out.signs)) matches.push_back(a.label);
    if (matches.size() == 1) {
        out.label = matches.front();
        return out;
    }
    const auto filled = flood_fill_labels(model, m0, m1, out.signs);
    if (filled.size() == 1) {
        out.label = filled.front();
        out.via_flood_fill = true;
        return out;
    }
    throw classification_error("UnresolvedRegion", "sign pattern does not identify a unique anchored region");
}

}  // namespace detail

inline PhaseRegion phase_region_2band(double m0, double m1) { return detail::classify_region(2, m0, m1); }
inline PhaseRegion phase_region_4band(double m0, double m1) { return detail::classify_region(4, m0, m1); }

}  // namespace nhbraid
