#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "nhbraid/braid.hpp"
#include "nhbraid/circuit.hpp"
#include "nhbraid/errors.hpp"
#include "nhbraid/matrix.hpp"
#include "nhbraid/numerics.hpp"
#include "nhbraid/reconstruct.hpp"
#include "nhbraid/twister.hpp"

namespace nhbraid {

struct TrajectorySeries {
    std::vector<double> k_grid;
    std::vector<std::vector<cplx>> lambda;  ///< [band][k]

    int bands() const { return static_cast<int>(lambda.size()); }

    void validate() const {
        if (k_grid.size() < 2) throw numerics_error("InvalidGrid", "trajectory needs at least two grid points");
        if (std::abs(k_grid.front()) > 1e-9 || std::abs(k_grid.back() - 2 * kPi) > 1e-9)
            throw numerics_error("InvalidGrid", "grid must run from 0 to 2π");
        for (std::size_t i = 1; i < k_grid.size(); ++i)
            if (!(k_grid[i] > k_grid[i - 1])) throw numerics_error("InvalidGrid", "grid must be strictly increasing");
        for (const auto& b : lambda)
            if (b.size() != k_grid.size()) throw numerics_error("InvalidGrid", "band series length mismatch");
        for (std::size_t m = 0; m < k_grid.size(); ++m)
            for (std::size_t i = 0; i < lambda.size(); ++i)
                for (std::size_t j = i + 1; j < lambda.size(); ++j)
                    if (std::abs(lambda[i][m] - lambda[j][m]) < 1e-10)
                        throw numerics_error("ExceptionalPoint", "bands coincide at k = " + std::to_string(k_grid[m]));
    }
};

/// Stereographic projections of both bands combined into Λ_+ = p_+ p_- / 4, Λ_- = -Λ_+.
inline TrajectorySeries lambda_2band(const std::vector<ReconstructedState>& plus, const std::vector<ReconstructedState>& minus) {
    if (plus.size() != minus.size()) throw numerics_error("InvalidGrid", "band series length mismatch");
    TrajectorySeries t;
    t.lambda.assign(2, std::vector<cplx>(plus.size()));
    for (std::size_t m = 0; m < plus.size(); ++m) {
        t.k_grid.push_back(plus[m].k);
        const Pauli3 a = pauli_of_state(plus[m].amplitudes), b = pauli_of_state(minus[m].amplitudes);
        if (1.0 - a.z < 1e-9 || 1.0 - b.z < 1e-9) throw numerics_error("PoleHit", "state at the stereographic pole");
        const cplx pp = cplx{a.x, a.y} / (1.0 - a.z) + cplx{b.x, b.y} / (1.0 - b.z);
        const cplx pm = cplx{a.x, -a.y} / (1.0 - a.z) - cplx{b.x, -b.y} / (1.0 - b.z);
        t.lambda[0][m] = pp * pm / 4.0;
        t.lambda[1][m] = -t.lambda[0][m];
    }
    return t;
}

/// Λ = (X + iY) / Z from the sector-B observables, which equals ψ_3 / ψ_4.
inline std::vector<cplx> lambda_4band(const std::vector<ReconstructedState>& series) {
    std::vector<cplx> out;
    out.reserve(series.size());
    for (const auto& s : series) {
        const CVec& v = s.amplitudes;
        const double n = norm2(v) * norm2(v);
        const cplx c = std::conj(v[2]) * v[3];
        const double x = 4 * c.real() / n, y = -4 * c.imag() / n, z = 4 * std::norm(v[3]) / n;
        if (z < 1e-9) throw numerics_error("ProjectionDegenerate", "Z expectation vanishes at k = " + std::to_string(s.k));
        out.push_back(cplx{x, y} / z);
    }
    return out;
}

/// Trajectories for every band, dispatching on the band count.
inline TrajectorySeries trajectories_from_states(const std::vector<std::vector<ReconstructedState>>& states) {
    if (states.size() == 2) return lambda_2band(states[0], states[1]);
    if (states.size() != 4) throw config_error("UnsupportedModel", "trajectories are defined for N = 2 and N = 4");
    TrajectorySeries t;
    for (const auto& s : states[0]) t.k_grid.push_back(s.k);
    for (const auto& band : states) t.lambda.push_back(lambda_4band(band));
    return t;
}

/// Eigenvector series straight from the eigensolver (no circuit), gauge-fixed.
inline std::vector<std::vector<ReconstructedState>> eigenstate_series(const std::vector<EigenDecomposition>& spectra,
                                                                      const std::vector<double>& k_grid) {
    const std::size_t nb = spectra.front().size();
    std::vector<std::vector<ReconstructedState>> out(nb, std::vector<ReconstructedState>(k_grid.size()));
    for (std::size_t m = 0; m < k_grid.size(); ++m)
        for (std::size_t b = 0; b < nb; ++b) out[b][m] = {canonical_gauge(spectra[m].right[b]), static_cast<int>(b), k_grid[m], false};
    return out;
}

/// Energies themselves as trajectories (used where the eigenvector projection degenerates).
inline TrajectorySeries spectral_trajectories(const std::vector<EigenDecomposition>& spectra, const std::vector<double>& k_grid) {
    TrajectorySeries t;
    t.k_grid = k_grid;
    t.lambda.assign(spectra.front().size(), std::vector<cplx>(k_grid.size()));
    for (std::size_t m = 0; m < k_grid.size(); ++m)
        for (std::size_t b = 0; b < spectra[m].size(); ++b) t.lambda[b][m] = spectra[m].eigenvalues[b];
    return t;
}

struct PairTrace {
    int i = 0, j = 0;
    std::vector<double> w;  ///< cumulative winding W_ij(k)
    double chi0 = 0.0;      ///< arg(Λ_i(0) - Λ_j(0))
};

struct WindingTrace {
    std::vector<double> k_grid;
    int n_bands = 0;
    std::vector<PairTrace> pairs;  ///< i < j, lexicographic

    const PairTrace& pair(int i, int j) const {
        for (const auto& p : pairs)
            if ((p.i == i && p.j == j) || (p.i == j && p.j == i)) return p;
        throw numerics_error("InvalidArgument", "no such band pair");
    }
};

inline WindingTrace winding_trace(const TrajectorySeries& traj) {
    traj.validate();
    WindingTrace out;
    out.k_grid = traj.k_grid;
    out.n_bands = traj.bands();
    const std::size_t nk = traj.k_grid.size();
    for (int i = 0; i < traj.bands(); ++i)
        for (int j = i + 1; j < traj.bands(); ++j) {
            PairTrace p;
            p.i = i;
            p.j = j;
            p.w.assign(nk, 0.0);
            cplx prev = traj.lambda[i][0] - traj.lambda[j][0];
            p.chi0 = std::arg(prev);
            for (std::size_t m = 1; m < nk; ++m) {
                const cplx cur = traj.lambda[i][m] - traj.lambda[j][m];
                const double step = std::arg(cur / prev);
                if (std::abs(step) >= kPi / 2)
                    throw numerics_error("StepTooLarge", "phase step of " + std::to_string(step) + " rad near k = " +
                                                             std::to_string(traj.k_grid[m]) + "; refine the k-grid");
                p.w[m] = p.w[m - 1] + step / (2 * kPi);
                prev = cur;
            }
            out.pairs.push_back(std::move(p));
        }
    return out;
}

/// W̃_ij = W_ij - (χ_ref - χ_ij(0)) / 2π; without a reference each pair keeps its own plane (identity).
inline WindingTrace phase_shift(const WindingTrace& trace, std::optional<double> reference_chi) {
    WindingTrace out = trace;
    if (!reference_chi) return out;
    for (auto& p : out.pairs) {
        const double offset = (*reference_chi - p.chi0) / (2 * kPi);
        for (auto& x : p.w) x -= offset;
    }
    return out;
}

/// Wbar_ij = W_ij(2π), symmetric.
inline std::vector<std::vector<double>> winding_endpoints(const WindingTrace& trace) {
    std::vector<std::vector<double>> w(trace.n_bands, std::vector<double>(trace.n_bands, 0.0));
    for (const auto& p : trace.pairs) w[p.i][p.j] = w[p.j][p.i] = p.w.back();
    return w;
}

struct Crossing {
    double k = 0.0;
    int i = 0, j = 0;
    int r = 0;
};

struct CrossingReport {
    std::vector<Crossing> events;      ///< sorted by k
    std::vector<Crossing> tangential;  ///< touches without a sign change (not counted)
};

namespace detail {

/// Distance of W̃ from the nearest crossing level 1/4 + r/2, and that r.
inline double level_distance(double w, int* r_out = nullptr) {
    const double x = 2.0 * (w - 0.25);
    const double r = std::round(x);
    if (r_out) *r_out = static_cast<int>(r);
    return std::abs(x - r) / 2.0;
}

}  // namespace detail

/// Level crossings of each shifted pair trace. A level hit exactly at k = 0 is not counted and one at
/// k = 2π is; `endpoint_tol` (in winding units) widens "exactly" to absorb reconstruction noise.
inline CrossingReport detect_crossings(const WindingTrace& shifted, double endpoint_tol = 1e-3) {
    constexpr double snap = 1e-9, touch = 1e-6;
    const auto& K = shifted.k_grid;
    const std::size_t nk = K.size();
    const double dk = K[1] - K[0];
    const double two_pi = K.back();
    CrossingReport rep;
    for (const auto& p : shifted.pairs) {
        const auto& w = p.w;
        const double lo = *std::min_element(w.begin(), w.end()), hi = *std::max_element(w.begin(), w.end());
        const int r_lo = static_cast<int>(std::floor(2 * (lo - 0.25))) - 1;
        const int r_hi = static_cast<int>(std::ceil(2 * (hi - 0.25))) + 1;
        std::vector<Crossing> ev;
        for (int r = r_lo; r <= r_hi; ++r) {
            const double lev = 0.25 + 0.5 * r;
            auto f = [&](std::size_t m) {
                const double v = w[m] - lev;
                return std::abs(v) < snap ? 0.0 : v;
            };
            for (std::size_t m = 0; m + 1 < nk; ++m) {
                const double fa = f(m), fb = f(m + 1);
                if (fa == 0.0) continue;
                if (fb == 0.0) {
                    std::size_t q = m + 2;
                    while (q < nk && f(q) == 0.0) ++q;
                    if (q < nk && (f(q) > 0) == (fa > 0)) {
                        rep.tangential.push_back({K[m + 1], p.i, p.j, r});
                        continue;
                    }
                    ev.push_back({K[m + 1], p.i, p.j, r});
                } else if (fa * fb < 0) {
                    ev.push_back({K[m] + (lev - w[m]) / (w[m + 1] - w[m]) * (K[m + 1] - K[m]), p.i, p.j, r});
                } else if (m + 1 < nk - 1 && std::abs(fb) < touch && (f(m + 2) > 0) == (fb > 0)) {
                    rep.tangential.push_back({K[m + 1], p.i, p.j, r});
                }
            }
        }
        // Endpoint ties: a level sitting on k = 0 is not a crossing; one sitting on k = 2π is.
        int r0 = 0, r_end = 0;
        const bool tie0 = detail::level_distance(w.front(), &r0) < endpoint_tol;
        const bool tie_end = detail::level_distance(w.back(), &r_end) < endpoint_tol;
        if (tie0)
            ev.erase(std::remove_if(ev.begin(), ev.end(), [&](const Crossing& c) { return c.r == r0 && c.k < 2 * dk; }), ev.end());
        if (tie_end && std::none_of(ev.begin(), ev.end(), [&](const Crossing& c) { return c.r == r_end && c.k > two_pi - 2 * dk; }))
            ev.push_back({two_pi, p.i, p.j, r_end});
        const bool near0 = std::any_of(ev.begin(), ev.end(), [&](const Crossing& c) { return c.k < 2 * dk; });
        const bool near_end = std::any_of(ev.begin(), ev.end(), [&](const Crossing& c) { return c.k > two_pi - 2 * dk; });
        if (near0 && near_end)
            ev.erase(std::remove_if(ev.begin(), ev.end(), [&](const Crossing& c) { return c.k < 2 * dk; }), ev.end());
        rep.events.insert(rep.events.end(), ev.begin(), ev.end());
    }
    std::stable_sort(rep.events.begin(), rep.events.end(), [](const Crossing& a, const Crossing& b) { return a.k < b.k; });
    return rep;
}

/// Whether the (-1)^{δ_{4N}} crossing-sign convention has been validated for this strand count.
inline bool sign_convention_supported(int n_bands) { return n_bands == 2 || n_bands == 4; }

/// Walk the crossings in k order, tracking strand positions (labels are positions at k = 0).
inline BraidWord extract_braid_word(const std::vector<Crossing>& crossings, int n_bands, bool free_reduce = false) {
    std::vector<int> pos(n_bands);
    for (int b = 0; b < n_bands; ++b) pos[b] = b;
    const int n_sign = n_bands == 4 ? -1 : 1;
    std::vector<Crossing> rem = crossings;
    std::vector<int> gens;
    while (!rem.empty()) {
        const double k0 = rem.front().k;
        std::size_t pick = 0;
        for (std::size_t e = 1; e < rem.size() && rem[e].k - k0 < 1e-7; ++e)
            if (std::min(pos[rem[e].i], pos[rem[e].j]) < std::min(pos[rem[pick].i], pos[rem[pick].j])) pick = e;
        const Crossing c = rem[pick];
        rem.erase(rem.begin() + static_cast<std::ptrdiff_t>(pick));
        const int pi = pos[c.i], pj = pos[c.j];
        if (std::abs(pi - pj) != 1)
            throw numerics_error("NonAdjacentCrossing", "bands " + std::to_string(c.i + 1) + " and " + std::to_string(c.j + 1) +
                                                            " cross while not adjacent (k = " + std::to_string(c.k) + ")");
        const int parity = (c.r % 2 == 0) ? 1 : -1;
        const int s = parity * (pi < pj ? 1 : -1) * n_sign;
        gens.push_back(s * (std::min(pi, pj) + 1));
        std::swap(pos[c.i], pos[c.j]);
    }
    BraidWord w(std::move(gens), n_bands);
    return free_reduce ? w.free_reduced() : w;
}

/// Strand order at k = 0 by the projection coordinate Re(e^{-iχ}Λ). Pairs sitting on a crossing
/// level at k = 0 (within endpoint_tol) are ordered by the coordinate at the next grid point.
inline std::vector<int> strand_order(const TrajectorySeries& traj, double chi, bool descending, double endpoint_tol = 1e-3) {
    const int n = traj.bands();
    auto coord = [&](int b, std::size_t m) { return (std::polar(1.0, -chi) * traj.lambda[b][m]).real(); };
    auto before = [&](int a, int b) {
        const double shifted = (std::arg(traj.lambda[a][0] - traj.lambda[b][0]) - chi) / (2 * kPi);
        const std::size_t m = detail::level_distance(shifted) < endpoint_tol ? 1 : 0;
        return descending ? coord(a, m) > coord(b, m) : coord(a, m) < coord(b, m);
    };
    std::vector<int> order(n);
    for (int b = 0; b < n; ++b) order[b] = b;
    for (int pass = 0; pass < n; ++pass)
        for (int i = 0; i + 1 < n; ++i)
            if (before(order[i + 1], order[i])) std::swap(order[i], order[i + 1]);
    return order;
}

struct Permutation {
    std::vector<int> mapping;  ///< final band j came from initial band mapping[j]

    int size() const { return static_cast<int>(mapping.size()); }

    int order() const {
        std::vector<int> cur(mapping.size());
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = static_cast<int>(i);
        for (int n = 1; n <= 64; ++n) {
            for (auto& x : cur) x = mapping[x];
            bool id = true;
            for (std::size_t i = 0; i < cur.size(); ++i) id = id && cur[i] == static_cast<int>(i);
            if (id) return n;
        }
        throw numerics_error("NotAPermutation", "permutation order exceeds 64");
    }

    bool is_identity() const { return order() == 1; }
};

inline Permutation permutation_matrix(const std::vector<CVec>& at0, const std::vector<CVec>& at2pi) {
    if (at0.size() != at2pi.size()) throw numerics_error("NotAPermutation", "band counts differ");
    const std::size_t n = at0.size();
    Permutation p;
    std::vector<bool> used(n, false);
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t best = 0;
        double bv = -1.0;
        for (std::size_t s = 0; s < n; ++s) {
            const double ov = fidelity_amplitude(at0[s], at2pi[j]);
            if (ov > bv) { bv = ov; best = s; }
        }
        if (used[best]) throw numerics_error("NotAPermutation", "two final bands map to the same initial band");
        used[best] = true;
        p.mapping.push_back(static_cast<int>(best));
    }
    return p;
}

struct WindingMatrix {
    std::vector<std::vector<double>> averaged;  ///< before rounding
    std::vector<std::vector<double>> rounded;   ///< multiples of 1/(2n)
    double max_deviation = 0.0;
    int order = 1;
};

/// 𝒲 = (1/n) Σ_a (P⁻¹)^a W̄ P^a, rounded to multiples of 1/(2n); fails if any entry is further than
/// `guard` from its rounded value.
inline WindingMatrix winding_matrix(const std::vector<std::vector<double>>& wbar, const Permutation& p, double guard) {
    const int n = p.size();
    WindingMatrix out;
    out.order = p.order();
    out.averaged.assign(n, std::vector<double>(n, 0.0));
    std::vector<int> sigma(n);
    for (int i = 0; i < n; ++i) sigma[i] = i;
    for (int a = 0; a < out.order; ++a) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out.averaged[i][j] += wbar[sigma[i]][sigma[j]] / out.order;
        for (auto& x : sigma) x = p.mapping[x];
    }
    const double step = 1.0 / (2.0 * out.order);
    out.rounded = out.averaged;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            out.rounded[i][j] = std::round(out.averaged[i][j] / step) * step;
            out.max_deviation = std::max(out.max_deviation, std::abs(out.rounded[i][j] - out.averaged[i][j]));
        }
    if (out.max_deviation > guard)
        throw numerics_error("WindingNotQuantized", "winding matrix deviates by " + std::to_string(out.max_deviation) +
                                                        " from multiples of 1/" + std::to_string(2 * out.order));
    return out;
}

/// ν_E: number of k in [0, 2π) where E_+² meets the negative real axis.
inline int count_band_swaps_2band(double m0, double m1) {
    if (std::abs(m1 + 1.0) < 1e-12) throw numerics_error("SpecialLine", "m1 = -1 is excluded");
    int nu = 0;
    if (std::abs(m1) <= 2.0 && -(m1 + 1.0 + m0 * m0) < 0.0) nu += 2;
    if ((m1 + 1.0) * (m1 + 1.0) < m0 * m0) nu += 1;
    if (1.0 - m1 * m1 - m0 * m0 < 0.0) nu += 1;
    return nu;
}

struct BerryPhase {
    double raw = 0.0;  ///< γ/π reduced to [0, 2)
    int value = 0;     ///< nearest integer mod 2
};

/// Global biorthogonal Berry phase of a two-band model over a closed grid, in units of π.
inline BerryPhase global_biorthogonal_berry_phase(const TwisterSpec& spec, const std::vector<double>& k_grid) {
    if (spec.n_bands != 2) throw config_error("UnsupportedModel", "Berry phase is implemented for N = 2");
    const std::size_t n = k_grid.size() - 1;  // last point closes the loop
    std::vector<EigenDecomposition> eds;
    eds.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const CMatrix h = build_hamiltonian(spec, k_grid[i]);
        eds.push_back(i == 0 ? eig(h, nullptr, true) : eig(h, &eds.back(), true));
        if (eds.back().tracking_overlap < 0.5) throw numerics_error("SortingFailure", "continuity lost between grid points");
    }
    // Close the loop with the k = 0 vectors, relabelled by the band exchange.
    EigenDecomposition closing = eds.front();
    {
        std::vector<std::size_t> order(2);
        const double keep = fidelity_amplitude(eds.back().right[0], eds.front().right[0]) +
                            fidelity_amplitude(eds.back().right[1], eds.front().right[1]);
        const double swap = fidelity_amplitude(eds.back().right[0], eds.front().right[1]) +
                            fidelity_amplitude(eds.back().right[1], eds.front().right[0]);
        order = keep >= swap ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{1, 0};
        closing.reorder(order);
    }
    eds.push_back(closing);
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t b = 0; b < 2; ++b) {
            const cplx num = inner((*eds[i + 1].left)[b], eds[i].right[b]);
            const cplx den = inner((*eds[i].left)[b], eds[i].right[b]);
            g += std::arg(num / den);
        }
    BerryPhase out;
    out.raw = std::fmod(std::fmod(g / kPi, 2.0) + 2.0, 2.0);
    out.value = static_cast<int>(std::lround(out.raw)) % 2;
    return out;
}

}  // namespace nhbraid
