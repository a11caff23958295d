#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nhbraid/errors.hpp"
#include "nhbraid/matrix.hpp"
#include "nhbraid/numerics.hpp"
#include "nhbraid/parallel.hpp"
#include "nhbraid/twister.hpp"

namespace nhbraid {

enum class ShotMode { Exact, Sampled };

struct ShotConfig {
    std::uint64_t shots = 40000;
    std::uint64_t seed = 0;
    ShotMode mode = ShotMode::Exact;

    void validate() const {
        if (mode == ShotMode::Sampled && shots < 1) throw config_error("InvalidShots", "sampled mode needs shots >= 1");
    }
};

/// Observable family a record belongs to. Single is the one-qubit (two-band) protocol.
enum class Family { Single, PlusMinusA, PlusMinusB, MinusAB, PlusMinusAB };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Single: return "single";
        case Family::PlusMinusA: return "pm_A";
        case Family::PlusMinusB: return "pm_B";
        case Family::MinusAB: return "m_AB";
        case Family::PlusMinusAB: return "pm_AB";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    for (Family f : {Family::Single, Family::PlusMinusA, Family::PlusMinusB, Family::MinusAB, Family::PlusMinusAB})
        if (s == family_name(f)) return f;
    throw config_error("InvalidRecord", "unknown observable family '" + s + "'");
}

struct MeasurementSetting {
    Family family = Family::Single;
    char alpha = 'z';          ///< measured Pauli axis for the family
    std::string qubit_basis;   ///< per system qubit, 'x' | 'y' | 'z' (z = no rotation)
};

/// Settings used per (k, band): 3 for one system qubit, 12 for two.
inline std::vector<MeasurementSetting> protocol_settings(int n_bands) {
    std::vector<MeasurementSetting> out;
    if (n_bands == 2) {
        for (char a : {'x', 'y', 'z'}) out.push_back({Family::Single, a, std::string(1, a)});
        return out;
    }
    if (n_bands != 4) throw config_error("UnsupportedModel", "built-in observable sets exist for N = 2 and N = 4 only");
    for (Family f : {Family::PlusMinusA, Family::PlusMinusB, Family::MinusAB, Family::PlusMinusAB})
        for (char a : {'x', 'y', 'z'}) {
            const bool second_qubit = (f == Family::PlusMinusA || f == Family::PlusMinusB);
            out.push_back({f, a, second_qubit ? std::string{'z', a} : std::string{a, 'z'}});
        }
    return out;
}

struct MeasurementRecord {
    double k = 0.0;
    int k_index = 0;
    int band = 0;
    MeasurementSetting setting;
    std::vector<double> probabilities;    ///< retained distribution over system bitstrings, renormalised
    std::vector<std::uint64_t> counts;    ///< sampled mode only: retained counts per system bitstring
    std::uint64_t retained = 0;           ///< sampled mode only
    double discarded_fraction = 0.0;

    int system_qubits() const {
        int q = 0;
        while ((std::size_t{1} << q) < probabilities.size()) ++q;
        return q;
    }
};

struct EmbeddedUnitary {
    CMatrix u_matrix;
    double scale_u = 1.0;
};

inline CMatrix nonunitary_evolution(const CMatrix& h, double t, double lambda) {
    return expm(h * std::polar(1.0, lambda), t);
}

struct RotationChoice {
    double lambda = 0.0;
    double overlap = 0.0;
};

namespace detail {

/// Normalised e^{-i e^{iλ} H t}|0…0⟩ from an eigendecomposition (log-scaled to avoid overflow).
inline CVec evolved_reference_state(const EigenDecomposition& ed, const CVec& coeffs, double t, double lambda) {
    const std::size_t n = ed.size();
    const cplx rot = std::polar(1.0, lambda);
    std::vector<cplx> expo(n);
    double top = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
        expo[j] = -kI * rot * ed.eigenvalues[j] * t;
        if (std::abs(coeffs[j]) > 0.0) top = std::max(top, expo[j].real() + std::log(std::abs(coeffs[j])));
    }
    CVec psi(n, cplx{});
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(coeffs[j]) == 0.0) continue;
        const cplx w = coeffs[j] * std::exp(expo[j] - top);
        for (std::size_t i = 0; i < n; ++i) psi[i] += w * ed.right[j][i];
    }
    return normalized(psi);
}

inline CVec reference_coefficients(const EigenDecomposition& ed) {
    const CMatrix v = CMatrix::from_columns(ed.right);
    CVec e0(ed.size(), cplx{});
    e0[0] = 1.0;
    CVec c;
    if (!solve_linear(v, e0, c, 1e-14 * std::max(v.max_abs(), 1e-300)))
        throw numerics_error("Singular", "eigenvector matrix is singular; exceptional point on the k-grid");
    return c;
}

}  // namespace detail

/// argmax over λ = 2πs/n_samples of |⟨ψ(k,λ)|φ_band⟩|, smallest λ on ties.
inline RotationChoice select_rotation_angle(const EigenDecomposition& ed, double t, int band, int n_samples = 720,
                                           double min_overlap = 0.99) {
    if (band < 0 || static_cast<std::size_t>(band) >= ed.size()) throw config_error("InvalidBand", "band index out of range");
    if (n_samples < 2) throw config_error("InvalidArgument", "n_samples must be >= 2");
    const CVec coeffs = detail::reference_coefficients(ed);
    RotationChoice best{0.0, -1.0};
    for (int s = 0; s < n_samples; ++s) {
        const double lam = 2.0 * kPi * s / n_samples;
        const double ov = fidelity_amplitude(detail::evolved_reference_state(ed, coeffs, t, lam), ed.right[band]);
        if (ov > best.overlap) best = {lam, ov};
    }
    if (best.overlap < min_overlap)
        throw protocol_error("WeakSelectivity", "best overlap " + std::to_string(best.overlap) + " < " +
                                                    std::to_string(min_overlap) + " for band " +
                                                    std::to_string(band) + "; increase t");
    return best;
}

inline RotationChoice select_rotation_angle(const TwisterSpec& spec, double k, double t, int band, int n_samples = 720) {
    return select_rotation_angle(eig(build_hamiltonian(spec, k)), t, band, n_samples);
}

/// Sweep of overlaps for every sampled λ (used for the selectivity map).
inline std::vector<double> rotation_overlap_sweep(const EigenDecomposition& ed, double t, int band, int n_samples = 720) {
    const CVec coeffs = detail::reference_coefficients(ed);
    std::vector<double> out;
    for (int s = 0; s < n_samples; ++s)
        out.push_back(fidelity_amplitude(detail::evolved_reference_state(ed, coeffs, t, 2.0 * kPi * s / n_samples),
                                         ed.right[band]));
    return out;
}

/// Unitary dilation [[u·U_H, I], [C, I]] orthonormalised by QR; the first dim(U_H) columns are kept exactly.
inline EmbeddedUnitary block_embed(const CMatrix& u_h) {
    if (!u_h.finite()) throw numerics_error("NonFinite", "U_H has NaN/Inf entries");
    const std::size_t d = u_h.dim();
    const CMatrix gram = u_h.adjoint() * u_h;
    const double top = hermitian_max_eig(gram);
    if (!(top > 0.0)) throw numerics_error("ZeroOperator", "U_H is zero");
    const double u = 1.0 / std::sqrt(top);
    const HermitianEigen he = hermitian_eigen(gram * cplx{u * u, 0.0});
    CVec root(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double x = 1.0 - he.values[i];
        if (x < -1e-9) throw numerics_error("PSDViolation", "I - u^2 U^dag U has eigenvalue " + std::to_string(x));
        root[i] = std::sqrt(std::max(0.0, x));
    }
    const CMatrix c = he.vectors * CMatrix::diagonal(root) * he.vectors.adjoint();
    CMatrix big(2 * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            big(i, j) = u * u_h(i, j);
            big(d + i, j) = c(i, j);
        }
    for (std::size_t i = 0; i < d; ++i) {
        big(i, d + i) = 1.0;
        big(d + i, d + i) = 1.0;
    }
    return {qr_unitary(big, d).q, u};
}

/// Single-qubit basis change so that a z measurement reads out the requested axis.
inline CMatrix measurement_rotation(char axis) {
    const double h = 1.0 / std::sqrt(2.0);
    switch (axis) {
        case 'x': return CMatrix{{h, h}, {-h, h}};                          // R^y(-π/2)
        case 'y': return CMatrix{{h, cplx{0, -h}}, {cplx{0, -h}, h}};       // R^x(π/2)
        case 'z': return CMatrix::identity(2);
    }
    throw config_error("InvalidSetting", std::string("unknown rotation label '") + axis + "'");
}

/// I_ancilla ⊗ A_1 ⊗ … ⊗ A_M.
inline CMatrix rotation_operator(const std::string& qubit_basis) {
    CMatrix r = CMatrix::identity(2);
    for (char a : qubit_basis) r = kron(r, measurement_rotation(a));
    return r;
}

inline CMatrix apply_measurement_rotations(const EmbeddedUnitary& u, const std::string& qubit_basis) {
    const CMatrix r = rotation_operator(qubit_basis);
    if (r.dim() != u.u_matrix.dim()) throw config_error("InvalidSetting", "one rotation label per system qubit required");
    return r * u.u_matrix;
}

/// splitmix64 finaliser, used to derive independent per-job seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t job_seed(std::uint64_t seed, int k_index, int band, int setting) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(k_index));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(band) << 20));
    return splitmix64(h ^ (static_cast<std::uint64_t>(setting) << 40));
}

/// Measure the computational-basis state u_rot|0…0⟩, postselecting ancilla (most significant bit) = 0.
inline MeasurementRecord measure_state(const CVec& amplitudes, const ShotConfig& cfg, std::uint64_t job_seed_value) {
    cfg.validate();
    const std::size_t total = amplitudes.size(), d = total / 2;
    std::vector<double> p(total);
    for (std::size_t i = 0; i < total; ++i) p[i] = std::norm(amplitudes[i]);
    MeasurementRecord rec;
    rec.probabilities.assign(d, 0.0);
    if (cfg.mode == ShotMode::Exact) {
        double kept = 0.0, all = 0.0;
        for (std::size_t i = 0; i < total; ++i) all += p[i];
        for (std::size_t i = 0; i < d; ++i) kept += p[i];
        if (!(kept > 1e-300)) throw protocol_error("AllShotsDiscarded", "postselection success probability is zero");
        for (std::size_t i = 0; i < d; ++i) rec.probabilities[i] = p[i] / kept;
        rec.discarded_fraction = 1.0 - kept / all;
        return rec;
    }
    std::mt19937_64 rng(job_seed_value);
    std::vector<std::uint64_t> counts(total, 0);
    std::uint64_t left = cfg.shots;
    double mass = 0.0;
    for (double x : p) mass += x;
    for (std::size_t i = 0; i + 1 < total && left > 0; ++i) {
        const double q = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
        std::binomial_distribution<std::uint64_t> bin(left, q);
        counts[i] = bin(rng);
        left -= counts[i];
        mass -= p[i];
    }
    counts[total - 1] += left;
    rec.counts.assign(counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(d));
    for (std::size_t i = 0; i < d; ++i) rec.retained += counts[i];
    if (rec.retained == 0) throw protocol_error("AllShotsDiscarded", "no shot survived ancilla postselection");
    for (std::size_t i = 0; i < d; ++i) rec.probabilities[i] = static_cast<double>(rec.counts[i]) / rec.retained;
    rec.discarded_fraction = 1.0 - static_cast<double>(rec.retained) / cfg.shots;
    return rec;
}

inline MeasurementRecord simulate_measurement(const CMatrix& u_rot, const ShotConfig& cfg, std::uint64_t job_seed_value = 0) {
    return measure_state(u_rot.column(0), cfg, job_seed_value);
}

struct ProtocolResult {
    std::vector<double> k_grid;
    int n_bands = 0;
    std::vector<EigenDecomposition> spectra;          ///< continuity-tracked, one per k
    std::vector<std::vector<RotationChoice>> choices;  ///< [k][band]
    std::vector<MeasurementRecord> records;           ///< k-major, then band, then setting
};

struct ProtocolOptions {
    double t = 20.0;
    int lambda_samples = 720;
    double min_overlap = 0.99;
    unsigned workers = 1;
};

/// Continuity-tracked eigendecompositions along the grid (first point in default order).
inline std::vector<EigenDecomposition> tracked_spectra(const TwisterSpec& spec, const std::vector<double>& k_grid) {
    std::vector<EigenDecomposition> out;
    out.reserve(k_grid.size());
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        const CMatrix h = build_hamiltonian(spec, k_grid[i]);
        out.push_back(i == 0 ? eig(h) : eig(h, &out.back()));
        if (out.back().tracking_overlap < 0.5)
            throw numerics_error("TrackingFailure", "band continuity lost near k = " + std::to_string(k_grid[i]));
    }
    return out;
}

inline ProtocolResult run_protocol(const TwisterSpec& spec, const std::vector<double>& k_grid, const ShotConfig& cfg,
                                   const ProtocolOptions& opt = {}) {
    cfg.validate();
    spec.validate();
    const auto settings = protocol_settings(spec.n_bands);
    ProtocolResult res;
    res.k_grid = k_grid;
    res.n_bands = spec.n_bands;
    res.spectra = tracked_spectra(spec, k_grid);
    const std::size_t nk = k_grid.size(), nb = static_cast<std::size_t>(spec.n_bands), ns = settings.size();
    res.choices.assign(nk, std::vector<RotationChoice>(nb));
    res.records.resize(nk * nb * ns);
    parallel_for(nk * nb, opt.workers, [&](std::size_t job) {
        const std::size_t ki = job / nb, b = job % nb;
        const EigenDecomposition& ed = res.spectra[ki];
        const RotationChoice rc = select_rotation_angle(ed, opt.t, static_cast<int>(b), opt.lambda_samples, opt.min_overlap);
        res.choices[ki][b] = rc;
        const CMatrix h = build_hamiltonian(spec, k_grid[ki]);
        const EmbeddedUnitary eu = block_embed(nonunitary_evolution(h, opt.t, rc.lambda));
        const CVec column = eu.u_matrix.column(0);
        for (std::size_t s = 0; s < ns; ++s) {
            const CVec rotated = rotation_operator(settings[s].qubit_basis) * column;
            MeasurementRecord rec = measure_state(
                rotated, cfg, job_seed(cfg.seed, static_cast<int>(ki), static_cast<int>(b), static_cast<int>(s)));
            rec.k = k_grid[ki];
            rec.k_index = static_cast<int>(ki);
            rec.band = static_cast<int>(b);
            rec.setting = settings[s];
            res.records[(ki * nb + b) * ns + s] = std::move(rec);
        }
    });
    return res;
}

/// Closed grid of n points on [0, 2π], both endpoints included.
inline std::vector<double> k_grid(std::size_t n) {
    if (n < 2) throw config_error("InvalidGrid", "k-grid needs at least 2 points");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

}  // namespace nhbraid
