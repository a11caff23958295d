#pragma once

#include <optional>
#include <vector>

#include "nhbraid/braidtrace.hpp"
#include "nhbraid/circuit.hpp"
#include "nhbraid/knots.hpp"
#include "nhbraid/reconstruct.hpp"
#include "nhbraid/twister.hpp"

namespace nhbraid {

enum class TrajectorySource { Auto, Eigenvector, Spectral };

struct AnalysisOptions {
    TrajectorySource source = TrajectorySource::Auto;
    double endpoint_tol = 1e-3;
    double quantization_guard = 0.005;
    bool free_reduce = false;
};

struct BraidAnalysis {
    int n_bands = 0;
    bool spectral = false;                  ///< energies were used as trajectories
    double chi = 0.0;                       ///< projection angle used for ordering
    std::vector<int> strand_order;          ///< label p is original band strand_order[p]
    TrajectorySeries trajectories;          ///< relabelled
    WindingTrace trace;                     ///< W_ij(k)
    WindingTrace shifted;                   ///< W̃_ij(k)
    CrossingReport crossings;
    BraidWord word;
    Permutation permutation;
    std::vector<std::vector<double>> wbar;  ///< W_ij(2π)
    WindingMatrix winding;
};

namespace detail {

template <class T>
std::vector<T> permute(const std::vector<T>& v, const std::vector<int>& order) {
    std::vector<T> out;
    out.reserve(order.size());
    for (int o : order) out.push_back(v[o]);
    return out;
}

}  // namespace detail

/// Braid word and winding matrix from per-band state series [band][k]. `spectra`, when given,
/// supplies the energies for the spectral fallback.
inline BraidAnalysis analyze_states(const std::vector<std::vector<ReconstructedState>>& states,
                                    const std::vector<EigenDecomposition>* spectra, const AnalysisOptions& opt = {}) {
    const int n = static_cast<int>(states.size());
    if (n != 2 && n != 4) throw config_error("UnsupportedModel", "analysis is defined for N = 2 and N = 4");
    BraidAnalysis a;
    a.n_bands = n;
    TrajectorySeries traj;
    auto spectral = [&] {
        if (!spectra) throw numerics_error("ProjectionDegenerate", "no spectra available for the spectral fallback");
        std::vector<double> grid;
        for (const auto& s : states[0]) grid.push_back(s.k);
        a.spectral = true;
        return spectral_trajectories(*spectra, grid);
    };
    switch (opt.source) {
        case TrajectorySource::Spectral: traj = spectral(); break;
        case TrajectorySource::Eigenvector: traj = trajectories_from_states(states); break;
        case TrajectorySource::Auto:
            try {
                traj = trajectories_from_states(states);
            } catch (const Error& e) {
                if (e.kind() != "ProjectionDegenerate" || !spectra) throw;
                traj = spectral();
            }
            break;
    }
    traj.validate();

    const bool two = n == 2;
    a.chi = two ? std::arg(traj.lambda[0][0] - traj.lambda[1][0]) : kPi / 2;
    a.strand_order = strand_order(traj, a.chi, two, opt.endpoint_tol);
    a.trajectories = traj;
    a.trajectories.lambda = detail::permute(traj.lambda, a.strand_order);

    std::vector<CVec> at0, at_end;
    for (int b : a.strand_order) {
        at0.push_back(states[b].front().amplitudes);
        at_end.push_back(states[b].back().amplitudes);
    }
    a.permutation = permutation_matrix(at0, at_end);

    a.trace = winding_trace(a.trajectories);
    a.shifted = phase_shift(a.trace, two ? std::nullopt : std::optional<double>(kPi / 2));
    a.crossings = detect_crossings(a.shifted, opt.endpoint_tol);
    a.word = extract_braid_word(a.crossings.events, n, opt.free_reduce);
    a.wbar = winding_endpoints(a.trace);
    a.winding = winding_matrix(a.wbar, a.permutation, opt.quantization_guard);
    return a;
}

/// Same analysis fed with exact eigenvectors instead of reconstructed states.
inline BraidAnalysis analyze_eigenvectors(const TwisterSpec& spec, const std::vector<double>& grid, const AnalysisOptions& opt = {}) {
    const auto spectra = tracked_spectra(spec, grid);
    return analyze_states(eigenstate_series(spectra, grid), &spectra, opt);
}

struct SimulationResult {
    TwisterSpec spec;
    ShotConfig shots;
    ProtocolOptions protocol;
    ProtocolResult run;
    Reconstruction reconstruction;
    BraidAnalysis analysis;
    std::optional<LinkClass> link_class;
};

inline SimulationResult run_simulation(const TwisterSpec& spec, const std::vector<double>& grid, const ShotConfig& shots,
                                       const ProtocolOptions& popt = {}, AnalysisOptions aopt = {}) {
    SimulationResult r;
    r.spec = spec;
    r.shots = shots;
    r.protocol = popt;
    r.run = run_protocol(spec, grid, shots, popt);
    r.reconstruction = reconstruct_all(r.run, shots.mode);
    if (shots.mode == ShotMode::Sampled && aopt.quantization_guard < 0.05) aopt.quantization_guard = 0.05;
    r.analysis = analyze_states(r.reconstruction.states, &r.run.spectra, aopt);
    return r;
}

/// Link class from the analysed braid, cross-checked against the winding matrix for N = 4.
inline LinkClass classify_analysis(const BraidAnalysis& a) {
    if (a.n_bands == 4) return classify_link(a.word, a.winding.rounded);
    return classify_link(a.word);
}

}  // namespace nhbraid
