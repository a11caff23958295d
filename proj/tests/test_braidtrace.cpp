#include <catch_amalgamated.hpp>

#include <random>

#include "nhbraid/knots.hpp"
#include "nhbraid/pipeline.hpp"

using namespace nhbraid;
using Catch::Approx;

namespace {

TrajectorySeries make_series(std::size_t n, const std::vector<std::function<cplx(double)>>& bands) {
    TrajectorySeries t;
    t.k_grid = k_grid(n);
    for (const auto& f : bands) {
        std::vector<cplx> v;
        for (double k : t.k_grid) v.push_back(f(k));
        t.lambda.push_back(v);
    }
    return t;
}

struct Point {
    int n;
    double m0, m1;
    const char* word;
    LinkClass label;
};

// Braid words expected at the anchor points.
const std::vector<Point>& anchor_points() {
    static const std::vector<Point> p = {
        {2, 0.5338, 0.6, "s1 s1", LinkClass::HopfLink},
        {2, 1.8889, 0.6, "", LinkClass::Unlink},
        {4, -0.5, -0.4, "s1 s3 s2 s1 s3 s2", LinkClass::SolomonKnot},
        {4, 2.0, 1.1, "s1 s3 s1 s3 s2", LinkClass::HopfChain},
    };
    return p;
}

/// Reference winding matrices in units of 1/4, keyed by anchor point.
struct TableEntry {
    double m0, m1;
    std::array<std::array<int, 4>, 4> quarters;
};

const std::vector<TableEntry>& reference_windings() {
    static const std::vector<TableEntry> t = {
        {1.5, 1.0, {{{0, 2, 2, 0}, {2, 0, 2, 2}, {2, 2, 0, 2}, {0, 2, 2, 0}}}},
        {1.5, 0.5, {{{0, 2, 2, 2}, {2, 0, 2, 2}, {2, 2, 0, 2}, {2, 2, 2, 0}}}},
        {1.5, -0.08, {{{0, 0, 0, 0}, {0, 0, 4, 0}, {0, 4, 0, 0}, {0, 0, 0, 0}}}},
        {1.5, -3.0, {{{0, 1, 1, 1}, {1, 0, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}}}},
        {1.5, -0.18, {{{0, 0, 0, 0}, {0, 0, 2, 0}, {0, 2, 0, 0}, {0, 0, 0, 0}}}},
        {1.5, -1.0, {{{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}}},
        {1.0, -1.5, {{{0, 0, 2, 2}, {0, 0, 2, 2}, {2, 2, 0, 0}, {2, 2, 0, 0}}}},
        {1.5, -1.8, {{{0, 2, 0, 0}, {2, 0, 0, 0}, {0, 0, 0, 2}, {0, 0, 2, 0}}}},
    };
    return t;
}

int parity(const std::vector<int>& perm) {
    int inv = 0;
    for (std::size_t i = 0; i < perm.size(); ++i)
        for (std::size_t j = i + 1; j < perm.size(); ++j) inv += perm[i] > perm[j];
    return inv % 2;
}

double wrap(double a) { return std::remainder(a, 2 * kPi); }

}  // namespace

TEST_CASE("winding of simple trajectories", "[braidtrace][winding]") {
    const auto still = winding_trace(make_series(100, {[](double) { return cplx{1.0, 0.0}; }, [](double) { return cplx{-1.0, 0.5}; }}));
    for (double w : still.pairs[0].w) CHECK(w == 0.0);

    const auto circle = winding_trace(make_series(100, {[](double k) { return std::polar(1.0, k); }, [](double) { return cplx{}; }}));
    CHECK(circle.pairs[0].w.front() == 0.0);
    CHECK(std::abs(circle.pairs[0].w.back() - 1.0) < 1e-12);
    CHECK(circle.pairs[0].chi0 == Approx(0.0).margin(1e-15));

    CHECK_THROWS_WITH(winding_trace(make_series(10, {[](double k) { return std::polar(1.0, 3 * k); }, [](double) { return cplx{}; }})),
                      Catch::Matchers::StartsWith("StepTooLarge"));
    CHECK_THROWS_WITH(winding_trace(make_series(10, {[](double) { return cplx{1.0}; }, [](double) { return cplx{1.0}; }})),
                      Catch::Matchers::StartsWith("ExceptionalPoint"));
}

TEST_CASE("phase shift", "[braidtrace][winding]") {
    const auto tr = winding_trace(make_series(100, {[](double k) { return std::polar(1.0, 2 * k + 0.3); }, [](double) { return cplx{}; }}));
    const auto same = phase_shift(tr, tr.pairs[0].chi0);
    for (std::size_t m = 0; m < tr.k_grid.size(); ++m) CHECK(same.pairs[0].w[m] == Approx(tr.pairs[0].w[m]).margin(1e-15));
    CHECK(phase_shift(tr, std::nullopt).pairs[0].w == tr.pairs[0].w);

    const auto a = detect_crossings(phase_shift(tr, kPi / 2)), b = detect_crossings(phase_shift(tr, kPi / 2 + 2 * kPi));
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t e = 0; e < a.events.size(); ++e) {
        CHECK(a.events[e].k == Approx(b.events[e].k).margin(1e-12));
        CHECK(a.events[e].i == b.events[e].i);
        CHECK(a.events[e].r - b.events[e].r == 2);
    }
}

TEST_CASE("crossing detection on synthetic traces", "[braidtrace][crossings]") {
    WindingTrace t;
    t.k_grid = k_grid(101);
    t.n_bands = 2;
    PairTrace p;
    p.i = 0;
    p.j = 1;
    for (double k : t.k_grid) p.w.push_back(k / (2 * kPi));  // W rises linearly from 0 to 1
    t.pairs.push_back(p);
    const auto rep = detect_crossings(t);
    REQUIRE(rep.events.size() == 2);
    CHECK(rep.events[0].k == Approx(kPi / 2).margin(1e-9));
    CHECK(rep.events[0].r == 0);
    CHECK(rep.events[1].k == Approx(3 * kPi / 2).margin(1e-9));
    CHECK(rep.events[1].r == 1);

    // A touch of the 1/4 level without a sign change is tangential.
    for (std::size_t m = 0; m < t.k_grid.size(); ++m) t.pairs[0].w[m] = 0.25 - 0.1 * std::pow(t.k_grid[m] - kPi, 2) / (kPi * kPi) - 1e-3;
    t.pairs[0].w[50] = 0.25;
    const auto touch = detect_crossings(t);
    CHECK(touch.events.empty());
    CHECK(touch.tangential.size() == 1);
}

TEST_CASE("braid word extraction rules", "[braidtrace][word]") {
    const std::vector<Crossing> hopf = {{1.0, 0, 1, 0}, {4.0, 0, 1, 1}};
    CHECK(extract_braid_word(hopf, 2).str() == "s1 s1");
    // The four-band rule carries the extra sign flip.
    CHECK(extract_braid_word({{1.0, 0, 1, 0}}, 4).str() == "s1^-1");
    CHECK(extract_braid_word({{1.0, 0, 1, -1}}, 4).str() == "s1");
    // Simultaneous events are taken lowest position first.
    CHECK(extract_braid_word({{2.0, 2, 3, -1}, {2.0, 0, 1, -1}}, 4).str() == "s1 s3");
    CHECK_THROWS_WITH(extract_braid_word({{1.0, 0, 2, 0}}, 4), Catch::Matchers::StartsWith("NonAdjacentCrossing"));
    const std::vector<Crossing> cancel = {{1.0, 0, 1, 0}, {2.0, 0, 1, 0}};
    CHECK(extract_braid_word(cancel, 2).str() == "s1 s1^-1");
    CHECK(extract_braid_word(cancel, 2, true).empty());
    CHECK(sign_convention_supported(2));
    CHECK(sign_convention_supported(4));
    CHECK_FALSE(sign_convention_supported(3));
}

TEST_CASE("permutation matrix", "[braidtrace][permutation]") {
    const CVec e0{1.0, 0.0}, e1{0.0, 1.0};
    CHECK(permutation_matrix({e0, e1}, {e0, e1}).is_identity());
    const auto swap = permutation_matrix({e0, e1}, {e1, e0});
    CHECK(swap.mapping == std::vector<int>{1, 0});
    CHECK(swap.order() == 2);
    CHECK_THROWS_WITH(permutation_matrix({e0, e1}, {e0, e0}), Catch::Matchers::StartsWith("NotAPermutation"));
}

TEST_CASE("winding matrix averaging and quantisation guard", "[braidtrace][winding-matrix]") {
    Permutation swap{{1, 0}};
    const std::vector<std::vector<double>> wbar = {{0.0, 0.5}, {0.5, 0.0}};
    const auto w = winding_matrix(wbar, swap, 0.005);
    CHECK(w.rounded[0][1] == 0.25 * 2);
    CHECK(w.order == 2);
    CHECK_THROWS_WITH(winding_matrix({{0.0, 0.3}, {0.3, 0.0}}, Permutation{{0, 1}}, 0.005),
                      Catch::Matchers::StartsWith("WindingNotQuantized"));
    // Orbit averaging symmetrises unquantised entries: 0.8274 and 0.1726 average to 1/2.
    Permutation cyc{{1, 2, 0}};
    const std::vector<std::vector<double>> uneven = {{0, 0.8274, 0.1726}, {0.8274, 0, 0.5}, {0.1726, 0.5, 0}};
    const auto avg = winding_matrix(uneven, cyc, 0.005);
    CHECK(avg.rounded[0][1] == 0.5);
    CHECK(avg.max_deviation < 1e-12);
}

TEST_CASE("two-band Λ is proportional to the energy", "[braidtrace][lambda]") {
    const double m0 = 0.5338, m1 = 0.6;
    const auto grid = k_grid(100);
    const auto spectra = tracked_spectra(TwisterSpec::model(2, m0, m1), grid);
    const auto states = eigenstate_series(spectra, grid);
    const auto traj = lambda_2band(states[0], states[1]);
    const cplx c = cplx{0, -m0} / ((1 + m1) * (1 + m1));
    double worst = 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
        const cplx want = c * spectra[m].eigenvalues[0];
        worst = std::max(worst, std::min(std::abs(traj.lambda[0][m] - want), std::abs(traj.lambda[0][m] + want)));
        CHECK(traj.lambda[1][m] == -traj.lambda[0][m]);
    }
    CHECK(worst < 1e-3);

    // Conjugating both states flips the sign of Im Λ.
    auto conj_states = states;
    for (auto& band : conj_states)
        for (auto& st : band)
            for (auto& x : st.amplitudes) x = std::conj(x);
    const auto flipped = lambda_2band(conj_states[0], conj_states[1]);
    for (std::size_t m = 0; m < grid.size(); m += 9) CHECK(flipped.lambda[0][m].imag() == Approx(-traj.lambda[0][m].imag()).margin(1e-12));

    std::vector<ReconstructedState> pole(1), other(1);
    pole[0].amplitudes = {1.0, 0.0};
    other[0].amplitudes = {0.0, 1.0};
    CHECK_THROWS_WITH(lambda_2band(pole, other), Catch::Matchers::StartsWith("PoleHit"));
}

TEST_CASE("four-band Λ differences follow energy differences", "[braidtrace][lambda]") {
    const auto grid = k_grid(100);
    const auto spectra = tracked_spectra(TwisterSpec::model(4, -0.5, -0.4), grid);
    const auto states = eigenstate_series(spectra, grid);
    std::vector<std::vector<cplx>> lam;
    for (const auto& band : states) lam.push_back(lambda_4band(band));
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double offset = std::arg(lam[i][0] - lam[j][0]) - std::arg(spectra[0].eigenvalues[i] - spectra[0].eigenvalues[j]);
            for (std::size_t m = 0; m < grid.size(); ++m) {
                const double d = std::arg(lam[i][m] - lam[j][m]) -
                                 std::arg(spectra[m].eigenvalues[i] - spectra[m].eigenvalues[j]);
                CHECK(std::abs(wrap(d - offset)) < 1e-3);
            }
        }

    std::vector<ReconstructedState> last(1);
    last[0].amplitudes = {0.0, 0.0, 0.0, 1.0};
    CHECK(lambda_4band(last)[0] == cplx{0.0, 0.0});
    std::vector<ReconstructedState> bad(1);
    bad[0].amplitudes = {1.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_WITH(lambda_4band(bad), Catch::Matchers::StartsWith("ProjectionDegenerate"));

    auto swapped = states;
    std::swap(swapped[0], swapped[2]);
    CHECK(lambda_4band(swapped[0]) == lam[2]);
}

TEST_CASE("Hopf-link winding and crossings", "[braidtrace][hopf]") {
    const auto a = analyze_eigenvectors(TwisterSpec::model(2, 0.5338, 0.6), k_grid(100));
    CHECK(std::abs(a.trace.pairs[0].w.back() - 1.0) < 0.005);
    REQUIRE(a.crossings.events.size() == 2);
    CHECK(a.crossings.events[0].r == 0);
    CHECK(a.crossings.events[1].r == 1);
    CHECK(a.word.str() == "s1 s1");
}

TEST_CASE("braid words at the anchor points (eigenvector route)", "[braidtrace][words]") {
    for (const auto& p : anchor_points()) {
        INFO("(" << p.m0 << ", " << p.m1 << ")");
        const auto a = analyze_eigenvectors(TwisterSpec::model(p.n, p.m0, p.m1), k_grid(100));
        CHECK(a.word.str() == p.word);
        CHECK(classify_analysis(a) == p.label);
    }
    AnalysisOptions reduce;
    reduce.free_reduce = true;
    const auto unknot = analyze_eigenvectors(TwisterSpec::model(2, 1.273, 0.6), k_grid(100), reduce);
    CHECK(unknot.crossings.events.size() == 3);
    CHECK(unknot.word.str() == "s1");
}

TEST_CASE("crossing counts and levels of the four-band headline points", "[braidtrace][crossings]") {
    const auto sol = analyze_eigenvectors(TwisterSpec::model(4, -0.5, -0.4), k_grid(100));
    CHECK(sol.crossings.events.size() == 6);
    for (const auto& c : sol.crossings.events) CHECK(0.25 + c.r / 2.0 == -0.25);
    const auto chain = analyze_eigenvectors(TwisterSpec::model(4, 2.0, 1.1), k_grid(100));
    CHECK(chain.crossings.events.size() == 5);
}

TEST_CASE("permutations at the anchor points", "[braidtrace][permutation]") {
    CHECK(analyze_eigenvectors(TwisterSpec::model(2, 1.8889, 0.6), k_grid(100)).permutation.is_identity());
    CHECK(analyze_eigenvectors(TwisterSpec::model(2, 1.273, 0.6), k_grid(100)).permutation.mapping == std::vector<int>{1, 0});
    const auto sol = analyze_eigenvectors(TwisterSpec::model(4, -0.5, -0.4), k_grid(100)).permutation;
    CHECK(sol.mapping == std::vector<int>{3, 2, 1, 0});
    CHECK(sol.order() == 2);
}

TEST_CASE("winding matrices match the reference values", "[braidtrace][winding-matrix]") {
    for (const auto& e : reference_windings()) {
        INFO("(" << e.m0 << ", " << e.m1 << ")");
        AnalysisOptions opt;
        if (e.m1 == -1.0) opt.source = TrajectorySource::Spectral;
        const auto a = analyze_eigenvectors(TwisterSpec::model(4, e.m0, e.m1), k_grid(100), opt);
        CHECK(a.winding.max_deviation <= 0.005);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) CHECK(a.winding.rounded[i][j] == e.quarters[i][j] / 4.0);
    }
}

TEST_CASE("braid and trace properties", "[braidtrace][properties]") {
    for (const auto& [n, m0, m1] : std::vector<std::tuple<int, double, double>>{
             {2, 0.5338, 0.6}, {2, 1.273, 0.6}, {4, -0.5, -0.4}, {4, 2.0, 1.1}, {4, 1.5, -3.0}}) {
        INFO("(" << m0 << ", " << m1 << ")");
        const auto a = analyze_eigenvectors(TwisterSpec::model(n, m0, m1), k_grid(100));
        // Each crossing is a transposition.
        CHECK(static_cast<int>(a.crossings.events.size()) % 2 == parity(a.permutation.mapping));
        // The braid's strand permutation is the band permutation.
        CHECK(a.word.permutation() == a.permutation.mapping);

        const auto fine = analyze_eigenvectors(TwisterSpec::model(n, m0, m1), k_grid(199));
        for (std::size_t p = 0; p < a.trace.pairs.size(); ++p)
            for (std::size_t m = 0; m < 100; m += 11)
                CHECK(std::abs(fine.trace.pairs[p].w[2 * m] - a.trace.pairs[p].w[m]) < 1e-6);
    }
}

TEST_CASE("winding matrix is label independent", "[braidtrace][winding-matrix]") {
    const auto a = analyze_eigenvectors(TwisterSpec::model(4, 2.0, 1.1), k_grid(100));
    const std::vector<int> q = {2, 0, 3, 1};  // new label i is old label q[i]
    std::vector<std::vector<double>> wq(4, std::vector<double>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) wq[i][j] = a.wbar[q[i]][q[j]];
    std::vector<int> inv(4);
    for (int i = 0; i < 4; ++i) inv[q[i]] = i;
    Permutation pq;
    for (int j = 0; j < 4; ++j) pq.mapping.push_back(inv[a.permutation.mapping[q[j]]]);
    const auto w = winding_matrix(wq, pq, 0.005);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(w.rounded[i][j] == a.winding.rounded[q[i]][q[j]]);
}

TEST_CASE("Jones polynomial does not depend on the projection plane", "[braidtrace][properties]") {
    for (double chi : {kPi / 2, kPi / 2 + 0.05}) {
        const auto grid = k_grid(100);
        const auto spectra = tracked_spectra(TwisterSpec::model(4, -0.5, -0.4), grid);
        TrajectorySeries traj = trajectories_from_states(eigenstate_series(spectra, grid));
        const auto order = strand_order(traj, chi, false);
        std::vector<std::vector<cplx>> relabelled;
        for (int b : order) relabelled.push_back(traj.lambda[b]);
        traj.lambda = relabelled;
        const auto shifted = phase_shift(winding_trace(traj), chi);
        const auto word = extract_braid_word(detect_crossings(shifted).events, 4);
        CHECK(jones(word) == jones(BraidWord({1, 3, 2, 1, 3, 2}, 4)));
    }
}

TEST_CASE("band-swap count", "[braidtrace][berry]") {
    CHECK(count_band_swaps_2band(0.5338, 0.6) == 2);
    CHECK(count_band_swaps_2band(1.273, 0.6) % 2 == 1);
    CHECK_THROWS_WITH(count_band_swaps_2band(0.3, -1.0), Catch::Matchers::StartsWith("SpecialLine"));

    // Oracle: sign changes of Im E² on the negative real side, on a cyclic grid offset from 0 and π.
    auto scan = [](double m0, double m1) {
        const int n = 20000;
        auto e2 = [&](int i) {
            const auto e = analytic_spectrum_2band(m0, m1, 2 * kPi * (i + 0.5) / n);
            return e[0] * e[0];
        };
        int hits = 0;
        for (int i = 0; i < n; ++i) {
            const cplx a = e2(i), b = e2((i + 1) % n);
            if (a.imag() * b.imag() < 0 && a.real() + b.real() < 0) ++hits;
        }
        return hits;
    };
    CHECK(scan(0.5338, 0.6) == 2);
    CHECK(scan(1.273, 0.6) == count_band_swaps_2band(1.273, 0.6));
    CHECK(scan(1.8889, 0.6) == count_band_swaps_2band(1.8889, 0.6));
}

TEST_CASE("global biorthogonal Berry phase", "[braidtrace][berry]") {
    const auto grid = k_grid(401);
    CHECK(global_biorthogonal_berry_phase(TwisterSpec::model(2, 1.8889, 0.6), grid).value == 0);
    CHECK(global_biorthogonal_berry_phase(TwisterSpec::model(2, 1.273, 0.6), grid).value == 1);
    CHECK(global_biorthogonal_berry_phase(TwisterSpec::model(2, 0.5338, 0.6), grid).value ==
          count_band_swaps_2band(0.5338, 0.6) % 2);
    CHECK_THROWS_WITH(global_biorthogonal_berry_phase(TwisterSpec::model(4, 1.0, 1.0), grid),
                      Catch::Matchers::StartsWith("UnsupportedModel"));
}
