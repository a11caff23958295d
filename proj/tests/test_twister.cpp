#include <catch_amalgamated.hpp>

#include <random>
#include <set>
#include <tuple>

#include "nhbraid/numerics.hpp"
#include "nhbraid/phase_diagram.hpp"
#include "nhbraid/twister.hpp"

using namespace nhbraid;
using Catch::Approx;

namespace {

/// Largest distance from any element of `a` to its nearest unused partner in `b`.
template <class A, class B>
double set_distance(const A& a, const B& b) {
    std::vector<bool> used(b.size(), false);
    double worst = 0.0;
    for (const auto& x : a) {
        std::size_t best = 0;
        double bd = INFINITY;
        for (std::size_t j = 0; j < b.size(); ++j)
            if (!used[j] && std::abs(b[j] - x) < bd) { bd = std::abs(b[j] - x); best = j; }
        used[best] = true;
        worst = std::max(worst, bd);
    }
    return worst;
}

}  // namespace

TEST_CASE("shift matrix diagonals", "[twister]") {
    CHECK(shift_matrix(2)(0, 0) == cplx(1.0));
    CHECK(shift_matrix(2)(1, 1) == cplx(-1.0));
    const CMatrix s4 = shift_matrix(4);
    CHECK(s4(1, 1).real() == Approx(1.0 / 3));
    CHECK(s4(2, 2).real() == Approx(-1.0 / 3));
    CHECK(s4(3, 3).real() == Approx(-1.0));
    const CMatrix s3 = shift_matrix(3);
    CHECK(s3(1, 1) == cplx(0.0));
    CHECK(s3(2, 2) == cplx(-1.0));
    CHECK_THROWS_WITH(shift_matrix(1), Catch::Matchers::StartsWith("InvalidDimension"));
}

TEST_CASE("twister matrix structure", "[twister]") {
    const CMatrix t = twister_matrix(2, 1, 0.0);
    CHECK(t(0, 1) == cplx(1.0));
    CHECK(t(1, 0) == cplx(1.0));
    CHECK(t(0, 0) == cplx(0.0));
    const CMatrix t4 = twister_matrix(4, 2, kPi);
    CHECK(std::abs(t4(0, 3) - 1.0) < 1e-15);
    for (int p = 1; p < 4; ++p) CHECK(t4(p, p - 1) == cplx(1.0));

    for (int n : {2, 3, 4})
        for (int v : {1, 2, 3}) {
            const double k = 0.37 * v;
            const CMatrix tv = twister_matrix(n, v, k);
            CMatrix p = CMatrix::identity(n);
            for (int i = 0; i < n; ++i) p = p * tv;
            CHECK((p - CMatrix::identity(n) * std::polar(1.0, v * k)).max_abs() < 1e-14);
        }
    CHECK_THROWS_WITH(twister_matrix(2, 0, 0.0), Catch::Matchers::StartsWith("InvalidDimension"));
}

TEST_CASE("build_hamiltonian reproduces the displayed matrices", "[twister]") {
    const CMatrix h2 = build_hamiltonian(TwisterSpec::model(2, 0.5338, 0.6), 0.0);
    CHECK(std::abs(h2(0, 0) - cplx(0, 0.5338)) < 1e-15);
    CHECK(std::abs(h2(1, 1) - cplx(0, -0.5338)) < 1e-15);
    CHECK(std::abs(h2(0, 1) - 1.6) < 1e-15);
    CHECK(std::abs(h2(1, 0) - 1.6) < 1e-15);

    const CMatrix h4 = build_hamiltonian(TwisterSpec::model(4, 1.5, 0.5), 0.0);
    CHECK(std::abs(h4(0, 3) - 1.5) < 1e-15);
    for (int p = 1; p < 4; ++p) CHECK(std::abs(h4(p, p - 1) - 1.5) < 1e-15);
    const double diag[] = {1.5, 0.5, -0.5, -1.5};
    for (int p = 0; p < 4; ++p) CHECK(std::abs(h4(p, p) - cplx(0, diag[p])) < 1e-15);

    const CMatrix z = build_hamiltonian(TwisterSpec{3, {}, {cplx{}, cplx{}}}, 1.0);
    CHECK(z.max_abs() == 0.0);
}

TEST_CASE("Hamiltonian is traceless and 2π-periodic", "[twister]") {
    for (int n : {2, 3, 4, 5}) {
        const TwisterSpec s{n, {0.0, 0.8}, {{0.3, 0.1}, {1.0, 0.0}, {0.2, 0.0}}};
        for (double k : {0.0, 0.9, 2.5}) {
            const CMatrix a = build_hamiltonian(s, k), b = build_hamiltonian(s, k + 2 * kPi);
            CHECK(std::abs(a.trace()) < 1e-14);
            CHECK((a - b).max_abs() < 1e-14);
        }
    }
}

TEST_CASE("analytic two-band spectrum", "[twister]") {
    const auto z = analytic_spectrum_2band(0.0, -1.0, 1.3);
    CHECK(std::abs(z[0]) < 1e-15);
    CHECK(std::abs(z[1]) < 1e-15);
    const auto e = analytic_spectrum_2band(0.5338, 0.6, 0.0);
    CHECK(e[0].real() == Approx(1.5083).margin(1e-4));
    CHECK(e[1] == -e[0]);
    const auto a = analytic_spectrum_2band(0.4, 0.3, 0.0), b = analytic_spectrum_2band(0.4, 0.3, 2 * kPi);
    CHECK(std::abs(a[0] * a[0] - b[0] * b[0]) < 1e-12);
}

TEST_CASE("analytic four-band spectrum", "[twister]") {
    for (const auto& e : analytic_spectrum_4band(0.0, -1.0, 0.7)) CHECK(std::abs(e) < 1e-15);
    const auto e = analytic_spectrum_4band(1.5, 0.5, 0.0);
    CHECK(set_distance(e, eig(build_hamiltonian(TwisterSpec::model(4, 1.5, 0.5), 0.0)).eigenvalues) < 1e-9);
    cplx sum{};
    for (const auto& x : e) sum += x;
    CHECK(std::abs(sum) < 1e-12);
}

TEST_CASE("analytic spectra match the eigensolver on random parameters", "[twister]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        const double m0 = u(rng), m1 = u(rng);
        for (int i = 0; i < 100; i += 7) {
            const double k = 2 * kPi * i / 99;
            CHECK(set_distance(analytic_spectrum_2band(m0, m1, k),
                               eig(build_hamiltonian(TwisterSpec::model(2, m0, m1), k)).eigenvalues) < 1e-9);
            CHECK(set_distance(analytic_spectrum_4band(m0, m1, k),
                               eig(build_hamiltonian(TwisterSpec::model(4, m0, m1), k)).eigenvalues) < 1e-9);
        }
    }
}

TEST_CASE("pure twister eigenvalues", "[twister]") {
    const auto e2 = pure_twister_eigenvalues(2, 1, 0.0);
    CHECK(set_distance(e2, std::vector<cplx>{1.0, -1.0}) < 1e-15);
    const auto e4 = pure_twister_eigenvalues(4, 2, kPi);
    CHECK(set_distance(e4, std::vector<cplx>{1.0, kI, -1.0, -kI}) < 1e-14);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 2 * kPi);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 3, v = 1 + trial % 4;
        const double k = u(rng);
        const auto e = pure_twister_eigenvalues(n, v, k);
        CHECK(set_distance(e, eig(twister_matrix(n, v, k)).eigenvalues) < 1e-10);
        for (const auto& x : e) CHECK(std::abs(std::pow(x, n) - std::polar(1.0, v * k)) < 1e-12);
    }
}

TEST_CASE("torus link components", "[twister][torus]") {
    const auto a = torus_link_components(2, 2);
    CHECK(a.components == 2);
    CHECK(a.v_prime == 1);
    CHECK(a.n_prime == 1);
    const auto b = torus_link_components(3, 2);
    CHECK(b.components == 1);
    CHECK(b.v_prime == 3);
    CHECK(b.n_prime == 2);
    const auto c = torus_link_components(6, 4);
    CHECK(c.components == 2);
    CHECK(c.v_prime == 3);
    CHECK(c.n_prime == 2);
}

TEST_CASE("torus embedding lies on the torus", "[twister][torus]") {
    const auto p0 = torus_embedding(2, 1, 0, 0.0);
    CHECK(p0[0] == Approx(3.0));
    CHECK(std::abs(p0[1]) < 1e-15);
    CHECK(std::abs(p0[2]) < 1e-15);
    for (int n : {2, 3, 4})
        for (int v : {1, 2, 3})
            for (int j = 0; j < n; ++j)
                for (double k : {0.0, 1.1, 4.0}) {
                    const auto p = torus_embedding(n, v, j, k);
                    const double rho = std::hypot(p[0], p[1]) - 2.0;
                    CHECK(std::abs(rho * rho + p[2] * p[2] - 1.0) < 1e-12);
                }
}

TEST_CASE("torus embedding strands j and j + n/d are shifted copies", "[twister][torus]") {
    // n = 4, v = 2: d = 2, strand j + 2 at k equals strand j at k + 2π (one loop later).
    const auto a = torus_embedding(4, 2, 2, 0.8), b = torus_embedding(4, 2, 0, 0.8 + 2 * kPi);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(a[c] - b[c]) < 1e-12);
}

TEST_CASE("two-band phase regions at the anchor points", "[twister][phase]") {
    CHECK(phase_region_2band(0.5338, 0.6).label == LinkClass::HopfLink);
    CHECK(phase_region_2band(1.273, 0.6).label == LinkClass::Unknot);
    CHECK(phase_region_2band(1.8889, 0.6).label == LinkClass::Unlink);
    CHECK_THROWS_WITH(phase_region_2band(0.0, -1.0), Catch::Matchers::StartsWith("DegeneratePoint"));
    CHECK_THROWS_WITH(phase_region_2band(1.6, 0.6), Catch::Matchers::StartsWith("OnBoundary"));
}

TEST_CASE("four-band phase regions at the anchor points, stable under jitter", "[twister][phase]") {
    const std::vector<std::tuple<double, double, LinkClass>> pts = {
        {1.5, 1.0, LinkClass::HopfChain},           {1.5, 0.5, LinkClass::SolomonKnot},
        {1.5, -0.08, LinkClass::HopfLinkPlusUnlink}, {1.5, -3.0, LinkClass::Unknot},
        {1.5, -0.18, LinkClass::UnknotPlusUnlink},   {1.5, -1.0, LinkClass::DoubleUnlinks},
        {1.0, -1.5, LinkClass::HopfLink},            {1.5, -1.8, LinkClass::Unlink}};
    for (const auto& [m0, m1, cls] : pts) {
        INFO("(" << m0 << ", " << m1 << ")");
        CHECK(phase_region_4band(m0, m1).label == cls);
        for (double d0 : {-1e-6, 1e-6})
            for (double d1 : {-1e-6, 1e-6}) CHECK(phase_region_4band(m0 + d0, m1 + d1).label == cls);
    }
}

TEST_CASE("phase diagram raster is locally constant away from boundaries", "[twister][phase]") {
    const PhaseWindow w{-3.0, 3.0, -3.0, 3.0, 24};
    const auto a = phase_diagram(2, w);
    const auto b = phase_diagram(2, w, 1e-6);
    REQUIRE(a.cells.size() == b.cells.size());
    std::set<std::string> labels;
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        labels.insert(a.cells[i].label);
        if (a.cells[i].label != "boundary" && b.cells[i].label != "boundary") CHECK(a.cells[i].label == b.cells[i].label);
    }
    CHECK(labels.count("HopfLink") == 1);
    CHECK(labels.count("Unknot") == 1);
    CHECK(labels.count("Unlink") == 1);
    CHECK_FALSE(a.boundaries.empty());
}
