#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nhbraid/io.hpp"
#include "nhbraid/knots.hpp"
#include "nhbraid/phase_diagram.hpp"
#include "nhbraid/pipeline.hpp"
#include "nhbraid/svg.hpp"

#ifndef NHBRAID_CLI_PATH
#error "NHBRAID_CLI_PATH must point at the built CLI"
#endif

using namespace nhbraid;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nhbraid_test_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + NHBRAID_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("format_double round-trips", "[cli][io]") {
    for (double x : {0.0, 1.0, -0.1, 1.0 / 3.0, 6.283185307179586, 1e-300, -2.5e17})
        CHECK(std::stod(format_double(x)) == x);
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("spectrum table symmetries and bit-exact re-read", "[cli][io]") {
    const auto grid = k_grid(100);
    const auto spec2 = TwisterSpec::model(2, 0.5338, 0.6);
    const CsvTable t2 = spectrum_table(spec2, grid);
    REQUIRE(t2.rows.size() == 200);
    for (std::size_t m = 0; m < 100; ++m) {
        CHECK(t2.number(2 * m, "re_E") == Approx(-t2.number(2 * m + 1, "re_E")).margin(1e-9));
        CHECK(t2.number(2 * m, "im_E") == Approx(-t2.number(2 * m + 1, "im_E")).margin(1e-9));
    }

    const CsvTable t4 = spectrum_table(TwisterSpec::model(4, -0.5, -0.4), grid);
    REQUIRE(t4.rows.size() == 400);
    for (std::size_t m = 0; m < 100; ++m) {
        cplx sum{};
        for (std::size_t b = 0; b < 4; ++b) sum += cplx{t4.number(4 * m + b, "re_E"), t4.number(4 * m + b, "im_E")};
        CHECK(std::abs(sum) < 1e-9);
    }

    const fs::path dir = scratch("spectrum");
    write_csv(dir / "spectrum.csv", t2);
    const CsvTable back = read_csv(dir / "spectrum.csv");
    CHECK(back.header == t2.header);
    const auto spectra = tracked_spectra(spec2, grid);
    for (std::size_t m = 0; m < 100; ++m)
        for (std::size_t b = 0; b < 2; ++b) {
            CHECK(back.number(2 * m + b, "re_E") == spectra[m].eigenvalues[b].real());
            CHECK(back.number(2 * m + b, "im_E") == spectra[m].eigenvalues[b].imag());
        }
}

TEST_CASE("malformed tables are rejected", "[cli][io]") {
    const fs::path dir = scratch("malformed");
    std::ofstream(dir / "bad.csv") << "k,i,j\n0,1\n";
    CHECK_THROWS_WITH(read_csv(dir / "bad.csv"), Catch::Matchers::StartsWith("MalformedTable"));
    CHECK_THROWS_WITH(read_csv(dir / "missing.csv"), Catch::Matchers::StartsWith("OpenFailed"));
    const CsvTable t{{"k"}, {{"0"}}};
    CHECK_THROWS(t.column("W"));
}

TEST_CASE("measurement records round-trip through JSON lines", "[cli][io]") {
    const auto run = run_protocol(TwisterSpec::model(2, 0.5338, 0.6), k_grid(6), ShotConfig{4000, 11, ShotMode::Sampled});
    const fs::path dir = scratch("records");
    write_records_jsonl(dir / "records.jsonl", run.records);
    const auto back = read_records_jsonl(dir / "records.jsonl");
    REQUIRE(back.size() == run.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].counts == run.records[i].counts);
        CHECK(back[i].k == run.records[i].k);
        CHECK(back[i].band == run.records[i].band);
        CHECK(back[i].setting.qubit_basis == run.records[i].setting.qubit_basis);
    }
    const auto exact = run_protocol(TwisterSpec::model(2, 0.5338, 0.6), k_grid(4), ShotConfig{});
    write_records_jsonl(dir / "exact.jsonl", exact.records);
    const auto eback = read_records_jsonl(dir / "exact.jsonl");
    for (std::size_t i = 0; i < eback.size(); ++i) CHECK(eback[i].probabilities == exact.records[i].probabilities);
}

TEST_CASE("manifest and spec JSON round trip", "[cli][io]") {
    const TwisterSpec spec{3, {0.0, 0.4}, {{0.2, 0.1}, {1.0, 0.0}}};
    const TwisterSpec back = spec_from_json(spec_to_json(spec));
    CHECK(back.n_bands == 3);
    CHECK(back.sigma_coeff == spec.sigma_coeff);
    CHECK(back.harmonics == spec.harmonics);

    RunManifest m;
    m.command = "simulate";
    m.spec = spec_to_json(spec);
    m.k_points = 100;
    m.t = 20;
    m.shots = 40000;
    m.seed = 7;
    m.mode = "sampled";
    m.outputs = {"a.csv"};
    const RunManifest r = RunManifest::from_json(m.to_json());
    CHECK(r.to_json() == m.to_json());
    CHECK(r.tool_version == kToolVersion);
}

TEST_CASE("winding plot", "[cli][svg]") {
    const auto a = analyze_eigenvectors(TwisterSpec::model(2, 0.5338, 0.6), k_grid(100));
    const CsvTable w = winding_table(a), c = crossings_table(a.crossings);
    const std::string s1 = render_winding_svg(w, &c), s2 = render_winding_svg(w, &c);
    CHECK(s1 == s2);
    CHECK(s1.find("stroke-dasharray") != std::string::npos);
    CHECK(s1.find(">0.250<") != std::string::npos);
    CHECK(s1.find(">0.750<") != std::string::npos);
    std::size_t markers = 0;
    for (std::size_t p = s1.find("<circle"); p != std::string::npos; p = s1.find("<circle", p + 1)) ++markers;
    CHECK(markers == 2);

    const CsvTable empty{{"k", "i", "j", "W", "W_shifted"}, {}};
    const std::string e = render_winding_svg(empty);
    CHECK(e.find("<svg") != std::string::npos);
    CHECK(e.find("</svg>") != std::string::npos);
    CHECK(e.find("<polyline") == std::string::npos);
}

TEST_CASE("braid and torus plots are deterministic", "[cli][svg]") {
    const BraidWord w({1, 3, 2, 1, 3, 2}, 4);
    CHECK(render_braid_svg(w) == render_braid_svg(w));
    CHECK(render_braid_svg(BraidWord({}, 2)).find("</svg>") != std::string::npos);
    CsvTable torus{{"strand", "k", "x", "y", "z"}, {}};
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 50; ++i) {
            const double k = 2 * kPi * i / 49;
            const auto p = torus_embedding(2, 1, j, k);
            torus.rows.push_back({std::to_string(j), format_double(k), format_double(p[0]), format_double(p[1]), format_double(p[2])});
        }
    CHECK(render_torus_svg(torus) == render_torus_svg(torus));
}

TEST_CASE("two-band phase diagram raster", "[cli][phase]") {
    const PhaseWindow w{-3.0, 3.0, -3.0, 3.0, 50};
    const auto d = phase_diagram(2, w);
    std::set<std::string> labels;
    for (const auto& c : d.cells) labels.insert(c.label);
    for (const char* l : {"HopfLink", "Unknot", "Unlink"}) CHECK(labels.count(l) == 1);
    CHECK_FALSE(d.boundaries.empty());

    const auto j = phase_diagram(2, w, 1e-6);
    for (std::size_t i = 0; i < d.cells.size(); ++i)
        if (d.cells[i].label != "boundary" && j.cells[i].label != "boundary") CHECK(d.cells[i].label == j.cells[i].label);

    for (const auto& [m0, m1] : std::vector<std::pair<double, double>>{{0.5338, 0.6}, {1.273, 0.6}, {1.8889, 0.6}}) {
        AnalysisOptions opt;
        opt.free_reduce = true;
        const auto a = analyze_eigenvectors(TwisterSpec::model(2, m0, m1), k_grid(100), opt);
        CHECK(phase_label(2, m0, m1) == to_string(classify_analysis(a)));
    }
}

TEST_CASE("four-band phase labels at the anchor points", "[cli][phase]") {
    const std::vector<std::tuple<double, double, std::string>> pts = {
        {1.5, 1.0, "HopfChain"}, {1.5, 0.5, "SolomonKnot"},     {1.5, -0.08, "HopfLinkPlusUnlink"}, {1.5, -3.0, "Unknot"},
        {1.5, -0.18, "UnknotPlusUnlink"}, {1.5, -1.0, "DoubleUnlinks"}, {1.0, -1.5, "HopfLink"}, {1.5, -1.8, "Unlink"}};
    std::set<std::string> seen;
    for (const auto& [m0, m1, label] : pts) {
        CHECK(phase_label(4, m0, m1) == label);
        seen.insert(phase_label(4, m0, m1));
    }
    CHECK(seen.size() == 8);
}

TEST_CASE("CLI exit codes", "[cli][process]") {
    const fs::path dir = scratch("codes");
    CHECK(run_cli("spectrum --model 2band --m0 0.5338 --m1 0.6 --out " + (dir / "ok").string()) == 0);
    CHECK(fs::exists(dir / "ok" / "spectrum.csv"));
    CHECK(fs::exists(dir / "ok" / "manifest.json"));
    CHECK(run_cli("spectrum --model 2band --m0 0 --m1 -1 --out " + (dir / "ep").string()) == 3);
    CHECK(run_cli("spectrum --bogus-flag") == 2);
    CHECK(run_cli("invariants --word s9 --strands 4 --out " + (dir / "w").string()) == 2);
    CHECK(run_cli("simulate --model 4band --m0 1.5 --m1 -0.18 --exact --k-points 20 --out " + (dir / "weak").string()) == 4);
    CHECK(run_cli("spectrum --config " + (dir / "nope.json").string() + " --out " + (dir / "c").string()) == 6);
}

TEST_CASE("CLI simulate summaries", "[cli][process]") {
    const fs::path dir = scratch("simulate");
    REQUIRE(run_cli("simulate --model 4band --m0 -0.5 --m1 -0.4 --exact --out " + (dir / "sol").string()) == 0);
    const json sol = read_json(dir / "sol" / "summary.json");
    CHECK(sol["class"] == "SolomonKnot");
    CHECK(sol["invariants"]["jones"] == "-s^(3/2)-s^(7/2)+s^(9/2)-s^(11/2)");
    CHECK(sol["braid_word"] == "s1 s3 s2 s1 s3 s2");
    CHECK(fs::exists(dir / "sol" / "records.jsonl"));
    CHECK(fs::exists(dir / "sol" / "states.csv"));

    REQUIRE(run_cli("simulate --model 4band --m0 2 --m1 1.1 --exact --out " + (dir / "chain").string()) == 0);
    const json chain = read_json(dir / "chain" / "summary.json");
    CHECK(chain["class"] == "HopfChain");
    CHECK(chain["braid_word"] == "s1 s3 s1 s3 s2");

    REQUIRE(run_cli("simulate --model 2band --m0 1.8889 --m1 0.6 --exact --out " + (dir / "unlink").string()) == 0);
    const json unlink = read_json(dir / "unlink" / "summary.json");
    CHECK(unlink["braid_word"] == "");
    CHECK(std::abs(unlink["winding_endpoints"][0][1].get<double>()) < 0.005);
    CHECK(unlink["class"] == "Unlink");
}

TEST_CASE("rerunning from a manifest reproduces outputs", "[cli][process]") {
    const fs::path dir = scratch("rerun");
    REQUIRE(run_cli("simulate --model 2band --m0 0.5338 --m1 0.6 --k-points 40 --shots 2000 --seed 9 --out " +
                    (dir / "a").string()) == 0);
    REQUIRE(run_cli("simulate --config " + (dir / "a" / "manifest.json").string() + " --out " + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a" / "records.jsonl") == slurp(dir / "b" / "records.jsonl"));
    CHECK(slurp(dir / "a" / "winding.csv") == slurp(dir / "b" / "winding.csv"));

    REQUIRE(run_cli("spectrum --model 4band --m0 -0.5 --m1 -0.4 --out " + (dir / "s1").string()) == 0);
    REQUIRE(run_cli("spectrum --config " + (dir / "s1" / "manifest.json").string() + " --out " + (dir / "s2").string()) == 0);
    CHECK(slurp(dir / "s1" / "spectrum.csv") == slurp(dir / "s2" / "spectrum.csv"));

    REQUIRE(run_cli("plot --kind winding --input " + (dir / "a" / "winding.csv").string() + " --crossings " +
                    (dir / "a" / "crossings.csv").string() + " --out " + (dir / "p1").string()) == 0);
    REQUIRE(run_cli("plot --kind winding --input " + (dir / "a" / "winding.csv").string() + " --crossings " +
                    (dir / "a" / "crossings.csv").string() + " --out " + (dir / "p2").string()) == 0);
    CHECK(slurp(dir / "p1" / "winding.svg") == slurp(dir / "p2" / "winding.svg"));
}
