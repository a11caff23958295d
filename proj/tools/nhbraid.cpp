// Command-line front end: spectra, protocol simulation, braid extraction, invariants, phase diagrams,
// torus curves and SVG plots.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "nhbraid/braidtrace.hpp"
#include "nhbraid/io.hpp"
#include "nhbraid/knots.hpp"
#include "nhbraid/parallel.hpp"
#include "nhbraid/phase_diagram.hpp"
#include "nhbraid/pipeline.hpp"
#include "nhbraid/svg.hpp"

namespace fs = std::filesystem;
using namespace nhbraid;

namespace {

struct Settings {
    std::string model = "2band";
    double m0 = 0.5338;
    double m1 = 0.6;
    std::size_t k_points = 100;
    std::optional<double> t;
    std::uint64_t shots = 40000;
    std::uint64_t seed = 0;
    bool exact = false;
    std::string out = "out";
    unsigned workers = 0;
    double min_overlap = 0.99;
    int lambda_samples = 720;
    std::string route = "auto";
    json custom_spec;  ///< used when model == "custom"

    // phase-diagram / torus / invariants / plot
    std::vector<double> window{-3.0, 3.0, -3.0, 3.0};
    int resolution = 50;
    double jitter = 0.0;
    int torus_n = 2, torus_v = 2, torus_samples = 200;
    std::string word;
    int strands = 0;
    std::string input, crossings, kind;

    int n_bands() const {
        if (model == "2band") return 2;
        if (model == "4band") return 4;
        return spec_from_json(custom_spec).n_bands;
    }

    TwisterSpec spec() const {
        if (model == "custom") {
            if (custom_spec.is_null()) throw config_error("InvalidSpec", "--model custom needs a \"spec\" object in --config");
            return spec_from_json(custom_spec);
        }
        if (model != "2band" && model != "4band") throw config_error("InvalidModel", "unknown model '" + model + "'");
        return TwisterSpec::model(n_bands(), m0, m1);
    }

    /// t from the flag, else 25 inside the 4-band unknot+unlink region and 20 elsewhere.
    double evolution_time() const {
        if (t) return *t;
        if (model == "4band") {
            try {
                if (phase_region_4band(m0, m1).label == LinkClass::UnknotPlusUnlink) return 25.0;
            } catch (const Error&) {
            }
        }
        return 20.0;
    }

    ShotConfig shot_config() const { return {shots, seed, exact ? ShotMode::Exact : ShotMode::Sampled}; }

    json to_json() const {
        json j{{"model", model},   {"m0", m0},       {"m1", m1},
               {"k_points", k_points}, {"t", evolution_time()}, {"shots", shots},
               {"seed", seed},     {"exact", exact}, {"min_overlap", min_overlap},
               {"lambda_samples", lambda_samples}, {"route", route}};
        if (model == "custom") j["spec"] = custom_spec;
        return j;
    }
};

/// Fill settings from a JSON config (flat keys, or a manifest's extra.config) unless a flag was given.
void apply_config(Settings& s, const CLI::App& app, const std::string& path) {
    json j = read_json(path);
    if (j.contains("extra") && j["extra"].contains("config")) j = j["extra"]["config"];
    auto take = [&](const char* key, const char* flag, auto& dst) {
        if (!j.contains(key) || app.count(flag) > 0) return;
        try {
            j.at(key).get_to(dst);
        } catch (const json::exception& e) {
            throw config_error("InvalidConfig", std::string(key) + ": " + e.what());
        }
    };
    take("model", "--model", s.model);
    take("m0", "--m0", s.m0);
    take("m1", "--m1", s.m1);
    take("k_points", "--k-points", s.k_points);
    take("shots", "--shots", s.shots);
    take("seed", "--seed", s.seed);
    take("exact", "--exact", s.exact);
    take("min_overlap", "--min-overlap", s.min_overlap);
    take("lambda_samples", "--lambda-samples", s.lambda_samples);
    take("route", "--route", s.route);
    if (j.contains("t") && app.count("--t") == 0) s.t = j["t"].get<double>();
    if (j.contains("spec")) s.custom_spec = j["spec"];
}

RunManifest manifest_for(const std::string& command, const Settings& s) {
    RunManifest m;
    m.command = command;
    try {
        m.spec = spec_to_json(s.spec());
    } catch (const Error&) {
        m.spec = nullptr;
    }
    m.k_points = s.k_points;
    m.t = s.evolution_time();
    m.shots = s.shots;
    m.seed = s.seed;
    m.mode = s.exact ? "exact" : "sampled";
    m.extra["config"] = s.to_json();
    return m;
}

void finish(RunManifest& m, const fs::path& dir) {
    m.outputs.push_back((dir / "manifest.json").string());
    write_json(dir / "manifest.json", m.to_json());
}

json braid_summary(const BraidAnalysis& a) {
    json j;
    j["braid_word"] = a.word.str();
    j["generators"] = a.word.generators;
    j["strands"] = a.word.strands;
    j["free_reduced"] = a.word.free_reduced().str();
    j["spectral_trajectories"] = a.spectral;
    j["strand_order"] = a.strand_order;
    j["permutation"] = a.permutation.mapping;
    j["permutation_order"] = a.winding.order;
    j["winding_endpoints"] = matrix_to_json(a.wbar);
    j["winding_matrix"] = matrix_to_json(a.winding.rounded);
    j["winding_matrix_deviation"] = a.winding.max_deviation;
    j["tangential_touches"] = a.crossings.tangential.size();
    return j;
}

json invariant_summary(const BraidWord& w) {
    json j;
    j["alexander"] = alexander(w).str_s();
    j["jones"] = jones(w).str_s();
    j["kauffman_bracket"] = kauffman_bracket(w).str_A();
    j["writhe"] = writhe(w);
    j["components"] = w.components();
    return j;
}

/// Run one pipeline stage, prefixing any error with the stage name.
template <class Fn>
auto staged(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.family(), e.kind(), std::string("[") + name + "] " + e.detail());
    }
}

/// Braid analysis through the circuit, or from eigenvectors when the route asks for it or the
/// circuit cannot select every band.
BraidAnalysis analyze(const Settings& s, json& summary, std::optional<SimulationResult>* sim_out = nullptr) {
    const TwisterSpec spec = staged("config", [&] { return s.spec(); });
    const auto grid = staged("config", [&] { return k_grid(s.k_points); });
    if (s.route != "auto" && s.route != "circuit" && s.route != "eigen")
        throw config_error("InvalidRoute", "route must be auto, circuit or eigen");
    if (s.route != "eigen") {
        try {
            ProtocolOptions po;
            po.t = s.evolution_time();
            po.lambda_samples = s.lambda_samples;
            po.min_overlap = s.min_overlap;
            po.workers = s.workers;
            SimulationResult r;
            r.spec = spec;
            r.shots = s.shot_config();
            r.protocol = po;
            r.run = staged("circuit", [&] { return run_protocol(spec, grid, r.shots, po); });
            r.reconstruction = staged("reconstruct", [&] { return reconstruct_all(r.run, r.shots.mode); });
            AnalysisOptions ao;
            if (!s.exact) ao.quantization_guard = 0.05;
            r.analysis = staged("braidtrace", [&] { return analyze_states(r.reconstruction.states, &r.run.spectra, ao); });
            summary["route"] = "circuit";
            summary["clamp_events"] = r.reconstruction.clamp_events;
            BraidAnalysis a = r.analysis;
            if (sim_out) *sim_out = std::move(r);
            return a;
        } catch (const Error& e) {
            if (s.route == "circuit" || e.kind() != "WeakSelectivity") throw;
            summary["route"] = "eigenvector";
            summary["route_fallback_reason"] = e.what();
        }
    } else {
        summary["route"] = "eigenvector";
    }
    return staged("braidtrace", [&] { return analyze_eigenvectors(spec, grid); });
}

void add_classification(json& summary, const BraidAnalysis& a) {
    summary["invariants"] = staged("knots", [&] { return invariant_summary(a.word); });
    try {
        summary["class"] = to_string(classify_analysis(a));
    } catch (const Error& e) {
        if (e.family() != ErrorFamily::Classification) throw;
        summary["class"] = nullptr;
        summary["class_error"] = e.what();
    }
}

int cmd_spectrum(const Settings& s) {
    const fs::path dir = s.out;
    auto m = manifest_for("spectrum", s);
    const auto table = spectrum_table(s.spec(), k_grid(s.k_points));
    write_csv(dir / "spectrum.csv", table);
    m.outputs.push_back((dir / "spectrum.csv").string());
    finish(m, dir);
    std::cout << "wrote " << table.rows.size() << " rows to " << (dir / "spectrum.csv").string() << "\n";
    return 0;
}

int cmd_simulate(Settings s) {
    if (s.route == "auto") s.route = "circuit";
    const fs::path dir = s.out;
    auto m = manifest_for("simulate", s);
    json summary;
    std::optional<SimulationResult> sim;
    const BraidAnalysis a = analyze(s, summary, &sim);
    if (sim) {
        write_records_jsonl(dir / "records.jsonl", sim->run.records);
        write_csv(dir / "states.csv", states_table(sim->reconstruction.states));
        m.outputs.push_back((dir / "records.jsonl").string());
        m.outputs.push_back((dir / "states.csv").string());
    }
    write_csv(dir / "winding.csv", winding_table(a));
    write_csv(dir / "crossings.csv", crossings_table(a.crossings));
    summary.update(braid_summary(a));
    add_classification(summary, a);
    write_json(dir / "summary.json", summary);
    for (const char* f : {"winding.csv", "crossings.csv", "summary.json"}) m.outputs.push_back((dir / f).string());
    finish(m, dir);
    std::cout << "braid word: " << (a.word.empty() ? "(empty)" : a.word.str()) << "\n"
              << "class: " << (summary["class"].is_null() ? "unclassified" : summary["class"].get<std::string>()) << "\n";
    return 0;
}

int cmd_winding(const Settings& s) {
    const fs::path dir = s.out;
    auto m = manifest_for("winding", s);
    json summary;
    const BraidAnalysis a = analyze(s, summary);
    write_csv(dir / "winding.csv", winding_table(a));
    write_csv(dir / "crossings.csv", crossings_table(a.crossings));
    summary.update(braid_summary(a));
    write_json(dir / "summary.json", summary);
    for (const char* f : {"winding.csv", "crossings.csv", "summary.json"}) m.outputs.push_back((dir / f).string());
    finish(m, dir);
    for (const auto& p : a.trace.pairs)
        std::cout << "W" << p.i + 1 << p.j + 1 << "(2pi) = " << format_double(p.w.back()) << "\n";
    return 0;
}

int cmd_braid(const Settings& s) {
    const fs::path dir = s.out;
    auto m = manifest_for("braid", s);
    json summary;
    const BraidAnalysis a = analyze(s, summary);
    summary.update(braid_summary(a));
    write_json(dir / "summary.json", summary);
    m.outputs.push_back((dir / "summary.json").string());
    finish(m, dir);
    std::cout << (a.word.empty() ? "(empty)" : a.word.str()) << "\n";
    return 0;
}

int cmd_invariants(const Settings& s) {
    const fs::path dir = s.out;
    auto m = manifest_for("invariants", s);
    json summary;
    if (!s.word.empty() || s.strands > 0) {
        if (s.strands < 1) throw config_error("InvalidBraid", "--word needs --strands");
        const BraidWord w = BraidWord::parse(s.word, s.strands);
        summary["braid_word"] = w.str();
        summary["strands"] = w.strands;
        summary["invariants"] = invariant_summary(w);
        try {
            summary["class"] = to_string(classify_link(w));
        } catch (const Error& e) {
            if (e.family() != ErrorFamily::Classification) throw;
            summary["class"] = nullptr;
            summary["class_error"] = e.what();
        }
    } else {
        const BraidAnalysis a = analyze(s, summary);
        summary.update(braid_summary(a));
        add_classification(summary, a);
    }
    write_json(dir / "summary.json", summary);
    m.outputs.push_back((dir / "summary.json").string());
    finish(m, dir);
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_phase_diagram(const Settings& s) {
    const fs::path dir = s.out;
    auto m = manifest_for("phase-diagram", s);
    if (s.window.size() != 4) throw config_error("InvalidWindow", "--window takes m0_lo m0_hi m1_lo m1_hi");
    const int model = s.model == "2band" ? 2 : s.model == "4band" ? 4 : 0;
    PhaseWindow w{s.window[0], s.window[1], s.window[2], s.window[3], s.resolution};
    const PhaseDiagram d = phase_diagram(model, w, s.jitter);
    CsvTable cells{{"m0", "m1", "label"}, {}};
    for (const auto& c : d.cells) cells.rows.push_back({format_double(c.m0), format_double(c.m1), c.label});
    CsvTable segs{{"function", "m0_a", "m1_a", "m0_b", "m1_b"}, {}};
    for (const auto& b : d.boundaries)
        segs.rows.push_back({std::to_string(b.function), format_double(b.m0a), format_double(b.m1a), format_double(b.m0b),
                             format_double(b.m1b)});
    write_csv(dir / "phase.csv", cells);
    write_csv(dir / "boundaries.csv", segs);
    m.outputs.push_back((dir / "phase.csv").string());
    m.outputs.push_back((dir / "boundaries.csv").string());
    m.extra["window"] = s.window;
    m.extra["resolution"] = s.resolution;
    m.extra["jitter"] = s.jitter;
    finish(m, dir);
    std::cout << "wrote " << cells.rows.size() << " cells and " << segs.rows.size() << " boundary segments\n";
    return 0;
}

int cmd_torus(const Settings& s) {
    const fs::path dir = s.out;
    auto m = manifest_for("torus-export", s);
    if (s.torus_samples < 2) throw config_error("InvalidArgument", "--samples must be >= 2");
    const TorusLinkType type = torus_link_components(s.torus_v, s.torus_n);
    CsvTable t{{"strand", "k", "x", "y", "z"}, {}};
    for (int j = 0; j < s.torus_n; ++j)
        for (int i = 0; i < s.torus_samples; ++i) {
            const double k = 2 * kPi * i / (s.torus_samples - 1);
            const auto p = torus_embedding(s.torus_n, s.torus_v, j, k);
            t.rows.push_back({std::to_string(j), format_double(k), format_double(p[0]), format_double(p[1]), format_double(p[2])});
        }
    write_csv(dir / "torus.csv", t);
    m.outputs.push_back((dir / "torus.csv").string());
    m.extra["torus"] = {{"n", s.torus_n}, {"v", s.torus_v}, {"components", type.components},
                        {"v_prime", type.v_prime}, {"n_prime", type.n_prime}};
    finish(m, dir);
    std::cout << "T(" << s.torus_n << "," << s.torus_v << "): " << type.components << " component(s)\n";
    return 0;
}

int cmd_plot(const Settings& s) {
    const fs::path dir = s.out;
    auto m = manifest_for("plot", s);
    std::string kind = s.kind;
    std::string svg_text;
    if (kind.empty()) {
        if (s.input.empty()) throw config_error("MissingInput", "plot needs --input or --word");
        kind = fs::path(s.input).extension() == ".json" ? "braid" : "";
        if (kind.empty()) {
            const CsvTable t = read_csv(s.input);
            kind = std::find(t.header.begin(), t.header.end(), "W_shifted") != t.header.end() ? "winding" : "torus";
        }
    }
    if (kind == "winding") {
        const CsvTable t = read_csv(s.input);
        std::optional<CsvTable> c;
        if (!s.crossings.empty()) c = read_csv(s.crossings);
        svg_text = render_winding_svg(t, c ? &*c : nullptr);
    } else if (kind == "torus") {
        svg_text = render_torus_svg(read_csv(s.input));
    } else if (kind == "braid") {
        BraidWord w;
        if (!s.input.empty()) {
            const json j = read_json(s.input);
            try {
                w = BraidWord(j.at("generators").get<std::vector<int>>(), j.at("strands").get<int>());
            } catch (const json::exception& e) {
                throw io_error("MalformedJson", std::string("summary needs generators and strands: ") + e.what());
            }
        } else {
            w = BraidWord::parse(s.word, s.strands > 0 ? s.strands : 2);
        }
        svg_text = render_braid_svg(w);
    } else {
        throw config_error("InvalidPlotKind", "kind must be winding, braid or torus");
    }
    const fs::path out = dir / (kind + ".svg");
    auto f = open_output(out);
    f << svg_text;
    if (!f) throw io_error("WriteFailed", out.string());
    m.outputs.push_back(out.string());
    m.extra["input"] = s.input;
    finish(m, dir);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-Hermitian band braiding: simulation, braid extraction and knot invariants"};
    app.require_subcommand(1);
    Settings s;
    std::string config_path;

    auto common = [&](CLI::App* c, bool physics) {
        c->add_option("--out", s.out, "Output directory");
        c->add_option("--config", config_path, "JSON config or a previous manifest.json");
        if (!physics) return;
        c->add_option("--model", s.model, "2band | 4band | custom")->check(CLI::IsMember({"2band", "4band", "custom"}));
        c->add_option("--m0", s.m0, "On-site coefficient m0");
        c->add_option("--m1", s.m1, "First-harmonic coefficient m1");
        c->add_option("--k-points", s.k_points, "Closed k-grid size")->check(CLI::Range(2, 100000));
        c->add_option("--t", s.t, "Evolution time (default 20, 25 in the 4-band unknot+unlink region)");
        c->add_option("--shots", s.shots, "Shots per circuit (sampled mode)");
        c->add_option("--seed", s.seed, "Base RNG seed");
        c->add_flag("--exact", s.exact, "Use exact probabilities instead of sampled shots");
        c->add_option("--workers", s.workers, "Worker threads (0 = all cores)");
        c->add_option("--min-overlap", s.min_overlap, "Minimum band selectivity for the rotation angle");
        c->add_option("--lambda-samples", s.lambda_samples, "Rotation-angle sweep resolution");
        c->add_option("--route", s.route, "auto | circuit | eigen");
    };

    auto* spectrum = app.add_subcommand("spectrum", "Band structure table (eigensolver and closed form)");
    auto* simulate = app.add_subcommand("simulate", "Full protocol: measurements, reconstruction, winding, braid, invariants");
    auto* winding = app.add_subcommand("winding", "Winding traces and crossings");
    auto* braid = app.add_subcommand("braid", "Braid word");
    auto* invariants = app.add_subcommand("invariants", "Alexander, Jones, bracket, writhe and class");
    auto* phase = app.add_subcommand("phase-diagram", "Region raster and boundary polylines");
    auto* torus = app.add_subcommand("torus-export", "Torus-embedding curves of the pure twister model");
    auto* plot = app.add_subcommand("plot", "Deterministic SVG from output tables");
    for (auto* c : {spectrum, simulate, winding, braid, invariants}) common(c, true);
    common(phase, false);
    common(torus, false);
    common(plot, false);
    phase->add_option("--model", s.model, "2band | 4band")->check(CLI::IsMember({"2band", "4band"}));
    phase->add_option("--window", s.window, "m0_lo m0_hi m1_lo m1_hi")->expected(4);
    phase->add_option("--resolution", s.resolution, "Cells per axis");
    phase->add_option("--jitter", s.jitter, "Offset added to every cell centre");
    invariants->add_option("--word", s.word, "Braid word, e.g. \"s1 s3 s2^-1\"");
    invariants->add_option("--strands", s.strands, "Strand count for --word");
    torus->add_option("--n", s.torus_n, "Strand count N")->check(CLI::PositiveNumber);
    torus->add_option("--v", s.torus_v, "Winding harmonic V")->check(CLI::PositiveNumber);
    torus->add_option("--samples", s.torus_samples, "Points per strand");
    plot->add_option("--input", s.input, "winding.csv, torus.csv or summary.json");
    plot->add_option("--crossings", s.crossings, "crossings.csv for winding plots");
    plot->add_option("--kind", s.kind, "winding | braid | torus");
    plot->add_option("--word", s.word, "Braid word (braid plots without --input)");
    plot->add_option("--strands", s.strands, "Strand count for --word");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code(ErrorFamily::Config);
    }

    try {
        for (auto* sub : app.get_subcommands())
            if (!config_path.empty()) apply_config(s, *sub, config_path);
        if (s.workers == 0) s.workers = default_workers();
        if (spectrum->parsed()) return cmd_spectrum(s);
        if (simulate->parsed()) return cmd_simulate(s);
        if (winding->parsed()) return cmd_winding(s);
        if (braid->parsed()) return cmd_braid(s);
        if (invariants->parsed()) return cmd_invariants(s);
        if (phase->parsed()) return cmd_phase_diagram(s);
        if (torus->parsed()) return cmd_torus(s);
        if (plot->parsed()) return cmd_plot(s);
    } catch (const Error& e) {
        std::cerr << "error (" << family_name(e.family()) << "): " << e.what() << "\n";
        return exit_code(e.family());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return exit_code(ErrorFamily::IO);
    }
    return 1;
}
