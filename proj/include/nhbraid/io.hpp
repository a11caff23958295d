#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhbraid/circuit.hpp"
#include "nhbraid/errors.hpp"
#include "nhbraid/pipeline.hpp"
#include "nhbraid/twister.hpp"

namespace nhbraid {

inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::json;

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw io_error("MalformedTable", "missing column '" + name + "'");
    }

    double number(std::size_t row, const std::string& name) const {
        const std::string& cell = rows.at(row).at(column(name));
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') throw io_error("MalformedTable", "not a number: '" + cell + "'");
        return v;
    }
};

inline void ensure_parent(const std::filesystem::path& p) {
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw io_error("CreateDirectory", p.parent_path().string() + ": " + ec.message());
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    ensure_parent(p);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw io_error("OpenFailed", "cannot write " + p.string());
    return out;
}

inline void write_csv(const std::filesystem::path& p, const CsvTable& t) {
    auto out = open_output(p);
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    if (!out) throw io_error("WriteFailed", p.string());
}

inline CsvTable read_csv(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw io_error("OpenFailed", "cannot read " + p.string());
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!s.empty() && s.back() == ',') cells.emplace_back();
        return cells;
    };
    if (!std::getline(in, line)) return t;
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw io_error("MalformedTable", p.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                                                 std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline void write_json(const std::filesystem::path& p, const json& j) {
    auto out = open_output(p);
    out << j.dump(2) << '\n';
    if (!out) throw io_error("WriteFailed", p.string());
}

inline json read_json(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw io_error("OpenFailed", "cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw io_error("MalformedJson", p.string() + ": " + e.what());
    }
}

// ---- model spec ----

inline json spec_to_json(const TwisterSpec& s) {
    json h = json::array();
    for (const auto& c : s.harmonics) h.push_back({c.real(), c.imag()});
    return {{"n_bands", s.n_bands}, {"sigma_coeff", {s.sigma_coeff.real(), s.sigma_coeff.imag()}}, {"harmonics", h}};
}

inline TwisterSpec spec_from_json(const json& j) {
    try {
        TwisterSpec s;
        s.n_bands = j.at("n_bands").get<int>();
        const auto& sc = j.at("sigma_coeff");
        s.sigma_coeff = {sc.at(0).get<double>(), sc.at(1).get<double>()};
        for (const auto& h : j.at("harmonics")) s.harmonics.emplace_back(h.at(0).get<double>(), h.at(1).get<double>());
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw config_error("InvalidSpec", std::string("model spec: ") + e.what());
    }
}

// ---- measurement records, one JSON object per line ----

inline std::string bitstring(std::size_t index, int qubits) {
    std::string s(static_cast<std::size_t>(qubits), '0');
    for (int q = 0; q < qubits; ++q)
        if (index >> (qubits - 1 - q) & 1U) s[static_cast<std::size_t>(q)] = '1';
    return s;
}

inline json record_to_json(const MeasurementRecord& r) {
    json j{{"k", r.k},
           {"k_index", r.k_index},
           {"band", r.band},
           {"family", family_name(r.setting.family)},
           {"alpha", std::string(1, r.setting.alpha)},
           {"qubit_basis", r.setting.qubit_basis},
           {"discarded_fraction", r.discarded_fraction}};
    const int q = r.system_qubits();
    if (!r.counts.empty()) {
        json c = json::object();
        for (std::size_t i = 0; i < r.counts.size(); ++i) c[bitstring(i, q)] = r.counts[i];
        j["counts"] = c;
        j["retained"] = r.retained;
    } else {
        json p = json::object();
        for (std::size_t i = 0; i < r.probabilities.size(); ++i) p[bitstring(i, q)] = r.probabilities[i];
        j["probabilities"] = p;
    }
    return j;
}

inline MeasurementRecord record_from_json(const json& j) {
    try {
        MeasurementRecord r;
        r.k = j.at("k").get<double>();
        r.k_index = j.at("k_index").get<int>();
        r.band = j.at("band").get<int>();
        r.setting.family = family_from_name(j.at("family").get<std::string>());
        r.setting.alpha = j.at("alpha").get<std::string>().at(0);
        r.setting.qubit_basis = j.at("qubit_basis").get<std::string>();
        r.discarded_fraction = j.at("discarded_fraction").get<double>();
        const json& table = j.contains("counts") ? j.at("counts") : j.at("probabilities");
        const std::size_t d = std::size_t{1} << r.setting.qubit_basis.size();
        r.probabilities.assign(d, 0.0);
        if (j.contains("counts")) {
            r.counts.assign(d, 0);
            r.retained = j.at("retained").get<std::uint64_t>();
        }
        for (auto it = table.begin(); it != table.end(); ++it) {
            const std::size_t idx = std::stoul(it.key(), nullptr, 2);
            if (idx >= d) throw io_error("MalformedRecord", "bitstring out of range: " + it.key());
            if (j.contains("counts")) r.counts[idx] = it.value().get<std::uint64_t>();
            else r.probabilities[idx] = it.value().get<double>();
        }
        if (j.contains("counts")) {
            if (r.retained == 0) throw io_error("MalformedRecord", "record with counts has retained = 0");
            for (std::size_t i = 0; i < d; ++i) r.probabilities[i] = static_cast<double>(r.counts[i]) / r.retained;
        }
        return r;
    } catch (const json::exception& e) {
        throw io_error("MalformedRecord", e.what());
    } catch (const std::invalid_argument&) {
        throw io_error("MalformedRecord", "bitstring key is not binary");
    }
}

inline void write_records_jsonl(const std::filesystem::path& p, const std::vector<MeasurementRecord>& records) {
    auto out = open_output(p);
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
    if (!out) throw io_error("WriteFailed", p.string());
}

inline std::vector<MeasurementRecord> read_records_jsonl(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw io_error("OpenFailed", "cannot read " + p.string());
    std::vector<MeasurementRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw io_error("MalformedRecord", p.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

// ---- run manifest ----

struct RunManifest {
    std::string command;
    json spec;
    std::size_t k_points = 0;
    double t = 0.0;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::string mode;
    std::vector<std::string> outputs;
    json extra = json::object();
    std::string tool_version = kToolVersion;

    json to_json() const {
        return {{"command", command}, {"spec", spec},     {"k_points", k_points}, {"t", t},
                {"shots", shots},     {"seed", seed},     {"mode", mode},         {"outputs", outputs},
                {"extra", extra},     {"tool_version", tool_version}};
    }

    static RunManifest from_json(const json& j) {
        try {
            RunManifest m;
            m.command = j.at("command").get<std::string>();
            m.spec = j.at("spec");
            m.k_points = j.at("k_points").get<std::size_t>();
            m.t = j.at("t").get<double>();
            m.shots = j.at("shots").get<std::uint64_t>();
            m.seed = j.at("seed").get<std::uint64_t>();
            m.mode = j.at("mode").get<std::string>();
            m.outputs = j.at("outputs").get<std::vector<std::string>>();
            if (j.contains("extra")) m.extra = j.at("extra");
            m.tool_version = j.value("tool_version", std::string(kToolVersion));
            return m;
        } catch (const json::exception& e) {
            throw config_error("InvalidManifest", e.what());
        }
    }
};

// ---- tables ----

/// Eigensolver spectrum per (k, band) alongside the closed-form one where it exists.
inline CsvTable spectrum_table(const TwisterSpec& spec, const std::vector<double>& grid) {
    CsvTable t;
    t.header = {"k", "band", "re_E", "im_E"};
    const bool concrete = (spec.n_bands == 2 || spec.n_bands == 4) && spec.harmonics.size() == 2 &&
                          spec.harmonics[1] == cplx{1.0, 0.0} && spec.harmonics[0].imag() == 0.0 &&
                          spec.sigma_coeff.real() == 0.0;
    if (concrete) t.header.insert(t.header.end(), {"re_E_analytic", "im_E_analytic"});
    const auto spectra = tracked_spectra(spec, grid);
    for (std::size_t m = 0; m < grid.size(); ++m) {
        std::vector<cplx> ana;
        if (concrete) {
            if (spec.n_bands == 2) {
                const auto a = analytic_spectrum_2band(spec.m0(), spec.m1(), grid[m]);
                ana.assign(a.begin(), a.end());
            } else {
                const auto a = analytic_spectrum_4band(spec.m0(), spec.m1(), grid[m]);
                ana.assign(a.begin(), a.end());
            }
        }
        std::vector<bool> used(ana.size(), false);
        for (std::size_t b = 0; b < spectra[m].size(); ++b) {
            const cplx e = spectra[m].eigenvalues[b];
            std::vector<std::string> row{format_double(grid[m]), std::to_string(b), format_double(e.real()), format_double(e.imag())};
            if (concrete) {
                std::size_t best = 0;
                double bd = INFINITY;
                for (std::size_t a = 0; a < ana.size(); ++a)
                    if (!used[a] && std::abs(ana[a] - e) < bd) { bd = std::abs(ana[a] - e); best = a; }
                used[best] = true;
                row.push_back(format_double(ana[best].real()));
                row.push_back(format_double(ana[best].imag()));
            }
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

inline CsvTable states_table(const std::vector<std::vector<ReconstructedState>>& states) {
    CsvTable t;
    t.header = {"k", "band"};
    const std::size_t d = states.front().front().amplitudes.size();
    for (std::size_t i = 0; i < d; ++i) {
        t.header.push_back("re_psi" + std::to_string(i));
        t.header.push_back("im_psi" + std::to_string(i));
    }
    t.header.push_back("unreliable");
    for (std::size_t m = 0; m < states.front().size(); ++m)
        for (std::size_t b = 0; b < states.size(); ++b) {
            const auto& s = states[b][m];
            std::vector<std::string> row{format_double(s.k), std::to_string(b)};
            for (const auto& a : s.amplitudes) {
                row.push_back(format_double(a.real()));
                row.push_back(format_double(a.imag()));
            }
            row.push_back(s.unreliable ? "1" : "0");
            t.rows.push_back(std::move(row));
        }
    return t;
}

/// W and W̃ per pair (labels are strand positions at k = 0, 1-based in the output).
inline CsvTable winding_table(const BraidAnalysis& a) {
    CsvTable t;
    t.header = {"k", "i", "j", "W", "W_shifted"};
    for (std::size_t p = 0; p < a.trace.pairs.size(); ++p) {
        const auto& raw = a.trace.pairs[p];
        const auto& sh = a.shifted.pairs[p];
        for (std::size_t m = 0; m < raw.w.size(); ++m)
            t.rows.push_back({format_double(a.trace.k_grid[m]), std::to_string(raw.i + 1), std::to_string(raw.j + 1),
                              format_double(raw.w[m]), format_double(sh.w[m])});
    }
    return t;
}

inline CsvTable crossings_table(const CrossingReport& c) {
    CsvTable t;
    t.header = {"k", "i", "j", "r", "level", "counted"};
    auto add = [&](const Crossing& x, bool counted) {
        t.rows.push_back({format_double(x.k), std::to_string(x.i + 1), std::to_string(x.j + 1), std::to_string(x.r),
                          format_double(0.25 + 0.5 * x.r), counted ? "1" : "0"});
    };
    for (const auto& x : c.events) add(x, true);
    for (const auto& x : c.tangential) add(x, false);
    return t;
}

inline json matrix_to_json(const std::vector<std::vector<double>>& m) {
    json j = json::array();
    for (const auto& row : m) j.push_back(row);
    return j;
}

}  // namespace nhbraid
