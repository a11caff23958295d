#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "nhbraid/errors.hpp"
#include "nhbraid/link_class.hpp"
#include "nhbraid/twister.hpp"

namespace nhbraid {

struct PhaseWindow {
    double m0_lo = -3.0, m0_hi = 3.0;
    double m1_lo = -3.0, m1_hi = 3.0;
    int resolution = 50;  ///< cells per axis

    void validate() const {
        if (resolution < 2) throw config_error("InvalidWindow", "resolution must be >= 2");
        if (!(m0_hi > m0_lo) || !(m1_hi > m1_lo)) throw config_error("InvalidWindow", "empty parameter window");
    }
    double m0(int i) const { return m0_lo + (m0_hi - m0_lo) * i / (resolution - 1); }
    double m1(int j) const { return m1_lo + (m1_hi - m1_lo) * j / (resolution - 1); }
};

struct PhaseCell {
    double m0 = 0.0, m1 = 0.0;
    std::string label;  ///< class name, "boundary", "degenerate" or "unresolved"
};

struct BoundarySegment {
    int function = 0;
    double m0a = 0.0, m1a = 0.0, m0b = 0.0, m1b = 0.0;
};

struct PhaseDiagram {
    int model = 2;
    PhaseWindow window;
    std::vector<PhaseCell> cells;  ///< row-major in m1, then m0
    std::vector<BoundarySegment> boundaries;
};

/// Label a single point; cells within `tol` of a boundary function zero are reported as "boundary".
inline std::string phase_label(int model, double m0, double m1, double tol = 1e-6) {
    for (double f : detail::boundary_functions(model, m0, m1))
        if (!std::isnan(f) && std::abs(f) <= tol) return "boundary";
    try {
        return to_string(model == 2 ? phase_region_2band(m0, m1).label : phase_region_4band(m0, m1).label);
    } catch (const Error& e) {
        if (e.kind() == "OnBoundary") return "boundary";
        if (e.kind() == "DegeneratePoint") return "degenerate";
        if (e.kind() == "UnresolvedRegion") return "unresolved";
        throw;
    }
}

/// Zero contours of every boundary function by marching squares over the window's grid.
inline std::vector<BoundarySegment> boundary_polylines(int model, const PhaseWindow& w) {
    w.validate();
    const int n = w.resolution;
    std::vector<std::vector<double>> f(static_cast<std::size_t>(n * n));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) f[j * n + i] = detail::boundary_functions(model, w.m0(i), w.m1(j));
    const std::size_t nf = f.front().size();
    std::vector<BoundarySegment> out;
    for (std::size_t fi = 0; fi < nf; ++fi)
        for (int j = 0; j + 1 < n; ++j)
            for (int i = 0; i + 1 < n; ++i) {
                const std::array<std::array<int, 2>, 4> corner{{{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}};
                std::array<double, 4> v{};
                bool ok = true;
                for (int c = 0; c < 4; ++c) {
                    v[c] = f[corner[c][1] * n + corner[c][0]][fi];
                    ok = ok && !std::isnan(v[c]);
                }
                if (!ok) continue;
                std::vector<std::array<double, 2>> hits;
                for (int e = 0; e < 4; ++e) {
                    const double a = v[e], b = v[(e + 1) % 4];
                    if ((a < 0) == (b < 0)) continue;
                    const double s = a / (a - b);
                    const auto& p = corner[e];
                    const auto& q = corner[(e + 1) % 4];
                    hits.push_back({w.m0(p[0]) + s * (w.m0(q[0]) - w.m0(p[0])), w.m1(p[1]) + s * (w.m1(q[1]) - w.m1(p[1]))});
                }
                for (std::size_t h = 0; h + 1 < hits.size(); h += 2)
                    out.push_back({static_cast<int>(fi), hits[h][0], hits[h][1], hits[h + 1][0], hits[h + 1][1]});
            }
    return out;
}

inline PhaseDiagram phase_diagram(int model, const PhaseWindow& w, double jitter = 0.0, double tol = 1e-6) {
    if (model != 2 && model != 4) throw config_error("UnsupportedModel", "phase diagram is defined for N = 2 and N = 4");
    w.validate();
    PhaseDiagram d;
    d.model = model;
    d.window = w;
    for (int j = 0; j < w.resolution; ++j)
        for (int i = 0; i < w.resolution; ++i) {
            const double m0 = w.m0(i) + jitter, m1 = w.m1(j) + jitter;
            d.cells.push_back({m0, m1, phase_label(model, m0, m1, tol)});
        }
    d.boundaries = boundary_polylines(model, w);
    return d;
}

}  // namespace nhbraid
