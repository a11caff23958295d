#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nhbraid/braid.hpp"
#include "nhbraid/io.hpp"

namespace nhbraid {

namespace svg {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", std::abs(x) < 5e-4 ? 0.0 : x);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
    return colors[i % 8];
}

class Canvas {
public:
    Canvas(double w, double h) : w_(w), h_(h) {}

    void line(double x1, double y1, double x2, double y2, const std::string& style) {
        body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) + "\" " + style + "/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& style) {
        if (pts.empty()) return;
        body_ += "<polyline fill=\"none\" " + style + " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) body_ += (i ? " " : "") + num(pts[i].first) + "," + num(pts[i].second);
        body_ += "\"/>\n";
    }
    void circle(double x, double y, double r, const std::string& style) {
        body_ += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) + "\" " + style + "/>\n";
    }
    void text(double x, double y, const std::string& s, const std::string& anchor = "middle") {
        body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"" +
                 anchor + "\">" + s + "</text>\n";
    }
    void raw(const std::string& s) { body_ += s; }

    std::string str() const {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w_) +
               "\" height=\"" + num(h_) + "\" viewBox=\"0 0 " + num(w_) + " " + num(h_) + "\">\n" +
               "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
    }

private:
    double w_, h_;
    std::string body_;
};

}  // namespace svg

/// Shifted winding traces from a winding table (k, i, j, W_shifted), dashed crossing levels
/// 1/4 + r/2 and, if given, crossing markers from a crossings table.
inline std::string render_winding_svg(const CsvTable& winding, const CsvTable* crossings = nullptr) {
    constexpr double W = 640, H = 400, L = 60, R = 20, T = 20, B = 50;
    svg::Canvas c(W, H);
    std::map<std::pair<int, int>, std::vector<std::pair<double, double>>> series;
    double lo = 0.0, hi = 1.0;
    bool any = false;
    for (std::size_t r = 0; r < winding.rows.size(); ++r) {
        const int i = static_cast<int>(winding.number(r, "i")), j = static_cast<int>(winding.number(r, "j"));
        const double k = winding.number(r, "k"), w = winding.number(r, "W_shifted");
        if (!std::isfinite(k) || !std::isfinite(w)) throw io_error("MalformedTable", "non-finite winding value");
        series[{i, j}].push_back({k, w});
        lo = any ? std::min(lo, w) : w;
        hi = any ? std::max(hi, w) : w;
        any = true;
    }
    lo = std::floor(lo * 4.0) / 4.0 - 0.25;
    hi = std::ceil(hi * 4.0) / 4.0 + 0.25;
    auto X = [&](double k) { return L + (W - L - R) * k / (2 * kPi); };
    auto Y = [&](double w) { return T + (H - T - B) * (hi - w) / (hi - lo); };

    c.line(L, H - B, W - R, H - B, "stroke=\"black\"");
    c.line(L, T, L, H - B, "stroke=\"black\"");
    c.text((L + W - R) / 2, H - 12, "k");
    c.text(16, (T + H - B) / 2, "W");
    for (int q = 0; q <= 4; ++q) {
        const double k = q * kPi / 2;
        c.line(X(k), H - B, X(k), H - B + 5, "stroke=\"black\"");
        static const char* labels[] = {"0", "&#960;/2", "&#960;", "3&#960;/2", "2&#960;"};
        c.text(X(k), H - B + 18, labels[q]);
    }
    for (int r = static_cast<int>(std::ceil(2 * (lo - 0.25))); 0.25 + 0.5 * r <= hi; ++r) {
        const double lev = 0.25 + 0.5 * r;
        c.line(L, Y(lev), W - R, Y(lev), "stroke=\"black\" stroke-dasharray=\"6,4\" stroke-width=\"0.8\"");
        c.text(L - 6, Y(lev) + 4, svg::num(lev), "end");
    }
    std::size_t idx = 0;
    for (const auto& [pair, pts] : series) {
        std::vector<std::pair<double, double>> scaled;
        for (const auto& [k, w] : pts) scaled.push_back({X(k), Y(w)});
        c.polyline(scaled, std::string("stroke=\"") + svg::palette(idx) + "\" stroke-width=\"1.5\"");
        c.text(W - R - 4, T + 14 * (idx + 1), "W" + std::to_string(pair.first) + std::to_string(pair.second), "end");
        ++idx;
    }
    if (crossings) {
        for (std::size_t r = 0; r < crossings->rows.size(); ++r) {
            if (crossings->number(r, "counted") == 0.0) continue;
            c.circle(X(crossings->number(r, "k")), Y(crossings->number(r, "level")), 4, "fill=\"black\"");
        }
    }
    return c.str();
}

/// Braid diagram: strands run left to right, one column per generator; the over-strand is drawn
/// unbroken and the under-strand with a gap.
inline std::string render_braid_svg(const BraidWord& w) {
    const double dx = 60, dy = 40, margin = 30;
    const int n = w.strands;
    const double width = 2 * margin + dx * static_cast<double>(std::max<std::size_t>(w.size(), 1));
    const double height = 2 * margin + dy * (n - 1);
    svg::Canvas c(width, height);
    std::vector<int> at(n);
    for (int p = 0; p < n; ++p) at[p] = p;  // strand occupying position p
    auto Yp = [&](int p) { return margin + dy * p; };
    for (std::size_t col = 0; col < std::max<std::size_t>(w.size(), 1); ++col) {
        const double x0 = margin + dx * static_cast<double>(col), x1 = x0 + dx;
        const int g = col < w.size() ? w.generators[col] : 0;
        const int p = std::abs(g) - 1;
        for (int q = 0; q < n; ++q)
            if (g == 0 || (q != p && q != p + 1))
                c.line(x0, Yp(q), x1, Yp(q), std::string("stroke=\"") + svg::palette(at[q]) + "\" stroke-width=\"3\"");
        if (g == 0) continue;
        // positive generator: strand at position p passes over.
        const int over_from = g > 0 ? p : p + 1, under_from = g > 0 ? p + 1 : p;
        const int over_to = g > 0 ? p + 1 : p, under_to = g > 0 ? p : p + 1;
        const double mx = (x0 + x1) / 2, my = (Yp(under_from) + Yp(under_to)) / 2;
        const double gx = 8, gy = 8 * (Yp(under_to) - Yp(under_from)) / dx;
        const std::string us = std::string("stroke=\"") + svg::palette(at[under_from]) + "\" stroke-width=\"3\"";
        c.line(x0, Yp(under_from), mx - gx, my - gy, us);
        c.line(mx + gx, my + gy, x1, Yp(under_to), us);
        c.line(x0, Yp(over_from), x1, Yp(over_to), std::string("stroke=\"") + svg::palette(at[over_from]) + "\" stroke-width=\"3\"");
        std::swap(at[p], at[p + 1]);
    }
    c.text(width / 2, height - 6, w.empty() ? "(empty word)" : w.str());
    return c.str();
}

/// Oblique projection of torus-embedding curves from a table (strand, k, x, y, z).
inline std::string render_torus_svg(const CsvTable& curves) {
    constexpr double S = 480, scale = 60;
    svg::Canvas c(S, S);
    std::map<int, std::vector<std::pair<double, double>>> strands;
    for (std::size_t r = 0; r < curves.rows.size(); ++r) {
        const double x = curves.number(r, "x"), y = curves.number(r, "y"), z = curves.number(r, "z");
        strands[static_cast<int>(curves.number(r, "strand"))].push_back(
            {S / 2 + scale * (x + 0.3 * y), S / 2 - scale * (z + 0.3 * y)});
    }
    for (const auto& [j, pts] : strands)
        c.polyline(pts, std::string("stroke=\"") + svg::palette(static_cast<std::size_t>(j)) + "\" stroke-width=\"2\"");
    return c.str();
}

}  // namespace nhbraid
