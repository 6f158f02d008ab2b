#pragma once

// Minimal deterministic SVG rendering of rate curves: log-log excess risk
// against sample size, one polyline per scheme, with a reference grid.
// Coordinates are rounded to centipixels and printed via the locale-free
// double formatter, so the same records always produce the same bytes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "specshift/csv.hpp"
#include "specshift/errors.hpp"
#include "specshift/experiment.hpp"
#include "specshift/metrics.hpp"

namespace specshift {

struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (n, risk), risk > 0
};

namespace detail {

inline std::string svg_num(double v) {
    return format_double(std::round(v * 100.0) / 100.0);
}

inline const char* series_color(std::size_t i) {
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#ff7f0e", "#17becf"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

inline std::string render_rate_plot_svg(const std::vector<PlotSeries>& series,
                                        const std::string& title) {
    if (series.empty()) throw contract_error("render_rate_plot_svg: no series");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        if (s.points.empty()) throw contract_error("render_rate_plot_svg: empty series");
        for (auto [n, risk] : s.points) {
            if (!(n > 0.0) || !(risk > 0.0) || !std::isfinite(n) || !std::isfinite(risk)) {
                throw contract_error("render_rate_plot_svg: points must be finite and positive");
            }
            xmin = std::min(xmin, std::log10(n));
            xmax = std::max(xmax, std::log10(n));
            ymin = std::min(ymin, std::log10(risk));
            ymax = std::max(ymax, std::log10(risk));
        }
    }
    if (xmax - xmin < 1e-9) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-9) ymax = ymin + 1.0;

    constexpr double width = 640.0, height = 440.0;
    constexpr double left = 70.0, right = 610.0, top = 40.0, bottom = 390.0;
    const auto px = [&](double lx) { return left + (lx - xmin) / (xmax - xmin) * (right - left); };
    const auto py = [&](double ly) { return bottom - (ly - ymin) / (ymax - ymin) * (bottom - top); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << (width / 2) << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << detail::xml_escape(title)
        << "</text>\n";

    // Decade grid lines with labels.
    for (int e = static_cast<int>(std::ceil(ymin - 1e-9)); e <= std::floor(ymax + 1e-9); ++e) {
        const double y = py(e);
        out << "<line x1=\"" << left << "\" y1=\"" << detail::svg_num(y) << "\" x2=\"" << right
            << "\" y2=\"" << detail::svg_num(y) << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << (left - 8) << "\" y=\"" << detail::svg_num(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << e
            << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(xmin - 1e-9)); e <= std::floor(xmax + 1e-9); ++e) {
        const double x = px(e);
        out << "<line x1=\"" << detail::svg_num(x) << "\" y1=\"" << top << "\" x2=\""
            << detail::svg_num(x) << "\" y2=\"" << bottom << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << detail::svg_num(x) << "\" y=\"" << (bottom + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" << e
            << "</text>\n";
    }
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << (right - left)
        << "\" height=\"" << (bottom - top) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << (width / 2) << "\" y=\"" << (bottom + 38)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << "sample size n (log)</text>\n";
    out << "<text x=\"18\" y=\"" << ((top + bottom) / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 18 " << ((top + bottom) / 2) << ")\">"
        << "median excess risk (log)</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        auto pts = s.points;
        std::sort(pts.begin(), pts.end());
        out << "<polyline fill=\"none\" stroke=\"" << detail::series_color(si)
            << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) out << ' ';
            out << detail::svg_num(px(std::log10(pts[i].first))) << ','
                << detail::svg_num(py(std::log10(pts[i].second)));
        }
        out << "\"/>\n";
        for (const auto& [n, risk] : pts) {
            out << "<circle cx=\"" << detail::svg_num(px(std::log10(n))) << "\" cy=\""
                << detail::svg_num(py(std::log10(risk))) << "\" r=\"3\" fill=\""
                << detail::series_color(si) << "\"/>\n";
        }
        const double ly = top + 16.0 + 16.0 * static_cast<double>(si);
        out << "<line x1=\"" << (left + 10) << "\" y1=\"" << detail::svg_num(ly - 4) << "\" x2=\""
            << (left + 34) << "\" y2=\"" << detail::svg_num(ly - 4) << "\" stroke=\""
            << detail::series_color(si) << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << (left + 40) << "\" y=\"" << detail::svg_num(ly)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(s.label)
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

// Group records by scheme, reduce to per-n medians, render.
inline void write_rate_plot_svg(const std::vector<RiskRecord>& records, const std::string& path,
                                const std::string& title) {
    std::map<std::string, std::map<std::size_t, std::vector<double>>> by_scheme;
    for (const auto& r : records) {
        if (r.status == "ok") by_scheme[r.scheme][r.n].push_back(r.risk);
    }
    if (by_scheme.empty()) {
        throw contract_error("write_rate_plot_svg: no ok records to plot");
    }
    std::vector<PlotSeries> series;
    for (auto& [scheme, groups] : by_scheme) {
        PlotSeries s;
        s.label = scheme;
        for (auto& [n, risks] : groups) {
            s.points.emplace_back(static_cast<double>(n), median(std::move(risks)));
        }
        series.push_back(std::move(s));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw contract_error("write_rate_plot_svg: cannot open '" + path + "'");
    out << render_rate_plot_svg(series, title);
    if (!out) throw numeric_error("write_rate_plot_svg: write failed");
}

}  // namespace specshift
