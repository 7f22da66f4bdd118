#pragma once

// Static SVG charts written as plain text: grouped bar charts for MSE
// comparisons and a log-scale line chart for runtimes. Each bar is a
// <rect class="bar"> and each line a <polyline class="series">, tagged with
// data-series / data-group attributes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "magic_meter/harness/report.hpp"

namespace magic_meter {

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
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

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                   "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};
    return colors[i % 8];
}

inline std::string svg_open(int w, int h, const std::string& title) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
           std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n"
           "<title>" + xml_escape(title) + "</title>\n"
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           "<text x=\"" + std::to_string(w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           xml_escape(title) + "</text>\n";
}

}  // namespace detail

struct BarSeries {
    std::string name;
    bool hatched = false;
    std::vector<std::optional<double>> values;  // one per group
};

inline std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                                 const std::vector<std::string>& groups,
                                 const std::vector<BarSeries>& series) {
    using detail::num;
    const int w = std::max(480, 120 + static_cast<int>(groups.size() * (series.size() * 18 + 30)));
    const int h = 360 + 18 * static_cast<int>(series.size());
    const double left = 70, top = 40, plot_h = 240, plot_w = w - left - 20;
    double vmax = 0.0;
    for (const auto& s : series)
        for (const auto& v : s.values)
            if (v) vmax = std::max(vmax, *v);
    if (!(vmax > 0.0)) vmax = 1.0;
    vmax *= 1.1;

    std::string out = detail::svg_open(w, h, title);
    out += "<defs>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += "<pattern id=\"hatch" + std::to_string(i) +
               "\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">"
               "<rect width=\"6\" height=\"6\" fill=\"white\"/><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"" +
               std::string(detail::palette(i)) + "\" stroke-width=\"3\"/></pattern>\n";
    }
    out += "</defs>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = vmax * t / 4.0;
        const double y = top + plot_h - plot_h * t / 4.0;
        out += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left + plot_w) + "\" y2=\"" +
               num(y) + "\" stroke=\"#dddddd\"/>\n";
        out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
               detail::tick_label(v) + "</text>\n";
    }
    out += "<text x=\"16\" y=\"" + num(top + plot_h / 2) + "\" transform=\"rotate(-90 16 " +
           num(top + plot_h / 2) + ")\" text-anchor=\"middle\">" + detail::xml_escape(y_label) + "</text>\n";
    const double slot = groups.empty() ? plot_w : plot_w / static_cast<double>(groups.size());
    const double bar_w = std::max(4.0, (slot - 20) / std::max<std::size_t>(1, series.size()));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double x0 = left + slot * static_cast<double>(g) + 10;
        for (std::size_t s = 0; s < series.size(); ++s) {
            const auto& v = series[s].values.at(g);
            if (!v) continue;
            const double bh = plot_h * (*v / vmax);
            const std::string fill = series[s].hatched ? "url(#hatch" + std::to_string(s) + ")"
                                                       : std::string(detail::palette(s));
            out += "<rect class=\"bar\" data-series=\"" + detail::xml_escape(series[s].name) +
                   "\" data-group=\"" + detail::xml_escape(groups[g]) + "\" x=\"" +
                   num(x0 + bar_w * static_cast<double>(s)) + "\" y=\"" + num(top + plot_h - bh) +
                   "\" width=\"" + num(bar_w - 2) + "\" height=\"" + num(bh) + "\" fill=\"" + fill +
                   "\" stroke=\"" + detail::palette(s) + "\"><title>" + detail::xml_escape(series[s].name) +
                   " " + detail::xml_escape(groups[g]) + ": " + detail::tick_label(*v) + "</title></rect>\n";
        }
        out += "<text x=\"" + num(x0 + (slot - 20) / 2) + "\" y=\"" + num(top + plot_h + 16) +
               "\" text-anchor=\"middle\">" + detail::xml_escape(groups[g]) + "</text>\n";
    }
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" + num(left + plot_w) +
           "\" y2=\"" + num(top + plot_h) + "\" stroke=\"black\"/>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = top + plot_h + 40 + 18 * static_cast<double>(s);
        const std::string fill = series[s].hatched ? "url(#hatch" + std::to_string(s) + ")"
                                                   : std::string(detail::palette(s));
        out += "<rect x=\"" + num(left) + "\" y=\"" + num(y - 10) + "\" width=\"12\" height=\"12\" fill=\"" +
               fill + "\" stroke=\"" + detail::palette(s) + "\"/>";
        out += "<text x=\"" + num(left + 18) + "\" y=\"" + num(y) + "\">" + detail::xml_escape(series[s].name) +
               "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

struct LineSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;  // (x, y), y > 0
};

/// Line chart with a base-10 logarithmic y axis. Non-positive y values are
/// dropped.
inline std::string log_line_chart_svg(const std::string& title, const std::string& x_label,
                                      const std::string& y_label, const std::vector<LineSeries>& series) {
    using detail::num;
    const int w = 560, h = 380 + 18 * static_cast<int>(series.size());
    const double left = 80, top = 40, plot_w = 440, plot_h = 260;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            if (!(y > 0)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 1;
        ymax = 10;
    }
    if (xmax == xmin) xmax = xmin + 1;
    const double lo = std::floor(std::log10(ymin)), hi = std::max(lo + 1, std::ceil(std::log10(ymax)));
    auto px = [&](double x) { return left + plot_w * (x - xmin) / (xmax - xmin); };
    auto py = [&](double y) { return top + plot_h - plot_h * (std::log10(y) - lo) / (hi - lo); };

    std::string out = detail::svg_open(w, h, title);
    for (double e = lo; e <= hi; e += 1) {
        const double y = top + plot_h - plot_h * (e - lo) / (hi - lo);
        out += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left + plot_w) + "\" y2=\"" +
               num(y) + "\" stroke=\"#dddddd\"/>\n";
        out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">1e" +
               std::to_string(static_cast<int>(e)) + "</text>\n";
    }
    std::vector<double> xs;
    for (const auto& s : series)
        for (auto [x, y] : s.points) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (double x : xs) {
        out += "<text x=\"" + num(px(x)) + "\" y=\"" + num(top + plot_h + 16) + "\" text-anchor=\"middle\">" +
               detail::tick_label(x) + "</text>\n";
    }
    out += "<text x=\"" + num(left + plot_w / 2) + "\" y=\"" + num(top + plot_h + 34) +
           "\" text-anchor=\"middle\">" + detail::xml_escape(x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + num(top + plot_h / 2) + "\" transform=\"rotate(-90 16 " +
           num(top + plot_h / 2) + ")\" text-anchor=\"middle\">" + detail::xml_escape(y_label) + "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        std::string pts;
        std::string dots;
        for (auto [x, y] : series[s].points) {
            if (!(y > 0)) continue;
            pts += num(px(x)) + "," + num(py(y)) + " ";
            dots += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"3\" fill=\"" +
                    detail::palette(s) + "\"/>\n";
        }
        out += "<polyline class=\"series\" data-series=\"" + detail::xml_escape(series[s].name) +
               "\" fill=\"none\" stroke=\"" + detail::palette(s) + "\" stroke-width=\"2\" points=\"" + pts +
               "\"/>\n" + dots;
        const double y = top + plot_h + 56 + 18 * static_cast<double>(s);
        out += "<rect x=\"" + num(left) + "\" y=\"" + num(y - 10) + "\" width=\"12\" height=\"12\" fill=\"" +
               detail::palette(s) + "\"/><text x=\"" + num(left + 18) + "\" y=\"" + num(y) + "\">" +
               detail::xml_escape(series[s].name) + "</text>\n";
    }
    out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(plot_w) + "\" height=\"" +
           num(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
    out += "</svg>\n";
    return out;
}

/// Grouped MSE bars for a set of reports: one series per (encoding, split)
/// cell, one group per qubit-count group (or "all"). Train bars are solid,
/// test and extrapolation bars hatched.
inline std::string mse_chart_svg(const std::vector<Report>& reports, const std::string& title) {
    std::vector<std::string> groups;
    auto group_of = [&](const std::string& g) {
        auto it = std::find(groups.begin(), groups.end(), g);
        if (it == groups.end()) {
            groups.push_back(g);
            return groups.size() - 1;
        }
        return static_cast<std::size_t>(it - groups.begin());
    };
    struct Cell {
        std::string series;
        bool hatched;
        std::string group;
        double value;
    };
    std::vector<Cell> cells;
    for (const auto& r : reports) {
        auto add = [&](const std::string& split, const std::string& group, const SplitMetrics& m) {
            cells.push_back({r.encoding + " " + split, split != "train", group, m.mse});
            group_of(group);
        };
        if (r.kind == "interpolation" && r.runs.size() > 1) {
            for (const auto& run : r.runs) {
                add("train", run.group, run.train);
                add("test", run.group, run.test);
            }
        } else {
            if (r.train) add("train", "all", *r.train);
            if (r.test) add("test", "all", *r.test);
            if (r.extrapolation) add("extrapolation", "all", *r.extrapolation);
        }
    }
    std::vector<BarSeries> series;
    for (const auto& c : cells) {
        auto it = std::find_if(series.begin(), series.end(), [&](const BarSeries& s) { return s.name == c.series; });
        if (it == series.end()) {
            series.push_back({c.series, c.hatched, std::vector<std::optional<double>>(groups.size())});
            it = std::prev(series.end());
        }
    }
    for (auto& s : series) s.values.assign(groups.size(), std::nullopt);
    for (const auto& c : cells) {
        auto it = std::find_if(series.begin(), series.end(), [&](const BarSeries& s) { return s.name == c.series; });
        it->values[group_of(c.group)] = c.value;
    }
    return bar_chart_svg(title, "MSE", groups, series);
}

inline std::string runtime_chart_svg(const Report& r) {
    std::vector<LineSeries> series;
    auto push = [&](const std::string& name, std::uint32_t n, double ms) {
        auto it = std::find_if(series.begin(), series.end(), [&](const LineSeries& s) { return s.name == name; });
        if (it == series.end()) {
            series.push_back({name, {}});
            it = std::prev(series.end());
        }
        if (std::none_of(it->points.begin(), it->points.end(), [&](auto& p) { return p.first == n; })) {
            it->points.push_back({static_cast<double>(n), ms});
        }
    };
    for (const auto& row : r.runtime) {
        push("exact SRE per circuit", row.n_qubits, row.exact_sre_ms);
        push("simulation per circuit", row.n_qubits, row.simulate_ms);
    }
    for (const auto& row : r.runtime) {
        if (row.model.empty()) continue;
        push(row.model + " prediction per circuit", row.n_qubits, row.predict_ms);
        push(row.model + " training (whole set)", row.n_qubits, row.train_ms);
    }
    return log_line_chart_svg(r.name.empty() ? "Runtime" : r.name, "qubits", "wall time (ms)", series);
}

}  // namespace magic_meter
