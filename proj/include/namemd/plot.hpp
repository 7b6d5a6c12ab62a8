#pragma once

// Minimal SVG rendering: stacked mode panels per channel and forecast
// overlays per report.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "namemd/error.hpp"
#include "namemd/evaluation.hpp"
#include "namemd/io.hpp"
#include "namemd/series.hpp"

namespace namemd {

namespace svg {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 90.0;
constexpr double kMarginLeft = 90.0;
constexpr double kMarginRight = 12.0;
constexpr double kGap = 8.0;

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
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

/// Polyline of `v` scaled into the box [x0, x0+w] x [y0, y0+h] using the
/// value range [lo, hi].
inline std::string polyline(const Vector& v, double x0, double y0, double w, double h, double lo, double hi,
                            const char* stroke) {
    std::string pts;
    const double span = hi > lo ? hi - lo : 1.0;
    const double n = static_cast<double>(std::max<Eigen::Index>(v.size() - 1, 1));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) pts += ' ';
        pts += num(x0 + w * static_cast<double>(i) / n) + "," + num(y0 + h - h * (v(i) - lo) / span);
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
}

inline std::string header(double height, const std::string& title) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
           "<title>" + escape(title) + "</title>\n";
}

}  // namespace svg

/// Original signal, IMFs (highest frequency first) and residue, one panel each.
inline std::string render_modes_svg(const std::string& channel, const Vector& original, const ImfSet& modes) {
    std::vector<std::pair<std::string, const Vector*>> panels{{"original", &original}};
    for (std::size_t i = 0; i < modes.imfs.size(); ++i) panels.emplace_back("IMF" + std::to_string(i + 1), &modes.imfs[i]);
    panels.emplace_back("residue", &modes.residue);
    const double height = 24.0 + static_cast<double>(panels.size()) * (svg::kPanelHeight + svg::kGap);
    std::string out = svg::header(height, "modes of " + channel);
    out += "<text x=\"" + svg::num(svg::kMarginLeft) + "\" y=\"16\">" + svg::escape(channel) + "</text>\n";
    const double w = svg::kWidth - svg::kMarginLeft - svg::kMarginRight;
    double y = 24.0;
    for (const auto& [label, v] : panels) {
        const double lo = v->size() ? v->minCoeff() : 0.0;
        const double hi = v->size() ? v->maxCoeff() : 1.0;
        out += "<g class=\"panel\">\n";
        out += "<rect x=\"" + svg::num(svg::kMarginLeft) + "\" y=\"" + svg::num(y) + "\" width=\"" + svg::num(w) +
               "\" height=\"" + svg::num(svg::kPanelHeight) + "\" fill=\"none\" stroke=\"#ccc\"/>\n";
        out += "<text x=\"6\" y=\"" + svg::num(y + svg::kPanelHeight / 2) + "\">" + svg::escape(label) + "</text>\n";
        out += svg::polyline(*v, svg::kMarginLeft, y, w, svg::kPanelHeight, lo, hi, "#1f4e9c");
        out += "</g>\n";
        y += svg::kPanelHeight + svg::kGap;
    }
    out += "</svg>\n";
    return out;
}

/// Actual (black) and forecast (red) over the test window.
inline std::string render_forecast_svg(const ForecastReport& r) {
    const std::string title = std::string(to_string(r.model)) + " " + std::string(to_string(r.variant)) + " h=" +
                              std::to_string(r.horizon);
    const double plot_h = 3.0 * svg::kPanelHeight;
    std::string out = svg::header(plot_h + 40.0, title);
    out += "<text x=\"" + svg::num(svg::kMarginLeft) + "\" y=\"16\">" + svg::escape(title) + "</text>\n";
    const double w = svg::kWidth - svg::kMarginLeft - svg::kMarginRight;
    double lo = 0.0, hi = 1.0;
    if (r.actuals.size()) {
        lo = std::min(r.actuals.minCoeff(), r.forecasts.minCoeff());
        hi = std::max(r.actuals.maxCoeff(), r.forecasts.maxCoeff());
    }
    out += "<g class=\"panel\">\n";
    out += "<rect x=\"" + svg::num(svg::kMarginLeft) + "\" y=\"24\" width=\"" + svg::num(w) + "\" height=\"" +
           svg::num(plot_h) + "\" fill=\"none\" stroke=\"#ccc\"/>\n";
    out += "<text x=\"6\" y=\"32\">" + svg::num(hi) + "</text>\n";
    out += "<text x=\"6\" y=\"" + svg::num(24.0 + plot_h) + "\">" + svg::num(lo) + "</text>\n";
    out += svg::polyline(r.actuals, svg::kMarginLeft, 24.0, w, plot_h, lo, hi, "#000");
    out += svg::polyline(r.forecasts, svg::kMarginLeft, 24.0, w, plot_h, lo, hi, "#c0392b");
    out += "</g>\n</svg>\n";
    return out;
}

/// Renders every imfs_<channel>.csv and the reports in report.json found in
/// `dir`. Returns the written file names in order.
inline std::vector<std::string> emit_plots(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) detail::fail("io_error", "'" + dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> dumps;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("imfs_", 0) == 0 && entry.path().extension() == ".csv") dumps.push_back(entry.path());
    }
    std::sort(dumps.begin(), dumps.end());
    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& body) {
        auto out = detail::open_output(dir / name);
        out << body;
        if (!out) detail::fail("io_error", "cannot write '" + (dir / name).string() + "'");
        written.push_back(name);
    };
    for (const auto& p : dumps) {
        const auto dump = read_imfs_csv(p);
        put("modes_" + dump.channel + ".svg", render_modes_svg(dump.channel, dump.original, dump.modes));
    }
    if (std::filesystem::exists(dir / "report.json")) {
        for (const auto& r : reports_from_json(read_json(dir / "report.json")))
            put("forecast_" + std::string(to_string(r.model)) + "_" + std::string(to_string(r.variant)) + "_h" +
                    std::to_string(r.horizon) + ".svg",
                render_forecast_svg(r));
    }
    if (written.empty()) detail::fail("no_artifacts", "no mode dumps or report.json in '" + dir.string() + "'");
    return written;
}

}  // namespace namemd
