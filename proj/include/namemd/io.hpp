#pragma once

// Writing run outputs and reading mode dumps back.

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "namemd/error.hpp"
#include "namemd/evaluation.hpp"
#include "namemd/pipeline.hpp"
#include "namemd/series.hpp"

namespace namemd {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("io_error", "cannot write '" + path.string() + "'");
    return out;
}

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail("io_error", "cannot create directory '" + dir.string() + "': " + ec.message());
}

}  // namespace detail

/// date, imf_1..imf_n, residue. Values are written with full precision so
/// the modes sum back to the channel.
inline void write_imfs_csv(std::ostream& out, const ImfSet& set, YearMonth start) {
    out << "date";
    for (std::size_t i = 0; i < set.imfs.size(); ++i) out << ",imf_" << i + 1;
    out << ",residue\n";
    for (Eigen::Index t = 0; t < set.residue.size(); ++t) {
        out << start.plus(static_cast<int>(t)).str();
        for (const auto& imf : set.imfs) out << ',' << detail::fmt_double(imf(t));
        out << ',' << detail::fmt_double(set.residue(t)) << '\n';
    }
}

struct ImfDump {
    std::string channel;
    YearMonth start;
    Vector original;
    ImfSet modes;
};

inline ImfDump read_imfs_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) detail::fail("io_error", "cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) detail::fail("bad_dump", "empty mode dump '" + path.string() + "'");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header.front() != "date" || header.back() != "residue")
        detail::fail("bad_dump", "unexpected header in '" + path.string() + "'");
    const std::size_t n_imf = header.size() - 2;
    std::vector<std::vector<double>> cols(header.size() - 1);
    ImfDump dump;
    std::string stem = path.stem().string();
    dump.channel = stem.rfind("imfs_", 0) == 0 ? stem.substr(5) : stem;
    bool first = true;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) detail::fail("bad_dump", "ragged row in '" + path.string() + "'");
        if (first) {
            auto d = YearMonth::parse(detail::trim(cells[0]));
            if (!d) detail::fail("bad_dump", "bad date in '" + path.string() + "'");
            dump.start = *d;
            first = false;
        }
        for (std::size_t c = 1; c < cells.size(); ++c) {
            auto v = detail::parse_double(detail::trim(cells[c]));
            if (!v) detail::fail("bad_dump", "non-numeric cell in '" + path.string() + "'");
            cols[c - 1].push_back(*v);
        }
    }
    auto vec = [](const std::vector<double>& v) { return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))); };
    if (first) detail::fail("bad_dump", "mode dump '" + path.string() + "' has no rows");
    for (std::size_t i = 0; i < n_imf; ++i) dump.modes.imfs.push_back(vec(cols[i]));
    dump.modes.residue = vec(cols.back());
    dump.original = dump.modes.reconstruct();
    return dump;
}

inline void write_diagnostics_csv(std::ostream& out, const std::vector<DiagnosticsRow>& rows) {
    out << "channel,component,mean_period,pearson_correlation\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.4f", r.mean_period);
        out << r.channel << ',' << r.component << ',' << buf << ',';
        if (r.correlation) {
            std::snprintf(buf, sizeof buf, "%.4f", *r.correlation);
            out << buf;
        } else {
            out << "nan";
        }
        out << '\n';
    }
}

inline void write_decomposition(const std::filesystem::path& dir, const ImfDecomposition& d,
                                const std::vector<DiagnosticsRow>& diagnostics) {
    detail::ensure_dir(dir);
    for (std::size_t c = 0; c < d.channels.size(); ++c) {
        auto out = detail::open_output(dir / ("imfs_" + d.channel_names[c] + ".csv"));
        write_imfs_csv(out, d.channels[c], d.start);
    }
    auto out = detail::open_output(dir / "diagnostics.csv");
    write_diagnostics_csv(out, diagnostics);
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
}

/// Every output of a run: mode dumps, diagnostics, reports and DM tests.
inline void write_artifacts(const std::filesystem::path& dir, const RunArtifacts& art) {
    write_decomposition(dir, art.decomposition, art.diagnostics);
    write_json(dir / "report.json", artifacts_to_json(art));
    write_json(dir / "dm_tests.json", dm_tests_to_json(art));
    auto table = detail::open_output(dir / "report_table.csv");
    write_report_table(table, art.reports);
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) detail::fail("io_error", "cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        detail::fail("bad_report", "cannot parse '" + path.string() + "': " + e.what());
    }
}

/// Rebuilds the scored reports stored in a report.json.
inline std::vector<ForecastReport> reports_from_json(const nlohmann::json& j) {
    std::vector<ForecastReport> out;
    try {
        for (const auto& r : j.at("reports")) {
            ForecastReport rep;
            rep.model = parse_model_kind(r.at("model").get<std::string>());
            rep.variant = r.at("variant").get<std::string>() == "single" ? Variant::single : Variant::decomposed;
            rep.horizon = r.at("horizon").get<int>();
            rep.mape = r.at("mape").get<double>();
            rep.rmse = r.at("rmse").get<double>();
            rep.dstat = r.at("dstat").get<double>();
            rep.leakage_mode = r.at("leakage_mode").get<std::string>();
            rep.dates = r.at("dates").get<std::vector<std::string>>();
            auto a = r.at("actual").get<std::vector<double>>();
            auto f = r.at("forecast").get<std::vector<double>>();
            rep.actuals = Eigen::Map<Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
            rep.forecasts = Eigen::Map<Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
            out.push_back(std::move(rep));
        }
    } catch (const nlohmann::json::exception& e) {
        detail::fail("bad_report", std::string("malformed report: ") + e.what());
    }
    return out;
}

}  // namespace namemd
