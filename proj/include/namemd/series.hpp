#pragma once

// Multichannel monthly series: ingestion, min-max scaling, lag embedding and
// chronological splitting.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "namemd/error.hpp"

namespace namemd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Calendar month. `month` is 1-based.
struct YearMonth {
    int year = 2000;
    int month = 1;

    int ordinal() const { return year * 12 + (month - 1); }
    static YearMonth from_ordinal(int ord) { return {ord / 12, ord % 12 + 1}; }
    YearMonth plus(int months) const { return from_ordinal(ordinal() + months); }

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
        return buf;
    }

    static std::optional<YearMonth> parse(std::string_view s) {
        if (s.size() != 7 || s[4] != '-') return std::nullopt;
        int y = 0, m = 0;
        auto r1 = std::from_chars(s.data(), s.data() + 4, y);
        auto r2 = std::from_chars(s.data() + 5, s.data() + 7, m);
        if (r1.ec != std::errc{} || r1.ptr != s.data() + 4) return std::nullopt;
        if (r2.ec != std::errc{} || r2.ptr != s.data() + 7) return std::nullopt;
        if (m < 1 || m > 12) return std::nullopt;
        return YearMonth{y, m};
    }

    friend bool operator==(const YearMonth&, const YearMonth&) = default;
};

/// T x m matrix of aligned monthly observations (rows are time).
struct MultichannelSeries {
    Matrix values;
    std::vector<std::string> channel_names;
    YearMonth start;

    Eigen::Index length() const { return values.rows(); }
    Eigen::Index channels() const { return values.cols(); }

    YearMonth date(Eigen::Index t) const { return start.plus(static_cast<int>(t)); }

    Eigen::Index channel_index(std::string_view name) const {
        for (std::size_t i = 0; i < channel_names.size(); ++i)
            if (channel_names[i] == name) return static_cast<Eigen::Index>(i);
        detail::fail("unknown_channel", "unknown channel '" + std::string(name) + "'");
    }

    Vector channel(std::string_view name) const { return values.col(channel_index(name)); }

    /// Rows [first, first + count) as a new series with the matching start date.
    MultichannelSeries slice(Eigen::Index first, Eigen::Index count) const {
        return {values.middleRows(first, count), channel_names, date(first)};
    }

    /// Subset of channels, in the given order.
    MultichannelSeries select(const std::vector<std::string>& names) const {
        MultichannelSeries out{Matrix(length(), static_cast<Eigen::Index>(names.size())), names, start};
        for (std::size_t i = 0; i < names.size(); ++i)
            out.values.col(static_cast<Eigen::Index>(i)) = values.col(channel_index(names[i]));
        return out;
    }
};

struct NormalizationParams {
    Vector min;
    Vector max;

    double scale(Eigen::Index c) const { return max(c) - min(c); }
};

/// Rolling-window regression set. Row i holds `lag_count` consecutive values;
/// its target sits `horizon` steps after the last of them.
struct SupervisedSet {
    Matrix inputs;
    Vector targets;
    int horizon = 1;
    int lag_count = 1;

    Eigen::Index rows() const { return inputs.rows(); }
};

struct IngestOptions {
    std::size_t min_rows = 24;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    out.push_back(cell);
    return out;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

inline bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null";
}

inline std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

/// Parses the CSV layout `date,<channel>...` with YYYY-MM dates.
/// Interior missing cells are filled by linear interpolation; missing cells at
/// either end of a channel are rejected.
inline MultichannelSeries parse_csv(std::istream& in, const IngestOptions& opts = {}) {
    using detail::fail;
    std::string line;
    if (!std::getline(in, line)) fail("empty_input", "CSV input is empty");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
    auto header = detail::split_csv_line(line);
    if (header.size() < 2) fail("no_channels", "CSV needs a date column and at least one channel");
    std::vector<std::string> names;
    for (std::size_t i = 1; i < header.size(); ++i) names.push_back(detail::trim(header[i]));

    std::vector<YearMonth> dates;
    std::vector<std::vector<double>> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            fail("bad_row", "line " + std::to_string(line_no) + ": expected " +
                                std::to_string(header.size()) + " cells");
        auto date = YearMonth::parse(detail::trim(cells[0]));
        if (!date) fail("bad_date", "line " + std::to_string(line_no) + ": date must be YYYY-MM");
        if (!dates.empty() && date->ordinal() != dates.back().ordinal() + 1)
            fail("non_consecutive_index", "non-consecutive index at line " + std::to_string(line_no) +
                                              " (" + dates.back().str() + " -> " + date->str() + ")");
        dates.push_back(*date);
        std::vector<double> row;
        for (std::size_t c = 1; c < cells.size(); ++c) {
            auto cell = detail::trim(cells[c]);
            if (detail::is_missing_token(cell)) {
                row.push_back(nan);
            } else if (auto v = detail::parse_double(cell)) {
                row.push_back(*v);
            } else {
                fail("non_numeric", "line " + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail("too_short", "CSV has no data rows");
    if (rows.size() < opts.min_rows)
        fail("too_short", "series has " + std::to_string(rows.size()) + " rows, need at least " +
                              std::to_string(opts.min_rows));

    const auto T = static_cast<Eigen::Index>(rows.size());
    const auto m = static_cast<Eigen::Index>(names.size());
    Matrix values(T, m);
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index c = 0; c < m; ++c) values(t, c) = rows[t][c];

    for (Eigen::Index c = 0; c < m; ++c) {
        auto col = values.col(c);
        if (std::isnan(col(0)) || std::isnan(col(T - 1)))
            fail("boundary_missing", "channel '" + names[c] + "' has a missing value at the series boundary");
        Eigen::Index last = 0;
        for (Eigen::Index t = 1; t < T; ++t) {
            if (std::isnan(col(t))) continue;
            for (Eigen::Index k = last + 1; k < t; ++k) {
                double w = static_cast<double>(k - last) / static_cast<double>(t - last);
                col(k) = (1.0 - w) * col(last) + w * col(t);
            }
            last = t;
        }
    }
    return {std::move(values), std::move(names), dates.front()};
}

inline MultichannelSeries ingest_csv(const std::string& path, const IngestOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) detail::fail("io_error", "cannot open '" + path + "'");
    return parse_csv(in, opts);
}

/// Maps every channel onto [0, 1]. Constant channels are rejected.
inline std::pair<MultichannelSeries, NormalizationParams> min_max_normalize(const MultichannelSeries& s) {
    NormalizationParams p{s.values.colwise().minCoeff().transpose(), s.values.colwise().maxCoeff().transpose()};
    MultichannelSeries out = s;
    for (Eigen::Index c = 0; c < s.channels(); ++c) {
        if (!(p.max(c) > p.min(c)))
            detail::fail("constant_channel", "channel '" + s.channel_names[c] + "' is constant");
        out.values.col(c) = (s.values.col(c).array() - p.min(c)) / p.scale(c);
    }
    return {std::move(out), std::move(p)};
}

/// Applies previously fitted scaling parameters (values outside the fitted
/// range map outside [0, 1]).
inline MultichannelSeries apply_normalization(const MultichannelSeries& s, const NormalizationParams& p) {
    MultichannelSeries out = s;
    for (Eigen::Index c = 0; c < s.channels(); ++c)
        out.values.col(c) = (s.values.col(c).array() - p.min(c)) / p.scale(c);
    return out;
}

inline MultichannelSeries denormalize(const MultichannelSeries& s, const NormalizationParams& p) {
    MultichannelSeries out = s;
    for (Eigen::Index c = 0; c < s.channels(); ++c)
        out.values.col(c) = s.values.col(c).array() * p.scale(c) + p.min(c);
    return out;
}

inline SupervisedSet make_lag_matrix(const Eigen::Ref<const Vector>& series, int lag_count, int horizon) {
    detail::require(lag_count >= 1 && horizon >= 1, "bad_argument", "lag_count and horizon must be >= 1");
    const Eigen::Index T = series.size();
    const Eigen::Index n = T - lag_count - horizon + 1;
    if (n < 1)
        detail::fail("too_short", "series of length " + std::to_string(T) + " is too short for " +
                                      std::to_string(lag_count) + " lags at horizon " + std::to_string(horizon));
    SupervisedSet set{Matrix(n, lag_count), Vector(n), horizon, lag_count};
    for (Eigen::Index k = 0; k < n; ++k) {
        set.inputs.row(k) = series.segment(k, lag_count).transpose();
        set.targets(k) = series(k + lag_count - 1 + horizon);
    }
    return set;
}

/// Size of the training prefix: floor(T * fraction). The small guard keeps
/// products such as 100 * 0.29 from rounding down past the exact value.
inline Eigen::Index train_size(Eigen::Index T, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        detail::fail("bad_fraction", "train_fraction must lie in (0, 1)");
    return static_cast<Eigen::Index>(std::floor(static_cast<double>(T) * train_fraction + 1e-9));
}

inline std::pair<MultichannelSeries, MultichannelSeries> chronological_split(const MultichannelSeries& s,
                                                                             double train_fraction) {
    const Eigen::Index n = train_size(s.length(), train_fraction);
    return {s.slice(0, n), s.slice(n, s.length() - n)};
}

}  // namespace namemd
