#pragma once

// Level and direction accuracy metrics and the Diebold-Mariano test.

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "namemd/error.hpp"
#include "namemd/model.hpp"
#include "namemd/series.hpp"

namespace namemd {

namespace detail {

inline void require_same_length(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    if (a.size() != b.size())
        fail("length_mismatch", "vectors have lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    if (a.size() == 0) fail("empty_input", "metric of an empty vector");
}

}  // namespace detail

inline double mape(const Eigen::Ref<const Vector>& actual, const Eigen::Ref<const Vector>& forecast) {
    detail::require_same_length(actual, forecast);
    double sum = 0.0;
    for (Eigen::Index t = 0; t < actual.size(); ++t) {
        if (actual(t) == 0.0) detail::fail("zero_actual", "MAPE undefined: actual value at index " + std::to_string(t) + " is zero");
        sum += std::abs((actual(t) - forecast(t)) / actual(t));
    }
    return sum / static_cast<double>(actual.size());
}

inline double rmse(const Eigen::Ref<const Vector>& actual, const Eigen::Ref<const Vector>& forecast) {
    detail::require_same_length(actual, forecast);
    return std::sqrt((forecast - actual).squaredNorm() / static_cast<double>(actual.size()));
}

/// Share of points where the forecast and the actual move the same way from
/// the previous actual `anchor(t)`. A zero move on either side is a hit.
inline double dstat(const Eigen::Ref<const Vector>& actual, const Eigen::Ref<const Vector>& forecast,
                    const Eigen::Ref<const Vector>& anchor) {
    detail::require_same_length(actual, forecast);
    if (anchor.size() != actual.size()) detail::fail("missing_anchor", "dstat needs one anchor per forecast");
    Eigen::Index hits = 0;
    for (Eigen::Index t = 0; t < actual.size(); ++t)
        if ((forecast(t) - anchor(t)) * (actual(t) - anchor(t)) >= 0.0) ++hits;
    return static_cast<double>(hits) / static_cast<double>(actual.size());
}

/// Anchors for a test window that starts right after `train_last`: the
/// previous actual of each test point.
inline Vector previous_actuals(double train_last, const Eigen::Ref<const Vector>& actual) {
    Vector a(actual.size());
    if (actual.size() == 0) return a;
    a(0) = train_last;
    a.tail(actual.size() - 1) = actual.head(actual.size() - 1);
    return a;
}

struct DmTestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double mean_diff = 0.0;
    double variance = 0.0;
    int truncation_lag = 0;
    bool variance_fallback = false;  // long-run variance was not positive, gamma_0 used
    Eigen::Index n = 0;
};

inline double normal_two_sided_p(double s) { return std::erfc(std::abs(s) / std::sqrt(2.0)); }

/// Squared-error loss differential of A against B. A negative statistic means
/// A has the smaller loss. Autocovariances use the 1/N normalisation and the
/// long-run variance is truncated at lag `truncation_lag`.
inline DmTestResult dm_test_lag(const Eigen::Ref<const Vector>& actual, const Eigen::Ref<const Vector>& a,
                                const Eigen::Ref<const Vector>& b, int truncation_lag) {
    detail::require_same_length(actual, a);
    detail::require_same_length(actual, b);
    const Eigen::Index n = actual.size();
    if (n < 8) detail::fail("too_short", "dm_test needs at least 8 forecast pairs");
    detail::require(truncation_lag >= 0 && truncation_lag < n, "bad_argument", "truncation lag out of range");
    const Vector g = (actual - a).array().square() - (actual - b).array().square();
    const double mean = g.mean();
    const Vector d = g.array() - mean;
    const auto N = static_cast<double>(n);
    auto gamma = [&](Eigen::Index l) { return d.head(n - l).dot(d.tail(n - l)) / N; };
    const double g0 = gamma(0);
    if (!(g0 > 0.0)) detail::fail("degenerate", "loss differential is constant; DM statistic undefined");
    DmTestResult r;
    r.n = n;
    r.truncation_lag = truncation_lag;
    r.mean_diff = mean;
    double v = g0;
    for (int l = 1; l <= truncation_lag; ++l) v += 2.0 * gamma(l);
    if (!(v > 0.0)) {
        v = g0;
        r.variance_fallback = true;
    }
    r.variance = v;
    r.statistic = mean / std::sqrt(v / N);
    r.p_value = normal_two_sided_p(r.statistic);
    return r;
}

/// Truncation at horizon - 1.
inline DmTestResult dm_test(const Eigen::Ref<const Vector>& actual, const Eigen::Ref<const Vector>& a,
                            const Eigen::Ref<const Vector>& b, int horizon) {
    detail::require(horizon >= 1, "bad_argument", "horizon must be >= 1");
    return dm_test_lag(actual, a, b, horizon - 1);
}

enum class Variant { single, decomposed };

inline std::string_view to_string(Variant v) { return v == Variant::single ? "single" : "decomposed"; }

struct ForecastReport {
    ModelKind model = ModelKind::LR;
    Variant variant = Variant::single;
    int horizon = 1;
    double mape = 0.0;
    double rmse = 0.0;
    double dstat = 0.0;
    Vector forecasts;
    Vector actuals;
    Vector anchors;
    std::vector<std::string> dates;  // one per forecast target
    std::string leakage_mode;
    std::vector<Vector> component_forecasts;  // decomposed variant only, in original units
};

inline ForecastReport score_report(ModelKind model, Variant variant, int horizon, Vector forecasts, Vector actuals,
                                   Vector anchors) {
    ForecastReport r{model, variant, horizon};
    r.mape = mape(actuals, forecasts);
    r.rmse = rmse(actuals, forecasts);
    r.dstat = dstat(actuals, forecasts, anchors);
    r.forecasts = std::move(forecasts);
    r.actuals = std::move(actuals);
    r.anchors = std::move(anchors);
    return r;
}

inline nlohmann::json vector_to_json(const Eigen::Ref<const Vector>& v) {
    auto j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

inline nlohmann::json report_to_json(const ForecastReport& r) {
    return {{"model", std::string(to_string(r.model))},
            {"variant", std::string(to_string(r.variant))},
            {"horizon", r.horizon},
            {"leakage_mode", r.leakage_mode},
            {"mape", r.mape},
            {"rmse", r.rmse},
            {"dstat", r.dstat},
            {"dates", r.dates},
            {"actual", vector_to_json(r.actuals)},
            {"forecast", vector_to_json(r.forecasts)}};
}

inline nlohmann::json dm_to_json(const DmTestResult& d) {
    return {{"statistic", d.statistic},         {"p_value", d.p_value},   {"mean_loss_differential", d.mean_diff},
            {"variance", d.variance},           {"truncation_lag", d.truncation_lag},
            {"variance_fallback", d.variance_fallback}, {"n", d.n}};
}

/// Wide table: one row per (horizon, variant), one column per model and
/// criterion.
inline void write_report_table(std::ostream& out, const std::vector<ForecastReport>& reports) {
    std::vector<ModelKind> models;
    std::vector<int> horizons;
    for (const auto& r : reports) {
        if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
        if (std::find(horizons.begin(), horizons.end(), r.horizon) == horizons.end()) horizons.push_back(r.horizon);
    }
    out << "horizon,variant";
    for (auto m : models)
        for (const char* c : {"MAPE", "RMSE", "Dstat"}) out << ',' << to_string(m) << '_' << c;
    out << '\n';
    char buf[64];
    for (int h : horizons) {
        for (auto v : {Variant::single, Variant::decomposed}) {
            bool any = false;
            std::string line = std::to_string(h) + "," + std::string(to_string(v));
            for (auto m : models) {
                const ForecastReport* hit = nullptr;
                for (const auto& r : reports)
                    if (r.model == m && r.horizon == h && r.variant == v) hit = &r;
                if (!hit) {
                    line += ",,,";
                    continue;
                }
                any = true;
                std::snprintf(buf, sizeof buf, ",%.6g,%.6g,%.4f", hit->mape, hit->rmse, hit->dstat);
                line += buf;
            }
            if (any) out << line << '\n';
        }
    }
}

}  // namespace namemd
