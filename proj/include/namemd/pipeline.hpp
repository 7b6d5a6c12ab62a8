#pragma once

// Experiment orchestration: load and scale the data, decompose, forecast each
// component, recombine, score and test.

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "namemd/error.hpp"
#include "namemd/evaluation.hpp"
#include "namemd/forecasters.hpp"
#include "namemd/memd.hpp"
#include "namemd/model.hpp"
#include "namemd/series.hpp"

namespace namemd {

enum class LeakageMode { whole_series, train_only };
enum class Grouping { none, highfreq_under_12m };

inline std::string_view to_string(LeakageMode m) { return m == LeakageMode::whole_series ? "whole-series" : "train-only"; }
inline std::string_view to_string(Grouping g) { return g == Grouping::none ? "none" : "highfreq-under-12m"; }

struct ExperimentConfig {
    std::string input;
    std::string target_channel;
    std::vector<std::string> source_channels;
    double train_fraction = 0.8;
    std::vector<int> horizons{1, 2, 3};
    std::vector<ModelSpec> models;
    NaMemdConfig na_memd;
    std::optional<std::uint64_t> na_memd_seed;  // derived from `seed` when unset
    int lag_count = 12;
    LeakageMode leakage_mode = LeakageMode::whole_series;
    Grouping grouping = Grouping::none;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(!target_channel.empty(), "bad_config", "target_channel is required");
        for (const auto& s : source_channels)
            if (s == target_channel) detail::fail("bad_config", "target_channel '" + s + "' is also a source channel");
        detail::require(!horizons.empty(), "bad_config", "horizons must not be empty");
        for (int h : horizons) detail::require(h >= 1, "bad_config", "horizons must be >= 1");
        detail::require(lag_count >= 1, "bad_config", "lag_count must be >= 1");
        detail::require(!models.empty(), "bad_config", "at least one model is required");
        train_size(100, train_fraction);
    }

    std::uint64_t decomposition_seed() const {
        return na_memd_seed ? *na_memd_seed : detail::mix_seed(seed, detail::hash_key("na_memd"));
    }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* e = value.data() + value.size();
    auto r = std::from_chars(value.data(), e, out);
    if (r.ec != std::errc{} || r.ptr != e) fail("bad_config", "key '" + key + "': '" + value + "' is not a number");
    return out;
}

inline void apply_model_override(ModelSpec& spec, const std::string& field, const std::string& key,
                                  const std::string& value) {
    if (field == "hidden_units") spec.hidden_units = parse_number<int>(key, value);
    else if (field == "epochs") spec.epochs = parse_number<int>(key, value);
    else if (field == "learning_rate") spec.learning_rate = parse_number<double>(key, value);
    else if (field == "dropout_rate") spec.dropout_rate = parse_number<double>(key, value);
    else if (field == "iterations") spec.iterations = parse_number<int>(key, value);
    else fail("bad_config", "unknown key '" + key + "'");
}

}  // namespace detail

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
/// Per-model settings use `<MODEL>.<field>`, decomposition settings
/// `na_memd.<field>`. A relative `input` or `output_dir` is resolved against
/// `base_dir`.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig cfg;
    std::vector<std::string> model_names{"LR", "BPNN", "ELM", "RVFL", "SeasonalNaive"};
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            detail::fail("bad_config", "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key == "input") cfg.input = value;
        else if (key == "target_channel") cfg.target_channel = value;
        else if (key == "source_channels") cfg.source_channels = detail::split_list(value);
        else if (key == "train_fraction") cfg.train_fraction = detail::parse_number<double>(key, value);
        else if (key == "horizons") {
            cfg.horizons.clear();
            for (const auto& h : detail::split_list(value)) cfg.horizons.push_back(detail::parse_number<int>(key, h));
        } else if (key == "models") model_names = detail::split_list(value);
        else if (key == "lag_count") cfg.lag_count = detail::parse_number<int>(key, value);
        else if (key == "leakage_mode") {
            if (value == "whole-series") cfg.leakage_mode = LeakageMode::whole_series;
            else if (value == "train-only") cfg.leakage_mode = LeakageMode::train_only;
            else detail::fail("bad_config", "leakage_mode must be whole-series or train-only");
        } else if (key == "grouping") {
            if (value == "none") cfg.grouping = Grouping::none;
            else if (value == "highfreq-under-12m") cfg.grouping = Grouping::highfreq_under_12m;
            else detail::fail("bad_config", "grouping must be none or highfreq-under-12m");
        } else if (key == "output_dir") cfg.output_dir = value;
        else if (key == "seed") cfg.seed = detail::parse_number<std::uint64_t>(key, value);
        else if (key == "na_memd.noise_channels") cfg.na_memd.noise_channels = detail::parse_number<int>(key, value);
        else if (key == "na_memd.noise_amplitude") cfg.na_memd.noise_amplitude = detail::parse_number<double>(key, value);
        else if (key == "na_memd.directions") cfg.na_memd.directions = detail::parse_number<int>(key, value);
        else if (key == "na_memd.rng_seed") cfg.na_memd_seed = detail::parse_number<std::uint64_t>(key, value);
        else if (key == "na_memd.max_sifts") cfg.na_memd.sift.max_sifts = detail::parse_number<int>(key, value);
        else if (key == "na_memd.s_number") cfg.na_memd.sift.s_number = detail::parse_number<int>(key, value);
        else if (key.find('.') != std::string::npos) overrides.emplace_back(key, value);
        else detail::fail("bad_config", "unknown key '" + key + "'");
    }
    for (const auto& name : model_names) cfg.models.push_back(ModelSpec::defaults(parse_model_kind(name)));
    for (const auto& [key, value] : overrides) {
        const auto dot = key.find('.');
        const auto kind = parse_model_kind(key.substr(0, dot));
        bool applied = false;
        for (auto& spec : cfg.models)
            if (spec.kind == kind) {
                detail::apply_model_override(spec, key.substr(dot + 1), key, value);
                applied = true;
            }
        if (!applied) detail::fail("bad_config", "key '" + key + "' names a model that is not in `models`");
    }
    if (!base_dir.empty()) {
        if (!cfg.input.empty() && std::filesystem::path(cfg.input).is_relative()) cfg.input = (base_dir / cfg.input).string();
        if (std::filesystem::path(cfg.output_dir).is_relative()) cfg.output_dir = (base_dir / cfg.output_dir).string();
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) detail::fail("io_error", "cannot open config '" + path + "'");
    return parse_config(in, std::filesystem::path(path).parent_path());
}

/// Scaled data plus everything needed to forecast from it.
struct PreparedData {
    ExperimentConfig config;
    MultichannelSeries raw;      // target first, then sources
    MultichannelSeries scaled;   // min-max scaled
    NormalizationParams scaling;
    Eigen::Index n_train = 0;

    Eigen::Index length() const { return raw.length(); }
    Vector target_raw() const { return raw.values.col(0); }
    Vector target_scaled() const { return scaled.values.col(0); }
    double target_scale() const { return scaling.scale(0); }
    double target_offset() const { return scaling.min(0); }
};

/// Selects the configured channels and fits the scaling: on the whole series
/// in whole-series mode, on the training prefix in train-only mode.
inline PreparedData prepare(const ExperimentConfig& cfg, const MultichannelSeries& data) {
    cfg.validate();
    PreparedData p;
    p.config = cfg;
    std::vector<std::string> names{cfg.target_channel};
    names.insert(names.end(), cfg.source_channels.begin(), cfg.source_channels.end());
    p.raw = data.select(names);
    p.n_train = train_size(p.raw.length(), cfg.train_fraction);
    const int max_h = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());
    if (p.n_train < cfg.lag_count + max_h + 8)
        detail::fail("too_short", "training prefix of " + std::to_string(p.n_train) + " rows is too short for lag_count " +
                                      std::to_string(cfg.lag_count) + " at horizon " + std::to_string(max_h));
    if (p.raw.length() - p.n_train < 1) detail::fail("too_short", "test window is empty");
    if (cfg.leakage_mode == LeakageMode::whole_series) {
        std::tie(p.scaled, p.scaling) = min_max_normalize(p.raw);
    } else {
        p.scaling = min_max_normalize(p.raw.slice(0, p.n_train)).second;
        p.scaled = apply_normalization(p.raw, p.scaling);
    }
    return p;
}

inline PreparedData prepare(const ExperimentConfig& cfg) { return prepare(cfg, ingest_csv(cfg.input)); }

/// Target-channel components (scaled units) and the IMF-to-component map.
/// `groups[k]` lists the IMF indices summed into component k; the residue is
/// always the last component.
struct ComponentPlan {
    std::vector<std::vector<int>> groups;
    int imf_count = 0;

    std::size_t size() const { return groups.size() + 1; }

    std::vector<Vector> assemble(const ImfSet& modes) const {
        std::vector<Vector> out;
        for (const auto& g : groups) {
            Vector sum = Vector::Zero(modes.residue.size());
            for (int i : g)
                if (i < static_cast<int>(modes.imfs.size())) sum += modes.imfs[static_cast<std::size_t>(i)];
            out.push_back(std::move(sum));
        }
        // A prefix decomposition may carry more IMFs than the plan; extras
        // join the residue so the components still sum to the signal.
        Vector res = modes.residue;
        for (std::size_t i = static_cast<std::size_t>(imf_count); i < modes.imfs.size(); ++i) res += modes.imfs[i];
        out.push_back(std::move(res));
        return out;
    }
};

inline ComponentPlan make_plan(const ImfSet& modes, Grouping grouping) {
    ComponentPlan plan;
    plan.imf_count = static_cast<int>(modes.imfs.size());
    std::vector<int> fast;
    for (int i = 0; i < plan.imf_count; ++i) {
        if (grouping == Grouping::highfreq_under_12m && mean_period(modes.imfs[static_cast<std::size_t>(i)]) < 12.0)
            fast.push_back(i);
        else
            plan.groups.push_back({i});
    }
    if (!fast.empty()) plan.groups.insert(plan.groups.begin(), fast);
    return plan;
}

/// Decompositions used by the decomposed variant. In whole-series mode the
/// full series is decomposed once. In train-only mode the training prefix
/// is decomposed for fitting, and every forecast origin gets its own
/// decomposition of the data observed up to it.
class DecompositionContext {
public:
    explicit DecompositionContext(const PreparedData& data) : data_(&data) {
        const auto& cfg = data.config;
        na_cfg_ = cfg.na_memd;
        na_cfg_.rng_seed = cfg.decomposition_seed();
        const auto& base = cfg.leakage_mode == LeakageMode::whole_series ? data.scaled : data.scaled.slice(0, data.n_train);
        reference_ = na_memd(base, na_cfg_);
        plan_ = make_plan(reference_.channels.front(), cfg.grouping);
        full_components_ = plan_.assemble(reference_.channels.front());
        fit_components_ = full_components_;
        if (cfg.leakage_mode == LeakageMode::whole_series)
            for (auto& c : fit_components_) c.conservativeResize(data.n_train);
    }

    const ImfDecomposition& reference() const { return reference_; }
    const ComponentPlan& plan() const { return plan_; }

    /// Component histories used to train, each of length n_train.
    const std::vector<Vector>& training_components() const { return fit_components_; }

    /// Last `lag` values of every component as known at time index `origin`.
    std::vector<Vector> windows_at(Eigen::Index origin, int lag) {
        if (data_->config.leakage_mode == LeakageMode::whole_series) {
            std::vector<Vector> out;
            for (const auto& c : full_components_) out.push_back(c.segment(origin - lag + 1, lag));
            return out;
        }
        auto it = origin_cache_.find(origin);
        if (it == origin_cache_.end()) {
            std::vector<Vector> comps;
            if (origin + 1 == data_->n_train) {
                comps = fit_components_;
            } else {
                const auto prefix = na_memd(data_->scaled.slice(0, origin + 1), na_cfg_);
                comps = plan_.assemble(prefix.channels.front());
            }
            it = origin_cache_.emplace(origin, std::move(comps)).first;
        }
        std::vector<Vector> out;
        for (const auto& c : it->second) out.push_back(c.tail(lag));
        return out;
    }

private:
    const PreparedData* data_;
    NaMemdConfig na_cfg_;
    ImfDecomposition reference_;
    ComponentPlan plan_;
    std::vector<Vector> full_components_;
    std::vector<Vector> fit_components_;
    std::map<Eigen::Index, std::vector<Vector>> origin_cache_;
};

/// Seed of one grid cell, independent of evaluation order.
inline std::uint64_t cell_seed(std::uint64_t global, ModelKind kind, Variant variant, int horizon, int component = -1) {
    std::string key = std::string(to_string(kind)) + "/" + std::string(to_string(variant)) + "/h" + std::to_string(horizon);
    if (component >= 0) key += "/c" + std::to_string(component);
    return detail::mix_seed(global, detail::hash_key(key));
}

namespace detail {

inline ForecastReport finish_report(const PreparedData& data, ModelKind kind, Variant variant, int horizon,
                                    Vector forecasts) {
    const Eigen::Index T = data.length();
    const Eigen::Index n_test = T - data.n_train;
    const Vector y = data.target_raw();
    Vector actual = y.tail(n_test);
    auto r = score_report(kind, variant, horizon, std::move(forecasts), actual, previous_actuals(y(data.n_train - 1), actual));
    r.leakage_mode = std::string(to_string(data.config.leakage_mode));
    for (Eigen::Index t = data.n_train; t < T; ++t) r.dates.push_back(data.raw.date(t).str());
    return r;
}

inline Eigen::Index first_test_origin(const PreparedData& data, int horizon) {
    const Eigen::Index o = data.n_train - horizon;
    if (o + 1 < data.config.lag_count) fail("too_short", "not enough history for the first forecast window");
    return o;
}

}  // namespace detail

/// Direct strategy: one model per horizon trained on the scaled target, one
/// forecast per test point from the window ending `horizon` steps earlier.
inline ForecastReport run_single_forecast(const PreparedData& data, ModelSpec spec, int horizon) {
    const auto& cfg = data.config;
    spec.rng_seed = cell_seed(cfg.seed, spec.kind, Variant::single, horizon);
    const Vector y = data.target_scaled();
    const auto set = make_lag_matrix(y.head(data.n_train), cfg.lag_count, horizon);
    auto model = train(set, spec);
    detail::first_test_origin(data, horizon);
    const Eigen::Index n_test = data.length() - data.n_train;
    Vector f(n_test);
    for (Eigen::Index k = 0; k < n_test; ++k) {
        const Eigen::Index origin = data.n_train + k - horizon;
        f(k) = predict(model, y.segment(origin - cfg.lag_count + 1, cfg.lag_count)) * data.target_scale() +
               data.target_offset();
    }
    return detail::finish_report(data, spec.kind, Variant::single, horizon, std::move(f));
}

/// Forecasts every target component with its own model and sums the
/// component forecasts. Component forecasts are kept in original units; the
/// offset of the scaling rides on the residue.
inline ForecastReport run_decomposed_forecast(const PreparedData& data, DecompositionContext& ctx, ModelSpec spec,
                                              int horizon) {
    const auto& cfg = data.config;
    const auto& comps = ctx.training_components();
    const Eigen::Index n_test = data.length() - data.n_train;
    detail::first_test_origin(data, horizon);
    std::vector<TrainedModel> models;
    for (std::size_t c = 0; c < comps.size(); ++c) {
        auto s = spec;
        s.rng_seed = cell_seed(cfg.seed, spec.kind, Variant::decomposed, horizon, static_cast<int>(c));
        models.push_back(train(make_lag_matrix(comps[c], cfg.lag_count, horizon), s));
    }
    std::vector<Vector> parts(comps.size(), Vector(n_test));
    for (Eigen::Index k = 0; k < n_test; ++k) {
        const auto windows = ctx.windows_at(data.n_train + k - horizon, cfg.lag_count);
        for (std::size_t c = 0; c < comps.size(); ++c) {
            double v = predict(models[c], windows[c]) * data.target_scale();
            if (c + 1 == comps.size()) v += data.target_offset();
            parts[c](k) = v;
        }
    }
    Vector total = Vector::Zero(n_test);
    for (const auto& p : parts) total += p;
    auto r = detail::finish_report(data, spec.kind, Variant::decomposed, horizon, std::move(total));
    r.component_forecasts = std::move(parts);
    return r;
}

struct DiagnosticsRow {
    std::string channel;
    std::string component;  // IMF1..IMFn or Residual
    double mean_period = 0.0;
    std::optional<double> correlation;  // with the original channel; empty when undefined
};

struct RunArtifacts {
    ExperimentConfig config;
    ImfDecomposition decomposition;  // original units
    std::vector<ForecastReport> reports;
    std::vector<std::pair<ModelKind, DmTestResult>> dm_tests;
    std::vector<DiagnosticsRow> diagnostics;
    std::string decomposition_span;  // first and last date decomposed
};

/// Scales a decomposition of scaled data back to original units: IMFs are
/// multiplied by the channel range, the residue also gets the offset back.
inline ImfDecomposition to_original_units(const ImfDecomposition& d, const NormalizationParams& p) {
    ImfDecomposition out = d;
    for (std::size_t c = 0; c < out.channels.size(); ++c) {
        const auto idx = static_cast<Eigen::Index>(c);
        for (auto& imf : out.channels[c].imfs) imf *= p.scale(idx);
        out.channels[c].residue = out.channels[c].residue.array() * p.scale(idx) + p.min(idx);
    }
    return out;
}

inline std::vector<DiagnosticsRow> diagnostics_table(const ImfDecomposition& d) {
    std::vector<DiagnosticsRow> rows;
    for (std::size_t c = 0; c < d.channels.size(); ++c) {
        const auto& set = d.channels[c];
        const Vector original = set.reconstruct();
        auto row = [&](const std::string& name, const Vector& v) {
            DiagnosticsRow r{d.channel_names[c], name, mean_period(v), std::nullopt};
            try {
                r.correlation = pearson_correlation(v, original);
            } catch (const Error&) {
            }
            rows.push_back(std::move(r));
        };
        for (std::size_t i = 0; i < set.imfs.size(); ++i) row("IMF" + std::to_string(i + 1), set.imfs[i]);
        row("Residual", set.residue);
    }
    return rows;
}

/// Decomposed-variant versus single-variant DM test with the horizons pooled
/// into one sample, truncated at the largest horizon minus one.
inline DmTestResult pooled_dm_test(const std::vector<ForecastReport>& reports, ModelKind kind) {
    std::vector<double> y, a, b;
    int max_h = 1;
    for (const auto& dec : reports) {
        if (dec.model != kind || dec.variant != Variant::decomposed) continue;
        for (const auto& single : reports) {
            if (single.model != kind || single.variant != Variant::single || single.horizon != dec.horizon) continue;
            max_h = std::max(max_h, dec.horizon);
            for (Eigen::Index i = 0; i < dec.actuals.size(); ++i) {
                y.push_back(dec.actuals(i));
                a.push_back(dec.forecasts(i));
                b.push_back(single.forecasts(i));
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(y.size());
    return dm_test_lag(Eigen::Map<Vector>(y.data(), n), Eigen::Map<Vector>(a.data(), n), Eigen::Map<Vector>(b.data(), n),
                       max_h - 1);
}

inline RunArtifacts run_experiment(const PreparedData& data) {
    const auto& cfg = data.config;
    RunArtifacts art;
    art.config = cfg;
    DecompositionContext ctx(data);
    art.decomposition = to_original_units(ctx.reference(), data.scaling);
    art.diagnostics = diagnostics_table(art.decomposition);
    art.decomposition_span =
        art.decomposition.start.str() + "/" + art.decomposition.start.plus(static_cast<int>(art.decomposition.length()) - 1).str();
    for (const auto& spec : cfg.models) {
        for (int h : cfg.horizons) {
            for (auto variant : {Variant::single, Variant::decomposed}) {
                try {
                    art.reports.push_back(variant == Variant::single ? run_single_forecast(data, spec, h)
                                                                     : run_decomposed_forecast(data, ctx, spec, h));
                } catch (const Error& e) {
                    throw Error(e.code(), std::string(to_string(spec.kind)) + "/" + std::string(to_string(variant)) + "/h" +
                                              std::to_string(h) + ": " + e.what());
                }
            }
        }
        try {
            art.dm_tests.emplace_back(spec.kind, pooled_dm_test(art.reports, spec.kind));
        } catch (const Error& e) {
            throw Error(e.code(), std::string(to_string(spec.kind)) + "/dm_test: " + e.what());
        }
    }
    return art;
}

inline RunArtifacts run_experiment(const ExperimentConfig& cfg) { return run_experiment(prepare(cfg)); }

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : cfg.models)
        models.push_back({{"kind", std::string(to_string(m.kind))}, {"hidden_units", m.hidden_units},
                          {"epochs", m.epochs}, {"learning_rate", m.learning_rate},
                          {"dropout_rate", m.dropout_rate}, {"iterations", m.iterations}});
    return {{"target_channel", cfg.target_channel},
            {"source_channels", cfg.source_channels},
            {"train_fraction", cfg.train_fraction},
            {"horizons", cfg.horizons},
            {"lag_count", cfg.lag_count},
            {"leakage_mode", std::string(to_string(cfg.leakage_mode))},
            {"grouping", std::string(to_string(cfg.grouping))},
            {"seed", cfg.seed},
            {"models", models},
            {"na_memd",
             {{"noise_channels", cfg.na_memd.noise_channels},
              {"noise_amplitude", cfg.na_memd.noise_amplitude},
              {"directions", cfg.na_memd.directions},
              {"rng_seed", cfg.decomposition_seed()}}}};
}

inline nlohmann::json dm_tests_to_json(const RunArtifacts& art) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [kind, dm] : art.dm_tests) {
        auto j = dm_to_json(dm);
        j["model"] = std::string(to_string(kind));
        j["comparison"] = "decomposed_vs_single";
        j["pooling"] = "pooled_across_horizons";
        out.push_back(std::move(j));
    }
    return out;
}

inline nlohmann::json artifacts_to_json(const RunArtifacts& art) {
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& r : art.reports) reports.push_back(report_to_json(r));
    return {{"config", config_to_json(art.config)},
            {"imf_count", art.decomposition.imf_count},
            {"decomposition_span", art.decomposition_span},
            {"reports", reports},
            {"dm_tests", dm_tests_to_json(art)}};
}

}  // namespace namemd
