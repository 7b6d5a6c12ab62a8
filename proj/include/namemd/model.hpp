#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "namemd/error.hpp"
#include "namemd/series.hpp"

namespace namemd {

enum class ModelKind { LR, BPNN, ELM, RVFL, LSTM, SeasonalNaive };

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::LR: return "LR";
        case ModelKind::BPNN: return "BPNN";
        case ModelKind::ELM: return "ELM";
        case ModelKind::RVFL: return "RVFL";
        case ModelKind::LSTM: return "LSTM";
        case ModelKind::SeasonalNaive: return "SeasonalNaive";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
    for (auto k : {ModelKind::LR, ModelKind::BPNN, ModelKind::ELM, ModelKind::RVFL, ModelKind::LSTM,
                   ModelKind::SeasonalNaive})
        if (s == to_string(k)) return k;
    if (s == "SNaive" || s == "seasonal_naive") return ModelKind::SeasonalNaive;
    detail::fail("unknown_model", "unknown model kind '" + std::string(s) + "'");
}

/// Model hyperparameters. `defaults(kind)` gives the reference settings.
struct ModelSpec {
    ModelKind kind = ModelKind::LR;
    int hidden_units = 0;
    int epochs = 0;
    double learning_rate = 0.0;
    double dropout_rate = 0.0;
    int iterations = 0;
    std::uint64_t rng_seed = 0;

    static ModelSpec defaults(ModelKind kind) {
        ModelSpec s;
        s.kind = kind;
        switch (kind) {
            case ModelKind::BPNN:
                s.hidden_units = 7;
                s.iterations = 10;
                s.learning_rate = 0.01;
                break;
            case ModelKind::ELM:
            case ModelKind::RVFL:
                s.hidden_units = 64;
                s.iterations = 100;
                break;
            case ModelKind::LSTM:
                s.hidden_units = 64;
                s.epochs = 300;
                s.learning_rate = 0.01;
                s.dropout_rate = 0.5;
                break;
            case ModelKind::LR:
            case ModelKind::SeasonalNaive:
                break;
        }
        return s;
    }
};

/// Output of any trainer. Parameters are stored by name so every model kind
/// shares one serialization path.
struct TrainedModel {
    ModelSpec spec;
    int lag_count = 0;
    int horizon = 1;
    std::map<std::string, Matrix> params;
    bool rank_deficient = false;
    std::vector<double> loss_history;
    std::optional<NormalizationParams> normalization;

    const Matrix& param(const std::string& name) const {
        auto it = params.find(name);
        if (it == params.end()) detail::fail("bad_model", "model has no parameter '" + name + "'");
        return it->second;
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

/// FNV-1a, stable across platforms (std::hash is not).
inline std::uint64_t hash_key(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail
}  // namespace namemd
