#pragma once

// Linear regression, randomized single-hidden-layer networks (ELM, RVFL), a
// small backprop network, the LSTM and a seasonal-naive baseline behind one
// train/predict interface.

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "namemd/error.hpp"
#include "namemd/lstm.hpp"
#include "namemd/model.hpp"
#include "namemd/series.hpp"

namespace namemd {

namespace detail {

inline Matrix with_intercept(const Matrix& x) {
    Matrix d(x.rows(), x.cols() + 1);
    d << x, Vector::Ones(x.rows());
    return d;
}

inline double rms(const Vector& r) { return std::sqrt(r.squaredNorm() / static_cast<double>(r.size())); }

struct LeastSquares {
    Vector coef;
    bool rank_deficient = false;
};

/// Minimum-norm least squares through a complete orthogonal decomposition.
inline LeastSquares least_squares(const Matrix& a, const Vector& y) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    return {cod.solve(y), cod.rank() < std::min(a.rows(), a.cols())};
}

inline void require_rows(const SupervisedSet& data, Eigen::Index min_rows, const char* who) {
    if (data.rows() < min_rows)
        fail("too_short", std::string(who) + " needs at least " + std::to_string(min_rows) + " training rows");
}

}  // namespace detail

/// Ordinary least squares with an intercept. `coef` holds the p slopes then
/// the intercept.
inline TrainedModel train_lr(const SupervisedSet& data) {
    if (data.rows() <= data.inputs.cols())
        detail::fail("too_short", "LR needs more rows than lag columns");
    auto ls = detail::least_squares(detail::with_intercept(data.inputs), data.targets);
    TrainedModel m{ModelSpec::defaults(ModelKind::LR), data.lag_count, data.horizon};
    m.params["coef"] = ls.coef;
    m.rank_deficient = ls.rank_deficient;
    return m;
}

struct HiddenLayer {
    Matrix weights;  // p x L
    Vector bias;     // L
};

/// Gaussian input weights and biases for one restart.
inline HiddenLayer draw_hidden_layer(Eigen::Index inputs, int hidden, std::uint64_t seed, int restart) {
    std::mt19937_64 rng(detail::mix_seed(seed, static_cast<std::uint64_t>(restart)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    HiddenLayer h{Matrix(inputs, hidden), Vector(hidden)};
    for (Eigen::Index k = 0; k < h.weights.size(); ++k) h.weights.data()[k] = gauss(rng);
    for (Eigen::Index k = 0; k < hidden; ++k) h.bias(k) = gauss(rng);
    return h;
}

inline Matrix hidden_features(const Matrix& x, const Matrix& weights, const Vector& bias) {
    Matrix a = x * weights;
    a.rowwise() += bias.transpose();
    return a.unaryExpr([](double v) { return detail::sigmoid(v); });
}

/// Output-layer design: hidden activations, plus the raw inputs and a
/// constant column when `direct_link` is set.
inline Matrix randomized_design(const Matrix& x, const Matrix& weights, const Vector& bias, bool direct_link) {
    Matrix h = hidden_features(x, weights, bias);
    if (!direct_link) return h;
    Matrix d(x.rows(), h.cols() + x.cols() + 1);
    d << h, x, Vector::Ones(x.rows());
    return d;
}

namespace detail {

inline TrainedModel train_randomized(const SupervisedSet& data, const ModelSpec& spec, bool direct_link) {
    require_rows(data, 2, direct_link ? "RVFL" : "ELM");
    require(spec.hidden_units >= 0 && (direct_link || spec.hidden_units >= 1), "bad_argument",
            "hidden_units must be positive");
    const int restarts = std::max(1, spec.iterations);
    TrainedModel best{spec, data.lag_count, data.horizon};
    double best_rmse = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        auto layer = draw_hidden_layer(data.inputs.cols(), spec.hidden_units, spec.rng_seed, r);
        const Matrix design = randomized_design(data.inputs, layer.weights, layer.bias, direct_link);
        auto ls = least_squares(design, data.targets);
        const double fit = rms(design * ls.coef - data.targets);
        if (fit < best_rmse) {
            best_rmse = fit;
            best.params["w_in"] = std::move(layer.weights);
            best.params["b_in"] = std::move(layer.bias);
            best.params["beta"] = std::move(ls.coef);
            best.rank_deficient = ls.rank_deficient;
        }
        if (spec.hidden_units == 0) break;  // nothing random to restart
    }
    require(std::isfinite(best_rmse), "divergence", "randomized network produced a non-finite fit");
    best.loss_history.push_back(best_rmse * best_rmse);
    return best;
}

}  // namespace detail

/// `iterations` random restarts; the restart with the lowest training RMSE
/// wins (ties keep the earlier one).
inline TrainedModel train_elm(const SupervisedSet& data, const ModelSpec& spec) {
    return detail::train_randomized(data, spec, false);
}

inline TrainedModel train_rvfl(const SupervisedSet& data, const ModelSpec& spec) {
    return detail::train_randomized(data, spec, true);
}

struct BpnnParams {
    Matrix w1;  // p x H
    Vector b1;  // H
    Vector w2;  // H
    double b2 = 0.0;
};

struct BpnnLossGrad {
    double loss = 0.0;
    BpnnParams grad;
};

/// Mean squared error of the sigmoid-hidden, linear-output network and its
/// gradient.
inline BpnnLossGrad bpnn_loss_and_gradient(const BpnnParams& p, const Matrix& x, const Vector& y) {
    const auto n = static_cast<double>(x.rows());
    const Matrix a = hidden_features(x, p.w1, p.b1);
    const Vector err = (a * p.w2).array() + p.b2 - y.array();
    BpnnLossGrad out;
    out.loss = err.squaredNorm() / n;
    const Vector dy = 2.0 * err / n;
    out.grad.w2 = a.transpose() * dy;
    out.grad.b2 = dy.sum();
    const Matrix dz = ((dy * p.w2.transpose()).array() * a.array() * (1.0 - a.array())).matrix();
    out.grad.w1 = x.transpose() * dz;
    out.grad.b1 = dz.colwise().sum().transpose();
    return out;
}

inline double bpnn_predict(const BpnnParams& p, const Eigen::Ref<const Vector>& window) {
    const Vector a = (p.w1.transpose() * window + p.b1).unaryExpr([](double v) { return detail::sigmoid(v); });
    return p.w2.dot(a) + p.b2;
}

/// Full-batch gradient descent for at most `iterations` steps. The loss
/// history holds the initial loss followed by the loss after every step.
inline TrainedModel train_bpnn(const SupervisedSet& data, const ModelSpec& spec) {
    detail::require_rows(data, 2, "BPNN");
    detail::require(spec.hidden_units >= 1, "bad_argument", "BPNN needs hidden_units >= 1");
    const Eigen::Index p = data.inputs.cols();
    const int H = spec.hidden_units;
    std::mt19937_64 rng(spec.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    BpnnParams w{Matrix(p, H), Vector(H), Vector(H), data.targets.mean()};
    const double s1 = 1.0 / std::sqrt(static_cast<double>(p));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(H));
    for (Eigen::Index k = 0; k < w.w1.size(); ++k) w.w1.data()[k] = s1 * gauss(rng);
    for (Eigen::Index k = 0; k < H; ++k) w.b1(k) = gauss(rng);
    for (Eigen::Index k = 0; k < H; ++k) w.w2(k) = s2 * gauss(rng);

    TrainedModel m{spec, data.lag_count, data.horizon};
    auto diverged = [&] {
        detail::fail("divergence", "BPNN training diverged at learning rate " + std::to_string(spec.learning_rate));
    };
    for (int it = 0;; ++it) {
        auto lg = bpnn_loss_and_gradient(w, data.inputs, data.targets);
        if (!std::isfinite(lg.loss)) diverged();
        m.loss_history.push_back(lg.loss);
        if (it >= spec.iterations) break;
        w.w1 -= spec.learning_rate * lg.grad.w1;
        w.b1 -= spec.learning_rate * lg.grad.b1;
        w.w2 -= spec.learning_rate * lg.grad.w2;
        w.b2 -= spec.learning_rate * lg.grad.b2;
    }
    m.params["w1"] = w.w1;
    m.params["b1"] = w.b1;
    m.params["w2"] = w.w2;
    m.params["b2"] = Matrix::Constant(1, 1, w.b2);
    return m;
}

inline BpnnParams bpnn_params_from(const TrainedModel& m) {
    return {m.param("w1"), m.param("b1"), m.param("w2"), m.param("b2")(0, 0)};
}

/// Value twelve months before the forecast target.
inline double seasonal_naive_forecast(const Eigen::Ref<const Vector>& series, int horizon) {
    detail::require(horizon >= 1, "bad_argument", "horizon must be >= 1");
    const Eigen::Index T = series.size();
    if (T < 12 + horizon) detail::fail("too_short", "seasonal naive needs at least 12 + horizon observations");
    return series(T + horizon - 13);
}

inline TrainedModel train_seasonal_naive(const SupervisedSet& data) {
    if (data.lag_count + data.horizon < 13)
        detail::fail("too_short", "seasonal naive needs lag_count + horizon >= 13");
    return {ModelSpec::defaults(ModelKind::SeasonalNaive), data.lag_count, data.horizon};
}

inline TrainedModel train(const SupervisedSet& data, const ModelSpec& spec) {
    TrainedModel m;
    switch (spec.kind) {
        case ModelKind::LR: m = train_lr(data); break;
        case ModelKind::BPNN: m = train_bpnn(data, spec); break;
        case ModelKind::ELM: m = train_elm(data, spec); break;
        case ModelKind::RVFL: m = train_rvfl(data, spec); break;
        case ModelKind::LSTM: m = train_lstm(data, spec); break;
        case ModelKind::SeasonalNaive: m = train_seasonal_naive(data); break;
    }
    m.spec = spec;
    return m;
}

/// One-step prediction from a window of the last `lag_count` values.
inline double predict(const TrainedModel& m, const Eigen::Ref<const Vector>& window) {
    if (window.size() != m.lag_count)
        detail::fail("bad_window", "window has " + std::to_string(window.size()) + " values, model expects " +
                                       std::to_string(m.lag_count));
    switch (m.spec.kind) {
        case ModelKind::LR: {
            const Matrix& c = m.param("coef");
            return c.col(0).head(m.lag_count).dot(window) + c(m.lag_count, 0);
        }
        case ModelKind::BPNN: return bpnn_predict(bpnn_params_from(m), window);
        case ModelKind::ELM:
        case ModelKind::RVFL: {
            const bool link = m.spec.kind == ModelKind::RVFL;
            const Matrix row = randomized_design(window.transpose(), m.param("w_in"), m.param("b_in"), link);
            return (row * m.param("beta"))(0, 0);
        }
        case ModelKind::LSTM: return lstm_forecast(window, lstm_params_from(m), m.lag_count);
        case ModelKind::SeasonalNaive: return window(m.lag_count + m.horizon - 13);
    }
    detail::fail("bad_model", "unknown model kind");
}

inline Vector predict_rows(const TrainedModel& m, const Matrix& windows) {
    Vector out(windows.rows());
    for (Eigen::Index i = 0; i < windows.rows(); ++i) out(i) = predict(m, windows.row(i).transpose());
    return out;
}

// Serialization. Doubles are written in shortest round-trip form, so a loaded
// model predicts bit-identically.

inline nlohmann::json matrix_to_json(const Matrix& a) {
    nlohmann::json j{{"rows", a.rows()}, {"cols", a.cols()}};
    auto& data = j["data"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) data.push_back(a(r, c));
    return j;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    detail::require(data.size() == static_cast<std::size_t>(rows * cols), "bad_model", "matrix payload size mismatch");
    Matrix a(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = data[k++].get<double>();
    return a;
}

inline nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json j;
    j["kind"] = std::string(to_string(m.spec.kind));
    j["spec"] = {{"hidden_units", m.spec.hidden_units}, {"epochs", m.spec.epochs},
                 {"learning_rate", m.spec.learning_rate}, {"dropout_rate", m.spec.dropout_rate},
                 {"iterations", m.spec.iterations}, {"rng_seed", m.spec.rng_seed}};
    j["lag_count"] = m.lag_count;
    j["horizon"] = m.horizon;
    j["rank_deficient"] = m.rank_deficient;
    j["loss_history"] = m.loss_history;
    auto& params = j["params"] = nlohmann::json::object();
    for (const auto& [name, value] : m.params) params[name] = matrix_to_json(value);
    if (m.normalization) {
        j["normalization"] = {{"min", matrix_to_json(m.normalization->min)},
                              {"max", matrix_to_json(m.normalization->max)}};
    }
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        TrainedModel m;
        const auto& s = j.at("spec");
        m.spec.kind = parse_model_kind(j.at("kind").get<std::string>());
        m.spec.hidden_units = s.at("hidden_units").get<int>();
        m.spec.epochs = s.at("epochs").get<int>();
        m.spec.learning_rate = s.at("learning_rate").get<double>();
        m.spec.dropout_rate = s.at("dropout_rate").get<double>();
        m.spec.iterations = s.at("iterations").get<int>();
        m.spec.rng_seed = s.at("rng_seed").get<std::uint64_t>();
        m.lag_count = j.at("lag_count").get<int>();
        m.horizon = j.at("horizon").get<int>();
        m.rank_deficient = j.at("rank_deficient").get<bool>();
        m.loss_history = j.at("loss_history").get<std::vector<double>>();
        for (const auto& [name, value] : j.at("params").items()) m.params[name] = matrix_from_json(value);
        if (j.contains("normalization")) {
            const auto& n = j["normalization"];
            m.normalization = NormalizationParams{matrix_from_json(n.at("min")), matrix_from_json(n.at("max"))};
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        detail::fail("bad_model", std::string("malformed model: ") + e.what());
    }
}

}  // namespace namemd
