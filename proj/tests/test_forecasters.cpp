#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "gradcheck.hpp"
#include "namemd/forecasters.hpp"

using namespace namemd;

namespace {

SupervisedSet random_set(Eigen::Index n, int p, std::uint64_t seed, bool linear = false) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SupervisedSet s{Matrix(n, p), Vector(n), 1, p};
    for (Eigen::Index k = 0; k < s.inputs.size(); ++k) s.inputs.data()[k] = u(rng);
    for (Eigen::Index i = 0; i < n; ++i)
        s.targets(i) = linear ? 0.5 * s.inputs.row(i).sum() - 0.2 : std::sin(3.0 * s.inputs.row(i).sum()) + 0.1 * u(rng);
    return s;
}

double training_rmse(const TrainedModel& m, const SupervisedSet& s) {
    return detail::rms(predict_rows(m, s.inputs) - s.targets);
}

ModelSpec spec_of(ModelKind k, std::uint64_t seed, int hidden = -1, int iterations = -1) {
    auto s = ModelSpec::defaults(k);
    s.rng_seed = seed;
    if (hidden >= 0) s.hidden_units = hidden;
    if (iterations >= 0) s.iterations = iterations;
    return s;
}

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

LstmParams random_lstm(int hidden, std::uint64_t seed, double scale = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    auto p = LstmParams::zeros(hidden, 1);
    Vector theta(p.size());
    for (auto& v : theta) v = g(rng);
    p.unpack(theta);
    return p;
}

}  // namespace

TEST(LinearRegression, ExactFit) {
    auto s = random_set(40, 4, 1, true);
    auto m = train_lr(s);
    EXPECT_LT(training_rmse(m, s), 1e-9);
    EXPECT_FALSE(m.rank_deficient);
}

TEST(LinearRegression, ResidualOrthogonal) {
    auto s = random_set(80, 6, 2);
    auto m = train_lr(s);
    const Vector r = predict_rows(m, s.inputs) - s.targets;
    EXPECT_LT((detail::with_intercept(s.inputs).transpose() * r).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(LinearRegression, RecoversCoefficients) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    SupervisedSet s{Matrix(50, 2), Vector(50), 1, 2};
    for (Eigen::Index i = 0; i < 50; ++i) {
        s.inputs(i, 0) = g(rng);
        s.inputs(i, 1) = g(rng);
        s.targets(i) = 3.0 * s.inputs(i, 0) - 2.0 * s.inputs(i, 1) + 1.0;
    }
    const Matrix c = train_lr(s).param("coef");
    EXPECT_NEAR(c(0, 0), 3.0, 1e-8);
    EXPECT_NEAR(c(1, 0), -2.0, 1e-8);
    EXPECT_NEAR(c(2, 0), 1.0, 1e-8);
}

TEST(LinearRegression, RankDeficientFlagged) {
    auto s = random_set(30, 3, 4);
    s.inputs.col(2) = s.inputs.col(1);
    auto m = train_lr(s);
    EXPECT_TRUE(m.rank_deficient);
    // minimum norm splits the duplicated column evenly
    EXPECT_NEAR(m.param("coef")(1, 0), m.param("coef")(2, 0), 1e-9);
    EXPECT_EQ(code_of([] { train_lr(random_set(3, 3, 1)); }), "too_short");
}

TEST(Elm, NoWorseThanSingleDrawOracle) {
    auto s = random_set(60, 5, 6);
    const auto spec = spec_of(ModelKind::ELM, 42, 20, 30);
    auto m = train_elm(s, spec);
    double oracle = std::numeric_limits<double>::infinity();
    for (int r = 0; r < spec.iterations; ++r) {
        auto layer = draw_hidden_layer(5, 20, 42, r);
        const Matrix h = hidden_features(s.inputs, layer.weights, layer.bias);
        const Vector beta = h.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(s.targets);
        oracle = std::min(oracle, detail::rms(h * beta - s.targets));
    }
    EXPECT_LE(training_rmse(m, s), oracle + 1e-12);
}

TEST(Elm, InterpolatesWhenWide) {
    auto s = random_set(20, 4, 7);
    EXPECT_LT(training_rmse(train_elm(s, spec_of(ModelKind::ELM, 1, 64, 1)), s), 1e-6);
}

TEST(Elm, Deterministic) {
    auto s = random_set(40, 4, 8);
    const auto spec = spec_of(ModelKind::ELM, 5, 16, 10);
    EXPECT_EQ(predict_rows(train_elm(s, spec), s.inputs), predict_rows(train_elm(s, spec), s.inputs));
}

TEST(Rvfl, ZeroHiddenEqualsLr) {
    auto s = random_set(50, 4, 9);
    auto rv = train_rvfl(s, spec_of(ModelKind::RVFL, 1, 0));
    EXPECT_LT((predict_rows(rv, s.inputs) - predict_rows(train_lr(s), s.inputs)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Rvfl, NestedBelowElm) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto s = random_set(60, 5, 100 + seed);
        const auto e = train_elm(s, spec_of(ModelKind::ELM, seed, 16, 10));
        const auto r = train_rvfl(s, spec_of(ModelKind::RVFL, seed, 16, 10));
        EXPECT_LE(training_rmse(r, s), training_rmse(e, s) + 1e-12);
    }
}

TEST(Rvfl, DirectLinkRecoversLinearMap) {
    auto s = random_set(60, 2, 10, true);
    auto m = train_rvfl(s, spec_of(ModelKind::RVFL, 3, 3, 1));
    EXPECT_LT(training_rmse(m, s), 1e-9);
    const Matrix& beta = m.param("beta");
    EXPECT_LT(beta.topRows(3).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(beta(3, 0), 0.5, 1e-6);
    EXPECT_NEAR(beta(4, 0), 0.5, 1e-6);
    EXPECT_NEAR(beta(5, 0), -0.2, 1e-6);
}

TEST(Bpnn, GradientMatchesFiniteDifferences) {
    auto s = random_set(5, 3, 11);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    BpnnParams p{Matrix(3, 7), Vector(7), Vector(7), 0.3};
    for (auto* m : {&p.w1}) for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] = g(rng);
    for (auto* v : {&p.b1, &p.w2}) for (auto& x : *v) x = g(rng);
    auto pack = [](const BpnnParams& q) {
        Vector t(q.w1.size() + 2 * q.b1.size() + 1);
        t << Eigen::Map<const Vector>(q.w1.data(), q.w1.size()), q.b1, q.w2, q.b2;
        return t;
    };
    auto unpack = [&](const Vector& t) {
        BpnnParams q = p;
        Eigen::Map<Vector>(q.w1.data(), q.w1.size()) = t.head(q.w1.size());
        q.b1 = t.segment(q.w1.size(), 7);
        q.w2 = t.segment(q.w1.size() + 7, 7);
        q.b2 = t(t.size() - 1);
        return q;
    };
    const auto lg = bpnn_loss_and_gradient(p, s.inputs, s.targets);
    const double err = gradcheck::max_relative_error(
        [&](const Vector& t) { return bpnn_loss_and_gradient(unpack(t), s.inputs, s.targets).loss; }, pack(p),
        pack(lg.grad));
    EXPECT_LT(err, 1e-4);
}

TEST(Bpnn, LossNonIncreasingOnConstantTarget) {
    auto s = random_set(30, 4, 13);
    s.targets.setConstant(0.7);
    auto spec = spec_of(ModelKind::BPNN, 3);
    auto m = train_bpnn(s, spec);
    ASSERT_EQ(m.loss_history.size(), 11u);
    for (std::size_t i = 1; i < m.loss_history.size(); ++i) EXPECT_LE(m.loss_history[i], m.loss_history[i - 1]);
}

TEST(Bpnn, DeterministicAndDivergence) {
    auto s = random_set(30, 4, 14);
    auto spec = spec_of(ModelKind::BPNN, 9);
    EXPECT_EQ(train_bpnn(s, spec).param("w1"), train_bpnn(s, spec).param("w1"));
    spec.learning_rate = 1e300;
    try {
        train_bpnn(s, spec);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "divergence");
        EXPECT_NE(std::string(e.what()).find("learning rate"), std::string::npos);
    }
}

TEST(LstmCell, ZeroParameters) {
    const auto p = LstmParams::zeros(4, 1);
    Vector x(1);
    x << 0.8;
    auto st = lstm_cell_step(x, LstmState::zeros(4), p);
    EXPECT_EQ(st.cell, Vector::Zero(4));
    EXPECT_EQ(st.hidden, Vector::Zero(4));
    // gates are sigma(0) = 0.5, so a carried cell halves
    LstmState prev{Vector::Constant(4, 2.0), Vector::Zero(4)};
    st = lstm_cell_step(x, prev, p);
    EXPECT_EQ(st.cell, Vector::Constant(4, 1.0));
    EXPECT_NEAR(st.hidden(0), 0.5 * std::tanh(1.0), 1e-15);
}

TEST(LstmCell, SaturatedForgetGateKeepsMemory) {
    auto p = random_lstm(3, 15);
    p.b_forget.setConstant(50.0);
    Vector x(1);
    x << 0.4;
    LstmState prev{Vector::Random(3), Vector::Random(3)};
    auto st = lstm_cell_step(x, prev, p);
    Vector z(4);
    z << prev.hidden, x;
    const Eigen::ArrayXd i = 1.0 / (1.0 + (-(p.w_input * z + p.b_input).array()).exp());
    const Eigen::ArrayXd g = (p.w_cell * z + p.b_cell).array().tanh();
    EXPECT_LT((st.cell.array() - (prev.cell.array() + i * g)).abs().maxCoeff(), 1e-12);
}

TEST(LstmCell, HiddenBoundedAndInputChecked) {
    auto p = random_lstm(8, 16, 3.0);
    LstmState st = LstmState::zeros(8);
    Vector x(1);
    for (int t = 0; t < 50; ++t) {
        x << std::sin(t) * 5.0;
        st = lstm_cell_step(x, st, p);
        EXPECT_LT(st.hidden.cwiseAbs().maxCoeff(), 1.0);
    }
    x << std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(code_of([&] { lstm_cell_step(x, st, p); }), "non_finite");
    EXPECT_EQ(code_of([&] { lstm_cell_step(Vector::Zero(2), st, p); }), "dimension_mismatch");
}

TEST(LstmForecast, ReadOut) {
    auto p = LstmParams::zeros(5, 1);
    p.b_fc = 0.37;
    EXPECT_EQ(lstm_forecast(Vector::Random(6), p, 6), 0.37);
    auto q = random_lstm(5, 17);
    const Vector w = Vector::Random(6);
    const double y1 = lstm_forecast(w, q, 6);
    EXPECT_EQ(y1, lstm_forecast(w, q, 6));
    q.w_fc *= 2.0;
    EXPECT_NEAR(lstm_forecast(w, q, 6) - q.b_fc, 2.0 * (y1 - q.b_fc), 1e-14);
    EXPECT_EQ(code_of([&] { lstm_forecast(Vector::Zero(5), q, 6); }), "bad_window");
}

TEST(Lstm, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto s = random_set(6, 4, 200 + seed);
        auto p = random_lstm(3, 300 + seed);
        const auto lg = lstm_loss_and_gradient(p, s.inputs, s.targets);
        auto loss = [&](const Vector& t) {
            auto q = p;
            q.unpack(t);
            return lstm_loss_and_gradient(q, s.inputs, s.targets).loss;
        };
        EXPECT_LT(gradcheck::max_relative_error(loss, p.pack(), lg.grad.pack()), 1e-4);
    }
}

TEST(Lstm, LearnsSineWindows) {
    Vector y(80);
    for (Eigen::Index t = 0; t < 80; ++t) y(t) = 0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * t / 12.0);
    auto s = make_lag_matrix(y, 6, 1);
    auto spec = ModelSpec::defaults(ModelKind::LSTM);
    spec.hidden_units = 8;
    spec.dropout_rate = 0.0;
    spec.rng_seed = 4;
    auto m = train_lstm(s, spec);
    ASSERT_EQ(m.loss_history.size(), 300u);
    const double final_loss = std::pow(training_rmse(m, s), 2);
    EXPECT_LE(final_loss, 0.5 * m.loss_history.front());
}

TEST(Lstm, PredictionIgnoresDropoutSeed) {
    auto s = random_set(20, 5, 18);
    auto spec = ModelSpec::defaults(ModelKind::LSTM);
    spec.hidden_units = 4;
    spec.epochs = 5;
    auto m = train_lstm(s, spec);
    auto other = m;
    other.spec.rng_seed = 999;
    other.spec.dropout_rate = 0.9;
    EXPECT_EQ(predict_rows(m, s.inputs), predict_rows(other, s.inputs));
    EXPECT_EQ(code_of([] { train_lstm(random_set(5, 3, 1), ModelSpec::defaults(ModelKind::LSTM)); }), "too_short");
}

TEST(Lstm, Divergence) {
    auto s = random_set(20, 3, 19);
    s.targets *= 1e200;
    auto spec = ModelSpec::defaults(ModelKind::LSTM);
    spec.hidden_units = 2;
    spec.epochs = 3;
    EXPECT_EQ(code_of([&] { train_lstm(s, spec); }), "divergence");
}

TEST(SeasonalNaive, Indexing) {
    Vector y = Vector::LinSpaced(24, 1, 24);
    EXPECT_EQ(seasonal_naive_forecast(y, 1), 13.0);
    EXPECT_EQ(seasonal_naive_forecast(Vector::Constant(30, 4.2), 3), 4.2);
    EXPECT_EQ(code_of([] { seasonal_naive_forecast(Vector::Zero(12), 1); }), "too_short");
}

TEST(SeasonalNaive, PeriodicSeriesIsExact) {
    Vector y(60);
    for (Eigen::Index t = 0; t < 60; ++t) y(t) = 10.0 + 0.5 * static_cast<double>(t % 12);
    for (int h : {1, 2, 3}) {
        auto set = make_lag_matrix(y, 12, h);
        auto m = train(set, ModelSpec::defaults(ModelKind::SeasonalNaive));
        EXPECT_EQ(predict_rows(m, set.inputs), set.targets);
        EXPECT_EQ(predict(m, y.tail(12)), seasonal_naive_forecast(y, h));
    }
}

TEST(Serialization, RoundTripIsBitExact) {
    auto s = random_set(40, 12, 20);
    for (auto kind : {ModelKind::LR, ModelKind::BPNN, ModelKind::ELM, ModelKind::RVFL, ModelKind::LSTM,
                      ModelKind::SeasonalNaive}) {
        auto spec = spec_of(kind, 21);
        if (kind == ModelKind::LSTM) {
            spec.hidden_units = 4;
            spec.epochs = 3;
        }
        auto m = train(s, spec);
        m.normalization = NormalizationParams{Vector::Constant(1, 0.25), Vector::Constant(1, 8.5)};
        const auto text = model_to_json(m).dump();
        auto back = model_from_json(nlohmann::json::parse(text));
        EXPECT_EQ(back.spec.kind, kind);
        EXPECT_EQ(back.normalization->max(0), 8.5);
        const Vector a = predict_rows(m, s.inputs), b = predict_rows(back, s.inputs);
        EXPECT_EQ(a, b) << to_string(kind);
        EXPECT_TRUE(a.allFinite());
    }
    EXPECT_EQ(code_of([] { model_from_json(nlohmann::json::parse("{\"kind\":\"LR\"}")); }), "bad_model");
}

TEST(Models, KindNames) {
    EXPECT_EQ(parse_model_kind("RVFL"), ModelKind::RVFL);
    EXPECT_EQ(parse_model_kind("SNaive"), ModelKind::SeasonalNaive);
    EXPECT_EQ(code_of([] { parse_model_kind("SVR"); }), "unknown_model");
    EXPECT_EQ(ModelSpec::defaults(ModelKind::BPNN).hidden_units, 7);
    EXPECT_EQ(ModelSpec::defaults(ModelKind::BPNN).iterations, 10);
    EXPECT_EQ(ModelSpec::defaults(ModelKind::LSTM).epochs, 300);
    EXPECT_EQ(ModelSpec::defaults(ModelKind::LSTM).dropout_rate, 0.5);
    EXPECT_EQ(ModelSpec::defaults(ModelKind::ELM).iterations, 100);
}
