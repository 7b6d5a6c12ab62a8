#pragma once

// Single-layer LSTM regressor: gate equations, a fully connected read-out on
// the last hidden state, full backpropagation through time and Adam.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "namemd/error.hpp"
#include "namemd/model.hpp"
#include "namemd/series.hpp"

namespace namemd {

struct LstmState {
    Vector cell;    // C_t
    Vector hidden;  // h_t

    static LstmState zeros(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }
};

/// Gate weights act on the concatenation [h_{t-1}, x_t], so each is
/// hidden x (hidden + input).
struct LstmParams {
    Matrix w_forget, w_input, w_cell, w_output;
    Vector b_forget, b_input, b_cell, b_output;
    Vector w_fc;  // read-out weights, length hidden
    double b_fc = 0.0;

    Eigen::Index hidden() const { return w_forget.rows(); }
    Eigen::Index inputs() const { return w_forget.cols() - w_forget.rows(); }

    static LstmParams zeros(Eigen::Index hidden, Eigen::Index inputs) {
        const Eigen::Index cols = hidden + inputs;
        LstmParams p;
        p.w_forget = p.w_input = p.w_cell = p.w_output = Matrix::Zero(hidden, cols);
        p.b_forget = p.b_input = p.b_cell = p.b_output = Vector::Zero(hidden);
        p.w_fc = Vector::Zero(hidden);
        return p;
    }

    Eigen::Index size() const { return 4 * w_forget.size() + 4 * hidden() + hidden() + 1; }

    /// Flat view used by the optimiser and by finite-difference checks.
    Vector pack() const {
        Vector v(size());
        Eigen::Index o = 0;
        auto put = [&](const auto& m) {
            v.segment(o, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
            o += m.size();
        };
        put(w_forget), put(w_input), put(w_cell), put(w_output);
        put(b_forget), put(b_input), put(b_cell), put(b_output);
        put(w_fc);
        v(o) = b_fc;
        return v;
    }

    void unpack(const Vector& v) {
        detail::require(v.size() == size(), "bad_model", "LSTM parameter vector has the wrong length");
        Eigen::Index o = 0;
        auto take = [&](auto& m) {
            Eigen::Map<Vector>(m.data(), m.size()) = v.segment(o, m.size());
            o += m.size();
        };
        take(w_forget), take(w_input), take(w_cell), take(w_output);
        take(b_forget), take(b_input), take(b_cell), take(b_output);
        take(w_fc);
        b_fc = v(o);
    }
};

namespace detail {

inline Eigen::ArrayXXd sigmoid_array(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

}  // namespace detail

inline LstmState lstm_cell_step(const Eigen::Ref<const Vector>& x, const LstmState& prev, const LstmParams& p) {
    detail::require(x.size() == p.inputs() && prev.hidden.size() == p.hidden() && prev.cell.size() == p.hidden(),
                    "dimension_mismatch", "LSTM step dimensions are inconsistent");
    if (!x.allFinite()) detail::fail("non_finite", "LSTM input is not finite");
    Vector z(p.hidden() + p.inputs());
    z << prev.hidden, x;
    const Eigen::ArrayXd f = detail::sigmoid_array((p.w_forget * z + p.b_forget).array());
    const Eigen::ArrayXd i = detail::sigmoid_array((p.w_input * z + p.b_input).array());
    const Eigen::ArrayXd g = (p.w_cell * z + p.b_cell).array().tanh();
    const Eigen::ArrayXd o = detail::sigmoid_array((p.w_output * z + p.b_output).array());
    LstmState next;
    next.cell = (f * prev.cell.array() + i * g).matrix();
    next.hidden = (o * next.cell.array().tanh()).matrix();
    return next;
}

/// Runs the window through the cell one scalar per step and reads out the
/// last hidden state.
inline double lstm_forecast(const Eigen::Ref<const Vector>& window, const LstmParams& p, Eigen::Index lag_count) {
    if (window.size() != lag_count)
        detail::fail("bad_window", "LSTM window has " + std::to_string(window.size()) + " values, expected " +
                                       std::to_string(lag_count));
    auto state = LstmState::zeros(p.hidden());
    Vector x(1);
    for (Eigen::Index t = 0; t < window.size(); ++t) {
        x(0) = window(t);
        state = lstm_cell_step(x, state, p);
    }
    return p.w_fc.dot(state.hidden) + p.b_fc;
}

struct LstmLossGrad {
    double loss = 0.0;
    LstmParams grad;
};

/// Mean squared error over all rows and its exact gradient. Rows are
/// processed as one batch; `inputs` is N x window with one scalar per step.
inline LstmLossGrad lstm_loss_and_gradient(const LstmParams& p, const Matrix& inputs, const Vector& targets) {
    using Arr = Eigen::ArrayXXd;
    const Eigen::Index H = p.hidden();
    const Eigen::Index N = inputs.rows();
    const Eigen::Index steps = inputs.cols();
    detail::require(p.inputs() == 1, "dimension_mismatch", "LSTM trainer expects scalar inputs");

    std::vector<Matrix> zs(steps);
    std::vector<Arr> fs(steps), is(steps), gs(steps), os(steps), cs(steps + 1), tcs(steps);
    Matrix h = Matrix::Zero(H, N);
    cs[0] = Arr::Zero(H, N);
    for (Eigen::Index t = 0; t < steps; ++t) {
        Matrix z(H + 1, N);
        z.topRows(H) = h;
        z.row(H) = inputs.col(t).transpose();
        fs[t] = detail::sigmoid_array(((p.w_forget * z).colwise() + p.b_forget).array());
        is[t] = detail::sigmoid_array(((p.w_input * z).colwise() + p.b_input).array());
        gs[t] = ((p.w_cell * z).colwise() + p.b_cell).array().tanh();
        os[t] = detail::sigmoid_array(((p.w_output * z).colwise() + p.b_output).array());
        cs[t + 1] = fs[t] * cs[t] + is[t] * gs[t];
        tcs[t] = cs[t + 1].tanh();
        h = (os[t] * tcs[t]).matrix();
        zs[t] = std::move(z);
    }
    const Eigen::RowVectorXd y = (p.w_fc.transpose() * h).array() + p.b_fc;
    const Eigen::RowVectorXd err = y - targets.transpose();
    LstmLossGrad out{err.squaredNorm() / static_cast<double>(N), LstmParams::zeros(H, 1)};

    const Eigen::RowVectorXd dy = 2.0 * err / static_cast<double>(N);
    auto& g = out.grad;
    g.w_fc = h * dy.transpose();
    g.b_fc = dy.sum();
    Matrix dh = p.w_fc * dy;
    Arr dc = Arr::Zero(H, N);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        const Arr dha = dh.array();
        const Arr d_o = dha * tcs[t];
        dc += dha * os[t] * (1.0 - tcs[t].square());
        const Arr d_f = dc * cs[t];
        const Arr d_i = dc * gs[t];
        const Arr d_g = dc * is[t];
        dc = dc * fs[t];

        const Matrix zf = (d_f * fs[t] * (1.0 - fs[t])).matrix();
        const Matrix zi = (d_i * is[t] * (1.0 - is[t])).matrix();
        const Matrix zg = (d_g * (1.0 - gs[t].square())).matrix();
        const Matrix zo = (d_o * os[t] * (1.0 - os[t])).matrix();
        const auto zt = zs[t].transpose();
        g.w_forget.noalias() += zf * zt;
        g.w_input.noalias() += zi * zt;
        g.w_cell.noalias() += zg * zt;
        g.w_output.noalias() += zo * zt;
        g.b_forget += zf.rowwise().sum();
        g.b_input += zi.rowwise().sum();
        g.b_cell += zg.rowwise().sum();
        g.b_output += zo.rowwise().sum();
        const Matrix dz = p.w_forget.transpose() * zf + p.w_input.transpose() * zi + p.w_cell.transpose() * zg +
                          p.w_output.transpose() * zo;
        dh = dz.topRows(H);
    }
    return out;
}

/// Seeded initial weights: Gaussian gates scaled by fan-in, forget bias 1,
/// read-out bias at the target mean.
inline LstmParams lstm_initial_params(Eigen::Index hidden, double target_mean, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto p = LstmParams::zeros(hidden, 1);
    const double gate_scale = 1.0 / std::sqrt(static_cast<double>(hidden + 1));
    for (Matrix* w : {&p.w_forget, &p.w_input, &p.w_cell, &p.w_output})
        for (Eigen::Index k = 0; k < w->size(); ++k) w->data()[k] = gate_scale * gauss(rng);
    p.b_forget.setOnes();
    const double fc_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (Eigen::Index k = 0; k < hidden; ++k) p.w_fc(k) = fc_scale * gauss(rng);
    p.b_fc = target_mean;
    return p;
}

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Full-batch Adam on the mean squared error. Dropout zeroes whole lag
/// positions of the input (shared by every row in a step) and rescales the
/// survivors by 1/(1 - rate); it is never applied at prediction time.
inline TrainedModel train_lstm(const SupervisedSet& data, const ModelSpec& spec) {
    detail::require(data.rows() >= 8, "too_short", "LSTM training needs at least 8 rows");
    detail::require(spec.hidden_units >= 1 && spec.epochs >= 0, "bad_argument", "LSTM needs hidden_units >= 1");
    detail::require(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0, "bad_argument", "dropout_rate must lie in [0, 1)");
    auto params = lstm_initial_params(spec.hidden_units, data.targets.mean(), spec.rng_seed);

    const AdamConfig adam{spec.learning_rate};
    Vector theta = params.pack();
    Vector m1 = Vector::Zero(theta.size());
    Vector m2 = Vector::Zero(theta.size());
    std::mt19937_64 rng(detail::mix_seed(spec.rng_seed, 0x51a7));
    std::bernoulli_distribution keep(1.0 - spec.dropout_rate);

    TrainedModel model{spec, data.lag_count, data.horizon};
    Matrix x(data.inputs.rows(), data.inputs.cols());
    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        x = data.inputs;
        if (spec.dropout_rate > 0.0) {
            const double scale = 1.0 / (1.0 - spec.dropout_rate);
            for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) *= keep(rng) ? scale : 0.0;
        }
        params.unpack(theta);
        auto lg = lstm_loss_and_gradient(params, x, data.targets);
        if (!std::isfinite(lg.loss))
            detail::fail("divergence", "LSTM training diverged at learning rate " + std::to_string(spec.learning_rate));
        model.loss_history.push_back(lg.loss);
        const Vector grad = lg.grad.pack();
        m1 = adam.beta1 * m1 + (1.0 - adam.beta1) * grad;
        m2 = adam.beta2 * m2 + (1.0 - adam.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(adam.beta1, epoch);
        const double c2 = 1.0 - std::pow(adam.beta2, epoch);
        theta.array() -= adam.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + adam.epsilon);
    }
    params.unpack(theta);
    if (!theta.allFinite())
        detail::fail("divergence", "LSTM training diverged at learning rate " + std::to_string(spec.learning_rate));

    model.params["w_forget"] = params.w_forget;
    model.params["w_input"] = params.w_input;
    model.params["w_cell"] = params.w_cell;
    model.params["w_output"] = params.w_output;
    model.params["b_forget"] = params.b_forget;
    model.params["b_input"] = params.b_input;
    model.params["b_cell"] = params.b_cell;
    model.params["b_output"] = params.b_output;
    model.params["w_fc"] = params.w_fc;
    model.params["b_fc"] = Matrix::Constant(1, 1, params.b_fc);
    return model;
}

inline LstmParams lstm_params_from(const TrainedModel& m) {
    LstmParams p;
    p.w_forget = m.param("w_forget");
    p.w_input = m.param("w_input");
    p.w_cell = m.param("w_cell");
    p.w_output = m.param("w_output");
    p.b_forget = m.param("b_forget");
    p.b_input = m.param("b_input");
    p.b_cell = m.param("b_cell");
    p.b_output = m.param("b_output");
    p.w_fc = m.param("w_fc");
    p.b_fc = m.param("b_fc")(0, 0);
    return p;
}

}  // namespace namemd
