#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "namemd/error.hpp"

namespace namemd {

/// Natural cubic spline through (knots[i], values.row(i)), every column an
/// independent curve sharing the same knots. Evaluated at t = 0, 1, ..., T-1.
/// Knots must be strictly increasing; at least two are required (two knots
/// give the straight line through them).
inline Eigen::MatrixXd natural_spline_eval(const std::vector<double>& knots, const Eigen::MatrixXd& values,
                                           Eigen::Index T) {
    const auto n = static_cast<Eigen::Index>(knots.size());
    detail::require(n >= 2 && values.rows() == n, "spline", "natural spline needs >= 2 knots");
    const Eigen::Index c = values.cols();

    // Second derivatives, zero at both ends; Thomas algorithm on the interior.
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, c);
    if (n > 2) {
        const Eigen::Index m = n - 2;
        std::vector<double> diag(m), upper(m);
        Eigen::MatrixXd rhs(m, c);
        for (Eigen::Index i = 1; i <= m; ++i) {
            const double h0 = knots[i] - knots[i - 1];
            const double h1 = knots[i + 1] - knots[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs.row(i - 1) = 6.0 * ((values.row(i + 1) - values.row(i)) / h1 - (values.row(i) - values.row(i - 1)) / h0);
        }
        for (Eigen::Index i = 1; i < m; ++i) {
            const double sub = knots[i + 1] - knots[i];  // coefficient of M_i in row i+1
            const double w = sub / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs.row(i) -= w * rhs.row(i - 1);
        }
        second.row(m) = rhs.row(m - 1) / diag[m - 1];
        for (Eigen::Index i = m - 2; i >= 0; --i)
            second.row(i + 1) = (rhs.row(i) - upper[i] * second.row(i + 2)) / diag[i];
    }

    Eigen::MatrixXd out(T, c);
    Eigen::Index seg = 0;
    for (Eigen::Index t = 0; t < T; ++t) {
        const double x = static_cast<double>(t);
        while (seg < n - 2 && x > knots[seg + 1]) ++seg;
        const double h = knots[seg + 1] - knots[seg];
        const double a = (knots[seg + 1] - x) / h;
        const double b = (x - knots[seg]) / h;
        out.row(t) = a * values.row(seg) + b * values.row(seg + 1) +
                     ((a * a * a - a) * second.row(seg) + (b * b * b - b) * second.row(seg + 1)) * (h * h / 6.0);
    }
    return out;
}

/// Spline through the samples at the given interior instants, with the two
/// instants nearest each boundary mirrored across it before fitting.
/// `instants` must be strictly increasing, inside (0, T-1), and have >= 2 entries.
inline Eigen::MatrixXd mirrored_envelope(const std::vector<Eigen::Index>& instants, const Eigen::MatrixXd& samples) {
    const auto k = instants.size();
    detail::require(k >= 2, "residue_like", "envelope needs at least two extrema");
    const Eigen::Index T = samples.rows();
    const double right = static_cast<double>(T - 1);

    std::vector<double> knots;
    knots.reserve(k + 4);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(k + 4), samples.cols());
    Eigen::Index row = 0;
    auto push = [&](double x, Eigen::Index src) {
        knots.push_back(x);
        values.row(row++) = samples.row(src);
    };
    push(-static_cast<double>(instants[1]), instants[1]);
    push(-static_cast<double>(instants[0]), instants[0]);
    for (auto i : instants) push(static_cast<double>(i), i);
    push(2.0 * right - static_cast<double>(instants[k - 1]), instants[k - 1]);
    push(2.0 * right - static_cast<double>(instants[k - 2]), instants[k - 2]);
    return natural_spline_eval(knots, values, T);
}

}  // namespace namemd
