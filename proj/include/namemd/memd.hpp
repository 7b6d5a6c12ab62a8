#pragma once

// Multivariate EMD driven by projections onto quasi-uniform directions, the
// noise-assisted wrapper around it, and per-mode diagnostics.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "namemd/emd.hpp"
#include "namemd/error.hpp"
#include "namemd/series.hpp"
#include "namemd/spline.hpp"

namespace namemd {

/// K unit vectors (columns of `vectors`) in d dimensions.
struct DirectionSet {
    Matrix vectors;
    std::string generator = "hammersley";
    std::uint64_t seed = 0;

    Eigen::Index dimension() const { return vectors.rows(); }
    Eigen::Index size() const { return vectors.cols(); }
};

struct MemdConfig {
    int directions = 64;
    std::uint64_t seed = 0;
    SiftConfig sift;
};

struct NaMemdConfig {
    int noise_channels = 2;
    double noise_amplitude = 0.1;  // noise std as a fraction of the mean channel std
    int directions = 64;
    std::uint64_t rng_seed = 0;
    SiftConfig sift;
};

/// Per-channel modes of the original channels. Every channel carries the same
/// number of IMFs.
struct ImfDecomposition {
    std::vector<std::string> channel_names;
    YearMonth start;
    std::vector<ImfSet> channels;
    int imf_count = 0;
    std::vector<int> sift_counts;  // sifts spent on each IMF

    Eigen::Index length() const { return channels.empty() ? 0 : channels.front().residue.size(); }

    const ImfSet& channel(const std::string& name) const {
        for (std::size_t i = 0; i < channel_names.size(); ++i)
            if (channel_names[i] == name) return channels[i];
        detail::fail("unknown_channel", "no decomposition for channel '" + name + "'");
    }
};

namespace detail {

inline constexpr std::array<int, 24> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                                41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

inline double radical_inverse(int base, std::uint64_t k) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (k > 0) {
        r += f * static_cast<double>(k % static_cast<std::uint64_t>(base));
        k /= static_cast<std::uint64_t>(base);
        f *= inv;
    }
    return r;
}

// Integral of sin^n over [0, phi].
inline double sin_power_integral(int n, double phi) {
    if (n == 0) return phi;
    if (n == 1) return 1.0 - std::cos(phi);
    return -std::pow(std::sin(phi), n - 1) * std::cos(phi) / n + (n - 1.0) / n * sin_power_integral(n - 2, phi);
}

// Inverse CDF of the density proportional to sin^n on [0, pi].
inline double inverse_sin_power_cdf(int n, double u) {
    if (n == 1) return std::acos(1.0 - 2.0 * u);
    const double total = sin_power_integral(n, std::numbers::pi);
    double lo = 0.0, hi = std::numbers::pi;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (sin_power_integral(n, mid) / total < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Hammersley points on the unit (d-1)-sphere. The first Hammersley
/// coordinate drives the azimuth, the radical-inverse coordinates drive the
/// polar angles through their inverse CDFs. `seed` selects a toroidal shift of
/// the point set.
inline DirectionSet generate_directions(int d, int K, std::uint64_t seed) {
    detail::require(d >= 2, "bad_argument", "direction dimension must be >= 2");
    detail::require(d - 1 <= static_cast<int>(detail::kPrimes.size()), "bad_argument", "dimension too large");
    if (K < 2 * d)
        detail::fail("too_few_directions", "need K >= 2d directions (K=" + std::to_string(K) +
                                               ", d=" + std::to_string(d) + ")");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shift(static_cast<std::size_t>(d - 1));
    for (auto& s : shift) s = unif(rng);

    DirectionSet set{Matrix(d, K), "hammersley", seed};
    std::vector<double> angle(static_cast<std::size_t>(d - 1));
    for (int k = 0; k < K; ++k) {
        auto wrap = [](double x) { return x - std::floor(x); };
        const double az = wrap(static_cast<double>(k) / K + shift[0]);
        for (int j = 0; j < d - 2; ++j) {
            const double u = wrap(detail::radical_inverse(detail::kPrimes[j], static_cast<std::uint64_t>(k)) + shift[j + 1]);
            angle[j] = detail::inverse_sin_power_cdf(d - 2 - j, u);
        }
        angle[d - 2] = 2.0 * std::numbers::pi * az;

        auto col = set.vectors.col(k);
        double carry = 1.0;
        for (int j = 0; j < d - 2; ++j) {
            col(j) = carry * std::cos(angle[j]);
            carry *= std::sin(angle[j]);
        }
        col(d - 2) = carry * std::cos(angle[d - 2]);
        col(d - 1) = carry * std::sin(angle[d - 2]);
        col.normalize();
    }
    return set;
}

/// Projection of every frame z(t) onto direction u.
inline Vector project(const Eigen::Ref<const Matrix>& z, const Eigen::Ref<const Vector>& u) {
    if (z.cols() != u.size())
        detail::fail("dimension_mismatch", "direction has " + std::to_string(u.size()) + " components, signal has " +
                                               std::to_string(z.cols()) + " channels");
    return z * u;
}

namespace detail {

struct EnvelopeMean {
    Matrix mean;
    bool all_counts_ok = true;   // every usable projection is IMF-like
    bool any_counts_ok = false;  // at least one usable projection is IMF-like
};

// Averages the maxima envelopes over usable directions and records whether
// the projections meet the extrema/zero-crossing count condition.
inline std::optional<EnvelopeMean> try_mean_envelope(const Matrix& z, const DirectionSet& dirs) {
    EnvelopeMean out{Matrix::Zero(z.rows(), z.cols())};
    Eigen::Index usable = 0;
    for (Eigen::Index k = 0; k < dirs.size(); ++k) {
        const Vector p = project(z, dirs.vectors.col(k));
        const auto e = find_extrema(p);
        if (e.maxima.size() < 2) continue;
        const auto ext = e.count();
        const auto zc = count_zero_crossings(p);
        const bool ok = (ext > zc ? ext - zc : zc - ext) <= 1;
        out.all_counts_ok = out.all_counts_ok && ok;
        out.any_counts_ok = out.any_counts_ok || ok;
        out.mean += mirrored_envelope(e.maxima, z);
        ++usable;
    }
    if (usable == 0 || 2 * usable < dirs.size()) return std::nullopt;
    out.mean /= static_cast<double>(usable);
    return out;
}

struct MemdModes {
    std::vector<Matrix> imfs;  // each T x d
    Matrix residue;
    std::vector<int> sifts;
};

inline MemdModes memd_frames(const Matrix& z, const DirectionSet& dirs, const SiftConfig& cfg) {
    require(z.cols() == dirs.dimension(), "dimension_mismatch", "direction dimension differs from channel count");
    const bool need_all = cfg.quantifier == StopQuantifier::every_projection;
    MemdModes out;
    Matrix residual = z;
    while (cfg.max_imfs <= 0 || static_cast<int>(out.imfs.size()) < cfg.max_imfs) {
        auto env = try_mean_envelope(residual, dirs);
        if (!env) break;
        Matrix h = residual;
        int streak = 0, sifts = 0;
        while (sifts < cfg.max_sifts) {
            h -= env->mean;
            ++sifts;
            // The next envelope is needed both for the stop test and for the next sift.
            env = try_mean_envelope(h, dirs);
            if (!env) break;
            const bool ok = need_all ? env->all_counts_ok : env->any_counts_ok;
            streak = ok ? streak + 1 : 0;
            if (streak >= cfg.s_number) break;
        }
        residual -= h;
        out.imfs.push_back(std::move(h));
        out.sifts.push_back(sifts);
    }
    out.residue = std::move(residual);
    return out;
}

inline ImfSet channel_modes(const MemdModes& modes, Eigen::Index c) {
    ImfSet set;
    for (const auto& imf : modes.imfs) set.imfs.emplace_back(imf.col(c));
    set.residue = modes.residue.col(c);
    return set;
}

}  // namespace detail

/// Local mean of a multichannel signal: per direction, the frames at the
/// maxima of the projection are spline-interpolated channel by channel, then
/// the envelopes are averaged over every direction with at least two maxima.
/// Throws `residue_like` when fewer than half the directions qualify.
inline Matrix multivariate_mean_envelope(const Eigen::Ref<const Matrix>& z, const DirectionSet& dirs) {
    auto m = detail::try_mean_envelope(Matrix(z), dirs);
    if (!m) detail::fail("residue_like", "too few directions with two or more maxima");
    return std::move(m->mean);
}

inline ImfDecomposition memd(const MultichannelSeries& series, const MemdConfig& cfg = {}) {
    detail::require(series.length() >= 32, "too_short", "memd needs at least 32 samples");
    const auto d = static_cast<int>(series.channels());
    const auto dirs = generate_directions(std::max(d, 2), cfg.directions, cfg.seed);
    Matrix z = series.values;
    if (d == 1) {
        // A single channel is paired with a zero channel so the direction set is well defined.
        z.conservativeResize(Eigen::NoChange, 2);
        z.col(1).setZero();
    }
    const auto modes = detail::memd_frames(z, dirs, cfg.sift);
    ImfDecomposition out{series.channel_names, series.start, {}, static_cast<int>(modes.imfs.size()), modes.sifts};
    for (Eigen::Index c = 0; c < series.channels(); ++c) out.channels.push_back(detail::channel_modes(modes, c));
    return out;
}

/// Gaussian noise channels scaled to `noise_amplitude` times the mean channel
/// standard deviation are appended, the stack is decomposed jointly and the
/// modes of the noise channels are dropped.
inline ImfDecomposition na_memd(const MultichannelSeries& series, const NaMemdConfig& cfg = {}) {
    if (cfg.noise_channels < 1) detail::fail("bad_argument", "na_memd needs at least one noise channel");
    if (!(cfg.noise_amplitude > 0.0 && cfg.noise_amplitude <= 1.0))
        detail::fail("bad_argument", "noise_amplitude must lie in (0, 1]");
    detail::require(series.length() >= 32, "too_short", "na_memd needs at least 32 samples");

    const Eigen::Index T = series.length();
    const Eigen::Index m = series.channels();
    double mean_std = 0.0;
    for (Eigen::Index c = 0; c < m; ++c) {
        const auto col = series.values.col(c).array();
        mean_std += std::sqrt((col - col.mean()).square().sum() / static_cast<double>(T));
    }
    mean_std /= static_cast<double>(m);
    const double sigma = cfg.noise_amplitude * (mean_std > 0.0 ? mean_std : 1.0);

    Matrix z(T, m + cfg.noise_channels);
    z.leftCols(m) = series.values;
    std::mt19937_64 rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index c = m; c < z.cols(); ++c)
        for (Eigen::Index t = 0; t < T; ++t) z(t, c) = noise(rng);

    const auto dirs = generate_directions(static_cast<int>(z.cols()), cfg.directions, cfg.rng_seed);
    const auto modes = detail::memd_frames(z, dirs, cfg.sift);
    ImfDecomposition out{series.channel_names, series.start, {}, static_cast<int>(modes.imfs.size()), modes.sifts};
    for (Eigen::Index c = 0; c < m; ++c) out.channels.push_back(detail::channel_modes(modes, c));
    return out;
}

enum class PeriodEstimator { maxima, zero_crossings };

/// Sample length over the number of local maxima (T when there are none).
/// The zero-crossing variant uses 2T over the crossing count instead.
inline double mean_period(const Eigen::Ref<const Vector>& imf, PeriodEstimator how = PeriodEstimator::maxima) {
    detail::require(imf.size() >= 3, "too_short", "mean_period needs at least 3 samples");
    const auto T = static_cast<double>(imf.size());
    if (how == PeriodEstimator::zero_crossings) {
        const auto zc = count_zero_crossings(imf);
        return zc == 0 ? T : 2.0 * T / static_cast<double>(zc);
    }
    const auto n = find_extrema(imf).maxima.size();
    return n == 0 ? T : T / static_cast<double>(n);
}

inline double pearson_correlation(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    if (a.size() != b.size()) detail::fail("length_mismatch", "pearson_correlation needs equal lengths");
    const Eigen::ArrayXd da = a.array() - a.mean();
    const Eigen::ArrayXd db = b.array() - b.mean();
    const double saa = da.square().sum();
    const double sbb = db.square().sum();
    if (saa == 0.0 || sbb == 0.0) detail::fail("constant_input", "pearson_correlation of a constant vector");
    const double r = (da * db).sum() / std::sqrt(saa * sbb);
    return std::clamp(r, -1.0, 1.0);
}

}  // namespace namemd
