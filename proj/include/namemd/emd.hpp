#pragma once

// Classical single-channel empirical mode decomposition.

#include <Eigen/Dense>

#include <cstdlib>
#include <vector>

#include "namemd/error.hpp"
#include "namemd/spline.hpp"

namespace namemd {

struct ExtremaSet {
    std::vector<Eigen::Index> maxima;
    std::vector<Eigen::Index> minima;

    std::size_t count() const { return maxima.size() + minima.size(); }
};

/// Which projections must be IMF-like for a multivariate sift to count
/// towards the S-number streak.
enum class StopQuantifier { any_projection, every_projection };

/// Sifting controls. A component is accepted once its extrema and
/// zero-crossing counts differ by at most one for `s_number` consecutive
/// sifts, or after `max_sifts` sifts. `quantifier` only affects the
/// multivariate decomposition.
struct SiftConfig {
    int s_number = 4;
    int max_sifts = 50;
    int max_imfs = 0;  // 0: no limit
    StopQuantifier quantifier = StopQuantifier::any_projection;
};

/// Intrinsic mode functions (highest frequency first) plus residue.
struct ImfSet {
    std::vector<Eigen::VectorXd> imfs;
    Eigen::VectorXd residue;

    Eigen::VectorXd reconstruct() const {
        Eigen::VectorXd sum = residue;
        for (const auto& c : imfs) sum += c;
        return sum;
    }
};

enum class EnvelopeKind { upper, lower };

/// Strict local extrema. A plateau counts once, at its midpoint (floor);
/// plateaus touching either end of the signal are not extrema.
inline ExtremaSet find_extrema(const Eigen::Ref<const Eigen::VectorXd>& s) {
    const Eigen::Index n = s.size();
    detail::require(n >= 3, "too_short", "find_extrema needs at least 3 samples");
    ExtremaSet out;
    Eigen::Index i = 1;
    while (i < n - 1) {
        const double prev = s(i - 1);
        const double v = s(i);
        if (v == prev) {
            ++i;
            continue;
        }
        Eigen::Index j = i;
        while (j + 1 < n && s(j + 1) == v) ++j;
        if (j == n - 1) break;
        const double next = s(j + 1);
        if (v > prev && v > next)
            out.maxima.push_back((i + j) / 2);
        else if (v < prev && v < next)
            out.minima.push_back((i + j) / 2);
        i = j + 1;
    }
    return out;
}

/// Sign changes, with runs of exact zeros between opposite signs counted once.
inline std::size_t count_zero_crossings(const Eigen::Ref<const Eigen::VectorXd>& s) {
    std::size_t count = 0;
    int last = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const int sign = (s(i) > 0.0) - (s(i) < 0.0);
        if (sign == 0) continue;
        if (last != 0 && sign != last) ++count;
        last = sign;
    }
    return count;
}

inline bool is_residue_like(const ExtremaSet& e) { return e.maxima.size() < 2 || e.minima.size() < 2; }

inline bool satisfies_imf_counts(const Eigen::Ref<const Eigen::VectorXd>& s) {
    const auto e = find_extrema(s);
    const auto z = count_zero_crossings(s);
    const auto ext = e.count();
    return (ext > z ? ext - z : z - ext) <= 1;
}

inline Eigen::VectorXd spline_envelope(const ExtremaSet& extrema, const Eigen::Ref<const Eigen::VectorXd>& signal,
                                       EnvelopeKind kind) {
    const auto& idx = kind == EnvelopeKind::upper ? extrema.maxima : extrema.minima;
    if (idx.size() < 2) detail::fail("residue_like", "fewer than two extrema for the envelope");
    Eigen::MatrixXd samples = signal;
    return mirrored_envelope(idx, samples).col(0);
}

struct SiftStep {
    Eigen::VectorXd detail;
    Eigen::VectorXd mean_env;
};

inline SiftStep sift_once(const Eigen::Ref<const Eigen::VectorXd>& signal) {
    const auto e = find_extrema(signal);
    if (is_residue_like(e)) detail::fail("residue_like", "signal has fewer than two maxima or minima");
    Eigen::VectorXd mean = 0.5 * (spline_envelope(e, signal, EnvelopeKind::upper) +
                                  spline_envelope(e, signal, EnvelopeKind::lower));
    Eigen::VectorXd d = signal - mean;
    return {std::move(d), std::move(mean)};
}

inline ImfSet emd(const Eigen::Ref<const Eigen::VectorXd>& signal, const SiftConfig& cfg = {}) {
    detail::require(signal.size() >= 8, "too_short", "emd needs at least 8 samples");
    ImfSet out;
    Eigen::VectorXd residual = signal;
    while (cfg.max_imfs <= 0 || static_cast<int>(out.imfs.size()) < cfg.max_imfs) {
        if (is_residue_like(find_extrema(residual))) break;
        Eigen::VectorXd h = residual;
        int streak = 0;
        for (int it = 0; it < cfg.max_sifts; ++it) {
            if (is_residue_like(find_extrema(h))) break;
            h = sift_once(h).detail;
            streak = satisfies_imf_counts(h) ? streak + 1 : 0;
            if (streak >= cfg.s_number) break;
        }
        residual -= h;
        out.imfs.push_back(std::move(h));
    }
    out.residue = std::move(residual);
    return out;
}

}  // namespace namemd
