#pragma once

// Synthetic monthly benchmark: a trending multi-tone target with noisy,
// correlated source channels.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "namemd/model.hpp"
#include "namemd/series.hpp"

namespace namemd {

struct SyntheticOptions {
    Eigen::Index length = 240;
    int sources = 2;
    double noise = 1.5;  // target noise std
    std::uint64_t seed = 0;
    YearMonth start{2000, 1};
};

/// Target: level 100, linear trend, annual tone, a slower cycle, a fast
/// 4-month tone and Gaussian noise. Each source shares the tones with its
/// own gain, phase lag, trend and heavier noise. Tone phases are seeded.
inline MultichannelSeries make_synthetic_benchmark(const SyntheticOptions& opt = {}) {
    std::mt19937_64 rng(detail::mix_seed(opt.seed, 0x5e7));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double p_fast = phase(rng), p_year = phase(rng), p_slow = phase(rng);
    constexpr double two_pi = 2.0 * std::numbers::pi;

    MultichannelSeries s{Matrix(opt.length, 1 + opt.sources), {"target"}, opt.start};
    for (int k = 1; k <= opt.sources; ++k) s.channel_names.push_back("source" + std::to_string(k));
    for (Eigen::Index t = 0; t < opt.length; ++t) {
        const double x = static_cast<double>(t);
        s.values(t, 0) = 100.0 + 0.15 * x + 3.0 * std::sin(two_pi * x / 4.0 + p_fast) +
                         10.0 * std::sin(two_pi * x / 12.0 + p_year) + 6.0 * std::sin(two_pi * x / 40.0 + p_slow) +
                         opt.noise * gauss(rng);
    }
    for (int k = 1; k <= opt.sources; ++k) {
        const double gain = 0.6 + 0.3 * k;
        const double lag = 0.3 * k;
        for (Eigen::Index t = 0; t < opt.length; ++t) {
            const double x = static_cast<double>(t) - lag;
            s.values(t, k) = 50.0 * k + 0.05 * k * x + gain * (2.0 * std::sin(two_pi * x / 4.0 + p_fast) +
                                                              8.0 * std::sin(two_pi * x / 12.0 + p_year) +
                                                              5.0 * std::sin(two_pi * x / 40.0 + p_slow)) +
                             2.0 * opt.noise * gauss(rng);
        }
    }
    return s;
}

}  // namespace namemd
