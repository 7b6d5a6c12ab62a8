#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "namemd/memd.hpp"

using namespace namemd;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector sine(Eigen::Index T, double period) {
    Vector s(T);
    for (Eigen::Index t = 0; t < T; ++t) s(t) = std::sin(kTwoPi * t / period);
    return s;
}

MultichannelSeries two_tone_pair(Eigen::Index T = 512) {
    MultichannelSeries s{Matrix(T, 2), {"a", "b"}, {2000, 1}};
    for (Eigen::Index t = 0; t < T; ++t)
        s.values(t, 0) = s.values(t, 1) = std::sin(kTwoPi * t / 8) + std::sin(kTwoPi * t / 64) + 0.01 * t;
    return s;
}

MultichannelSeries random_walks(Eigen::Index T, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    MultichannelSeries s{Matrix(T, m), {}, {2000, 1}};
    for (int c = 0; c < m; ++c) s.channel_names.push_back("c" + std::to_string(c));
    Vector walk = Vector::Zero(m);
    for (Eigen::Index t = 0; t < T; ++t) {
        const double shared = g(rng);
        for (int c = 0; c < m; ++c) walk(c) += 0.6 * shared + g(rng);
        s.values.row(t) = walk.transpose();
    }
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

}  // namespace

TEST(Directions, UnitNorm) {
    for (int d : {2, 3, 4, 6})
        for (std::uint64_t seed : {0u, 7u}) {
            auto dirs = generate_directions(d, 64, seed);
            ASSERT_EQ(dirs.dimension(), d);
            ASSERT_EQ(dirs.size(), 64);
            for (Eigen::Index k = 0; k < dirs.size(); ++k) EXPECT_LT(std::abs(dirs.vectors.col(k).norm() - 1.0), 1e-12);
        }
}

TEST(Directions, PlanarSeparation) {
    auto dirs = generate_directions(2, 8, 0);
    double min_angle = 180.0;
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j) {
            const double c = std::clamp(dirs.vectors.col(i).dot(dirs.vectors.col(j)), -1.0, 1.0);
            min_angle = std::min(min_angle, std::acos(c) * 180.0 / std::numbers::pi);
        }
    EXPECT_GT(min_angle, 20.0);
}

TEST(Directions, NearZeroCentroid) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto dirs = generate_directions(4, 64, seed);
        EXPECT_LT(dirs.vectors.rowwise().mean().norm(), 0.2);
    }
}

TEST(Directions, DeterministicAndTooFew) {
    EXPECT_EQ(generate_directions(3, 16, 9).vectors, generate_directions(3, 16, 9).vectors);
    EXPECT_NE(generate_directions(3, 16, 9).vectors, generate_directions(3, 16, 10).vectors);
    EXPECT_EQ(code_of([] { generate_directions(4, 7, 0); }), "too_few_directions");
}

TEST(Project, Cases) {
    Matrix z = Matrix::Constant(20, 3, 2.0);
    Vector u = Vector::Ones(3).normalized();
    const Vector p = project(z, u);
    EXPECT_LT((p.array() - p(0)).abs().maxCoeff(), 1e-15);

    z = Matrix::Random(20, 3);
    EXPECT_EQ(project(z, Vector::Unit(3, 0)), z.col(0));
    z.col(0).setZero();
    EXPECT_EQ(project(z.leftCols(1), Vector::Unit(1, 0)), Vector::Zero(20));

    Matrix w(20, 2);
    w.col(0) = Vector::LinSpaced(20, 0, 1);
    w.col(1) = -w.col(0);
    EXPECT_LT(project(w, Vector::Ones(2).normalized()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(code_of([&] { project(w, Vector::Ones(3)); }), "dimension_mismatch");
}

TEST(Project, Linearity) {
    const Matrix z = Matrix::Random(50, 4);
    const Vector u = Vector::Random(4).normalized();
    EXPECT_LT((project(2.5 * z, u) - 2.5 * project(z, u)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MeanEnvelope, SharedSineMidline) {
    Matrix z(512, 2);
    z.col(0) = z.col(1) = sine(512, 32);
    auto m = multivariate_mean_envelope(z, generate_directions(2, 16, 1));
    EXPECT_LT(m.middleRows(51, 410).cwiseAbs().maxCoeff(), 0.1);
}

TEST(MeanEnvelope, ConstantIsResidueLike) {
    EXPECT_EQ(code_of([] { multivariate_mean_envelope(Matrix::Constant(64, 2, 1.0), generate_directions(2, 8, 0)); }),
              "residue_like");
}

TEST(MeanEnvelope, PositiveHomogeneity) {
    const Matrix z = random_walks(200, 3, 4).values;
    const auto dirs = generate_directions(3, 32, 2);
    EXPECT_LT((multivariate_mean_envelope(2.0 * z, dirs) - 2.0 * multivariate_mean_envelope(z, dirs)).cwiseAbs().maxCoeff(),
              1e-9);
}

TEST(Memd, TwoToneAligned) {
    const auto s = two_tone_pair();
    auto d = memd(s);
    const Vector fast = sine(512, 8);
    ASSERT_GE(d.imf_count, 2);
    for (const auto& ch : d.channels) {
        EXPECT_EQ(static_cast<int>(ch.imfs.size()), d.imf_count);
        EXPECT_GT(pearson_correlation(ch.imfs[0], fast), 0.9);
    }
    for (Eigen::Index c = 0; c < 2; ++c)
        EXPECT_LT((d.channels[c].reconstruct() - s.values.col(c)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Memd, RampsAreResidue) {
    MultichannelSeries s{Matrix(64, 2), {"a", "b"}, {}};
    s.values.col(0) = Vector::LinSpaced(64, 0, 1);
    s.values.col(1) = Vector::LinSpaced(64, 5, 2);
    auto d = memd(s);
    EXPECT_EQ(d.imf_count, 0);
    EXPECT_EQ(d.channels[0].residue, s.values.col(0));
    EXPECT_EQ(d.channels[1].residue, s.values.col(1));
}

TEST(Memd, SingleChannelAndTooShort) {
    MultichannelSeries s{Matrix(200, 1), {"x"}, {}};
    s.values.col(0) = sine(200, 10) + 0.3 * sine(200, 50);
    auto d = memd(s);
    EXPECT_EQ(d.channels.size(), 1u);
    EXPECT_LT((d.channels[0].reconstruct() - s.values.col(0)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(code_of([] { memd(MultichannelSeries{Matrix::Random(20, 2), {"a", "b"}, {}}); }), "too_short");
}

TEST(NaMemd, FastToneInFirstModes) {
    const auto s = two_tone_pair();
    const Vector fast = sine(512, 8);
    NaMemdConfig cfg;
    cfg.rng_seed = 3;
    auto d = na_memd(s, cfg);
    ASSERT_GE(d.imf_count, 2);
    EXPECT_EQ(d.channels.size(), 2u);
    const double best = std::max(pearson_correlation(d.channels[0].imfs[0], fast),
                                 pearson_correlation(d.channels[0].imfs[1], fast));
    EXPECT_GT(best, 0.9);

    cfg.noise_amplitude = 0.05;
    auto low = na_memd(s, cfg);
    EXPECT_GT(pearson_correlation(low.channels[0].imfs[0], fast), 0.9);
}

TEST(NaMemd, CompleteForEverySeed) {
    const auto s = random_walks(256, 3, 21);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        NaMemdConfig cfg;
        cfg.rng_seed = seed;
        auto d = na_memd(s, cfg);
        ASSERT_EQ(d.channels.size(), 3u);
        for (Eigen::Index c = 0; c < 3; ++c) {
            EXPECT_EQ(static_cast<int>(d.channels[c].imfs.size()), d.imf_count);
            EXPECT_LT((d.channels[c].reconstruct() - s.values.col(c)).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(NaMemd, Deterministic) {
    const auto s = random_walks(128, 2, 5);
    NaMemdConfig cfg;
    cfg.rng_seed = 77;
    auto a = na_memd(s, cfg), b = na_memd(s, cfg);
    ASSERT_EQ(a.imf_count, b.imf_count);
    for (int i = 0; i < a.imf_count; ++i) EXPECT_EQ(a.channels[1].imfs[i], b.channels[1].imfs[i]);
    EXPECT_EQ(a.channels[0].residue, b.channels[0].residue);
}

TEST(NaMemd, Contract) {
    const auto s = random_walks(64, 2, 1);
    NaMemdConfig cfg;
    cfg.noise_channels = 0;
    EXPECT_EQ(code_of([&] { na_memd(s, cfg); }), "bad_argument");
    cfg.noise_channels = 2;
    cfg.noise_amplitude = 1.5;
    EXPECT_EQ(code_of([&] { na_memd(s, cfg); }), "bad_argument");
}

TEST(MeanPeriod, CountPattern) {
    // 41 maxima in 122 samples
    EXPECT_NEAR(mean_period(sine(122, 122.0 / 41.0)), 122.0 / 41.0, 1e-12);
    EXPECT_NEAR(122.0 / 41.0, 2.98, 0.005);
    Vector bump(122);
    for (Eigen::Index t = 0; t < 122; ++t) bump(t) = -std::pow(t - 60.0, 2);
    EXPECT_EQ(mean_period(bump), 122.0);
    EXPECT_EQ(mean_period(Vector::LinSpaced(122, 0, 1)), 122.0);
    EXPECT_NEAR(mean_period(sine(480, 12)), 12.0, 1e-12);
    EXPECT_NEAR(mean_period(sine(480, 12), PeriodEstimator::zero_crossings), 12.0, 0.2);
}

TEST(Pearson, Cases) {
    const Vector x = Vector::Random(30);
    EXPECT_DOUBLE_EQ(pearson_correlation(x, x), 1.0);
    EXPECT_DOUBLE_EQ(pearson_correlation(x, -x), -1.0);
    Vector a(3), b(3);
    a << 1, 2, 3;
    b << 1, 2, 4;
    // centred cross sum 3, squared sums 2 and 42/9
    EXPECT_NEAR(pearson_correlation(a, b), 3.0 / std::sqrt(2.0 * 42.0 / 9.0), 1e-12);
    EXPECT_NEAR(pearson_correlation(a, b), 0.9819805, 1e-7);
    EXPECT_EQ(code_of([&] { pearson_correlation(a, Vector::Ones(3)); }), "constant_input");
    EXPECT_EQ(code_of([&] { pearson_correlation(a, x); }), "length_mismatch");
}
