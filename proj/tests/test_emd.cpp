#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "namemd/emd.hpp"
#include "namemd/memd.hpp"

using namespace namemd;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Eigen::VectorXd sine(Eigen::Index T, double period, double offset = 0.0) {
    Eigen::VectorXd s(T);
    for (Eigen::Index t = 0; t < T; ++t) s(t) = std::sin(2.0 * std::numbers::pi * t / period) + offset;
    return s;
}

double interior_max_abs(const Eigen::VectorXd& v, double frac = 0.8) {
    const auto n = v.size();
    const auto skip = static_cast<Eigen::Index>(n * (1.0 - frac) / 2.0);
    return v.segment(skip, n - 2 * skip).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Extrema, SimpleWave) {
    auto e = find_extrema(vec({0, 1, 0, -1, 0}));
    EXPECT_EQ(e.maxima, std::vector<Eigen::Index>{1});
    EXPECT_EQ(e.minima, std::vector<Eigen::Index>{3});
}

TEST(Extrema, MonotoneHasNone) {
    auto e = find_extrema(vec({1, 2, 3, 4}));
    EXPECT_TRUE(e.maxima.empty());
    EXPECT_TRUE(e.minima.empty());
}

TEST(Extrema, PlateauMidpointFloor) {
    EXPECT_EQ(find_extrema(vec({0, 1, 1, 0})).maxima, std::vector<Eigen::Index>{1});
    EXPECT_EQ(find_extrema(vec({0, 1, 1, 1, 0})).maxima, std::vector<Eigen::Index>{2});
    EXPECT_EQ(find_extrema(vec({3, 1, 1, 1, 1, 3})).minima, std::vector<Eigen::Index>{2});
    // a step is not an extremum, nor is a plateau touching the end
    EXPECT_TRUE(find_extrema(vec({0, 1, 1, 2})).maxima.empty());
    EXPECT_TRUE(find_extrema(vec({0, 1, 2, 2})).maxima.empty());
}

TEST(Extrema, TooShort) { EXPECT_THROW(find_extrema(vec({1, 2})), Error); }

TEST(Extrema, Interleave) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Eigen::VectorXd s(300);
    for (auto& x : s) x = std::round(g(rng) * 2.0);  // rounding creates plateaus
    auto e = find_extrema(s);
    std::vector<std::pair<Eigen::Index, int>> all;
    for (auto i : e.maxima) all.emplace_back(i, 1);
    for (auto i : e.minima) all.emplace_back(i, -1);
    std::sort(all.begin(), all.end());
    for (std::size_t k = 1; k < all.size(); ++k) {
        EXPECT_LT(all[k - 1].first, all[k].first);
        EXPECT_NE(all[k - 1].second, all[k].second);
    }
}

TEST(Envelope, SineUpperIsOne) {
    const auto s = sine(512, 32);
    auto env = spline_envelope(find_extrema(s), s, EnvelopeKind::upper);
    Eigen::VectorXd dev = env.array() - 1.0;
    EXPECT_LT(interior_max_abs(dev), 0.05);
}

TEST(Envelope, EqualMaximaGiveFlatSegment) {
    auto s = vec({0, 2, 0, -1, 0, 2, 0, -1, 0});
    auto env = spline_envelope(find_extrema(s), s, EnvelopeKind::upper);
    for (int t = 1; t <= 5; ++t) EXPECT_NEAR(env(t), 2.0, 1e-9);
}

TEST(Envelope, SingleMaximumIsResidueLike) {
    auto s = vec({0, 1, 0, -1, -2, -3, -4});
    try {
        spline_envelope(find_extrema(s), s, EnvelopeKind::upper);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "residue_like");
    }
}

TEST(Sift, OffsetSineMean) {
    const auto s = sine(512, 32, 0.5);
    auto step = sift_once(s);
    EXPECT_LT(interior_max_abs(Eigen::VectorXd(step.mean_env.array() - 0.5)), 0.05);
    EXPECT_LT(interior_max_abs(Eigen::VectorXd(step.detail - sine(512, 32))), 0.05);
    EXPECT_EQ(step.detail + step.mean_env, s);
}

TEST(Sift, TriangleWaveMeanNearZero) {
    Eigen::VectorXd s(400);
    for (Eigen::Index t = 0; t < 400; ++t) {
        const double ph = std::fmod(static_cast<double>(t), 20.0);
        s(t) = ph < 10 ? ph / 5.0 - 1.0 : 3.0 - ph / 5.0;
    }
    auto step = sift_once(s);
    EXPECT_LT(interior_max_abs(step.mean_env), 1e-6);
}

TEST(Emd, TwoTone) {
    const Eigen::Index T = 512;
    Eigen::VectorXd fast = sine(T, 8), slow = sine(T, 64), s(T);
    for (Eigen::Index t = 0; t < T; ++t) s(t) = fast(t) + slow(t) + 0.01 * t;
    auto d = emd(s);
    ASSERT_GE(d.imfs.size(), 2u);
    EXPECT_GT(pearson_correlation(d.imfs[0], fast), 0.9);
    EXPECT_GT(pearson_correlation(d.imfs[1], slow), 0.9);
    EXPECT_LT((d.reconstruct() - s).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Emd, RampIsResidue) {
    Eigen::VectorXd ramp = Eigen::VectorXd::LinSpaced(100, -3, 7);
    auto d = emd(ramp);
    EXPECT_TRUE(d.imfs.empty());
    EXPECT_EQ(d.residue, ramp);
}

TEST(Emd, CompletenessAndOrdering) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int run = 0; run < 10; ++run) {
        Eigen::VectorXd s(1024);
        double walk = 0.0;
        for (auto& x : s) x = (walk += g(rng)) * 100.0;
        auto d = emd(s);
        EXPECT_LT((d.reconstruct() - s).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_TRUE(is_residue_like(find_extrema(d.residue)));
        for (const auto& imf : d.imfs) EXPECT_FALSE(is_residue_like(find_extrema(imf)));
    }
}

TEST(Emd, TooShort) { EXPECT_THROW(emd(vec({1, 2, 1, 2, 1, 2, 1})), Error); }

TEST(ZeroCrossings, Counts) {
    EXPECT_EQ(count_zero_crossings(vec({1, -1, 1, -1})), 3u);
    EXPECT_EQ(count_zero_crossings(vec({1, 0, 0, -1})), 1u);
    EXPECT_EQ(count_zero_crossings(vec({1, 0, 1})), 0u);
}
