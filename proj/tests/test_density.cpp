#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "echolens/density.hpp"
#include "echolens/random.hpp"

using namespace echolens;

namespace {

std::vector<double> mixture(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> lo(0.05, 0.02), hi(0.25, 0.05);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> x;
    while (x.size() < n) {
        const double v = coin(rng) ? lo(rng) : hi(rng);
        if (v >= 0.0 && v <= 1.0) x.push_back(v);
    }
    return x;
}

double trapezoid(const Density& d) {
    double s = 0.0;
    for (std::size_t k = 1; k < d.grid.size(); ++k) s += 0.5 * (d.values[k] + d.values[k - 1]) * (d.grid[k] - d.grid[k - 1]);
    return s;
}

} // namespace

TEST(Kde, NarrowGaussianSingleMaximum) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.5, 0.01);
    std::vector<double> x(10000);
    for (auto& v : x) v = nd(rng);
    const auto d = kde(x);
    const auto p = split_peaks(d, x);
    ASSERT_EQ(p.modality(), 1u);
    EXPECT_NEAR(p.modes[0].location, 0.5, d.step());
    EXPECT_NEAR(trapezoid(d), 1.0, 1e-3);
}

TEST(Kde, MatchesDirectEvaluation) {
    const auto x = mixture(3, 500);
    KdeOptions opt;
    opt.grid_points = 101;
    opt.reflect_lo = false;
    const auto d = kde(x, opt);
    double mean = 0, ss = 0;
    for (double v : x) mean += v / static_cast<double>(x.size());
    for (double v : x) ss += (v - mean) * (v - mean);
    const double h = std::sqrt(ss / static_cast<double>(x.size() - 1)) * std::pow(static_cast<double>(x.size()), -0.2);
    for (std::size_t g = 0; g < d.grid.size(); g += 10) {
        double f = 0.0;
        for (double v : x) f += std::exp(-0.5 * std::pow((d.grid[g] - v) / h, 2)) / (h * std::sqrt(2 * M_PI));
        EXPECT_NEAR(d.values[g], f / static_cast<double>(x.size()), 1e-9);
    }
}

TEST(Kde, DegenerateInputsThrow) {
    EXPECT_THROW(kde(std::vector<double>{0.3, 0.3, 0.3}), UndefinedError);
    EXPECT_THROW(kde(std::vector<double>{0.3}), UndefinedError);
    KdeOptions bad;
    bad.grid_points = 1;
    EXPECT_THROW(kde(std::vector<double>{0.1, 0.2}, bad), ConfigError);
}

TEST(SplitPeaks, RecoversMixtureParameters) {
    const auto x = mixture(7, 10000);
    const auto d = kde(x);
    const auto p = split_peaks(d, x);
    ASSERT_EQ(p.modality(), 2u);
    EXPECT_GT(p.split, 0.05);
    EXPECT_LT(p.split, 0.25);
    EXPECT_NEAR(p.modes[0].location, 0.05, 0.02);
    EXPECT_NEAR(p.modes[1].location, 0.25, 0.02);
    EXPECT_NEAR(p.modes[0].mean, 0.05, 0.02);
    EXPECT_NEAR(p.modes[1].mean, 0.25, 0.02);
    EXPECT_NEAR(p.modes[0].sd, 0.02, 0.02);
    EXPECT_NEAR(p.modes[1].sd, 0.05, 0.02);
    EXPECT_EQ(p.modes[0].count + p.modes[1].count, x.size());
    EXPECT_NEAR(trapezoid(d), 1.0, 1e-3);
}

TEST(SplitPeaks, ReflectionKeepsMassInsideRange) {
    std::mt19937_64 rng(2);
    std::exponential_distribution<double> e(40.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = std::min(e(rng), 1.0);
    EXPECT_NEAR(trapezoid(kde(x)), 1.0, 1e-3);
}

TEST(SplitPeaks, PermutationInvariant) {
    auto x = mixture(11, 3000);
    const auto a = split_peaks(kde(x), x);
    std::mt19937_64 rng(4);
    shuffle(std::span<double>(x), rng);
    const auto b = split_peaks(kde(x), x);
    ASSERT_EQ(a.modality(), b.modality());
    for (std::size_t k = 0; k < a.modality(); ++k) EXPECT_EQ(a.modes[k].location, b.modes[k].location);
}

TEST(SplitPeaks, ModalityStableUnderMoreSamples) {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        auto x = mixture(seed, 2000);
        EXPECT_EQ(split_peaks(kde(x), x).modality(), 2u);
        const auto more = mixture(seed + 100, 4000);
        x.insert(x.end(), more.begin(), more.end());
        EXPECT_EQ(split_peaks(kde(x), x).modality(), 2u);
    }
}

TEST(SplitPeaks, ProminenceFloorDropsTinyBumps) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> big(0.3, 0.03), tiny(0.8, 0.01);
    std::vector<double> x;
    for (int k = 0; k < 5000; ++k) x.push_back(big(rng));
    for (int k = 0; k < 20; ++k) x.push_back(tiny(rng));
    const auto d = kde(x);
    EXPECT_EQ(split_peaks(d, x).modality(), 1u);
    PeakOptions loose;
    loose.min_peak_fraction = 0.0;
    EXPECT_EQ(split_peaks(d, x, loose).modality(), 2u);
}
