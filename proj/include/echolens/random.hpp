#ifndef ECHOLENS_RANDOM_HPP
#define ECHOLENS_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace echolens {

// The standard distributions are implementation-defined, so draws are made
// from the raw mt19937_64 output to keep seeded runs identical across
// toolchains.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent substream for (seed, stream, index); stable under any scheduling.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    s = splitmix64(s ^ splitmix64(index + 0x8cb92ba72f3d8dd7ULL));
    return std::mt19937_64(s);
}

/// Uniform double in [0, 1).
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound), bound > 0 (Lemire's method with rejection).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(rng()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

inline bool bernoulli(std::mt19937_64& rng, double p) {
    return uniform01(rng) < p;
}

/// Standard normal via Box-Muller (one draw per call).
inline double normal01(std::mt19937_64& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Number of failures before the first success, success probability p in (0, 1].
inline std::uint64_t geometric_skip(std::mt19937_64& rng, double log1m_p) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    const double g = std::floor(std::log(u) / log1m_p);
    return g > 1e18 ? std::uint64_t{1} << 62 : static_cast<std::uint64_t>(g);
}

/// Poisson draw; inversion for small means, normal approximation above 200.
inline std::uint64_t poisson(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 200.0) {
        const double x = std::round(mean + std::sqrt(mean) * normal01(rng));
        return x < 0.0 ? 0 : static_cast<std::uint64_t>(x);
    }
    const double limit = std::exp(-mean);
    double prod = uniform01(rng);
    std::uint64_t k = 0;
    while (prod > limit) {
        ++k;
        prod *= uniform01(rng);
    }
    return k;
}

/// Continuous power law on [lo, hi] with density ~ x^-exponent (exponent != 1).
inline double power_law(std::mt19937_64& rng, double exponent, double lo, double hi) {
    const double a = 1.0 - exponent;
    const double u = uniform01(rng);
    const double lo_a = std::pow(lo, a);
    const double hi_a = std::pow(hi, a);
    return std::pow(lo_a + u * (hi_a - lo_a), 1.0 / a);
}

/// Fisher-Yates shuffle driven by uniform_below.
template <class T>
void shuffle(std::span<T> values, std::mt19937_64& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(values[i - 1], values[j]);
    }
}

/// Walker alias table for repeated draws from a fixed discrete distribution.
class AliasTable {
public:
    AliasTable() = default;

    explicit AliasTable(std::span<const double> weights) {
        const std::size_t n = weights.size();
        prob_.assign(n, 0.0);
        alias_.assign(n, 0);
        if (n == 0) return;
        double total = 0.0;
        for (double w : weights) total += w;
        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = total > 0.0 ? weights[i] * static_cast<double>(n) / total : 1.0;
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        while (!small.empty() && !large.empty()) {
            const auto s = small.back();
            small.pop_back();
            const auto l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (auto i : large) prob_[i] = 1.0;
        for (auto i : small) prob_[i] = 1.0;
    }

    std::size_t size() const noexcept { return prob_.size(); }

    std::size_t sample(std::mt19937_64& rng) const {
        const auto i = static_cast<std::size_t>(uniform_below(rng, prob_.size()));
        return uniform01(rng) < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

} // namespace echolens

#endif // ECHOLENS_RANDOM_HPP
