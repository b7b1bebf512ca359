#ifndef ECHOLENS_NULLMODEL_HPP
#define ECHOLENS_NULLMODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "echolens/chambers.hpp"
#include "echolens/graph.hpp"
#include "echolens/parallel.hpp"
#include "echolens/random.hpp"
#include "echolens/sets.hpp"
#include "echolens/stats.hpp"
#include "echolens/types.hpp"

namespace echolens {

/// In-degree sequence of a network, with moments and a compressed histogram.
class DegreeSequence {
public:
    DegreeSequence() = default;

    explicit DegreeSequence(std::vector<double> k) : k_(std::move(k)) {
        std::map<double, std::size_t> hist;
        for (double v : k_) {
            if (!(v >= 0.0)) throw DomainError("degrees must be non-negative");
            ++hist[v];
            sum_ += v;
            sum2_ += v * v;
            kmax_ = std::max(kmax_, v);
        }
        for (auto [v, c] : hist) {
            values_.push_back(v);
            counts_.push_back(static_cast<double>(c));
        }
    }

    /// Unweighted in-degree (distinct retweeters) of every active user; with
    /// `weighted`, the impact instead.
    static DegreeSequence from_graph(const WeeklyGraph& g, bool weighted = false) {
        std::vector<double> k(g.n_users());
        for (std::uint32_t i = 0; i < g.n_users(); ++i) {
            if (weighted) {
                double s = 0.0;
                for (auto c : g.in_weights(i)) s += c;
                k[i] = s;
            } else {
                k[i] = static_cast<double>(g.in_degree(i));
            }
        }
        return DegreeSequence(std::move(k));
    }

    std::size_t n() const noexcept { return k_.size(); }
    const std::vector<double>& k() const noexcept { return k_; }
    double mean() const { return n() ? sum_ / static_cast<double>(n()) : 0.0; }
    double mean_sq() const { return n() ? sum2_ / static_cast<double>(n()) : 0.0; }
    double k_max() const noexcept { return kmax_; }
    /// k_max / N; the closed-form approximations assume this is small.
    double sparsity() const { return n() ? kmax_ / static_cast<double>(n()) : 0.0; }

    /// Distinct degree values and their multiplicities.
    const std::vector<double>& distinct() const noexcept { return values_; }
    const std::vector<double>& multiplicity() const noexcept { return counts_; }

private:
    std::vector<double> k_;
    std::vector<double> values_, counts_;
    double sum_ = 0.0, sum2_ = 0.0, kmax_ = 0.0;
};

/// Probability that a user of degree k_ell lies in the chamber of a user of
/// degree k_i: 1 − (1 − kᵢk_ℓ/N²)^N, evaluated as −expm1(N·log1p(−x)).
inline double prob_in_chamber(double k_i, double k_ell, double n) {
    if (!(n > 0.0)) throw DomainError("N must be positive");
    const double x = k_i * k_ell / (n * n);
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("k_i*k_ell/N^2 must lie in [0, 1]");
    return -std::expm1(n * std::log1p(-x));
}

/// Expected audience overlap kᵢkⱼ / (N(kᵢ + kⱼ)); empty when kᵢ = kⱼ = 0.
inline std::optional<double> expected_audience_overlap(double k_i, double k_j, double n) {
    if (k_i < 0.0 || k_j < 0.0 || !(n > 0.0)) throw DomainError("degrees must be non-negative and N positive");
    if (k_i + k_j <= 0.0) return std::nullopt;
    return k_i * k_j / (n * (k_i + k_j));
}

struct NullChamberOverlap {
    /// ⟨PᵢPⱼ⟩ / ⟨Pᵢ + Pⱼ⟩ averaged over the degree sequence; empty when the
    /// denominator vanishes.
    std::optional<double> ratio;
    /// kᵢkⱼ/(N(kᵢ+kⱼ)) · ⟨k²⟩/⟨k⟩, valid for k_max ≪ N.
    std::optional<double> approx;
};

inline NullChamberOverlap expected_chamber_overlap(double k_i, double k_j, const DegreeSequence& deg) {
    NullChamberOverlap out;
    const double n = static_cast<double>(deg.n());
    if (n <= 0.0) return out;
    double num = 0.0, den = 0.0;
    const auto& vals = deg.distinct();
    const auto& mult = deg.multiplicity();
    for (std::size_t a = 0; a < vals.size(); ++a) {
        const double pi = prob_in_chamber(k_i, vals[a], n);
        const double pj = prob_in_chamber(k_j, vals[a], n);
        num += mult[a] * pi * pj;
        den += mult[a] * (pi + pj);
    }
    if (den > 0.0) out.ratio = num / den;
    if (k_i + k_j > 0.0 && deg.mean() > 0.0) out.approx = k_i * k_j / (n * (k_i + k_j)) * deg.mean_sq() / deg.mean();
    return out;
}

/// Expected chamber Jaccard E|Cᵢ∩Cⱼ| / E|Cᵢ∪Cⱼ| for nodes `i`, `j` of the
/// soft configuration model without self-loops, with the two nodes excluded
/// from the chambers. Joint membership is computed exactly: given ℓ's set of
/// retweeters, membership in Cᵢ and Cⱼ is independent.
inline std::optional<double> expected_chamber_jaccard(const DegreeSequence& deg, std::size_t i, std::size_t j) {
    const std::size_t n_users = deg.n();
    if (i >= n_users || j >= n_users || i == j) throw DomainError("expected_chamber_jaccard needs two distinct nodes");
    const double n = static_cast<double>(n_users);
    const double pi = deg.k()[i] / n;
    const double pj = deg.k()[j] / n;
    const double either = 1.0 - (1.0 - pi) * (1.0 - pj);
    double inter = 0.0, uni = 0.0;
    const auto& vals = deg.distinct();
    const auto& mult = deg.multiplicity();
    for (std::size_t a = 0; a < vals.size(); ++a) {
        double count = mult[a];
        if (vals[a] == deg.k()[i]) count -= 1.0;
        if (vals[a] == deg.k()[j]) count -= 1.0;
        if (count <= 0.0) continue;
        const double pl = vals[a] / n;
        const double out_i = std::exp((n - 2.0) * std::log1p(-pl * pi));
        const double out_j = std::exp((n - 2.0) * std::log1p(-pl * pj));
        const double out_both = std::exp((n - 3.0) * std::log1p(-pl * either)) * (1.0 - pl * pi) * (1.0 - pl * pj);
        inter += count * (1.0 - out_i - out_j + out_both);
        uni += count * (1.0 - out_both);
    }
    if (uni <= 0.0) return std::nullopt;
    return inter / uni;
}

/// Soft configuration model: each edge j → i (j ≠ i) is present independently
/// with probability kᵢ/N. Node ids are positions in the degree sequence.
inline WeeklyGraph sample_configuration_graph(const DegreeSequence& deg, std::uint64_t seed, WeekIndex week = 0) {
    const std::size_t n = deg.n();
    auto rng = substream(seed, 0x636f6e66u);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = deg.k()[i] / static_cast<double>(n);
        if (p > 1.0) throw DomainError("degree exceeds N");
        if (p <= 0.0) continue;
        const double log1m = std::log1p(-p);
        // candidates are the n - 1 sources other than i
        std::uint64_t pos = 0;
        for (;;) {
            pos += geometric_skip(rng, log1m);
            if (pos >= n - 1) break;
            const auto src = static_cast<UserId>(pos < i ? pos : pos + 1);
            edges.push_back(Edge{src, static_cast<UserId>(i), 1});
            ++pos;
        }
    }
    return WeeklyGraph::from_edges(week, std::move(edges));
}

/// Monte-Carlo ensemble of chamber overlaps for a node pair.
struct EnsembleOverlap {
    double mean = 0.0;
    double sd = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};

/// Samples `reps` configuration graphs and measures the chamber overlap of
/// nodes `i` and `j` with the chambers module, excluding {i, j} as the
/// high-impact set. Rep r uses its own substream, so results do not depend
/// on `workers`.
inline EnsembleOverlap monte_carlo_chamber_overlap(const DegreeSequence& deg, std::size_t i, std::size_t j,
                                                   std::size_t reps, std::uint64_t seed, unsigned workers = 1) {
    std::vector<std::optional<double>> q(reps);
    IdSet excluded{static_cast<UserId>(std::min(i, j)), static_cast<UserId>(std::max(i, j))};
    parallel_for(reps, workers, [&](std::size_t r) {
        const auto g = sample_configuration_graph(deg, splitmix64(seed + r));
        const auto ci = chamber(g, static_cast<UserId>(i), excluded).members;
        const auto cj = chamber(g, static_cast<UserId>(j), excluded).members;
        q[r] = sets::jaccard(ci, cj);
    });
    std::vector<double> values;
    for (const auto& v : q) {
        if (v) values.push_back(*v);
    }
    EnsembleOverlap e;
    e.samples = values.size();
    e.mean = stats::mean(values);
    e.sd = stats::stddev(values);
    e.standard_error = values.empty() ? 0.0 : e.sd / std::sqrt(static_cast<double>(values.size()));
    return e;
}

/// Expected chamber overlap (ratio form) for every pair of the given leader
/// degrees, i < j; masked pairs are skipped.
inline std::vector<double> null_overlap_distribution(const DegreeSequence& deg, std::span<const double> leader_degrees) {
    std::vector<double> out;
    for (std::size_t a = 0; a < leader_degrees.size(); ++a) {
        for (std::size_t b = a + 1; b < leader_degrees.size(); ++b) {
            if (auto r = expected_chamber_overlap(leader_degrees[a], leader_degrees[b], deg).ratio) out.push_back(*r);
        }
    }
    return out;
}

/// `reps` uniformly random permutations of `labels` (group sizes preserved).
inline std::vector<std::vector<int>> reshuffle_labels(std::span<const int> labels, std::uint64_t seed, std::size_t reps = 100) {
    if (reps == 0) throw ConfigError("reps must be at least 1");
    std::vector<std::vector<int>> out(reps, std::vector<int>(labels.begin(), labels.end()));
    for (std::size_t r = 0; r < reps; ++r) {
        auto rng = substream(seed, 0x72657368u, r);
        shuffle(std::span<int>(out[r]), rng);
    }
    return out;
}

} // namespace echolens

#endif // ECHOLENS_NULLMODEL_HPP
