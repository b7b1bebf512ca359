#ifndef ECHOLENS_IMPACT_HPP
#define ECHOLENS_IMPACT_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "echolens/graph.hpp"
#include "echolens/types.hpp"

namespace echolens {

/// Impact (weighted in-degree) of every active user in one week.
struct WeeklyImpact {
    WeekIndex week = 0;
    /// Active users, sorted by id; aligned with `impact`.
    std::vector<UserId> users;
    std::vector<std::uint64_t> impact;
    /// Positions into `users`, highest impact first, ties by lower id.
    std::vector<std::uint32_t> order;
    std::uint64_t total = 0;

    /// Impact of `user`, 0 when inactive.
    std::uint64_t of(UserId user) const {
        auto it = std::lower_bound(users.begin(), users.end(), user);
        if (it == users.end() || *it != user) return 0;
        return impact[static_cast<std::size_t>(it - users.begin())];
    }

    /// 1-based rank of `user`; empty when inactive.
    std::optional<std::size_t> rank_of(UserId user) const {
        auto it = std::lower_bound(users.begin(), users.end(), user);
        if (it == users.end() || *it != user) return std::nullopt;
        const auto pos = static_cast<std::uint32_t>(it - users.begin());
        return static_cast<std::size_t>(std::find(order.begin(), order.end(), pos) - order.begin()) + 1;
    }
};

struct ImpactProfile {
    std::vector<WeeklyImpact> weeks;
};

inline WeeklyImpact weekly_impact(const WeeklyGraph& g) {
    WeeklyImpact w;
    w.week = g.week();
    w.users.assign(g.users().begin(), g.users().end());
    w.impact.assign(w.users.size(), 0);
    for (std::uint32_t i = 0; i < w.users.size(); ++i) {
        for (auto c : g.in_weights(i)) w.impact[i] += c;
        w.total += w.impact[i];
    }
    w.order.resize(w.users.size());
    std::iota(w.order.begin(), w.order.end(), 0u);
    std::stable_sort(w.order.begin(), w.order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return w.impact[a] > w.impact[b]; });
    return w;
}

inline ImpactProfile impact(const TemporalNetwork& net) {
    ImpactProfile p;
    p.weeks.reserve(net.n_weeks());
    for (const auto& g : net.weeks()) p.weeks.push_back(weekly_impact(g));
    return p;
}

/// Gini index of a non-negative vector, Σᵢⱼ|xᵢ−xⱼ| / (2n²x̄), via the sorted
/// form Σᵢ (2i − n − 1) x₍ᵢ₎ / (n Σx). Throws UndefinedError when every entry
/// is zero and DomainError on negative entries.
inline double gini(std::span<const double> values) {
    if (values.empty()) throw UndefinedError("gini of an empty vector");
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    if (x.front() < 0.0) throw DomainError("gini requires non-negative values");
    const double n = static_cast<double>(x.size());
    double total = 0.0;
    for (double v : x) total += v;
    if (total <= 0.0) throw UndefinedError("gini of an all-zero vector");
    // shares first, so a single owner gives exactly (n - 1) / n
    double weighted = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * (x[i] / total);
    return weighted / n;
}

/// Gini over the users active in one week.
inline double gini(const WeeklyImpact& w) {
    std::vector<double> x(w.impact.begin(), w.impact.end());
    return gini(x);
}

} // namespace echolens

#endif // ECHOLENS_IMPACT_HPP
