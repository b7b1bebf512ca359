#ifndef ECHOLENS_LEADERS_HPP
#define ECHOLENS_LEADERS_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "echolens/impact.hpp"
#include "echolens/sets.hpp"
#include "echolens/stats.hpp"
#include "echolens/types.hpp"

namespace echolens {

/// The N top-ranked users of each week.
struct HighImpactSets {
    std::size_t n = 0;
    std::vector<WeekIndex> weeks;
    /// Per week, members in rank order (rank 1 first).
    std::vector<std::vector<UserId>> ranked;
    /// Per week, members sorted by id.
    std::vector<IdSet> members;
};

/// Top-N users by impact per week; clamps to the number of active users.
inline HighImpactSets high_impact(const ImpactProfile& profile, std::size_t n) {
    if (n == 0) throw ConfigError("N must be at least 1");
    HighImpactSets hi;
    hi.n = n;
    for (const auto& w : profile.weeks) {
        const std::size_t k = std::min(n, w.order.size());
        std::vector<UserId> top;
        top.reserve(k);
        for (std::size_t r = 0; r < k; ++r) top.push_back(w.users[w.order[r]]);
        IdSet sorted = top;
        std::sort(sorted.begin(), sorted.end());
        hi.weeks.push_back(w.week);
        hi.ranked.push_back(std::move(top));
        hi.members.push_back(std::move(sorted));
    }
    return hi;
}

/// Fraction of each week's retweets received by that week's high-impact set.
inline std::vector<double> coverage(const HighImpactSets& hi, const ImpactProfile& profile) {
    std::vector<double> out;
    out.reserve(profile.weeks.size());
    for (std::size_t t = 0; t < profile.weeks.size(); ++t) {
        const auto& w = profile.weeks[t];
        std::uint64_t covered = 0;
        for (UserId u : hi.members[t]) covered += w.of(u);
        out.push_back(w.total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(w.total));
    }
    return out;
}

struct LeaderBoard {
    std::size_t n = 0;
    std::size_t m = 0;
    /// Δᵢ for every user id in the network.
    std::vector<std::uint32_t> persistence;
    /// Σₜ wᵢᵗ for every user id.
    std::vector<std::uint64_t> total_impact;
    /// Leading users ordered by (Δ desc, total impact desc, id asc).
    std::vector<UserId> leaders;
    /// Same set, sorted by id.
    IdSet leader_set;
    /// Per week: ℐ(t) ∩ leading set, sorted by id.
    std::vector<IdSet> weekly;
};

/// Persistence and leading users. Exactly min(M, #users with Δ > 0) leaders
/// are kept; with `extend_ties` users tied with the M-th on (Δ, total
/// impact) are kept as well.
inline LeaderBoard leading_users(const HighImpactSets& hi, const ImpactProfile& profile, std::size_t n_users,
                                 std::size_t m, bool extend_ties = false) {
    if (m == 0) throw ConfigError("M must be at least 1");
    LeaderBoard lb;
    lb.n = hi.n;
    lb.m = m;
    lb.persistence.assign(n_users, 0);
    lb.total_impact.assign(n_users, 0);
    for (const auto& w : profile.weeks) {
        for (std::size_t i = 0; i < w.users.size(); ++i) lb.total_impact[w.users[i]] += w.impact[i];
    }
    for (const auto& week : hi.members) {
        for (UserId u : week) ++lb.persistence[u];
    }
    std::vector<UserId> candidates;
    for (UserId u = 0; u < n_users; ++u) {
        if (lb.persistence[u] > 0) candidates.push_back(u);
    }
    auto before = [&](UserId a, UserId b) {
        if (lb.persistence[a] != lb.persistence[b]) return lb.persistence[a] > lb.persistence[b];
        if (lb.total_impact[a] != lb.total_impact[b]) return lb.total_impact[a] > lb.total_impact[b];
        return a < b;
    };
    std::sort(candidates.begin(), candidates.end(), before);
    std::size_t keep = std::min(m, candidates.size());
    if (extend_ties && keep > 0) {
        const UserId last = candidates[keep - 1];
        while (keep < candidates.size() && lb.persistence[candidates[keep]] == lb.persistence[last] &&
               lb.total_impact[candidates[keep]] == lb.total_impact[last]) {
            ++keep;
        }
    }
    lb.leaders.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep));
    lb.leader_set = lb.leaders;
    std::sort(lb.leader_set.begin(), lb.leader_set.end());
    for (const auto& week : hi.members) lb.weekly.push_back(sets::set_intersection(week, lb.leader_set));
    return lb;
}

/// One row of the leader table: persistence, total and median weekly impact.
struct LeaderRow {
    UserId user;
    std::uint32_t persistence;
    std::uint64_t total_impact;
    /// Median over all weeks in the network, inactive weeks counting as 0.
    double median_impact;
};

inline std::vector<LeaderRow> leader_table(const LeaderBoard& lb, const ImpactProfile& profile) {
    std::vector<LeaderRow> rows;
    for (UserId u : lb.leaders) {
        std::vector<double> series;
        series.reserve(profile.weeks.size());
        for (const auto& w : profile.weeks) series.push_back(static_cast<double>(w.of(u)));
        rows.push_back({u, lb.persistence[u], lb.total_impact[u], stats::median(series)});
    }
    return rows;
}

} // namespace echolens

#endif // ECHOLENS_LEADERS_HPP
