#ifndef ECHOLENS_ECHO_HPP
#define ECHOLENS_ECHO_HPP

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "echolens/chambers.hpp"
#include "echolens/graph.hpp"
#include "echolens/sets.hpp"
#include "echolens/stats.hpp"
#include "echolens/types.hpp"

namespace echolens {

/// Two-group echo chambers of one week. Group g is the union of {i} ∪ 𝒜ᵢ ∪ 𝒞ᵢ
/// over the group's leaders.
struct WeeklyEcho {
    WeekIndex week = 0;
    std::array<IdSet, 2> members;
    /// The group had no leader contributing this week.
    std::array<bool, 2> empty_group{true, true};
    std::size_t intersection = 0;
    /// Active (retweeting) users in the week.
    std::size_t population = 0;

    double fraction(int group) const {
        return population ? static_cast<double>(members[group].size()) / static_cast<double>(population) : 0.0;
    }
    double intersection_fraction() const {
        return population ? static_cast<double>(intersection) / static_cast<double>(population) : 0.0;
    }
};

/// Assembles the echo chambers from per-leader chambers. `labels` maps each
/// leader id to group 0 or 1; leaders missing from it are ignored.
inline WeeklyEcho build_echo_chambers(const WeeklyGraph& g, std::span<const LeaderChamber> chambers,
                                      const std::map<UserId, int>& labels) {
    WeeklyEcho e;
    e.week = g.week();
    e.population = g.n_users();
    for (const auto& c : chambers) {
        auto it = labels.find(c.leader);
        if (it == labels.end()) continue;
        const int grp = it->second;
        auto& m = e.members[grp];
        m.push_back(c.leader);
        m.insert(m.end(), c.audience.begin(), c.audience.end());
        m.insert(m.end(), c.chamber.begin(), c.chamber.end());
        e.empty_group[grp] = false;
    }
    for (auto& m : e.members) sets::normalize(m);
    e.intersection = sets::intersection_size(e.members[0], e.members[1]);
    return e;
}

/// Ideology score record sᵢ = (n₀ − n₁)/(n₀ + n₁), nₓ = |𝒜ᵢ ∩ 𝓔ₓ|.
struct ScoreRecord {
    UserId user = 0;
    WeekIndex week = 0;
    std::size_t n[2] = {0, 0};
    /// Empty when n₀ + n₁ = 0 (unclassifiable).
    std::optional<double> score;
};

/// η-rule: 0 when s ≥ η, 1 when −s ≥ η, empty otherwise.
inline std::optional<int> classify(const ScoreRecord& r, double eta) {
    if (!r.score) return std::nullopt;
    if (*r.score >= eta) return 0;
    if (-*r.score >= eta) return 1;
    return std::nullopt;
}

inline ScoreRecord ideology_score(std::span<const UserId> audience_members, const WeeklyEcho& base, UserId user) {
    ScoreRecord r;
    r.user = user;
    r.week = base.week;
    r.n[0] = sets::intersection_size(audience_members, base.members[0]);
    r.n[1] = sets::intersection_size(audience_members, base.members[1]);
    const std::size_t total = r.n[0] + r.n[1];
    if (total > 0) {
        r.score = (static_cast<double>(r.n[0]) - static_cast<double>(r.n[1])) / static_cast<double>(total);
    }
    return r;
}

inline ScoreRecord ideology_score(const WeeklyGraph& g, UserId user, const WeeklyEcho& base) {
    return ideology_score(audience(g, user).members, base, user);
}

/// A scored high-impact user and their audience.
struct ScoredUser {
    ScoreRecord record;
    IdSet audience;
};

/// Scores every high-impact, non-leading user of the week against the base chambers.
inline std::vector<ScoredUser> score_high_impact(const WeeklyGraph& g, std::span<const UserId> high_impact,
                                                 std::span<const UserId> leading, const WeeklyEcho& base) {
    std::vector<ScoredUser> out;
    for (UserId u : high_impact) {
        if (sets::contains(leading, u)) continue;
        ScoredUser s;
        s.audience = audience(g, u).members;
        s.record = ideology_score(s.audience, base, u);
        out.push_back(std::move(s));
    }
    return out;
}

struct Census {
    std::size_t classified[2] = {0, 0};
    /// |s| < η, or no audience overlap with either chamber.
    std::size_t unclassified = 0;
    /// Subset of `unclassified` with n₀ + n₁ = 0.
    std::size_t unscorable = 0;
};

struct AugmentedEcho {
    WeekIndex week = 0;
    std::array<IdSet, 2> members;
    std::size_t intersection = 0;
    std::size_t population = 0;
    Census census;
};

/// 𝓔ₓᵃ = 𝓔ₓ ∪ ⋃ {i} ∪ 𝒜ᵢ over scored users classified to x under η. One pass:
/// scores come from the base chambers only.
inline AugmentedEcho augment(const WeeklyEcho& base, std::span<const ScoredUser> scored, double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
    AugmentedEcho a;
    a.week = base.week;
    a.population = base.population;
    a.members = base.members;
    for (const auto& s : scored) {
        const auto cls = classify(s.record, eta);
        if (!cls) {
            ++a.census.unclassified;
            if (!s.record.score) ++a.census.unscorable;
            continue;
        }
        ++a.census.classified[*cls];
        auto& m = a.members[*cls];
        m.push_back(s.record.user);
        m.insert(m.end(), s.audience.begin(), s.audience.end());
    }
    for (auto& m : a.members) sets::normalize(m);
    a.intersection = sets::intersection_size(a.members[0], a.members[1]);
    return a;
}

struct LagSummary {
    int lag = 0;
    std::size_t pairs = 0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double mean = 0.0;
    double sd = 0.0;
};

struct DecayCurve {
    std::vector<LagSummary> lags;
    /// Weeks dropped because the set was empty.
    std::vector<WeekIndex> excluded;
};

/// Jaccard of the same group's sets over all week pairs (t, τ), summarized by
/// lag τ − t. Empty weeks are excluded; needs two non-empty weeks.
inline DecayCurve auto_overlap(std::span<const WeekIndex> weeks, std::span<const IdSet> members) {
    if (weeks.size() != members.size()) throw DomainError("one member set per week");
    DecayCurve d;
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < weeks.size(); ++k) {
        if (members[k].empty()) {
            d.excluded.push_back(weeks[k]);
        } else {
            keep.push_back(k);
        }
    }
    if (keep.size() < 2) throw DomainError("auto-overlap needs at least two non-empty weeks");
    std::map<int, std::vector<double>> by_lag;
    by_lag[0].assign(keep.size(), 1.0);
    for (std::size_t a = 0; a < keep.size(); ++a) {
        for (std::size_t b = a + 1; b < keep.size(); ++b) {
            const int lag = weeks[keep[b]] - weeks[keep[a]];
            by_lag[lag].push_back(*sets::jaccard(members[keep[a]], members[keep[b]]));
        }
    }
    for (const auto& [lag, v] : by_lag) {
        LagSummary s;
        s.lag = lag;
        s.pairs = v.size();
        s.median = stats::median(v);
        s.q25 = stats::quantile(v, 0.25);
        s.q75 = stats::quantile(v, 0.75);
        s.mean = stats::mean(v);
        s.sd = stats::stddev(v);
        d.lags.push_back(s);
    }
    return d;
}

struct SizeRow {
    WeekIndex week = 0;
    std::size_t size[2] = {0, 0};
    std::size_t intersection = 0;
    std::size_t population = 0;
    /// |𝓔₁ᵃ| / |𝓔₀ᵃ|; empty when either chamber is empty.
    std::optional<double> ratio;
};

inline std::vector<SizeRow> size_series(std::span<const AugmentedEcho> weeks) {
    std::vector<SizeRow> rows;
    for (const auto& a : weeks) {
        SizeRow r;
        r.week = a.week;
        r.size[0] = a.members[0].size();
        r.size[1] = a.members[1].size();
        r.intersection = a.intersection;
        r.population = a.population;
        if (r.size[0] > 0 && r.size[1] > 0) r.ratio = static_cast<double>(r.size[1]) / static_cast<double>(r.size[0]);
        rows.push_back(r);
    }
    return rows;
}

} // namespace echolens

#endif // ECHOLENS_ECHO_HPP
