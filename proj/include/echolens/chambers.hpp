#ifndef ECHOLENS_CHAMBERS_HPP
#define ECHOLENS_CHAMBERS_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "echolens/graph.hpp"
#include "echolens/parallel.hpp"
#include "echolens/sets.hpp"
#include "echolens/stats.hpp"
#include "echolens/types.hpp"

namespace echolens {

/// Users who retweeted `leader` in `week`.
struct AudienceSet {
    UserId leader = 0;
    WeekIndex week = 0;
    IdSet members;
    /// The leader did not appear in the week at all.
    bool leader_absent = false;
};

/// Users retweeted by the audience of `leader`, minus the week's high-impact set.
struct ChamberSet {
    UserId leader = 0;
    WeekIndex week = 0;
    IdSet members;
};

namespace detail {

// Union of out-neighbourhoods of `sources` (local indices), minus `excluded`
// (sorted global ids), returned as sorted global ids.
inline IdSet two_hop(const WeeklyGraph& g, std::span<const std::uint32_t> sources, std::span<const UserId> excluded) {
    const std::size_t n = g.n_users();
    std::vector<std::uint64_t> bits((n + 63) / 64, 0);
    std::size_t touched = 0;
    for (auto s : sources) {
        for (auto v : g.out_neighbors(s)) {
            bits[v >> 6] |= std::uint64_t{1} << (v & 63);
            ++touched;
        }
    }
    if (touched == 0) return {};
    for (UserId x : excluded) {
        if (auto l = g.local_of(x)) bits[*l >> 6] &= ~(std::uint64_t{1} << (*l & 63));
    }
    IdSet out;
    for (std::size_t w = 0; w < bits.size(); ++w) {
        std::uint64_t word = bits[w];
        while (word) {
            const auto b = static_cast<std::size_t>(std::countr_zero(word));
            out.push_back(g.global_of(static_cast<std::uint32_t>(w * 64 + b)));
            word &= word - 1;
        }
    }
    return out;
}

inline std::vector<std::uint32_t> to_local(const WeeklyGraph& g, std::span<const UserId> users) {
    std::vector<std::uint32_t> out;
    out.reserve(users.size());
    for (UserId u : users) {
        if (auto l = g.local_of(u)) out.push_back(*l);
    }
    return out;
}

} // namespace detail

inline AudienceSet audience(const WeeklyGraph& g, UserId leader) {
    AudienceSet a;
    a.leader = leader;
    a.week = g.week();
    const auto local = g.local_of(leader);
    if (!local) {
        a.leader_absent = true;
        return a;
    }
    for (auto s : g.in_neighbors(*local)) a.members.push_back(g.global_of(s));
    return a;
}

/// Chamber of an arbitrary audience (sorted global ids).
inline IdSet chamber_of_audience(const WeeklyGraph& g, std::span<const UserId> audience_members,
                                 std::span<const UserId> high_impact) {
    const auto local = detail::to_local(g, audience_members);
    return detail::two_hop(g, local, high_impact);
}

/// `high_impact` is the week's ℐ(t), sorted by id.
inline ChamberSet chamber(const WeeklyGraph& g, UserId leader, std::span<const UserId> high_impact) {
    ChamberSet c;
    c.leader = leader;
    c.week = g.week();
    if (const auto local = g.local_of(leader)) c.members = detail::two_hop(g, g.in_neighbors(*local), high_impact);
    return c;
}

/// Audience and chamber of one leader in one week.
struct LeaderChamber {
    UserId leader = 0;
    IdSet audience;
    IdSet chamber;
};

/// Audiences and chambers of every leader in `present`, in the given order.
inline std::vector<LeaderChamber> compute_chambers(const WeeklyGraph& g, std::span<const UserId> present,
                                                   std::span<const UserId> high_impact, unsigned workers = 1) {
    std::vector<LeaderChamber> out(present.size());
    parallel_for(present.size(), workers, [&](std::size_t k) {
        out[k].leader = present[k];
        out[k].audience = audience(g, present[k]).members;
        out[k].chamber = chamber(g, present[k], high_impact).members;
    });
    return out;
}

/// Symmetric leader-by-leader overlap matrix with a presence mask.
class OverlapMatrix {
public:
    OverlapMatrix() = default;
    explicit OverlapMatrix(std::vector<UserId> leaders)
        : leaders_(std::move(leaders)), values_(leaders_.size() * leaders_.size(), 0.0),
          defined_(leaders_.size() * leaders_.size(), 0) {}

    std::size_t size() const noexcept { return leaders_.size(); }
    const std::vector<UserId>& leaders() const noexcept { return leaders_; }

    bool defined(std::size_t i, std::size_t j) const { return defined_[i * size() + j] != 0; }

    /// Value, or empty when masked.
    std::optional<double> get(std::size_t i, std::size_t j) const {
        if (!defined(i, j)) return std::nullopt;
        return values_[i * size() + j];
    }

    /// Value with masked entries read as 0.
    double value_or_zero(std::size_t i, std::size_t j) const { return defined(i, j) ? values_[i * size() + j] : 0.0; }

    void set(std::size_t i, std::size_t j, double v) {
        values_[i * size() + j] = v;
        values_[j * size() + i] = v;
        defined_[i * size() + j] = 1;
        defined_[j * size() + i] = 1;
    }

    void mask(std::size_t i, std::size_t j) {
        values_[i * size() + j] = values_[j * size() + i] = 0.0;
        defined_[i * size() + j] = defined_[j * size() + i] = 0;
    }

    /// Index of `leader` in leaders(), if any.
    std::optional<std::size_t> index_of(UserId leader) const {
        auto it = std::find(leaders_.begin(), leaders_.end(), leader);
        if (it == leaders_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - leaders_.begin());
    }

    /// Defined off-diagonal values qᵢⱼ, i < j.
    std::vector<double> upper_values() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < size(); ++i) {
            for (std::size_t j = i + 1; j < size(); ++j) {
                if (defined(i, j)) out.push_back(values_[i * size() + j]);
            }
        }
        return out;
    }

private:
    std::vector<UserId> leaders_;
    std::vector<double> values_;
    std::vector<std::uint8_t> defined_;
};

/// Overlap matrix over `leaders` from precomputed chambers. Leaders without a
/// chamber entry are masked, as are pairs whose chambers are both empty.
inline OverlapMatrix overlap_from_chambers(std::span<const UserId> leaders, std::span<const LeaderChamber> chambers,
                                           unsigned workers = 1) {
    OverlapMatrix q(std::vector<UserId>(leaders.begin(), leaders.end()));
    std::vector<const IdSet*> by_slot(leaders.size(), nullptr);
    for (const auto& c : chambers) {
        if (auto i = q.index_of(c.leader)) by_slot[*i] = &c.chamber;
    }
    std::vector<std::size_t> slots;
    std::size_t total = 0;
    UserId lo = ~UserId{0}, hi = 0;
    for (std::size_t i = 0; i < by_slot.size(); ++i) {
        if (!by_slot[i]) continue;
        slots.push_back(i);
        const auto& c = *by_slot[i];
        total += c.size();
        if (!c.empty()) {
            lo = std::min(lo, c.front());
            hi = std::max(hi, c.back());
        }
    }
    if (slots.empty()) return q;

    // Dense chambers relative to their id range: word-parallel bitmaps beat merges.
    const double avg = static_cast<double>(total) / static_cast<double>(slots.size());
    const std::size_t range = total > 0 ? static_cast<std::size_t>(hi - lo) + 1 : 0;
    const bool use_bitmap = total > 0 && 2.0 * avg > static_cast<double>(range) / 64.0;
    std::vector<sets::Bitset> bitmaps;
    if (use_bitmap) {
        bitmaps.resize(by_slot.size());
        parallel_for(slots.size(), workers, [&](std::size_t k) {
            const auto& c = *by_slot[slots[k]];
            sets::Bitset b(range);
            for (UserId x : c) b.set(x - lo);
            bitmaps[slots[k]] = std::move(b);
        });
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < slots.size(); ++a) {
        for (std::size_t b = a; b < slots.size(); ++b) pairs.emplace_back(slots[a], slots[b]);
    }
    std::vector<std::optional<double>> results(pairs.size());
    parallel_for(pairs.size(), workers, [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        const auto& ci = *by_slot[i];
        const auto& cj = *by_slot[j];
        if (ci.empty() && cj.empty()) return;
        const std::size_t inter = use_bitmap ? bitmaps[i].intersection_size(bitmaps[j]) : sets::intersection_size(ci, cj);
        results[k] = static_cast<double>(inter) / static_cast<double>(ci.size() + cj.size() - inter);
    });
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (results[k]) q.set(pairs[k].first, pairs[k].second, *results[k]);
    }
    return q;
}

/// Weekly chamber overlap matrix over the full leader list; leaders not in
/// `present` (the week's ℐ^Δ(t)) are masked.
inline OverlapMatrix overlap_matrix(const WeeklyGraph& g, std::span<const UserId> leaders,
                                    std::span<const UserId> present, std::span<const UserId> high_impact,
                                    unsigned workers = 1) {
    const auto chambers = compute_chambers(g, present, high_impact, workers);
    return overlap_from_chambers(leaders, chambers, workers);
}

/// Mean of weekly matrices over the weeks where each pair is defined;
/// never co-defined pairs stay masked. All inputs share one leader list.
inline OverlapMatrix aggregate(std::span<const OverlapMatrix> weekly) {
    if (weekly.empty()) return {};
    OverlapMatrix out(weekly.front().leaders());
    const std::size_t n = out.size();
    for (const auto& m : weekly) {
        if (m.leaders() != out.leaders()) throw Error("aggregate: weekly matrices have different leader lists");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& m : weekly) {
                if (auto v = m.get(i, j)) {
                    sum += *v;
                    ++count;
                }
            }
            if (count > 0) out.set(i, j, sum / static_cast<double>(count));
        }
    }
    return out;
}

/// Overlap of the chambers rebuilt from 𝒜ᵢ \ 𝒜ⱼ and 𝒜ⱼ \ 𝒜ᵢ. Empty (masked)
/// when either audience is contained in the other or both rebuilt chambers
/// are empty.
inline std::optional<double> subchamber_overlap(const WeeklyGraph& g, UserId i, UserId j,
                                                std::span<const UserId> high_impact) {
    const auto ai = audience(g, i).members;
    const auto aj = audience(g, j).members;
    const auto only_i = sets::set_difference(ai, aj);
    const auto only_j = sets::set_difference(aj, ai);
    if (only_i.empty() || only_j.empty()) return std::nullopt;
    const auto ci = chamber_of_audience(g, only_i, high_impact);
    const auto cj = chamber_of_audience(g, only_j, high_impact);
    return sets::jaccard(ci, cj);
}

/// Empirical distribution of a size sample.
struct SizeSummary {
    double mean = 0.0;
    double sd = 0.0;
    /// (size, P[X ≤ size]) at each distinct size.
    std::vector<std::pair<std::size_t, double>> cdf;
};

struct SizeDiagnostics {
    SizeSummary audience;
    SizeSummary chamber;
    /// Pearson correlation of paired sizes; empty when either variance is zero.
    std::optional<double> rho;
};

inline SizeSummary summarize_sizes(std::span<const std::size_t> sizes) {
    SizeSummary s;
    std::vector<double> x(sizes.begin(), sizes.end());
    s.mean = stats::mean(x);
    s.sd = stats::stddev(x);
    std::vector<std::size_t> sorted(sizes.begin(), sizes.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (k + 1 == sorted.size() || sorted[k + 1] != sorted[k]) {
            s.cdf.emplace_back(sorted[k], static_cast<double>(k + 1) / static_cast<double>(sorted.size()));
        }
    }
    return s;
}

/// Paired (leader, week) audience and chamber sizes; needs at least two samples.
inline SizeDiagnostics size_diagnostics(std::span<const std::size_t> audience_sizes,
                                        std::span<const std::size_t> chamber_sizes) {
    if (audience_sizes.size() != chamber_sizes.size()) throw DomainError("size samples must be paired");
    if (audience_sizes.size() < 2) throw DomainError("size diagnostics need at least two samples");
    SizeDiagnostics d;
    d.audience = summarize_sizes(audience_sizes);
    d.chamber = summarize_sizes(chamber_sizes);
    std::vector<double> a(audience_sizes.begin(), audience_sizes.end());
    std::vector<double> c(chamber_sizes.begin(), chamber_sizes.end());
    d.rho = stats::pearson(a, c);
    return d;
}

} // namespace echolens

#endif // ECHOLENS_CHAMBERS_HPP
