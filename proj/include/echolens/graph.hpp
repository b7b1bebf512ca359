#ifndef ECHOLENS_GRAPH_HPP
#define ECHOLENS_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "echolens/types.hpp"

namespace echolens {

/// Bijection between external user handles and dense internal ids.
class UserIndex {
public:
    /// Returns the id for `name`, assigning the next free id on first sight.
    UserId intern(std::string_view name) {
        auto it = ids_.find(std::string(name));
        if (it != ids_.end()) return it->second;
        const auto id = static_cast<UserId>(names_.size());
        names_.emplace_back(name);
        ids_.emplace(names_.back(), id);
        return id;
    }

    std::optional<UserId> find(std::string_view name) const {
        auto it = ids_.find(std::string(name));
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& name(UserId id) const { return names_.at(id); }
    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    void reserve(std::size_t n) {
        names_.reserve(n);
        ids_.reserve(n);
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, UserId> ids_;
};

/// One aggregated retweet edge: `retweeter` retweeted `author` `count` times.
struct Edge {
    UserId retweeter;
    UserId author;
    std::uint32_t count;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Immutable weekly retweet graph.
///
/// Users active in the week (as retweeter or author) are compacted to local
/// indices in increasing global-id order, so sorted local index lists map to
/// sorted global id lists. Adjacency is stored as CSR in both directions.
class WeeklyGraph {
public:
    WeeklyGraph() = default;

    /// Builds the graph from raw edges: duplicates are summed and self-loops
    /// dropped. `dropped_self_loops`, when given, receives the dropped count.
    static WeeklyGraph from_edges(WeekIndex week, std::vector<Edge> raw, std::size_t* dropped_self_loops = nullptr) {
        WeeklyGraph g;
        g.week_ = week;
        std::size_t dropped = 0;
        std::erase_if(raw, [&](const Edge& e) {
            if (e.retweeter != e.author && e.count > 0) return false;
            if (e.retweeter == e.author) ++dropped;
            return true;
        });
        if (dropped_self_loops) *dropped_self_loops = dropped;
        std::sort(raw.begin(), raw.end(), [](const Edge& a, const Edge& b) {
            return a.retweeter != b.retweeter ? a.retweeter < b.retweeter : a.author < b.author;
        });
        for (const Edge& e : raw) {
            if (!g.edges_.empty() && g.edges_.back().retweeter == e.retweeter && g.edges_.back().author == e.author) {
                g.edges_.back().count += e.count;
            } else {
                g.edges_.push_back(e);
            }
        }
        g.build_index();
        return g;
    }

    WeekIndex week() const noexcept { return week_; }

    /// Active users, sorted by global id.
    std::span<const UserId> users() const noexcept { return users_; }
    std::size_t n_users() const noexcept { return users_.size(); }

    /// Edges sorted by (retweeter, author), global ids.
    std::span<const Edge> edges() const noexcept { return edges_; }

    std::uint64_t total_weight() const noexcept { return total_weight_; }

    std::optional<std::uint32_t> local_of(UserId user) const {
        auto it = std::lower_bound(users_.begin(), users_.end(), user);
        if (it == users_.end() || *it != user) return std::nullopt;
        return static_cast<std::uint32_t>(it - users_.begin());
    }

    UserId global_of(std::uint32_t local) const { return users_[local]; }

    /// Local indices of users retweeted by `local` (sorted).
    std::span<const std::uint32_t> out_neighbors(std::uint32_t local) const {
        return {out_targets_.data() + out_offsets_[local], out_targets_.data() + out_offsets_[local + 1]};
    }

    /// Local indices of users who retweeted `local` (sorted).
    std::span<const std::uint32_t> in_neighbors(std::uint32_t local) const {
        return {in_sources_.data() + in_offsets_[local], in_sources_.data() + in_offsets_[local + 1]};
    }

    std::span<const std::uint32_t> in_weights(std::uint32_t local) const {
        return {in_counts_.data() + in_offsets_[local], in_counts_.data() + in_offsets_[local + 1]};
    }

    std::size_t in_degree(std::uint32_t local) const { return in_offsets_[local + 1] - in_offsets_[local]; }
    std::size_t out_degree(std::uint32_t local) const { return out_offsets_[local + 1] - out_offsets_[local]; }

private:
    void build_index() {
        users_.clear();
        users_.reserve(edges_.size());
        total_weight_ = 0;
        for (const Edge& e : edges_) {
            users_.push_back(e.retweeter);
            users_.push_back(e.author);
            total_weight_ += e.count;
        }
        std::sort(users_.begin(), users_.end());
        users_.erase(std::unique(users_.begin(), users_.end()), users_.end());
        users_.shrink_to_fit();

        const std::size_t n = users_.size();
        out_offsets_.assign(n + 1, 0);
        in_offsets_.assign(n + 1, 0);
        std::vector<std::uint32_t> src(edges_.size()), dst(edges_.size());
        for (std::size_t k = 0; k < edges_.size(); ++k) {
            src[k] = *local_of(edges_[k].retweeter);
            dst[k] = *local_of(edges_[k].author);
            ++out_offsets_[src[k] + 1];
            ++in_offsets_[dst[k] + 1];
        }
        for (std::size_t i = 0; i < n; ++i) {
            out_offsets_[i + 1] += out_offsets_[i];
            in_offsets_[i + 1] += in_offsets_[i];
        }
        // edges are sorted by (retweeter, author), so both fills stay sorted
        out_targets_.resize(edges_.size());
        in_sources_.resize(edges_.size());
        in_counts_.resize(edges_.size());
        std::vector<std::uint32_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
        std::vector<std::uint32_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
        for (std::size_t k = 0; k < edges_.size(); ++k) {
            out_targets_[out_fill[src[k]]++] = dst[k];
            const auto slot = in_fill[dst[k]]++;
            in_sources_[slot] = src[k];
            in_counts_[slot] = edges_[k].count;
        }
    }

    WeekIndex week_ = 0;
    std::vector<Edge> edges_;
    std::vector<UserId> users_;
    std::uint64_t total_weight_ = 0;
    std::vector<std::uint32_t> out_offsets_, out_targets_;
    std::vector<std::uint32_t> in_offsets_, in_sources_, in_counts_;
};

/// Ordered sequence of weekly graphs over a shared user index.
class TemporalNetwork {
public:
    TemporalNetwork() = default;

    /// Weeks must be strictly increasing and reference only ids in `users`.
    TemporalNetwork(UserIndex users, std::vector<WeeklyGraph> weeks) : users_(std::move(users)), weeks_(std::move(weeks)) {
        for (std::size_t i = 1; i < weeks_.size(); ++i) {
            if (weeks_[i].week() <= weeks_[i - 1].week()) throw Error("weeks must be strictly increasing");
        }
        for (const auto& w : weeks_) {
            if (!w.users().empty() && w.users().back() >= users_.size()) throw Error("edge references unknown user id");
        }
    }

    const UserIndex& users() const noexcept { return users_; }
    std::span<const WeeklyGraph> weeks() const noexcept { return weeks_; }
    std::size_t n_weeks() const noexcept { return weeks_.size(); }
    const WeeklyGraph& week(std::size_t position) const { return weeks_.at(position); }
    bool empty() const noexcept { return weeks_.empty(); }

    /// Position of week index `t` in weeks(), if present.
    std::optional<std::size_t> position_of(WeekIndex t) const {
        auto it = std::lower_bound(weeks_.begin(), weeks_.end(), t,
                                   [](const WeeklyGraph& g, WeekIndex v) { return g.week() < v; });
        if (it == weeks_.end() || it->week() != t) return std::nullopt;
        return static_cast<std::size_t>(it - weeks_.begin());
    }

    std::size_t total_edges() const {
        std::size_t n = 0;
        for (const auto& w : weeks_) n += w.edges().size();
        return n;
    }

private:
    UserIndex users_;
    std::vector<WeeklyGraph> weeks_;
};

} // namespace echolens

#endif // ECHOLENS_GRAPH_HPP
