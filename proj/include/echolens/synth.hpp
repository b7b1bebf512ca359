#ifndef ECHOLENS_SYNTH_HPP
#define ECHOLENS_SYNTH_HPP

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "echolens/graph.hpp"
#include "echolens/parallel.hpp"
#include "echolens/random.hpp"
#include "echolens/types.hpp"

namespace echolens {

/// Parameters of the planted two-community temporal retweet network.
///
/// Each week every active member makes Poisson-many endorsements of three
/// kinds: leaders, transient hubs and peers. Each endorsement targets the
/// member's own group with probability 1 − mixing and the other group
/// otherwise. Member slots survive to the next week with probability
/// `survival` and are otherwise refilled by fresh users.
struct PlantedConfig {
    int weeks = 39;
    std::array<std::size_t, 2> pool{7000, 3000};
    std::array<std::size_t, 2> leaders{35, 15};
    /// Weakly attached leaders of group 0 with their own member pool.
    std::size_t satellites = 0;
    std::size_t satellite_pool = 800;
    double satellite_mixing = 0.1;
    std::array<std::size_t, 2> hub_pool{400, 200};
    std::array<std::size_t, 2> hubs_active{12, 8};
    double mixing = 0.02;
    double survival = 0.18;
    /// Per-leader weekly activity probability, uniform in [lo, hi].
    double activity_lo = 0.4;
    double activity_hi = 0.95;
    /// Per-leader endorsement share, uniform in [lo, hi].
    double popularity_lo = 1.0;
    double popularity_hi = 2.0;
    /// Extra retweets per leader endorsement ~ Poisson(intensity), intensity
    /// power-law distributed; drives the heavy-tailed impact.
    double intensity_exponent = 2.2;
    double intensity_max = 10.0;
    /// Expected endorsements per member per active leader of the member's group.
    double leader_endorsements = 0.08;
    double hub_endorsements = 0.5;
    double peer_endorsements = 4.5;
    /// Peer popularity weights, power law on [1, peer_weight_max].
    double peer_weight_exponent = 2.2;
    double peer_weight_max = 50.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (weeks <= 0) throw ConfigError("synth: weeks must be positive");
        for (int g = 0; g < 2; ++g) {
            if (pool[g] < 2 || leaders[g] == 0) throw ConfigError("synth: pools and leader counts must be positive");
            if (hubs_active[g] > hub_pool[g]) throw ConfigError("synth: more active hubs than the hub pool holds");
        }
        if (satellites > 0 && satellite_pool < 2) throw ConfigError("synth: satellite pool too small");
        auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!unit(mixing) || !unit(survival) || !unit(satellite_mixing)) throw ConfigError("synth: probabilities must lie in [0, 1]");
        if (!(activity_lo >= 0.0 && activity_lo <= activity_hi && activity_hi <= 1.0)) {
            throw ConfigError("synth: activity range must lie in [0, 1]");
        }
        if (!(popularity_lo > 0.0 && popularity_lo <= popularity_hi)) throw ConfigError("synth: bad popularity range");
        if (!(intensity_exponent > 1.0) || !(intensity_max >= 1.0)) throw ConfigError("synth: bad intensity distribution");
        if (!(peer_weight_exponent > 1.0) || !(peer_weight_max >= 1.0)) throw ConfigError("synth: bad peer weight distribution");
        if (leader_endorsements < 0.0 || hub_endorsements < 0.0 || peer_endorsements < 0.0) {
            throw ConfigError("synth: endorsement rates must be non-negative");
        }
    }
};

/// Generated network with ground truth.
struct PlantedNetwork {
    TemporalNetwork network;
    /// Planted group per user id: 0, 1, or -1 for none.
    std::vector<int> labels;
    /// Planted leaders (group 0 first, then group 1, then satellites).
    std::vector<UserId> leaders;
    std::vector<UserId> satellites;
    /// Member pools per week and group (the churn process), sorted.
    std::vector<std::array<IdSet, 2>> members;
};

namespace detail {

enum : std::uint64_t { kStreamSetup = 1, kStreamChurn = 2, kStreamWeek = 3 };

} // namespace detail

inline PlantedNetwork generate(const PlantedConfig& cfg, unsigned workers = 1) {
    cfg.validate();
    PlantedNetwork out;
    UserIndex users;
    std::vector<int> label;
    auto add_user = [&](const std::string& name, int group) {
        const UserId id = users.intern(name);
        label.push_back(group);
        return id;
    };

    auto setup = substream(cfg.seed, detail::kStreamSetup);
    struct Leader {
        UserId id;
        int group;
        bool satellite;
        double activity, popularity, intensity;
    };
    std::vector<Leader> leaders;
    for (int g = 0; g < 2; ++g) {
        for (std::size_t k = 0; k < cfg.leaders[g]; ++k) {
            Leader l{add_user("L" + std::to_string(g) + "_" + std::to_string(k), g), g, false, 0, 0, 0};
            leaders.push_back(l);
        }
    }
    for (std::size_t k = 0; k < cfg.satellites; ++k) {
        leaders.push_back(Leader{add_user("LS_" + std::to_string(k), 0), 0, true, 0, 0, 0});
    }
    for (auto& l : leaders) {
        l.activity = cfg.activity_lo + (cfg.activity_hi - cfg.activity_lo) * uniform01(setup);
        l.popularity = cfg.popularity_lo + (cfg.popularity_hi - cfg.popularity_lo) * uniform01(setup);
        l.intensity = power_law(setup, cfg.intensity_exponent, 1.0, cfg.intensity_max) - 1.0;
        (l.satellite ? out.satellites : out.leaders).push_back(l.id);
    }
    out.leaders.insert(out.leaders.end(), out.satellites.begin(), out.satellites.end());
    std::array<std::vector<UserId>, 2> hubs;
    for (int g = 0; g < 2; ++g) {
        for (std::size_t k = 0; k < cfg.hub_pool[g]; ++k) hubs[g].push_back(add_user("H" + std::to_string(g) + "_" + std::to_string(k), g));
    }

    // Churn: pools 0, 1 and (optionally) 2 = satellite pool, each slot with a peer weight.
    const std::size_t n_pools = cfg.satellites > 0 ? 3 : 2;
    std::array<std::size_t, 3> pool_size{cfg.pool[0], cfg.pool[1], cfg.satellite_pool};
    std::array<int, 3> pool_group{0, 1, 0};
    std::vector<std::array<std::vector<UserId>, 3>> pools(static_cast<std::size_t>(cfg.weeks));
    std::vector<std::array<std::vector<double>, 3>> weights(static_cast<std::size_t>(cfg.weeks));
    auto churn = substream(cfg.seed, detail::kStreamChurn);
    std::size_t fresh = 0;
    auto fresh_member = [&](std::size_t p) {
        return add_user("u" + std::to_string(fresh++), pool_group[p]);
    };
    for (int t = 0; t < cfg.weeks; ++t) {
        for (std::size_t p = 0; p < n_pools; ++p) {
            auto& ids = pools[t][p];
            auto& w = weights[t][p];
            ids.resize(pool_size[p]);
            w.resize(pool_size[p]);
            for (std::size_t s = 0; s < pool_size[p]; ++s) {
                if (t > 0 && bernoulli(churn, cfg.survival)) {
                    ids[s] = pools[t - 1][p][s];
                    w[s] = weights[t - 1][p][s];
                } else {
                    ids[s] = fresh_member(p);
                    w[s] = power_law(churn, cfg.peer_weight_exponent, 1.0, cfg.peer_weight_max);
                }
            }
        }
    }

    std::vector<std::vector<Edge>> week_edges(static_cast<std::size_t>(cfg.weeks));
    parallel_for(static_cast<std::size_t>(cfg.weeks), workers, [&](std::size_t t) {
        auto rng = substream(cfg.seed, detail::kStreamWeek, t);
        // active leaders per target pool (satellite leaders live in pool 2)
        std::array<std::vector<const Leader*>, 3> active;
        for (const auto& l : leaders) {
            if (bernoulli(rng, l.activity)) active[l.satellite ? 2 : static_cast<std::size_t>(l.group)].push_back(&l);
        }
        // Members endorse at a fixed rate per active leader of their own pool,
        // so audience fractions do not depend on how many leaders a group has.
        std::array<double, 3> leader_rate{0.0, 0.0, 0.0};
        std::array<AliasTable, 3> leader_alias, peer_alias;
        for (std::size_t p = 0; p < n_pools; ++p) {
            std::vector<double> pw;
            double total = 0.0, count = 0.0, on = 0.0;
            for (const auto& l : leaders) {
                if ((l.satellite ? 2 : static_cast<std::size_t>(l.group)) == p) total += l.popularity, count += 1.0;
            }
            for (const auto* l : active[p]) pw.push_back(l->popularity), on += l->popularity;
            leader_rate[p] = count > 0.0 ? cfg.leader_endorsements * on * count / total : 0.0;
            leader_alias[p] = AliasTable(pw);
            peer_alias[p] = AliasTable(weights[t][p]);
        }
        std::array<std::vector<UserId>, 2> hub_active;
        for (int g = 0; g < 2; ++g) {
            std::vector<UserId> pool = hubs[g];
            for (std::size_t k = 0; k < cfg.hubs_active[g]; ++k) {
                const auto j = k + static_cast<std::size_t>(uniform_below(rng, pool.size() - k));
                std::swap(pool[k], pool[j]);
            }
            hub_active[g].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.hubs_active[g]));
        }

        auto& edges = week_edges[t];
        for (std::size_t p = 0; p < n_pools; ++p) {
            const bool satellite_pool = p == 2;
            const int own = pool_group[p];
            for (UserId m : pools[t][p]) {
                // pool an endorsement lands in
                auto target_pool = [&]() -> std::size_t {
                    if (satellite_pool) return bernoulli(rng, cfg.satellite_mixing) ? 0 : 2;
                    return bernoulli(rng, cfg.mixing) ? static_cast<std::size_t>(1 - own) : static_cast<std::size_t>(own);
                };
                for (auto k = poisson(rng, leader_rate[p]); k > 0; --k) {
                    const auto tp = target_pool();
                    if (active[tp].empty()) continue;
                    const Leader* l = active[tp][leader_alias[tp].sample(rng)];
                    edges.push_back(Edge{m, l->id, static_cast<std::uint32_t>(1 + poisson(rng, l->intensity))});
                }
                if (!satellite_pool) {
                    for (auto k = poisson(rng, cfg.hub_endorsements); k > 0; --k) {
                        const auto tg = target_pool();
                        if (hub_active[tg].empty()) continue;
                        edges.push_back(Edge{m, hub_active[tg][uniform_below(rng, hub_active[tg].size())], 1});
                    }
                }
                for (auto k = poisson(rng, cfg.peer_endorsements); k > 0; --k) {
                    const auto tp = target_pool();
                    const UserId peer = pools[t][tp][peer_alias[tp].sample(rng)];
                    if (peer != m) edges.push_back(Edge{m, peer, 1});
                }
            }
        }
    });

    std::vector<WeeklyGraph> graphs(static_cast<std::size_t>(cfg.weeks));
    parallel_for(graphs.size(), workers, [&](std::size_t t) {
        graphs[t] = WeeklyGraph::from_edges(static_cast<WeekIndex>(t), std::move(week_edges[t]));
    });
    std::erase_if(graphs, [](const WeeklyGraph& g) { return g.edges().empty(); });

    out.members.resize(static_cast<std::size_t>(cfg.weeks));
    for (int t = 0; t < cfg.weeks; ++t) {
        for (std::size_t p = 0; p < 2; ++p) {
            out.members[t][p] = pools[t][p];
            std::sort(out.members[t][p].begin(), out.members[t][p].end());
        }
    }
    out.labels = std::move(label);
    out.network = TemporalNetwork(std::move(users), std::move(graphs));
    return out;
}

/// Writes the network as a tab-separated edge list (timestamp, retweeter,
/// author, count) with each week's records stamped at noon of its first day.
inline void write_edge_list(std::ostream& out, const TemporalNetwork& net, std::int64_t epoch, int week_days = 7) {
    out << "timestamp\tretweeter\tauthor\tcount\n";
    for (const auto& g : net.weeks()) {
        const std::int64_t ts = epoch + std::int64_t{g.week()} * week_days * 86400 + 43200;
        for (const auto& e : g.edges()) {
            out << ts << '\t' << net.users().name(e.retweeter) << '\t' << net.users().name(e.author) << '\t' << e.count
                << '\n';
        }
    }
}

/// Writes the ground-truth label file (user, group) for labelled users.
inline void write_labels(std::ostream& out, const TemporalNetwork& net, const std::vector<int>& labels) {
    out << "user\tgroup\n";
    for (UserId u = 0; u < labels.size(); ++u) {
        if (labels[u] >= 0) out << net.users().name(u) << '\t' << labels[u] << '\n';
    }
}

} // namespace echolens

#endif // ECHOLENS_SYNTH_HPP
