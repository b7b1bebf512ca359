#include <gtest/gtest.h>

#include <sstream>

#include "echolens/clustering.hpp"
#include "echolens/polarization.hpp"
#include "echolens/ingest.hpp"
#include "planted_run.hpp"

using namespace echolens;

namespace {

PlantedConfig small(double mixing, std::uint64_t seed) {
    PlantedConfig c;
    c.weeks = 4;
    c.pool = {1500, 1500};
    c.leaders = {10, 10};
    c.hub_pool = {100, 100};
    c.hubs_active = {5, 5};
    c.mixing = mixing;
    c.seed = seed;
    return c;
}

std::string export_edges(const PlantedNetwork& p) {
    std::ostringstream out;
    write_edge_list(out, p.network, 0);
    write_labels(out, p.network, p.labels);
    return out.str();
}

} // namespace

TEST(Synth, NoMixingMeansNoCrossGroupEdges) {
    auto cfg = small(0.0, 3);
    const auto p = generate(cfg);
    std::size_t edges = 0;
    for (const auto& g : p.network.weeks()) {
        for (const auto& e : g.edges()) {
            ++edges;
            ASSERT_GE(p.labels[e.retweeter], 0);
            EXPECT_EQ(p.labels[e.retweeter], p.labels[e.author]);
        }
    }
    EXPECT_GT(edges, 1000u);
}

TEST(Synth, SameSeedSameExportAnyWorkerCount) {
    const auto cfg = small(0.05, 9);
    const auto a = export_edges(generate(cfg, 1));
    EXPECT_EQ(a, export_edges(generate(cfg, 3)));
    EXPECT_EQ(a, export_edges(generate(cfg, 1)));
    EXPECT_NE(a, export_edges(generate(small(0.05, 10))));
}

TEST(Synth, ExportRoundTripsThroughIngest) {
    const auto p = generate(small(0.02, 4));
    std::ostringstream out;
    write_edge_list(out, p.network, 1000);
    IngestOptions opt;
    opt.epoch = 1000;
    std::istringstream in(out.str());
    const auto back = ingest(in, opt);
    ASSERT_EQ(back.n_weeks(), p.network.n_weeks());
    for (std::size_t t = 0; t < back.n_weeks(); ++t) {
        EXPECT_EQ(back.week(t).week(), p.network.week(t).week());
        EXPECT_EQ(back.week(t).total_weight(), p.network.week(t).total_weight());
        EXPECT_EQ(back.week(t).edges().size(), p.network.week(t).edges().size());
    }
}

TEST(Synth, ChurnExtremes) {
    auto cfg = small(0.02, 1);
    cfg.survival = 1.0;
    auto p = generate(cfg);
    for (std::size_t t = 1; t < p.members.size(); ++t) EXPECT_EQ(p.members[t][0], p.members[0][0]);
    cfg.survival = 0.0;
    p = generate(cfg);
    for (std::size_t t = 1; t < p.members.size(); ++t) {
        EXPECT_TRUE(sets::set_intersection(p.members[t][1], p.members[t - 1][1]).empty());
        EXPECT_EQ(p.members[t][1].size(), 1500u);
    }
}

TEST(Synth, ValidationRejectsBadConfigs) {
    auto cfg = small(0.02, 1);
    cfg.mixing = 1.5;
    EXPECT_THROW(generate(cfg), ConfigError);
    cfg = small(0.02, 1);
    cfg.leaders = {0, 3};
    EXPECT_THROW(generate(cfg), ConfigError);
    cfg = small(0.02, 1);
    cfg.hubs_active = {500, 5};
    EXPECT_THROW(generate(cfg), ConfigError);
    cfg = small(0.02, 1);
    cfg.weeks = 0;
    EXPECT_THROW(generate(cfg), ConfigError);
}

TEST(Synth, SatellitesAreLabelledLeaders) {
    auto cfg = small(0.02, 2);
    cfg.satellites = 4;
    const auto p = generate(cfg);
    EXPECT_EQ(p.satellites.size(), 4u);
    EXPECT_EQ(p.leaders.size(), 24u);
    for (UserId s : p.satellites) EXPECT_EQ(p.labels[s], 0);
}

TEST(Synth, HalfMixingIsUnrecoverable) {
    double acc = 0.0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
        auto cfg = small(0.5, 100 + static_cast<std::uint64_t>(s));
        cfg.weeks = 6;
        const auto run = fixture::run_planted(cfg, 30, 20);
        PartitionOptions opt;
        opt.policy = VectorPolicy::automatic;
        acc += fixture::accuracy(spectral_partition(aggregate(run.weekly), opt).labels, run.truth);
    }
    EXPECT_LT(acc / seeds, 0.75);
}

TEST(Synth, PhiDecreasesWithMixing) {
    const std::vector<double> eps{0.0, 0.1, 0.3, 0.5};
    std::vector<double> mean_phi;
    for (double e : eps) {
        double sum = 0.0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto run = fixture::run_planted(small(e, 500 + s), 30, 20);
            sum += polarization_dynamics(run.weekly, run.weeks, run.truth).mean_phi();
        }
        mean_phi.push_back(sum / 20.0);
    }
    for (std::size_t k = 1; k < mean_phi.size(); ++k) EXPECT_LT(mean_phi[k], mean_phi[k - 1]) << eps[k];
}
