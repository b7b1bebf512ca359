#include <gtest/gtest.h>

#include <random>

#include "echolens/echo.hpp"
#include "echolens/leaders.hpp"
#include "echolens/synth.hpp"
#include "oracles.hpp"

using namespace echolens;

namespace {

WeeklyGraph graph(std::vector<Edge> e) { return WeeklyGraph::from_edges(0, std::move(e)); }

WeeklyEcho swapped(WeeklyEcho e) {
    std::swap(e.members[0], e.members[1]);
    std::swap(e.empty_group[0], e.empty_group[1]);
    return e;
}

} // namespace

TEST(EchoChambers, SingleLeaderUnion) {
    // L = 0, a = 1, x = 2
    const auto g = graph({{1, 0, 1}, {1, 2, 1}});
    const auto ch = compute_chambers(g, IdSet{0}, IdSet{0});
    const auto e = build_echo_chambers(g, ch, {{0, 0}});
    EXPECT_EQ(e.members[0], (IdSet{0, 1, 2}));
    EXPECT_TRUE(e.members[1].empty());
    EXPECT_TRUE(e.empty_group[1]);
    EXPECT_EQ(e.population, 3u);
}

TEST(EchoChambers, OverlappingAudiencesUnionWithoutDuplicates) {
    // leaders 0, 1 share audience member 2
    const auto g = graph({{2, 0, 1}, {2, 1, 1}, {3, 1, 1}, {2, 4, 1}});
    const auto ch = compute_chambers(g, IdSet{0, 1}, IdSet{0, 1});
    const auto e = build_echo_chambers(g, ch, {{0, 0}, {1, 0}});
    EXPECT_EQ(e.members[0], (IdSet{0, 1, 2, 3, 4}));
}

TEST(EchoChambers, RandomGraphsMatchUnionOracle) {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 120; ++rep) {
        const std::size_t n = 10 + static_cast<std::size_t>(rep % 40);
        const auto raw = oracle::random_edges(rng, n, 3 * n);
        const auto g = WeeklyGraph::from_edges(0, raw);
        const IdSet leaders{0, 1, 2, 3};
        const oracle::Set hs{0, 1, 2, 3, 4};
        const IdSet hi{0, 1, 2, 3, 4};
        const std::map<UserId, int> labels{{0, 0}, {1, 1}, {2, 0}, {3, 1}};
        const auto e = build_echo_chambers(g, compute_chambers(g, leaders, hi), labels);
        oracle::Set expect[2];
        for (auto [l, grp] : labels) {
            if (!g.local_of(l)) {
                expect[grp].insert(l);
                continue;
            }
            expect[grp].insert(l);
            for (auto x : oracle::audience(raw, l)) expect[grp].insert(x);
            for (auto x : oracle::chamber(raw, l, hs)) expect[grp].insert(x);
        }
        EXPECT_EQ(e.members[0], oracle::to_vec(expect[0]));
        EXPECT_EQ(e.members[1], oracle::to_vec(expect[1]));
        std::size_t inter = 0;
        for (auto x : expect[0]) inter += expect[1].count(x);
        EXPECT_EQ(e.intersection, inter);
    }
}

TEST(Score, Examples) {
    WeeklyEcho base;
    base.members[0] = {1, 2, 3, 4};
    base.members[1] = {4, 5};
    EXPECT_DOUBLE_EQ(*ideology_score(IdSet{1, 2}, base, 9).score, 1.0);
    const auto r = ideology_score(IdSet{1, 2, 3, 5}, base, 9);
    EXPECT_EQ(r.n[0], 3u);
    EXPECT_EQ(r.n[1], 1u);
    EXPECT_DOUBLE_EQ(*r.score, 0.5);
    EXPECT_FALSE(ideology_score(IdSet{7, 8}, base, 9).score);
    EXPECT_FALSE(classify(ideology_score(IdSet{7, 8}, base, 9), 0.5));
}

TEST(Score, AntisymmetryUnderSwap) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<UserId> val(0, 200);
    for (int rep = 0; rep < 200; ++rep) {
        WeeklyEcho base;
        for (int k = 0; k < 60; ++k) {
            base.members[0].push_back(val(rng));
            base.members[1].push_back(val(rng));
        }
        for (auto& m : base.members) sets::normalize(m);
        IdSet aud;
        for (int k = 0; k < 30; ++k) aud.push_back(val(rng));
        sets::normalize(aud);
        const auto a = ideology_score(aud, base, 0);
        const auto b = ideology_score(aud, swapped(base), 0);
        ASSERT_EQ(a.score.has_value(), b.score.has_value());
        if (a.score) {
            EXPECT_EQ(*a.score, -*b.score);
            EXPECT_GE(*a.score, -1.0);
            EXPECT_LE(*a.score, 1.0);
        }
    }
}

TEST(Augment, ThresholdAndCensus) {
    WeeklyEcho base;
    base.members[0] = {1, 2, 3};
    base.members[1] = {4, 5, 6};
    std::vector<ScoredUser> scored;
    auto add = [&](UserId u, IdSet aud) {
        ScoredUser s;
        s.audience = aud;
        s.record = ideology_score(aud, base, u);
        scored.push_back(s);
    };
    add(10, {1, 2, 11});      // s = 1
    add(20, {1, 2, 4, 21});   // s = 1/3
    add(30, {4, 5, 31});      // s = -1
    add(40, {50});            // unscorable
    const auto strict = augment(base, scored, 1.0);
    EXPECT_EQ(strict.census.classified[0], 1u);
    EXPECT_EQ(strict.census.classified[1], 1u);
    EXPECT_EQ(strict.census.unclassified, 2u);
    EXPECT_EQ(strict.census.unscorable, 1u);
    EXPECT_EQ(strict.members[0], (IdSet{1, 2, 3, 10, 11}));
    EXPECT_EQ(strict.members[1], (IdSet{4, 5, 6, 30, 31}));
    const auto loose = augment(base, scored, 0.3);
    EXPECT_EQ(loose.census.classified[0], 2u);
    EXPECT_THROW(augment(base, scored, 0.0), ConfigError);
}

TEST(Augment, PlantedFixtureContainmentAndRecount) {
    PlantedConfig cfg;
    cfg.weeks = 6;
    const auto planted = generate(cfg);
    const auto p = impact(planted.network);
    const auto hi = high_impact(p, 50);
    const auto lb = leading_users(hi, p, planted.network.users().size(), 50);
    std::map<UserId, int> labels;
    for (UserId l : lb.leaders) {
        if (planted.labels[l] >= 0) labels[l] = planted.labels[l];
    }
    for (std::size_t t = 0; t < planted.network.n_weeks(); ++t) {
        const auto& g = planted.network.week(t);
        const auto base = build_echo_chambers(g, compute_chambers(g, lb.weekly[t], hi.members[t]), labels);
        const auto scored = score_high_impact(g, hi.members[t], lb.leader_set, base);
        EXPECT_EQ(scored.size(), sets::set_difference(hi.members[t], lb.leader_set).size());
        const auto aug = augment(base, scored, 0.5);
        std::size_t total = aug.census.classified[0] + aug.census.classified[1] + aug.census.unclassified;
        EXPECT_EQ(total, scored.size());
        for (int grp = 0; grp < 2; ++grp) {
            EXPECT_TRUE(std::includes(aug.members[grp].begin(), aug.members[grp].end(), base.members[grp].begin(),
                                      base.members[grp].end()));
            oracle::Set recount(base.members[grp].begin(), base.members[grp].end());
            for (const auto& s : scored) {
                if (classify(s.record, 0.5) == grp) {
                    recount.insert(s.record.user);
                    recount.insert(s.audience.begin(), s.audience.end());
                }
            }
            EXPECT_EQ(aug.members[grp], oracle::to_vec(recount));
        }
        // planted low mixing keeps the shared part small
        EXPECT_LT(static_cast<double>(aug.intersection) / static_cast<double>(aug.population),
                  std::min(base.fraction(0), base.fraction(1)));
    }
}

TEST(AutoOverlap, IdenticalAndDisjointWeeks) {
    const std::vector<WeekIndex> weeks{0, 1, 2, 3};
    const std::vector<IdSet> same(4, IdSet{1, 2, 3});
    for (const auto& l : auto_overlap(weeks, same).lags) EXPECT_DOUBLE_EQ(l.median, 1.0);
    const std::vector<IdSet> disjoint{{1}, {2}, {3}, {4}};
    const auto d = auto_overlap(weeks, disjoint);
    EXPECT_DOUBLE_EQ(d.lags[0].median, 1.0);
    for (std::size_t k = 1; k < d.lags.size(); ++k) EXPECT_DOUBLE_EQ(d.lags[k].median, 0.0);
    EXPECT_EQ(d.lags.back().lag, 3);
    EXPECT_EQ(d.lags.back().pairs, 1u);
}

TEST(AutoOverlap, EmptyWeeksExcluded) {
    const std::vector<WeekIndex> weeks{0, 1, 2};
    const std::vector<IdSet> m{{1, 2}, {}, {2, 3}};
    const auto d = auto_overlap(weeks, m);
    EXPECT_EQ(d.excluded, (std::vector<WeekIndex>{1}));
    ASSERT_EQ(d.lags.size(), 2u);
    EXPECT_EQ(d.lags[1].lag, 2);
    EXPECT_NEAR(d.lags[1].median, 1.0 / 3.0, 1e-15);
    EXPECT_THROW(auto_overlap(weeks, std::vector<IdSet>{{1}, {}, {}}), DomainError);
}

TEST(AutoOverlap, ChurnMatchesAnalyticRetention) {
    for (double p : {0.1, 0.3, 0.6}) {
        PlantedConfig cfg;
        cfg.weeks = 30;
        cfg.survival = p;
        const auto planted = generate(cfg);
        std::vector<WeekIndex> weeks;
        std::vector<IdSet> members;
        for (std::size_t t = 0; t < planted.members.size(); ++t) {
            weeks.push_back(static_cast<WeekIndex>(t));
            members.push_back(planted.members[t][0]);
        }
        const auto d = auto_overlap(weeks, members);
        const auto& lag1 = d.lags[1];
        const double se = lag1.sd / std::sqrt(static_cast<double>(lag1.pairs));
        EXPECT_LE(std::abs(lag1.mean - p / (2.0 - p)), 3.0 * se + 1e-3) << p;
        for (std::size_t k = 1; k < 5; ++k) EXPECT_LT(d.lags[k].median, d.lags[k - 1].median);
    }
}

TEST(SizeSeries, RatioAndOmission) {
    AugmentedEcho a, b;
    a.week = 0;
    a.members[0] = {1, 2};
    a.members[1] = {3, 4};
    b.week = 1;
    b.members[0] = {1, 2};
    const std::vector<AugmentedEcho> w{a, b};
    const auto rows = size_series(w);
    EXPECT_DOUBLE_EQ(*rows[0].ratio, 1.0);
    EXPECT_FALSE(rows[1].ratio);
}

TEST(SizeSeries, DetectsStepInGroupIntensity) {
    PlantedConfig early, late;
    early.weeks = late.weeks = 6;
    late.pool = {7000, 6000};
    late.leaders = {35, 30};
    late.seed = early.seed = 5;
    std::vector<double> ratios;
    for (const auto* cfg : {&early, &late}) {
        const auto planted = generate(*cfg);
        const auto p = impact(planted.network);
        const auto hi = high_impact(p, 50);
        const auto lb = leading_users(hi, p, planted.network.users().size(), 50);
        std::map<UserId, int> labels;
        for (UserId l : lb.leaders) {
            if (planted.labels[l] >= 0) labels[l] = planted.labels[l];
        }
        std::vector<AugmentedEcho> aug;
        for (std::size_t t = 0; t < planted.network.n_weeks(); ++t) {
            const auto& g = planted.network.week(t);
            const auto base = build_echo_chambers(g, compute_chambers(g, lb.weekly[t], hi.members[t]), labels);
            aug.push_back(augment(base, score_high_impact(g, hi.members[t], lb.leader_set, base), 0.5));
        }
        for (const auto& r : size_series(aug)) ratios.push_back(*r.ratio);
    }
    double before = 0, after = 0;
    for (int k = 0; k < 6; ++k) {
        before += ratios[k] / 6;
        after += ratios[k + 6] / 6;
    }
    EXPECT_GT(after, 1.5 * before);
}
