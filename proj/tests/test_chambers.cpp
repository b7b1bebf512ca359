#include <gtest/gtest.h>

#include <random>

#include "echolens/chambers.hpp"
#include "echolens/sets.hpp"
#include "oracles.hpp"

using namespace echolens;

namespace {

WeeklyGraph graph(std::vector<Edge> e) { return WeeklyGraph::from_edges(0, std::move(e)); }

IdSet ids(std::initializer_list<UserId> l) {
    IdSet s(l);
    sets::normalize(s);
    return s;
}

} // namespace

TEST(Audience, Examples) {
    // L = 0, a = 1, b = 2
    const auto g = graph({{1, 0, 1}, {2, 0, 1}});
    EXPECT_EQ(audience(g, 0).members, ids({1, 2}));
    const auto lonely = audience(g, 1);
    EXPECT_TRUE(lonely.members.empty());
    EXPECT_FALSE(lonely.leader_absent);
    EXPECT_TRUE(audience(g, 9).leader_absent);
}

TEST(Chamber, ExclusionRule) {
    // L = 0, a = 1, x = 2, y = 3
    const auto g = graph({{1, 0, 1}, {1, 2, 1}, {1, 3, 1}});
    EXPECT_EQ(chamber(g, 0, ids({0, 3})).members, ids({2}));
    EXPECT_TRUE(chamber(g, 0, ids({0, 2, 3})).members.empty());
}

TEST(Chamber, MatchesBruteForceOnRandomGraphs) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> nodes(3, 50);
    for (int rep = 0; rep < 150; ++rep) {
        const std::size_t n = nodes(rng);
        const auto raw = oracle::random_edges(rng, n, 3 * n);
        const auto g = WeeklyGraph::from_edges(0, raw);
        oracle::Set hi;
        std::bernoulli_distribution pick(0.2);
        for (UserId u = 0; u < n; ++u) {
            if (pick(rng)) hi.insert(u);
        }
        const auto hiv = oracle::to_vec(hi);
        for (UserId u = 0; u < n; ++u) {
            EXPECT_EQ(audience(g, u).members, oracle::to_vec(oracle::audience(raw, u)));
            const auto c = chamber(g, u, hiv).members;
            EXPECT_EQ(c, oracle::to_vec(oracle::chamber(raw, u, hi)));
            EXPECT_TRUE(sets::set_intersection(c, hiv).empty());
        }
    }
}

TEST(Jaccard, Examples) {
    EXPECT_DOUBLE_EQ(*sets::jaccard(ids({1, 2}), ids({1, 2})), 1.0);
    EXPECT_DOUBLE_EQ(*sets::jaccard(ids({1, 2}), ids({3})), 0.0);
    EXPECT_DOUBLE_EQ(*sets::jaccard(ids({1, 2, 3}), ids({2, 3, 4})), 0.5);
    EXPECT_FALSE(sets::jaccard(IdSet{}, IdSet{}));
    EXPECT_DOUBLE_EQ(*sets::jaccard(IdSet{}, ids({1})), 0.0);
}

TEST(Jaccard, PropertiesAndGallopingPath) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 300; ++rep) {
        std::uniform_int_distribution<std::size_t> sz(0, rep % 3 == 0 ? 2000 : 60);
        std::uniform_int_distribution<UserId> val(0, 3000);
        oracle::Set a, b;
        const auto na = sz(rng), nb = rep % 5 == 0 ? 3 : sz(rng);
        while (a.size() < na) a.insert(val(rng));
        while (b.size() < nb) b.insert(val(rng));
        const auto va = oracle::to_vec(a), vb = oracle::to_vec(b);
        const auto j = sets::jaccard(va, vb);
        const auto o = oracle::jaccard(a, b);
        ASSERT_EQ(j.has_value(), o.has_value());
        if (!j) continue;
        EXPECT_DOUBLE_EQ(*j, *o);
        EXPECT_EQ(j, sets::jaccard(vb, va));
        EXPECT_GE(*j, 0.0);
        EXPECT_LE(*j, 1.0);
        EXPECT_LE(sets::intersection_size(va, vb), std::min(va.size(), vb.size()));
        if (!va.empty()) EXPECT_DOUBLE_EQ(*sets::jaccard(va, va), 1.0);
    }
}

TEST(Bitset, IntersectionMatchesMerge) {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        std::uniform_int_distribution<UserId> val(0, 999);
        oracle::Set a, b;
        for (int k = 0; k < 400; ++k) {
            a.insert(val(rng));
            b.insert(val(rng));
        }
        sets::Bitset ba(1000), bb(1000);
        for (UserId x : a) ba.set(x);
        for (UserId x : b) bb.set(x);
        EXPECT_EQ(ba.intersection_size(bb), sets::intersection_size(oracle::to_vec(a), oracle::to_vec(b)));
    }
}

TEST(Chamber, DeterminedByAudienceAndMonotone) {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        const auto raw = oracle::random_edges(rng, 40, 150);
        const auto g = WeeklyGraph::from_edges(0, raw);
        IdSet hi{0, 1, 2};
        IdSet small, big;
        for (UserId u = 3; u < 40; ++u) {
            if (u % 3 == 0) small.push_back(u);
            if (u % 3 == 0 || u % 5 == 0) big.push_back(u);
        }
        sets::normalize(big);
        const auto cs = chamber_of_audience(g, small, hi);
        const auto cb = chamber_of_audience(g, big, hi);
        EXPECT_TRUE(std::includes(cb.begin(), cb.end(), cs.begin(), cs.end()));
        EXPECT_EQ(cs, chamber_of_audience(g, small, hi));
    }
}

TEST(Overlap, AggregateMeanAndMask) {
    const std::vector<UserId> leaders{10, 11, 12};
    OverlapMatrix a(leaders), b(leaders);
    a.set(0, 1, 0.1);
    b.set(0, 1, 0.3);
    b.set(1, 2, 0.5);
    const std::vector<OverlapMatrix> weeks{a, b};
    const auto agg = aggregate(weeks);
    EXPECT_DOUBLE_EQ(*agg.get(0, 1), 0.2);
    EXPECT_DOUBLE_EQ(*agg.get(1, 2), 0.5);
    EXPECT_FALSE(agg.defined(0, 2));
}

TEST(Overlap, MatrixMatchesPerPairOracle) {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 100; ++rep) {
        const auto raw = oracle::random_edges(rng, 30, 120);
        const auto g = WeeklyGraph::from_edges(0, raw);
        const std::vector<UserId> leaders{0, 1, 2, 3, 4};
        const IdSet present{0, 1, 2, 4};
        const IdSet hi{0, 1, 2, 3, 4, 5};
        const oracle::Set hs(hi.begin(), hi.end());
        for (unsigned workers : {1u, 3u}) {
            const auto q = overlap_matrix(g, leaders, present, hi, workers);
            for (std::size_t i = 0; i < leaders.size(); ++i) {
                for (std::size_t j = 0; j < leaders.size(); ++j) {
                    const bool both = sets::contains(present, leaders[i]) && sets::contains(present, leaders[j]);
                    std::optional<double> expect;
                    if (both) {
                        expect = oracle::jaccard(oracle::chamber(raw, leaders[i], hs), oracle::chamber(raw, leaders[j], hs));
                    }
                    EXPECT_EQ(q.get(i, j), expect) << i << "," << j;
                }
            }
        }
    }
}

TEST(Overlap, BitmapBackendAgreesWithMerge) {
    // dense chambers over a compact id range force the bitmap path
    std::mt19937_64 rng(2);
    std::vector<LeaderChamber> chambers;
    std::vector<UserId> leaders;
    for (UserId l = 0; l < 6; ++l) {
        LeaderChamber c;
        c.leader = l;
        std::bernoulli_distribution keep(0.6);
        for (UserId u = 100; u < 2100; ++u) {
            if (keep(rng)) c.chamber.push_back(u);
        }
        chambers.push_back(c);
        leaders.push_back(l);
    }
    const auto q = overlap_from_chambers(leaders, chambers, 2);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            EXPECT_DOUBLE_EQ(*q.get(i, j), *sets::jaccard(chambers[i].chamber, chambers[j].chamber));
        }
    }
}

TEST(Subchamber, Examples) {
    // leaders 0 and 1; disjoint audiences {2} and {3}; they retweet 4 and 5
    const auto disjoint = graph({{2, 0, 1}, {3, 1, 1}, {2, 4, 1}, {3, 4, 1}, {3, 5, 1}});
    const IdSet hi{0, 1};
    const auto plain = sets::jaccard(chamber(disjoint, 0, hi).members, chamber(disjoint, 1, hi).members);
    EXPECT_EQ(subchamber_overlap(disjoint, 0, 1, hi), plain);

    const auto same = graph({{2, 0, 1}, {2, 1, 1}, {2, 4, 1}});
    EXPECT_FALSE(subchamber_overlap(same, 0, 1, hi));
}

TEST(Subchamber, MatchesOracleRebuild) {
    std::mt19937_64 rng(44);
    for (int rep = 0; rep < 100; ++rep) {
        const auto raw = oracle::random_edges(rng, 25, 120);
        const auto g = WeeklyGraph::from_edges(0, raw);
        const oracle::Set hs{0, 1, 2};
        const IdSet hi{0, 1, 2};
        const auto ai = oracle::audience(raw, 0), aj = oracle::audience(raw, 1);
        oracle::Set only_i, only_j;
        for (auto x : ai) {
            if (!aj.count(x)) only_i.insert(x);
        }
        for (auto x : aj) {
            if (!ai.count(x)) only_j.insert(x);
        }
        std::optional<double> expect;
        if (!only_i.empty() && !only_j.empty()) {
            expect = oracle::jaccard(oracle::chamber_of(raw, only_i, hs), oracle::chamber_of(raw, only_j, hs));
        }
        EXPECT_EQ(subchamber_overlap(g, 0, 1, hi), expect);
    }
}

TEST(SizeDiagnostics, Correlation) {
    const std::vector<std::size_t> a{1, 5, 3, 8, 2};
    EXPECT_DOUBLE_EQ(*size_diagnostics(a, a).rho, 1.0);
    const std::vector<std::size_t> flat{4, 4, 4, 4, 4};
    EXPECT_FALSE(size_diagnostics(a, flat).rho);

    const std::vector<std::size_t> c{10, 40, 20, 90, 35};
    double ma = 0, mc = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ma += static_cast<double>(a[k]) / 5;
        mc += static_cast<double>(c[k]) / 5;
    }
    double sab = 0, saa = 0, scc = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double x = static_cast<double>(a[k]) - ma, y = static_cast<double>(c[k]) - mc;
        sab += x * y;
        saa += x * x;
        scc += y * y;
    }
    EXPECT_NEAR(*size_diagnostics(a, c).rho, sab / std::sqrt(saa * scc), 1e-12);
    const auto d = size_diagnostics(a, c);
    EXPECT_DOUBLE_EQ(d.audience.mean, 3.8);
    EXPECT_EQ(d.chamber.cdf.back().second, 1.0);
}
