#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "echolens/clustering.hpp"
#include "echolens/random.hpp"

using namespace echolens;

namespace {

OverlapMatrix from_dense(const std::vector<std::vector<double>>& m) {
    std::vector<UserId> ids(m.size());
    std::iota(ids.begin(), ids.end(), UserId{0});
    OverlapMatrix q(ids);
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i; j < m.size(); ++j) {
            if (!std::isnan(m[i][j])) q.set(i, j, m[i][j]);
        }
    }
    return q;
}

/// Two planted blocks plus an optional tight satellite group hanging weakly off block 0.
OverlapMatrix planted(std::uint64_t seed, std::size_t n0, std::size_t n1, std::size_t satellites, double noise,
                      std::vector<int>& truth) {
    auto rng = substream(seed, 1);
    const std::size_t n = n0 + n1 + satellites;
    truth.assign(n, 0);
    for (std::size_t i = n0; i < n0 + n1; ++i) truth[i] = 1;
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double mean;
            const bool si = i >= n0 + n1, sj = j >= n0 + n1;
            if (si || sj) {
                mean = (si && sj) ? 0.6 : (truth[si ? j : i] == 0 ? 0.02 : 0.005);
            } else {
                mean = truth[i] == truth[j] ? 0.23 : 0.04;
            }
            m[i][j] = m[j][i] = std::max(0.0, mean + noise * normal01(rng));
        }
    }
    return from_dense(m);
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b, std::size_t count) {
    bool direct = true, flipped = true;
    for (std::size_t i = 0; i < count; ++i) {
        direct &= a[i] == b[i];
        flipped &= a[i] != b[i];
    }
    return direct || flipped;
}

double residual(const SquareMatrix& l, double lambda, const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t i = 0; i < l.n; ++i) {
        double r = -lambda * v[i];
        for (std::size_t j = 0; j < l.n; ++j) r += l(i, j) * v[j];
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

} // namespace

TEST(Laplacian, TwoByTwo) {
    const auto l = laplacian(from_dense({{1, 0.3}, {0.3, 1}}));
    EXPECT_DOUBLE_EQ(l(0, 0), 0.3);
    EXPECT_DOUBLE_EQ(l(0, 1), -0.3);
    EXPECT_DOUBLE_EQ(l(1, 0), -0.3);
    EXPECT_DOUBLE_EQ(l(1, 1), 0.3);
}

TEST(Laplacian, ZeroAndRowSums) {
    const auto z = laplacian(from_dense({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}));
    for (double v : z.a) EXPECT_EQ(v, 0.0);
    std::vector<int> truth;
    const auto q = planted(1, 10, 8, 2, 0.02, truth);
    const auto l = laplacian(q);
    for (std::size_t i = 0; i < l.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < l.n; ++j) s += l(i, j);
        EXPECT_NEAR(s, 0.0, 1e-14);
    }
}

TEST(Laplacian, MaskedPolicies) {
    const double nan = std::nan("");
    const auto q = from_dense({{1, 0.2, nan}, {0.2, 1, 0.4}, {nan, 0.4, 1}});
    EXPECT_EQ(laplacian(q)(0, 2), 0.0);
    EXPECT_DOUBLE_EQ(laplacian(q, MaskedPolicy::pair_mean)(0, 2), -0.3);
    EXPECT_THROW(laplacian(from_dense({{1, -0.1}, {-0.1, 1}})), DomainError);
}

TEST(Eigen, PathGraph) {
    const auto l = laplacian(from_dense({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}}));
    const auto e = smallest_eigenpairs(l, 3);
    EXPECT_NEAR(e.values[0], 0.0, 1e-12);
    EXPECT_NEAR(e.values[1], 1.0, 1e-12);
    EXPECT_NEAR(e.values[2], 3.0, 1e-12);
}

TEST(Eigen, DisconnectedDyads) {
    const auto l = laplacian(from_dense({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}}));
    const auto e = smallest_eigenpairs(l, 2);
    EXPECT_NEAR(e.values[0], 0.0, 1e-12);
    EXPECT_NEAR(e.values[1], 0.0, 1e-12);
}

TEST(Eigen, MatchesEigenLibraryOnRandomPsd) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 5 + static_cast<std::size_t>(rep);
        Eigen::MatrixXd b(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) b(i, j) = u(rng);
        }
        const Eigen::MatrixXd a = b * b.transpose();
        SquareMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) m(i, j) = a(i, j);
        }
        const auto e = symmetric_eigen(m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
        for (std::size_t k = 0; k < n; ++k) {
            EXPECT_NEAR(e.values[k], ref.eigenvalues()(static_cast<Eigen::Index>(k)), 1e-9 * std::max(1.0, a.norm()));
            EXPECT_LE(residual(m, e.values[k], e.vectors[k]), 1e-9);
            if (k > 0) EXPECT_LE(e.values[k - 1], e.values[k]);
            // sign convention: largest-magnitude component positive
            const auto& v = e.vectors[k];
            const auto big = std::max_element(v.begin(), v.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
            EXPECT_GT(*big, 0.0);
        }
    }
}

TEST(Partition, WeaklyLinkedCliques) {
    std::vector<std::vector<double>> m(8, std::vector<double>(8, 0.0));
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 8; ++j) {
            if (i != j && (i < 4) == (j < 4)) m[i][j] = 1.0;
        }
    }
    m[3][4] = m[4][3] = 0.05;
    PartitionOptions opt;
    opt.policy = VectorPolicy::automatic;
    const auto r = spectral_partition(from_dense(m), opt);
    EXPECT_EQ(r.chosen, 1u);
    const std::vector<int> truth{0, 0, 0, 0, 1, 1, 1, 1};
    EXPECT_TRUE(same_partition(r.labels, truth, 8));
}

TEST(Partition, PlantedBlocksRecoveredOverSeeds) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::vector<int> truth;
        const auto q = planted(seed, 25, 25, 0, 0.02, truth);
        PartitionOptions opt;
        opt.policy = VectorPolicy::automatic;
        const auto r = spectral_partition(q, opt);
        EXPECT_TRUE(same_partition(r.labels, truth, truth.size())) << seed;
        const auto l = laplacian(q);
        for (std::size_t k = 0; k < r.values.size(); ++k) EXPECT_LE(residual(l, r.values[k], r.vectors[k]), 1e-9);
    }
}

TEST(Partition, SatellitesPushSplitToThirdVector) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<int> truth;
        const auto q = planted(seed, 25, 21, 4, 0.02, truth);
        PartitionOptions opt;
        opt.policy = VectorPolicy::automatic;
        const auto r = spectral_partition(q, opt);
        EXPECT_EQ(r.chosen, 2u);
        EXPECT_TRUE(same_partition(r.labels, truth, 46)) << seed;
        opt.policy = VectorPolicy::third;
        EXPECT_EQ(spectral_partition(q, opt).labels, r.labels);
    }
}

TEST(Partition, SignFlipAndPermutationEquivariance) {
    std::vector<int> truth;
    const auto q = planted(9, 20, 15, 0, 0.02, truth);
    PartitionOptions opt;
    opt.policy = VectorPolicy::automatic;
    const auto base = spectral_partition(q, opt);

    SpectralResult flipped = base;
    for (auto& x : flipped.vectors[flipped.chosen]) x = -x;
    partition(flipped, opt);
    EXPECT_TRUE(same_partition(flipped.labels, base.labels, truth.size()));

    std::vector<std::size_t> perm(q.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(3);
    shuffle(std::span<std::size_t>(perm), rng);
    std::vector<std::vector<double>> m(q.size(), std::vector<double>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) m[i][j] = *q.get(perm[i], perm[j]);
    }
    const auto p = spectral_partition(from_dense(m), opt);
    std::vector<int> back(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) back[perm[i]] = p.labels[i];
    EXPECT_TRUE(same_partition(back, base.labels, truth.size()));
}

TEST(Partition, SingleGroupIsDegenerate) {
    // no overlap structure: every eigenvector is a coordinate vector, splitting 1 / n-1
    std::vector<std::vector<double>> m(12, std::vector<double>(12, 0.0));
    PartitionOptions opt;
    opt.policy = VectorPolicy::automatic;
    try {
        spectral_partition(from_dense(m), opt);
        FAIL() << "expected a degenerate partition";
    } catch (const UndefinedError& e) {
        EXPECT_NE(std::string(e.what()).find("degenerate"), std::string::npos);
    }
}

TEST(Partition, RankOrdersByComponent) {
    std::vector<int> truth;
    const auto q = planted(4, 10, 10, 0, 0.01, truth);
    const auto r = spectral_partition(q, PartitionOptions{VectorPolicy::automatic});
    const auto& u = r.vectors[r.chosen];
    for (std::size_t k = 1; k < r.rank.size(); ++k) EXPECT_GE(u[r.rank[k - 1]], u[r.rank[k]]);
}
