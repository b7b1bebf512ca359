#ifndef ECHOLENS_CLUSTERING_HPP
#define ECHOLENS_CLUSTERING_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "echolens/chambers.hpp"
#include "echolens/eigen.hpp"
#include "echolens/types.hpp"

namespace echolens {

/// How never-co-active (masked) pairs enter the Laplacian.
enum class MaskedPolicy {
    zero,      ///< no edge
    pair_mean, ///< mean of all defined off-diagonal overlaps
};

/// Which eigenvector splits the leaders.
enum class VectorPolicy {
    third,     ///< always the third smallest (u₃)
    automatic, ///< first non-trivial vector whose split keeps both sides ≥ min_fraction
};

/// L = D − Q with Dᵢᵢ = Σⱼ qᵢⱼ. Throws DomainError on negative or asymmetric input.
inline SquareMatrix laplacian(const OverlapMatrix& q, MaskedPolicy policy = MaskedPolicy::zero) {
    const std::size_t n = q.size();
    double fill = 0.0;
    if (policy == MaskedPolicy::pair_mean) {
        const auto vals = q.upper_values();
        fill = vals.empty() ? 0.0 : std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
    }
    SquareMatrix l(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double v = q.defined(i, j) ? *q.get(i, j) : fill;
            if (v < 0.0 || std::isnan(v)) throw DomainError("overlap entries must be non-negative");
            if (q.defined(i, j) != q.defined(j, i) || v != (q.defined(j, i) ? *q.get(j, i) : fill)) {
                throw DomainError("overlap matrix must be symmetric");
            }
            l(i, j) = -v;
            l(i, i) += v;
        }
    }
    return l;
}

/// The `count` smallest eigenpairs of a symmetric matrix, ascending.
inline EigenDecomposition smallest_eigenpairs(const SquareMatrix& l, std::size_t count) {
    if (count > l.n) throw DomainError("requested more eigenpairs than the matrix dimension");
    auto full = symmetric_eigen(l);
    full.values.resize(count);
    full.vectors.resize(count);
    return full;
}

struct PartitionOptions {
    VectorPolicy policy = VectorPolicy::third;
    /// Minimum share of nodes on each side for the automatic policy.
    double min_fraction = 0.1;
    /// Eigenpairs to compute (at least 3 for VectorPolicy::third).
    std::size_t eigenpairs = 4;
    MaskedPolicy masked = MaskedPolicy::zero;
};

struct SpectralResult {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
    /// Index into values/vectors of the splitting vector.
    std::size_t chosen = 0;
    /// 0 where the chosen component is > 0, 1 otherwise.
    std::vector<int> labels;
    /// Node indices ordered by chosen component, largest first.
    std::vector<std::size_t> rank;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> sign_split(const std::vector<double>& v) {
    std::size_t pos = 0;
    for (double x : v) pos += x > 0.0 ? 1 : 0;
    return {pos, v.size() - pos};
}

} // namespace detail

/// Labels and rank from the chosen vector of precomputed eigenpairs. Throws
/// UndefinedError when no admissible vector splits the nodes.
inline void partition(SpectralResult& r, const PartitionOptions& opt) {
    const std::size_t n = r.vectors.empty() ? 0 : r.vectors.front().size();
    std::string evidence;
    bool found = false;
    if (opt.policy == VectorPolicy::third) {
        if (r.vectors.size() < 3) throw DomainError("the third-vector policy needs at least three eigenpairs");
        const auto [pos, neg] = detail::sign_split(r.vectors[2]);
        found = pos > 0 && neg > 0;
        r.chosen = 2;
        evidence = "u3 splits " + std::to_string(pos) + "/" + std::to_string(neg);
    } else {
        const auto need = static_cast<std::size_t>(std::ceil(opt.min_fraction * static_cast<double>(n)));
        for (std::size_t k = 1; k < r.vectors.size() && !found; ++k) {
            const auto [pos, neg] = detail::sign_split(r.vectors[k]);
            evidence += (evidence.empty() ? "" : ", ") + ("u" + std::to_string(k + 1) + " splits " +
                                                         std::to_string(pos) + "/" + std::to_string(neg));
            if (pos >= std::max<std::size_t>(need, 1) && neg >= std::max<std::size_t>(need, 1)) {
                r.chosen = k;
                found = true;
            }
        }
    }
    if (!found) throw UndefinedError("degenerate partition: " + evidence);
    const auto& u = r.vectors[r.chosen];
    r.labels.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) r.labels[i] = u[i] > 0.0 ? 0 : 1;
    r.rank.resize(n);
    std::iota(r.rank.begin(), r.rank.end(), std::size_t{0});
    std::stable_sort(r.rank.begin(), r.rank.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
}

/// Spectral bipartition of an aggregate overlap matrix.
inline SpectralResult spectral_partition(const OverlapMatrix& q, const PartitionOptions& opt = {}) {
    const auto l = laplacian(q, opt.masked);
    double trace = 0.0;
    for (std::size_t i = 0; i < l.n; ++i) trace += l(i, i);
    if (!(trace > 0.0)) throw UndefinedError("degenerate partition: overlap matrix has no positive entries");
    auto eig = smallest_eigenpairs(l, std::min(std::max<std::size_t>(opt.eigenpairs, 3), l.n));
    SpectralResult r;
    r.values = std::move(eig.values);
    r.vectors = std::move(eig.vectors);
    partition(r, opt);
    return r;
}

} // namespace echolens

#endif // ECHOLENS_CLUSTERING_HPP
