#ifndef ECHOLENS_POLARIZATION_HPP
#define ECHOLENS_POLARIZATION_HPP

#include <optional>
#include <span>
#include <vector>

#include "echolens/chambers.hpp"
#include "echolens/stats.hpp"
#include "echolens/types.hpp"

namespace echolens {

/// Adaptive E-I index of a two-group labelling (labels 0/1, aligned with
/// q.leaders()). Within-group strength sums qᵢⱼ over ordered pairs i ≠ j;
/// masked entries contribute nothing. Empty when either group has no present
/// member or the total strength is zero.
inline std::optional<double> ei_index(const OverlapMatrix& q, std::span<const int> labels) {
    const std::size_t n = q.size();
    if (labels.size() != n) throw DomainError("labels must align with the overlap matrix");
    bool present[2] = {false, false};
    double within = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw DomainError("labels must be 0 or 1");
        for (std::size_t j = 0; j < n; ++j) {
            if (!q.defined(i, j)) continue;
            present[labels[i]] = true;
            if (i == j) continue;
            const double v = *q.get(i, j);
            (labels[i] == labels[j] ? within : cross) += v;
        }
    }
    if (!present[0] || !present[1]) return std::nullopt;
    const double total = within + cross;
    if (!(total > 0.0)) return std::nullopt;
    return (within - cross) / total;
}

struct PolarizationSeries {
    std::vector<WeekIndex> weeks;
    /// Φ per week; empty where undefined.
    std::vector<std::optional<double>> phi;
    /// Reshuffle-null mean and sd over the reps where Φ was defined.
    std::vector<std::optional<double>> null_mean;
    std::vector<std::optional<double>> null_sd;

    /// Mean Φ over defined weeks.
    double mean_phi() const {
        std::vector<double> v;
        for (const auto& p : phi) {
            if (p) v.push_back(*p);
        }
        return stats::mean(v);
    }
    double sd_phi() const {
        std::vector<double> v;
        for (const auto& p : phi) {
            if (p) v.push_back(*p);
        }
        return stats::stddev(v);
    }
};

/// Φ for `labels` on each weekly matrix, with the reshuffle-null band from
/// `null_labels` (may be empty).
inline PolarizationSeries polarization_dynamics(std::span<const OverlapMatrix> weekly, std::span<const WeekIndex> weeks,
                                                std::span<const int> labels,
                                                std::span<const std::vector<int>> null_labels = {}) {
    if (weekly.size() != weeks.size()) throw DomainError("one week index per matrix");
    PolarizationSeries s;
    s.weeks.assign(weeks.begin(), weeks.end());
    for (const auto& q : weekly) {
        s.phi.push_back(ei_index(q, labels));
        std::vector<double> null;
        for (const auto& shuffled : null_labels) {
            if (auto v = ei_index(q, shuffled)) null.push_back(*v);
        }
        if (null.empty()) {
            s.null_mean.emplace_back();
            s.null_sd.emplace_back();
        } else {
            s.null_mean.emplace_back(stats::mean(null));
            s.null_sd.emplace_back(stats::stddev(null));
        }
    }
    return s;
}

} // namespace echolens

#endif // ECHOLENS_POLARIZATION_HPP
