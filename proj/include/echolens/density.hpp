#ifndef ECHOLENS_DENSITY_HPP
#define ECHOLENS_DENSITY_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "echolens/stats.hpp"
#include "echolens/types.hpp"

namespace echolens {

struct KdeOptions {
    std::size_t grid_points = 512;
    double lo = 0.0;
    double hi = 1.0;
    /// Mirror samples about `lo` so no mass leaks below the boundary.
    bool reflect_lo = true;
};

/// Density evaluated on a uniform grid.
struct Density {
    std::vector<double> grid;
    std::vector<double> values;
    double bandwidth = 0.0;
    std::size_t n_samples = 0;

    double step() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
};

/// Gaussian KDE with Scott's bandwidth h = σ̂·n^(−1/5) (σ̂ the sample sd).
/// Throws UndefinedError for fewer than two samples or zero variance.
inline Density kde(std::span<const double> samples, const KdeOptions& opt = {}) {
    if (samples.size() < 2) throw UndefinedError("kde needs at least two samples");
    if (opt.grid_points < 2 || !(opt.hi > opt.lo)) throw ConfigError("kde grid must have >= 2 points on a non-empty range");
    const double sd = stats::stddev(samples);
    if (!(sd > 0.0)) throw UndefinedError("kde of a degenerate (zero-variance) sample");
    const double n = static_cast<double>(samples.size());
    const double h = sd * std::pow(n, -0.2);

    std::vector<double> sorted(samples.begin(), samples.end());
    if (opt.reflect_lo) {
        for (double x : samples) sorted.push_back(2.0 * opt.lo - x);
    }
    std::sort(sorted.begin(), sorted.end());

    Density d;
    d.bandwidth = h;
    d.n_samples = samples.size();
    d.grid.resize(opt.grid_points);
    d.values.assign(opt.grid_points, 0.0);
    const double step = (opt.hi - opt.lo) / static_cast<double>(opt.grid_points - 1);
    const double cutoff = 8.0 * h;
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * M_PI));
    for (std::size_t g = 0; g < opt.grid_points; ++g) {
        const double x = opt.lo + step * static_cast<double>(g);
        d.grid[g] = x;
        auto first = std::lower_bound(sorted.begin(), sorted.end(), x - cutoff);
        auto last = std::upper_bound(first, sorted.end(), x + cutoff);
        double acc = 0.0;
        for (auto it = first; it != last; ++it) {
            const double z = (x - *it) / h;
            acc += std::exp(-0.5 * z * z);
        }
        d.values[g] = acc * norm;
    }
    return d;
}

struct PeakOptions {
    /// Peaks below this fraction of the global maximum are ignored.
    double min_peak_fraction = 0.05;
    /// Adjacent peaks merge unless the valley between them is at least this
    /// fraction below the lower of the two.
    double min_valley_drop = 0.10;
};

struct Mode {
    /// Grid location of the density maximum.
    double location = 0.0;
    double height = 0.0;
    /// Mean and sd of the samples assigned to this mode.
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

struct PeakSummary {
    /// Sorted by location.
    std::vector<Mode> modes;
    /// Valley between each adjacent pair of modes.
    std::vector<double> valleys;
    /// Valley between the two highest modes; equal to `lo` of the grid when unimodal.
    double split = 0.0;
    double bandwidth = 0.0;

    std::size_t modality() const noexcept { return modes.size(); }
};

/// Finds the density's modes and splits the samples at the valleys between them.
inline PeakSummary split_peaks(const Density& d, std::span<const double> samples, const PeakOptions& opt = {}) {
    const auto& y = d.values;
    const std::size_t n = y.size();
    PeakSummary out;
    out.bandwidth = d.bandwidth;
    if (n == 0) return out;
    const double top = *std::max_element(y.begin(), y.end());

    // local maxima; plateaus count once, at their left edge
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left_ok = i == 0 || y[i] > y[i - 1];
        std::size_t j = i;
        while (j + 1 < n && y[j + 1] == y[i]) ++j;
        const bool right_ok = j + 1 == n || y[j + 1] < y[i];
        if (left_ok && right_ok && y[i] >= opt.min_peak_fraction * top && y[i] > 0.0) peaks.push_back(i);
        i = j;
    }

    auto valley_between = [&](std::size_t a, std::size_t b) {
        std::size_t best = a;
        for (std::size_t k = a; k <= b; ++k) {
            if (y[k] < y[best]) best = k;
        }
        return best;
    };

    // merge shallow neighbours, dropping the lower peak, until stable
    bool merged = true;
    while (merged && peaks.size() > 1) {
        merged = false;
        std::size_t worst = 0;
        double worst_depth = 1e300;
        for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
            const double lower = std::min(y[peaks[k]], y[peaks[k + 1]]);
            const double v = y[valley_between(peaks[k], peaks[k + 1])];
            const double depth = (lower - v) / lower;
            if (depth < opt.min_valley_drop && depth < worst_depth) {
                worst_depth = depth;
                worst = k;
            }
        }
        if (worst_depth < 1e300) {
            const std::size_t drop = y[peaks[worst]] < y[peaks[worst + 1]] ? worst : worst + 1;
            peaks.erase(peaks.begin() + static_cast<std::ptrdiff_t>(drop));
            merged = true;
        }
    }

    std::vector<double> valleys;
    for (std::size_t k = 0; k + 1 < peaks.size(); ++k) valleys.push_back(d.grid[valley_between(peaks[k], peaks[k + 1])]);

    std::vector<std::vector<double>> buckets(peaks.size());
    for (double s : samples) {
        const auto k = static_cast<std::size_t>(std::upper_bound(valleys.begin(), valleys.end(), s) - valleys.begin());
        buckets[k].push_back(s);
    }
    for (std::size_t k = 0; k < peaks.size(); ++k) {
        Mode m;
        m.location = d.grid[peaks[k]];
        m.height = y[peaks[k]];
        m.mean = stats::mean(buckets[k]);
        m.sd = stats::stddev(buckets[k]);
        m.count = buckets[k].size();
        out.modes.push_back(m);
    }
    out.valleys = valleys;
    out.split = d.grid.front();
    if (peaks.size() >= 2) {
        std::vector<std::size_t> by_height(peaks.size());
        for (std::size_t k = 0; k < peaks.size(); ++k) by_height[k] = k;
        std::sort(by_height.begin(), by_height.end(), [&](std::size_t a, std::size_t b) { return y[peaks[a]] > y[peaks[b]]; });
        const auto a = std::min(by_height[0], by_height[1]);
        const auto b = std::max(by_height[0], by_height[1]);
        out.split = d.grid[valley_between(peaks[a], peaks[b])];
    }
    return out;
}

} // namespace echolens

#endif // ECHOLENS_DENSITY_HPP
