#ifndef ECHOLENS_SETS_HPP
#define ECHOLENS_SETS_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <iterator>
#include <optional>
#include <span>
#include <vector>

#include "echolens/types.hpp"

// Exact set algebra over sorted id arrays. Intersections switch to galloping
// search when the operands differ in size by more than kGallopRatio; the
// Bitset type covers dense universes where word-parallel popcounts win.

namespace echolens::sets {

inline constexpr std::size_t kGallopRatio = 32;

namespace detail {

inline std::size_t merge_count(std::span<const UserId> a, std::span<const UserId> b) {
    std::size_t i = 0, j = 0, n = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

// small is much shorter than large
inline std::size_t gallop_count(std::span<const UserId> small, std::span<const UserId> large) {
    std::size_t n = 0;
    auto first = large.begin();
    for (UserId x : small) {
        std::size_t step = 1;
        auto probe = first;
        while (probe != large.end() && *probe < x) {
            first = probe;
            const auto left = static_cast<std::size_t>(std::distance(probe, large.end()));
            probe += static_cast<std::ptrdiff_t>(std::min(step, left));
            step <<= 1;
        }
        first = std::lower_bound(first, probe, x);
        if (first != large.end() && *first == x) {
            ++n;
            ++first;
        }
        if (first == large.end()) break;
    }
    return n;
}

} // namespace detail

/// |a ∩ b| for sorted, duplicate-free inputs.
inline std::size_t intersection_size(std::span<const UserId> a, std::span<const UserId> b) {
    if (a.size() > b.size()) std::swap(a, b);
    if (a.empty()) return 0;
    if (b.size() / a.size() >= kGallopRatio) return detail::gallop_count(a, b);
    return detail::merge_count(a, b);
}

inline IdSet set_union(std::span<const UserId> a, std::span<const UserId> b) {
    IdSet out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline IdSet set_intersection(std::span<const UserId> a, std::span<const UserId> b) {
    IdSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline IdSet set_difference(std::span<const UserId> a, std::span<const UserId> b) {
    IdSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline bool contains(std::span<const UserId> s, UserId x) {
    return std::binary_search(s.begin(), s.end(), x);
}

/// Sorts and deduplicates in place.
inline void normalize(IdSet& s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
}

/// Jaccard similarity; empty when both sets are empty (undefined overlap).
inline std::optional<double> jaccard(std::span<const UserId> a, std::span<const UserId> b) {
    if (a.empty() && b.empty()) return std::nullopt;
    const std::size_t inter = intersection_size(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Fixed-universe bitmap.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t universe) : words_((universe + 63) / 64, 0) {}

    Bitset(std::size_t universe, std::span<const UserId> members) : Bitset(universe) {
        for (UserId x : members) set(x);
        count_ = members.size();
    }

    void set(UserId x) { words_[x >> 6] |= std::uint64_t{1} << (x & 63); }
    bool test(UserId x) const { return (words_[x >> 6] >> (x & 63)) & 1u; }
    std::size_t count() const noexcept { return count_; }

    std::size_t intersection_size(const Bitset& other) const {
        std::size_t n = 0;
        const std::size_t w = std::min(words_.size(), other.words_.size());
        for (std::size_t i = 0; i < w; ++i) n += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
        return n;
    }

private:
    std::vector<std::uint64_t> words_;
    std::size_t count_ = 0;
};

} // namespace echolens::sets

#endif // ECHOLENS_SETS_HPP
