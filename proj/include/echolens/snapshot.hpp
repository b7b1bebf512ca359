#ifndef ECHOLENS_SNAPSHOT_HPP
#define ECHOLENS_SNAPSHOT_HPP

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "echolens/graph.hpp"
#include "echolens/types.hpp"

// Binary snapshot of a TemporalNetwork (little-endian):
//   magic "ECHOLNET" | u32 version | u64 n_users | n_users × (u32 len, bytes)
//   | u64 n_weeks | n_weeks × (i32 week, u64 n_edges, n_edges × (u32 retweeter, u32 author, u32 count))

namespace echolens {

inline constexpr char kSnapshotMagic[8] = {'E', 'C', 'H', 'O', 'L', 'N', 'E', 'T'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("snapshot truncated");
    return v;
}

} // namespace detail

inline void write_snapshot(std::ostream& out, const TemporalNetwork& net) {
    out.write(kSnapshotMagic, sizeof kSnapshotMagic);
    detail::put<std::uint32_t>(out, kSnapshotVersion);
    detail::put<std::uint64_t>(out, net.users().size());
    for (const auto& name : net.users().names()) {
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    detail::put<std::uint64_t>(out, net.n_weeks());
    for (const auto& w : net.weeks()) {
        detail::put<std::int32_t>(out, w.week());
        detail::put<std::uint64_t>(out, w.edges().size());
        out.write(reinterpret_cast<const char*>(w.edges().data()),
                  static_cast<std::streamsize>(w.edges().size() * sizeof(Edge)));
    }
    if (!out) throw Error("failed to write snapshot");
}

inline TemporalNetwork read_snapshot(std::istream& in) {
    char magic[sizeof kSnapshotMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) {
        throw Error("not a network snapshot");
    }
    const auto version = detail::get<std::uint32_t>(in);
    if (version != kSnapshotVersion) throw Error("unsupported snapshot version " + std::to_string(version));
    UserIndex users;
    const auto n_users = detail::get<std::uint64_t>(in);
    users.reserve(n_users);
    std::string name;
    for (std::uint64_t i = 0; i < n_users; ++i) {
        const auto len = detail::get<std::uint32_t>(in);
        name.resize(len);
        if (!in.read(name.data(), len)) throw Error("snapshot truncated");
        if (users.intern(name) != i) throw Error("snapshot has duplicate user names");
    }
    const auto n_weeks = detail::get<std::uint64_t>(in);
    std::vector<WeeklyGraph> weeks;
    weeks.reserve(n_weeks);
    for (std::uint64_t t = 0; t < n_weeks; ++t) {
        const auto week = detail::get<std::int32_t>(in);
        const auto n_edges = detail::get<std::uint64_t>(in);
        std::vector<Edge> edges(n_edges);
        if (!in.read(reinterpret_cast<char*>(edges.data()), static_cast<std::streamsize>(n_edges * sizeof(Edge)))) {
            throw Error("snapshot truncated");
        }
        weeks.push_back(WeeklyGraph::from_edges(week, std::move(edges)));
    }
    return TemporalNetwork(std::move(users), std::move(weeks));
}

} // namespace echolens

#endif // ECHOLENS_SNAPSHOT_HPP
