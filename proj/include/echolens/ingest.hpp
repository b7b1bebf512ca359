#ifndef ECHOLENS_INGEST_HPP
#define ECHOLENS_INGEST_HPP

#include <charconv>
#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "echolens/graph.hpp"
#include "echolens/types.hpp"

namespace echolens {

enum class OnError { fail_fast, skip };

struct IngestOptions {
    char delimiter = '\t';
    /// Start of week 0, seconds since the Unix epoch.
    std::int64_t epoch = 0;
    int week_days = 7;
    /// Records carry a leading week column instead of a timestamp.
    bool prebinned = false;
    OnError on_error = OnError::fail_fast;
};

struct IngestReport {
    std::size_t lines = 0;
    std::size_t records = 0;
    std::size_t self_loops_dropped = 0;
    std::size_t malformed_skipped = 0;
    std::size_t duplicates_merged = 0;
    std::size_t weeks = 0;
    std::size_t users = 0;
    std::size_t edges = 0;
    /// First few skipped-record messages, for diagnostics.
    std::vector<std::string> errors;
};

namespace detail {

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
    Int v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

} // namespace detail

/// Parses an integer epoch-seconds value or an ISO-8601 date/time
/// (YYYY-MM-DD[THH:MM[:SS[.fff]]][Z|±HH:MM]) into Unix seconds.
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (auto v = detail::parse_int<std::int64_t>(s)) return v;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto year = detail::parse_int<int>(s.substr(0, 4));
    auto month = detail::parse_int<unsigned>(s.substr(5, 2));
    auto day = detail::parse_int<unsigned>(s.substr(8, 2));
    if (!year || !month || !day) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{*year}, std::chrono::month{*month}, std::chrono::day{*day}};
    if (!ymd.ok()) return std::nullopt;
    std::int64_t seconds = std::chrono::sys_days{ymd}.time_since_epoch().count() * std::int64_t{86400};
    s.remove_prefix(10);
    if (s.empty()) return seconds;
    if (s[0] != 'T' && s[0] != ' ') return std::nullopt;
    s.remove_prefix(1);
    if (s.size() < 5 || s[2] != ':') return std::nullopt;
    auto hh = detail::parse_int<int>(s.substr(0, 2));
    auto mm = detail::parse_int<int>(s.substr(3, 2));
    if (!hh || !mm || *hh > 23 || *mm > 59) return std::nullopt;
    seconds += *hh * 3600 + *mm * 60;
    s.remove_prefix(5);
    if (s.size() >= 3 && s[0] == ':') {
        auto ss = detail::parse_int<int>(s.substr(1, 2));
        if (!ss || *ss > 60) return std::nullopt;
        seconds += *ss;
        s.remove_prefix(3);
        if (!s.empty() && s[0] == '.') {
            s.remove_prefix(1);
            while (!s.empty() && s[0] >= '0' && s[0] <= '9') s.remove_prefix(1);
        }
    }
    if (s.empty() || s == "Z") return seconds;
    if (s.size() == 6 && (s[0] == '+' || s[0] == '-') && s[3] == ':') {
        auto oh = detail::parse_int<int>(s.substr(1, 2));
        auto om = detail::parse_int<int>(s.substr(4, 2));
        if (!oh || !om) return std::nullopt;
        const int offset = *oh * 3600 + *om * 60;
        return s[0] == '+' ? seconds - offset : seconds + offset;
    }
    return std::nullopt;
}

/// Streams delimiter-separated retweet records into a temporal network.
///
/// Columns: timestamp (or week when prebinned), retweeter, author, optional
/// count. Blank lines and lines starting with '#' are ignored, as is a header
/// row whose first field is "timestamp" or "week". Duplicate
/// (retweeter, author, week) records are summed and self-retweets dropped.
/// Several sources may be read before `finish`.
class EdgeListReader {
public:
    explicit EdgeListReader(IngestOptions opt) : opt_(opt) {
        if (opt_.week_days <= 0) throw ConfigError("week length must be positive");
    }

    /// Reads one source. `source` prefixes error messages when non-empty.
    void read(std::istream& in, const std::string& source = {}) {
        const std::int64_t bin = std::int64_t{opt_.week_days} * 86400;
        auto reject = [&](std::size_t line, const std::string& msg) {
            const std::string what = source.empty() ? msg : source + ": " + msg;
            if (opt_.on_error == OnError::fail_fast) throw ParseError(line, what);
            ++report_.malformed_skipped;
            if (report_.errors.size() < 20) report_.errors.push_back("line " + std::to_string(line) + ": " + what);
        };

        std::string line;
        std::size_t lineno = 0;
        bool first_record = true;
        while (std::getline(in, line)) {
            ++lineno;
            ++report_.lines;
            const std::string_view view = detail::trim(line);
            if (view.empty() || view.front() == '#') continue;
            const auto fields = detail::split(view, opt_.delimiter);
            if (first_record) {
                first_record = false;
                if (fields[0] == "timestamp" || fields[0] == "week") continue;
            }
            if (fields.size() < 3 || fields.size() > 4) {
                reject(lineno, "expected 3 or 4 fields, found " + std::to_string(fields.size()));
                continue;
            }
            if (fields[1].empty() || fields[2].empty()) {
                reject(lineno, "empty user field");
                continue;
            }
            std::uint32_t count = 1;
            if (fields.size() == 4) {
                auto c = detail::parse_int<std::uint32_t>(fields[3]);
                if (!c || *c == 0) {
                    reject(lineno, "count must be a positive integer");
                    continue;
                }
                count = *c;
            }
            WeekIndex week = 0;
            if (opt_.prebinned) {
                auto w = detail::parse_int<WeekIndex>(fields[0]);
                if (!w || *w < 0) {
                    reject(lineno, "bad week index '" + std::string(fields[0]) + "'");
                    continue;
                }
                week = *w;
            } else {
                auto ts = parse_timestamp(fields[0]);
                if (!ts) {
                    reject(lineno, "unparseable timestamp '" + std::string(fields[0]) + "'");
                    continue;
                }
                if (*ts < opt_.epoch) {
                    reject(lineno, "timestamp before epoch");
                    continue;
                }
                week = static_cast<WeekIndex>((*ts - opt_.epoch) / bin);
            }
            ++report_.records;
            if (fields[1] == fields[2]) {
                ++report_.self_loops_dropped;
                continue;
            }
            const UserId retweeter = users_.intern(fields[1]);
            const UserId author = users_.intern(fields[2]);
            buckets_[week].push_back(Edge{retweeter, author, count});
        }
    }

    TemporalNetwork finish(IngestReport* report_out = nullptr) {
        std::vector<WeeklyGraph> weeks;
        weeks.reserve(buckets_.size());
        std::size_t accepted = 0;
        for (auto& [week, raw] : buckets_) {
            accepted += raw.size();
            weeks.push_back(WeeklyGraph::from_edges(week, std::move(raw)));
            report_.edges += weeks.back().edges().size();
        }
        buckets_.clear();
        report_.duplicates_merged = accepted - report_.edges;
        report_.weeks = weeks.size();
        report_.users = users_.size();
        if (report_out) *report_out = std::move(report_);
        return TemporalNetwork(std::move(users_), std::move(weeks));
    }

private:
    IngestOptions opt_;
    IngestReport report_;
    UserIndex users_;
    std::map<WeekIndex, std::vector<Edge>> buckets_;
};

inline TemporalNetwork ingest(std::istream& in, const IngestOptions& opt, IngestReport* report_out = nullptr) {
    EdgeListReader reader(opt);
    reader.read(in);
    return reader.finish(report_out);
}

} // namespace echolens

#endif // ECHOLENS_INGEST_HPP
