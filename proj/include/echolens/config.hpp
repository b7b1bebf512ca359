#ifndef ECHOLENS_CONFIG_HPP
#define ECHOLENS_CONFIG_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "echolens/clustering.hpp"
#include "echolens/ingest.hpp"
#include "echolens/synth.hpp"
#include "echolens/types.hpp"

namespace echolens {

inline constexpr int kConfigSchemaVersion = 1;

/// Every science-relevant parameter of a pipeline run. Defaults follow the
/// reference analysis (N = M = 50, η = 0.5, 100 null reps, u₃ splits the leaders).
struct PipelineConfig {
    int schema_version = kConfigSchemaVersion;
    /// Edge-list files; empty means the synth stage output.
    std::vector<std::string> inputs;
    /// Start of week 0: integer seconds or an ISO-8601 date.
    std::string epoch = "0";
    int week_days = 7;
    char delimiter = '\t';
    bool prebinned = false;
    OnError on_error = OnError::fail_fast;

    std::size_t n = 50;
    std::size_t m = 50;
    bool extend_ties = false;

    /// Build echo chambers from every leading user with an audience, not
    /// only those high-impact in the week.
    bool echo_all_leaders = false;
    bool subchambers = false;

    std::size_t kde_grid = 512;
    double peak_min_fraction = 0.05;
    double valley_drop = 0.10;

    bool degree_weighted = false;

    VectorPolicy vector_policy = VectorPolicy::third;
    double min_fraction = 0.1;
    MaskedPolicy masked = MaskedPolicy::zero;
    std::size_t eigenpairs = 4;

    std::size_t null_reps = 100;
    std::uint64_t seed = 1;

    double eta = 0.5;

    std::string output = "echolens-out";
    unsigned workers = 1;

    PlantedConfig synth;

    std::int64_t epoch_seconds() const {
        auto v = parse_timestamp(epoch);
        if (!v) throw ConfigError("epoch: cannot parse '" + epoch + "'");
        return *v;
    }

    IngestOptions ingest_options() const {
        IngestOptions o;
        o.delimiter = delimiter;
        o.epoch = epoch_seconds();
        o.week_days = week_days;
        o.prebinned = prebinned;
        o.on_error = on_error;
        return o;
    }

    void validate() const {
        if (schema_version != kConfigSchemaVersion) {
            throw ConfigError("unsupported schema_version " + std::to_string(schema_version) + " (expected " +
                              std::to_string(kConfigSchemaVersion) + ")");
        }
        epoch_seconds();
        if (week_days <= 0) throw ConfigError("week_days must be positive");
        if (n == 0 || m == 0) throw ConfigError("n and m must be at least 1");
        if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in (0, 1]");
        if (kde_grid < 2) throw ConfigError("kde_grid must be at least 2");
        if (!(peak_min_fraction >= 0.0 && peak_min_fraction < 1.0)) throw ConfigError("peak_min_fraction must lie in [0, 1)");
        if (!(valley_drop >= 0.0 && valley_drop < 1.0)) throw ConfigError("valley_drop must lie in [0, 1)");
        if (!(min_fraction > 0.0 && min_fraction <= 0.5)) throw ConfigError("min_fraction must lie in (0, 0.5]");
        if (eigenpairs < 3) throw ConfigError("eigenpairs must be at least 3");
        if (null_reps == 0) throw ConfigError("null_reps must be at least 1");
        if (workers == 0) throw ConfigError("workers must be at least 1");
        if (output.empty()) throw ConfigError("output must not be empty");
        synth.validate();
    }
};

namespace detail {

inline std::string trim_copy(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

inline std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return std::strtoull(v.c_str(), nullptr, 10);
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

} // namespace detail

/// One config key: parser and canonical printer.
struct ConfigField {
    std::string key;
    std::string help;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

namespace detail {

template <class Access>
ConfigField real_field(std::string key, std::string help, Access acc) {
    return {key, std::move(help),
            [acc, key](PipelineConfig& c, const std::string& v) { acc(c) = to_double(key, v); },
            [acc](const PipelineConfig& c) { return exact(acc(c)); }};
}

template <class Access>
ConfigField count_field(std::string key, std::string help, Access acc) {
    return {key, std::move(help),
            [acc, key](PipelineConfig& c, const std::string& v) {
                using T = std::remove_reference_t<decltype(acc(c))>;
                acc(c) = static_cast<T>(to_unsigned(key, v));
            },
            [acc](const PipelineConfig& c) { return std::to_string(acc(c)); }};
}

template <class Access>
ConfigField flag_field(std::string key, std::string help, Access acc) {
    return {key, std::move(help), [acc, key](PipelineConfig& c, const std::string& v) { acc(c) = to_bool(key, v); },
            [acc](const PipelineConfig& c) { return acc(c) ? "true" : "false"; }};
}

} // namespace detail

/// The config schema, in canonical order.
inline const std::vector<ConfigField>& config_fields() {
    using namespace detail;
    static const std::vector<ConfigField> fields = [] {
        std::vector<ConfigField> f;
        f.push_back({"schema_version", "config schema version",
                     [](PipelineConfig& c, const std::string& v) {
                         c.schema_version = static_cast<int>(to_unsigned("schema_version", v));
                     },
                     [](const PipelineConfig& c) { return std::to_string(c.schema_version); }});
        f.push_back({"input", "comma-separated edge-list files (empty: synth output)",
                     [](PipelineConfig& c, const std::string& v) {
                         c.inputs.clear();
                         std::stringstream ss(v);
                         std::string item;
                         while (std::getline(ss, item, ',')) {
                             item = trim_copy(item);
                             if (!item.empty()) c.inputs.push_back(item);
                         }
                     },
                     [](const PipelineConfig& c) {
                         std::string s;
                         for (const auto& p : c.inputs) s += (s.empty() ? "" : ",") + p;
                         return s;
                     }});
        f.push_back({"epoch", "start of week 0 (seconds or ISO date)",
                     [](PipelineConfig& c, const std::string& v) { c.epoch = v; },
                     [](const PipelineConfig& c) { return c.epoch; }});
        f.push_back(count_field("week_days", "days per time bin", [](auto& c) -> auto& { return c.week_days; }));
        f.push_back({"delimiter", "field delimiter: tab, comma, space or a single character",
                     [](PipelineConfig& c, const std::string& v) {
                         if (v == "tab" || v == "\\t") c.delimiter = '\t';
                         else if (v == "comma") c.delimiter = ',';
                         else if (v == "space") c.delimiter = ' ';
                         else if (v.size() == 1) c.delimiter = v[0];
                         else throw ConfigError("delimiter: unknown value '" + v + "'");
                     },
                     [](const PipelineConfig& c) -> std::string {
                         if (c.delimiter == '\t') return "tab";
                         if (c.delimiter == ',') return "comma";
                         if (c.delimiter == ' ') return "space";
                         return std::string(1, c.delimiter);
                     }});
        f.push_back(flag_field("prebinned", "first column is a week index", [](auto& c) -> auto& { return c.prebinned; }));
        f.push_back({"on_error", "malformed records: fail or skip",
                     [](PipelineConfig& c, const std::string& v) {
                         if (v == "fail") c.on_error = OnError::fail_fast;
                         else if (v == "skip") c.on_error = OnError::skip;
                         else throw ConfigError("on_error: expected fail or skip, got '" + v + "'");
                     },
                     [](const PipelineConfig& c) -> std::string { return c.on_error == OnError::skip ? "skip" : "fail"; }});
        f.push_back(count_field("n", "high-impact users per week", [](auto& c) -> auto& { return c.n; }));
        f.push_back(count_field("m", "leading users", [](auto& c) -> auto& { return c.m; }));
        f.push_back(flag_field("extend_ties", "keep users tied with the M-th leader",
                               [](auto& c) -> auto& { return c.extend_ties; }));
        f.push_back(flag_field("echo_all_leaders", "echo chambers from all leaders with an audience",
                               [](auto& c) -> auto& { return c.echo_all_leaders; }));
        f.push_back(flag_field("subchambers", "also compute subchamber overlaps",
                               [](auto& c) -> auto& { return c.subchambers; }));
        f.push_back(count_field("kde_grid", "KDE grid points", [](auto& c) -> auto& { return c.kde_grid; }));
        f.push_back(real_field("peak_min_fraction", "minimum peak height relative to the highest",
                               [](auto& c) -> auto& { return c.peak_min_fraction; }));
        f.push_back(real_field("valley_drop", "minimum valley depth below the lower peak",
                               [](auto& c) -> auto& { return c.valley_drop; }));
        f.push_back(flag_field("degree_weighted", "null model uses weighted in-degree",
                               [](auto& c) -> auto& { return c.degree_weighted; }));
        f.push_back({"vector_policy", "eigenvector choice: third or auto",
                     [](PipelineConfig& c, const std::string& v) {
                         if (v == "third") c.vector_policy = VectorPolicy::third;
                         else if (v == "auto") c.vector_policy = VectorPolicy::automatic;
                         else throw ConfigError("vector_policy: expected third or auto, got '" + v + "'");
                     },
                     [](const PipelineConfig& c) -> std::string {
                         return c.vector_policy == VectorPolicy::third ? "third" : "auto";
                     }});
        f.push_back(real_field("min_fraction", "auto policy: minimum share on each side",
                               [](auto& c) -> auto& { return c.min_fraction; }));
        f.push_back({"masked", "masked pairs in the Laplacian: zero or pair_mean",
                     [](PipelineConfig& c, const std::string& v) {
                         if (v == "zero") c.masked = MaskedPolicy::zero;
                         else if (v == "pair_mean") c.masked = MaskedPolicy::pair_mean;
                         else throw ConfigError("masked: expected zero or pair_mean, got '" + v + "'");
                     },
                     [](const PipelineConfig& c) -> std::string {
                         return c.masked == MaskedPolicy::zero ? "zero" : "pair_mean";
                     }});
        f.push_back(count_field("eigenpairs", "eigenpairs reported", [](auto& c) -> auto& { return c.eigenpairs; }));
        f.push_back(count_field("null_reps", "label reshuffles for the polarization null",
                                [](auto& c) -> auto& { return c.null_reps; }));
        f.push_back(count_field("seed", "seed for reshuffles", [](auto& c) -> auto& { return c.seed; }));
        f.push_back(real_field("eta", "ideology score threshold", [](auto& c) -> auto& { return c.eta; }));
        f.push_back({"output", "output directory", [](PipelineConfig& c, const std::string& v) { c.output = v; },
                     [](const PipelineConfig& c) { return c.output; }});
        f.push_back(count_field("workers", "worker threads", [](auto& c) -> auto& { return c.workers; }));

        f.push_back(count_field("synth.weeks", "weeks", [](auto& c) -> auto& { return c.synth.weeks; }));
        for (int g = 0; g < 2; ++g) {
            const std::string s = std::to_string(g);
            f.push_back(count_field("synth.pool" + s, "member pool of group " + s,
                                    [g](auto& c) -> auto& { return c.synth.pool[g]; }));
            f.push_back(count_field("synth.leaders" + s, "leaders of group " + s,
                                    [g](auto& c) -> auto& { return c.synth.leaders[g]; }));
            f.push_back(count_field("synth.hub_pool" + s, "hub pool of group " + s,
                                    [g](auto& c) -> auto& { return c.synth.hub_pool[g]; }));
            f.push_back(count_field("synth.hubs_active" + s, "active hubs per week in group " + s,
                                    [g](auto& c) -> auto& { return c.synth.hubs_active[g]; }));
        }
        f.push_back(count_field("synth.satellites", "satellite leaders",
                                [](auto& c) -> auto& { return c.synth.satellites; }));
        f.push_back(count_field("synth.satellite_pool", "satellite member pool",
                                [](auto& c) -> auto& { return c.synth.satellite_pool; }));
        f.push_back(real_field("synth.satellite_mixing", "satellite endorsements into group 0",
                               [](auto& c) -> auto& { return c.synth.satellite_mixing; }));
        f.push_back(real_field("synth.mixing", "cross-group endorsement probability",
                               [](auto& c) -> auto& { return c.synth.mixing; }));
        f.push_back(real_field("synth.survival", "weekly member survival probability",
                               [](auto& c) -> auto& { return c.synth.survival; }));
        f.push_back(real_field("synth.activity_lo", "leader activity, lower bound",
                               [](auto& c) -> auto& { return c.synth.activity_lo; }));
        f.push_back(real_field("synth.activity_hi", "leader activity, upper bound",
                               [](auto& c) -> auto& { return c.synth.activity_hi; }));
        f.push_back(real_field("synth.popularity_lo", "leader popularity, lower bound",
                               [](auto& c) -> auto& { return c.synth.popularity_lo; }));
        f.push_back(real_field("synth.popularity_hi", "leader popularity, upper bound",
                               [](auto& c) -> auto& { return c.synth.popularity_hi; }));
        f.push_back(real_field("synth.intensity_exponent", "leader intensity power-law exponent",
                               [](auto& c) -> auto& { return c.synth.intensity_exponent; }));
        f.push_back(real_field("synth.intensity_max", "leader intensity upper bound",
                               [](auto& c) -> auto& { return c.synth.intensity_max; }));
        f.push_back(real_field("synth.leader_endorsements", "endorsements per member per leader",
                               [](auto& c) -> auto& { return c.synth.leader_endorsements; }));
        f.push_back(real_field("synth.hub_endorsements", "hub endorsements per member",
                               [](auto& c) -> auto& { return c.synth.hub_endorsements; }));
        f.push_back(real_field("synth.peer_endorsements", "peer endorsements per member",
                               [](auto& c) -> auto& { return c.synth.peer_endorsements; }));
        f.push_back(real_field("synth.peer_weight_exponent", "peer popularity power-law exponent",
                               [](auto& c) -> auto& { return c.synth.peer_weight_exponent; }));
        f.push_back(real_field("synth.peer_weight_max", "peer popularity upper bound",
                               [](auto& c) -> auto& { return c.synth.peer_weight_max; }));
        f.push_back(count_field("synth.seed", "generator seed", [](auto& c) -> auto& { return c.synth.seed; }));
        return f;
    }();
    return fields;
}

inline const ConfigField* find_field(const std::string& key) {
    for (const auto& f : config_fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

inline void set_option(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    const auto* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    f->set(cfg, value);
}

inline std::string get_option(const PipelineConfig& cfg, const std::string& key) {
    const auto* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    return f->get(cfg);
}

/// Parses `key = value` lines ('#' starts a comment). The file must declare
/// `schema_version`; unknown or repeated keys are errors.
inline PipelineConfig parse_config(std::istream& in) {
    PipelineConfig cfg;
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim_copy(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim_copy(line.substr(0, eq));
        const std::string value = detail::trim_copy(line.substr(eq + 1));
        if (auto [it, fresh] = seen.emplace(key, lineno); !fresh) {
            throw ConfigError("config line " + std::to_string(lineno) + ": '" + key + "' already set on line " +
                              std::to_string(it->second));
        }
        try {
            set_option(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!seen.count("schema_version")) throw ConfigError("config must declare schema_version");
    return cfg;
}

/// Canonical `key = value` text of every field.
inline std::string dump_config(const PipelineConfig& cfg) {
    std::string out;
    for (const auto& f : config_fields()) out += f.key + " = " + f.get(cfg) + "\n";
    return out;
}

/// ECHOLENS_OUTPUT_DIR and ECHOLENS_WORKERS override the output directory
/// and worker count; nothing else is read from the environment.
inline void apply_environment(PipelineConfig& cfg) {
    if (const char* dir = std::getenv("ECHOLENS_OUTPUT_DIR"); dir && *dir) cfg.output = dir;
    if (const char* w = std::getenv("ECHOLENS_WORKERS"); w && *w) {
        set_option(cfg, "workers", w);
    }
}

} // namespace echolens

#endif // ECHOLENS_CONFIG_HPP
