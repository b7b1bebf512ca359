#ifndef ECHOLENS_PIPELINE_HPP
#define ECHOLENS_PIPELINE_HPP

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "echolens/chambers.hpp"
#include "echolens/clustering.hpp"
#include "echolens/config.hpp"
#include "echolens/density.hpp"
#include "echolens/echo.hpp"
#include "echolens/impact.hpp"
#include "echolens/ingest.hpp"
#include "echolens/io.hpp"
#include "echolens/leaders.hpp"
#include "echolens/nullmodel.hpp"
#include "echolens/polarization.hpp"
#include "echolens/snapshot.hpp"
#include "echolens/synth.hpp"

namespace echolens {

enum class Stage { synth, ingest, leaders, chambers, overlap, null, cluster, polarize, echo, augment, flow, report };

inline constexpr std::array<Stage, 12> kStages{Stage::synth,    Stage::ingest,  Stage::leaders, Stage::chambers,
                                               Stage::overlap,  Stage::null,    Stage::cluster, Stage::polarize,
                                               Stage::echo,     Stage::augment, Stage::flow,    Stage::report};

inline const char* stage_name(Stage s) {
    switch (s) {
    case Stage::synth: return "synth";
    case Stage::ingest: return "ingest";
    case Stage::leaders: return "leaders";
    case Stage::chambers: return "chambers";
    case Stage::overlap: return "overlap";
    case Stage::null: return "null";
    case Stage::cluster: return "cluster";
    case Stage::polarize: return "polarize";
    case Stage::echo: return "echo";
    case Stage::augment: return "augment";
    case Stage::flow: return "flow";
    case Stage::report: return "report";
    }
    return "?";
}

inline std::optional<Stage> parse_stage(const std::string& name) {
    for (Stage s : kStages) {
        if (name == stage_name(s)) return s;
    }
    return std::nullopt;
}

/// Stages whose artifacts `s` reads.
inline std::vector<Stage> upstream_of(Stage s, const PipelineConfig& cfg) {
    switch (s) {
    case Stage::synth: return {};
    case Stage::ingest: return cfg.inputs.empty() ? std::vector<Stage>{Stage::synth} : std::vector<Stage>{};
    case Stage::leaders: return {Stage::ingest};
    case Stage::chambers: return {Stage::ingest, Stage::leaders};
    case Stage::overlap: return {Stage::ingest, Stage::leaders, Stage::chambers};
    case Stage::null: return {Stage::ingest, Stage::leaders};
    case Stage::cluster: return {Stage::ingest, Stage::overlap};
    case Stage::polarize: return {Stage::ingest, Stage::overlap, Stage::cluster};
    case Stage::echo: return {Stage::ingest, Stage::leaders, Stage::chambers, Stage::cluster};
    case Stage::augment: return {Stage::ingest, Stage::echo};
    case Stage::flow: return {Stage::augment};
    case Stage::report:
        return {Stage::ingest,  Stage::leaders, Stage::chambers, Stage::overlap, Stage::null,
                Stage::cluster, Stage::polarize, Stage::echo,    Stage::augment, Stage::flow};
    }
    return {};
}

/// Config keys that change a stage's output.
inline std::vector<std::string> stage_keys(Stage s) {
    switch (s) {
    case Stage::synth: {
        std::vector<std::string> keys{"epoch", "week_days"};
        for (const auto& f : config_fields()) {
            if (f.key.rfind("synth.", 0) == 0) keys.push_back(f.key);
        }
        return keys;
    }
    case Stage::ingest: return {"input", "epoch", "week_days", "delimiter", "prebinned", "on_error"};
    case Stage::leaders: return {"n", "m", "extend_ties"};
    case Stage::chambers: return {"echo_all_leaders"};
    case Stage::overlap: return {"kde_grid", "peak_min_fraction", "valley_drop", "subchambers"};
    case Stage::null: return {"degree_weighted", "kde_grid", "peak_min_fraction", "valley_drop"};
    case Stage::cluster: return {"vector_policy", "min_fraction", "masked", "eigenpairs"};
    case Stage::polarize: return {"null_reps", "seed"};
    case Stage::echo: return {"kde_grid"};
    case Stage::augment: return {"eta"};
    case Stage::flow:
    case Stage::report: return {};
    }
    return {};
}

/// Artifacts each stage writes (relative to its directory).
inline std::vector<std::string> stage_artifacts(Stage s, const PipelineConfig& cfg) {
    switch (s) {
    case Stage::synth: return {"edges.tsv", "labels.tsv"};
    case Stage::ingest: return {"network.bin", "ingest.tsv"};
    case Stage::leaders: return {"leaders.bin", "weekly.tsv", "leaders.tsv", "high_impact.tsv"};
    case Stage::chambers: return {"chambers.bin", "sizes.tsv", "size_summary.tsv"};
    case Stage::overlap: {
        std::vector<std::string> a{"overlap.bin", "pairs.tsv", "aggregate.tsv", "density.tsv", "peaks.json"};
        if (cfg.subchambers) {
            a.insert(a.end(), {"subchamber_pairs.tsv", "subchamber_density.tsv", "subchamber_peaks.json"});
        }
        return a;
    }
    case Stage::null: return {"null_pairs.tsv", "degrees.tsv", "null_density.tsv", "null_peaks.json"};
    case Stage::cluster: return {"labels.tsv", "eigenvalues.tsv", "eigenvectors.tsv"};
    case Stage::polarize: return {"phi.tsv", "phi_summary.tsv"};
    case Stage::echo: return {"echo.bin", "echo_sizes.tsv", "scores.tsv", "score_density.tsv"};
    case Stage::augment: return {"augmented.bin", "augmented.tsv"};
    case Stage::flow: return {"decay.tsv", "excluded.tsv"};
    case Stage::report: return {"report.json"};
    }
    return {};
}

struct StageOutcome {
    Stage stage;
    bool cache_hit = false;
    std::string digest;
};

namespace detail {

inline constexpr std::uint32_t kArtifactVersion = 1;

inline void put_magic(std::ostream& out, const char (&magic)[9]) {
    out.write(magic, 8);
    put<std::uint32_t>(out, kArtifactVersion);
}

inline void expect_magic(std::istream& in, const char (&magic)[9], const std::string& what) {
    char buf[8];
    if (!in.read(buf, 8) || std::string(buf, 8) != std::string(magic, 8)) throw Error(what + ": bad file header");
    if (get<std::uint32_t>(in) != kArtifactVersion) throw Error(what + ": unsupported version");
}

inline std::string num(double v) { return format_number(v); }
inline std::string num(std::optional<double> v) { return format_number(v); }
template <class Int>
    requires std::is_integral_v<Int>
std::string num(Int v) {
    return std::to_string(v);
}

inline Table density_table(const Density& d, const char* x) {
    Table t{{x, "density"}, {}};
    for (std::size_t k = 0; k < d.grid.size(); ++k) t.add({num(d.grid[k]), num(d.values[k])});
    return t;
}

inline nlohmann::json peaks_json(const PeakSummary& p, std::size_t samples) {
    nlohmann::json j;
    j["samples"] = samples;
    j["bandwidth"] = round10(p.bandwidth);
    j["modality"] = p.modality();
    j["split"] = round10(p.split);
    auto& modes = j["modes"] = nlohmann::json::array();
    for (const auto& m : p.modes) {
        modes.push_back({{"location", round10(m.location)},
                         {"height", round10(m.height)},
                         {"mean", round10(m.mean)},
                         {"sd", round10(m.sd)},
                         {"count", m.count}});
    }
    auto& valleys = j["valleys"] = nlohmann::json::array();
    for (double v : p.valleys) valleys.push_back(round10(v));
    return j;
}

/// KDE + peak split of `samples`; null JSON and a header-only table when the
/// density is undefined (fewer than two samples or zero spread).
inline std::pair<Table, nlohmann::json> density_bundle(std::span<const double> samples, const KdeOptions& kopt,
                                                       const PeakOptions& popt, const char* x) {
    try {
        const auto d = kde(samples, kopt);
        const auto p = split_peaks(d, samples, popt);
        return {density_table(d, x), peaks_json(p, samples.size())};
    } catch (const UndefinedError& e) {
        nlohmann::json j;
        j["samples"] = samples.size();
        j["undefined"] = e.what();
        return {Table{{x, "density"}, {}}, j};
    }
}

} // namespace detail

/// Sequential stage runner over one output directory. Every stage writes its
/// artifacts and a manifest; a stage whose manifest matches the current
/// config and upstream digests is skipped.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg, std::ostream* log = nullptr)
        : cfg_(std::move(cfg)), root_(cfg_.output), log_(log) {
        cfg_.validate();
    }

    const PipelineConfig& config() const noexcept { return cfg_; }
    std::filesystem::path dir(Stage s) const { return root_ / stage_name(s); }

    /// Runs one stage; upstream artifacts must already be current.
    StageOutcome run(Stage s) {
        const std::string digest = expected_digest(s);
        for (Stage up : upstream_of(s, cfg_)) require(up);
        if (is_current(s, digest)) {
            say(std::string(stage_name(s)) + ": cache hit");
            return {s, true, digest};
        }
        say(std::string(stage_name(s)) + ": running");
        std::filesystem::create_directories(dir(s));
        std::filesystem::remove(dir(s) / "manifest.json");
        execute(s);
        write_manifest(s, digest);
        return {s, false, digest};
    }

    /// Runs every stage in order (synth only when no input is configured).
    std::vector<StageOutcome> run_all() {
        std::vector<StageOutcome> out;
        for (Stage s : kStages) {
            if (s == Stage::synth && !cfg_.inputs.empty()) continue;
            out.push_back(run(s));
        }
        return out;
    }

    /// Digest a stage's manifest must carry to be current.
    std::string expected_digest(Stage s) {
        if (auto it = digests_.find(s); it != digests_.end()) return it->second;
        Fnv1a h;
        h.update(stage_name(s));
        h.update("\n");
        h.update(params_text(s));
        if (s == Stage::ingest) {
            for (const auto& in : cfg_.inputs) {
                if (!std::filesystem::exists(in)) throw ConfigError("input file not found: " + in);
                h.update("input-hash=" + hex64(hash_file(in)) + "\n");
            }
        }
        for (Stage up : upstream_of(s, cfg_)) h.update(std::string(stage_name(up)) + "=" + expected_digest(up) + "\n");
        return digests_[s] = hex64(h.digest());
    }

private:
    PipelineConfig cfg_;
    std::filesystem::path root_;
    std::ostream* log_;
    std::map<Stage, std::string> digests_;

    // loaded state
    std::optional<TemporalNetwork> net_;
    struct LeaderState {
        std::vector<WeekIndex> weeks;
        std::vector<std::vector<UserId>> ranked;
        std::vector<IdSet> members;
        std::vector<UserId> leaders;
        IdSet leader_set;
        std::vector<IdSet> present;
    };
    std::optional<LeaderState> leaders_;

    void say(const std::string& msg) const {
        if (log_) *log_ << msg << '\n';
    }

    std::string params_text(Stage s) const {
        std::string text;
        text += "schema_version=" + std::to_string(cfg_.schema_version) + "\n";
        for (const auto& k : stage_keys(s)) text += k + "=" + get_option(cfg_, k) + "\n";
        return text;
    }

    std::filesystem::path artifact(Stage s, const std::string& name) const { return dir(s) / name; }

    std::optional<nlohmann::json> read_manifest(Stage s) const {
        const auto path = dir(s) / "manifest.json";
        if (!std::filesystem::exists(path)) return std::nullopt;
        try {
            return nlohmann::json::parse(read_text(path));
        } catch (const nlohmann::json::exception&) {
            return std::nullopt;
        }
    }

    bool artifacts_intact(const nlohmann::json& m) const {
        const auto stage = parse_stage(m.value("stage", ""));
        if (!stage || !m.contains("artifacts")) return false;
        for (const auto& [name, hash] : m["artifacts"].items()) {
            const auto path = dir(*stage) / name;
            if (!std::filesystem::exists(path) || hex64(hash_file(path)) != hash.get<std::string>()) return false;
        }
        return true;
    }

    bool is_current(Stage s, const std::string& digest) const {
        const auto m = read_manifest(s);
        return m && m->value("digest", "") == digest && artifacts_intact(*m);
    }

    void require(Stage up) {
        const auto m = read_manifest(up);
        const std::string name = stage_name(up);
        if (!m) throw StaleArtifactError("missing artifacts of stage '" + name + "'; run `echolens " + name + "` first");
        if (m->value("digest", "") != expected_digest(up)) {
            throw StaleArtifactError("artifacts of stage '" + name + "' are stale for this config; rerun `echolens " +
                                     name + "`");
        }
        if (!artifacts_intact(*m)) {
            throw StaleArtifactError("artifacts of stage '" + name + "' were modified; rerun `echolens " + name + "`");
        }
    }

    void write_manifest(Stage s, const std::string& digest) {
        nlohmann::json m;
        m["stage"] = stage_name(s);
        m["schema_version"] = cfg_.schema_version;
        m["digest"] = digest;
        auto& params = m["parameters"] = nlohmann::json::object();
        for (const auto& k : stage_keys(s)) params[k] = get_option(cfg_, k);
        auto& up = m["upstream"] = nlohmann::json::object();
        for (Stage u : upstream_of(s, cfg_)) up[stage_name(u)] = expected_digest(u);
        auto& arts = m["artifacts"] = nlohmann::json::object();
        for (const auto& a : stage_artifacts(s, cfg_)) arts[a] = hex64(hash_file(artifact(s, a)));
        write_text(dir(s) / "manifest.json", m.dump(2) + "\n");
    }

    void write_table(Stage s, const std::string& name, const Table& t) const { write_text(artifact(s, name), t.str()); }

    void write_json(Stage s, const std::string& name, const nlohmann::json& j) const {
        write_text(artifact(s, name), j.dump(2) + "\n");
    }

    const TemporalNetwork& network() {
        if (!net_) {
            std::ifstream in(artifact(Stage::ingest, "network.bin"), std::ios::binary);
            if (!in) throw StaleArtifactError("cannot open network snapshot; run `echolens ingest`");
            net_ = read_snapshot(in);
        }
        return *net_;
    }

    const std::string& name_of(UserId u) { return network().users().name(u); }

    const LeaderState& leader_state() {
        if (leaders_) return *leaders_;
        std::ifstream in(artifact(Stage::leaders, "leaders.bin"), std::ios::binary);
        if (!in) throw StaleArtifactError("cannot open leader artifacts; run `echolens leaders`");
        detail::expect_magic(in, "ECHOLEAD", "leaders.bin");
        LeaderState st;
        const auto weeks = detail::get<std::uint64_t>(in);
        for (std::uint64_t t = 0; t < weeks; ++t) {
            st.weeks.push_back(detail::get<std::int32_t>(in));
            st.ranked.push_back(read_ids(in));
            IdSet sorted = st.ranked.back();
            std::sort(sorted.begin(), sorted.end());
            st.members.push_back(std::move(sorted));
        }
        st.leaders = read_ids(in);
        st.leader_set = st.leaders;
        std::sort(st.leader_set.begin(), st.leader_set.end());
        for (const auto& m : st.members) st.present.push_back(sets::set_intersection(m, st.leader_set));
        leaders_ = std::move(st);
        return *leaders_;
    }

    void execute(Stage s) {
        switch (s) {
        case Stage::synth: return run_synth();
        case Stage::ingest: return run_ingest();
        case Stage::leaders: return run_leaders();
        case Stage::chambers: return run_chambers();
        case Stage::overlap: return run_overlap();
        case Stage::null: return run_null();
        case Stage::cluster: return run_cluster();
        case Stage::polarize: return run_polarize();
        case Stage::echo: return run_echo();
        case Stage::augment: return run_augment();
        case Stage::flow: return run_flow();
        case Stage::report: return run_report();
        }
    }

    KdeOptions kde_options() const {
        KdeOptions k;
        k.grid_points = cfg_.kde_grid;
        return k;
    }

    PeakOptions peak_options() const {
        PeakOptions p;
        p.min_peak_fraction = cfg_.peak_min_fraction;
        p.min_valley_drop = cfg_.valley_drop;
        return p;
    }

    // ---- stages ----

    void run_synth() {
        const auto planted = generate(cfg_.synth, cfg_.workers);
        {
            std::ofstream out(artifact(Stage::synth, "edges.tsv"), std::ios::binary);
            write_edge_list(out, planted.network, cfg_.epoch_seconds(), cfg_.week_days);
            if (!out) throw Error("failed writing synth edges");
        }
        std::ofstream out(artifact(Stage::synth, "labels.tsv"), std::ios::binary);
        write_labels(out, planted.network, planted.labels);
        if (!out) throw Error("failed writing synth labels");
    }

    void run_ingest() {
        EdgeListReader reader(cfg_.ingest_options());
        std::vector<std::string> sources = cfg_.inputs;
        if (sources.empty()) sources.push_back(artifact(Stage::synth, "edges.tsv").string());
        for (const auto& path : sources) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ConfigError("cannot open input " + path);
            reader.read(in, std::filesystem::path(path).filename().string());
        }
        IngestReport rep;
        net_ = reader.finish(&rep);
        {
            std::ofstream out(artifact(Stage::ingest, "network.bin"), std::ios::binary);
            write_snapshot(out, *net_);
        }
        Table t{{"metric", "value"}, {}};
        t.add({"lines", detail::num(rep.lines)});
        t.add({"records", detail::num(rep.records)});
        t.add({"self_loops_dropped", detail::num(rep.self_loops_dropped)});
        t.add({"malformed_skipped", detail::num(rep.malformed_skipped)});
        t.add({"duplicates_merged", detail::num(rep.duplicates_merged)});
        t.add({"weeks", detail::num(rep.weeks)});
        t.add({"users", detail::num(rep.users)});
        t.add({"edges", detail::num(rep.edges)});
        write_table(Stage::ingest, "ingest.tsv", t);
        for (const auto& e : rep.errors) say("ingest: skipped " + e);
    }

    void run_leaders() {
        const auto& net = network();
        const auto profile = impact(net);
        const auto hi = high_impact(profile, cfg_.n);
        const auto cov = coverage(hi, profile);
        const auto lb = leading_users(hi, profile, net.users().size(), cfg_.m, cfg_.extend_ties);

        {
            std::ofstream out(artifact(Stage::leaders, "leaders.bin"), std::ios::binary);
            detail::put_magic(out, "ECHOLEAD");
            detail::put<std::uint64_t>(out, hi.weeks.size());
            for (std::size_t t = 0; t < hi.weeks.size(); ++t) {
                detail::put<std::int32_t>(out, hi.weeks[t]);
                write_ids(out, hi.ranked[t]);
            }
            write_ids(out, lb.leaders);
            if (!out) throw Error("failed writing leaders.bin");
        }

        Table weekly{{"week", "users", "edges", "retweets", "gini", "coverage", "leaders_present"}, {}};
        for (std::size_t t = 0; t < profile.weeks.size(); ++t) {
            const auto& g = net.week(t);
            weekly.add({detail::num(g.week()), detail::num(g.n_users()), detail::num(g.edges().size()),
                        detail::num(g.total_weight()), detail::num(gini(profile.weeks[t])), detail::num(cov[t]),
                        detail::num(lb.weekly[t].size())});
        }
        write_table(Stage::leaders, "weekly.tsv", weekly);

        Table table{{"rank", "user", "persistence", "total_impact", "median_impact"}, {}};
        std::size_t rank = 0;
        for (const auto& row : leader_table(lb, profile)) {
            table.add({detail::num(++rank), net.users().name(row.user), detail::num(row.persistence),
                       detail::num(row.total_impact), detail::num(row.median_impact)});
        }
        write_table(Stage::leaders, "leaders.tsv", table);

        Table his{{"week", "rank", "user", "impact"}, {}};
        for (std::size_t t = 0; t < hi.weeks.size(); ++t) {
            for (std::size_t r = 0; r < hi.ranked[t].size(); ++r) {
                const UserId u = hi.ranked[t][r];
                his.add({detail::num(hi.weeks[t]), detail::num(r + 1), net.users().name(u),
                         detail::num(profile.weeks[t].of(u))});
            }
        }
        write_table(Stage::leaders, "high_impact.tsv", his);
    }

    /// Leaders whose chambers are built in week t: the week's leading
    /// high-impact users, or every leader with an audience when configured.
    IdSet chamber_leaders(std::size_t t) {
        const auto& st = leader_state();
        if (!cfg_.echo_all_leaders) return st.present[t];
        const auto& g = network().week(t);
        IdSet out;
        for (UserId u : st.leader_set) {
            if (auto l = g.local_of(u); l && g.in_degree(*l) > 0) out.push_back(u);
        }
        return out;
    }

    void run_chambers() {
        const auto& net = network();
        const auto& st = leader_state();
        std::ofstream bin(artifact(Stage::chambers, "chambers.bin"), std::ios::binary);
        detail::put_magic(bin, "ECHOCHMB");
        detail::put<std::uint64_t>(bin, net.n_weeks());
        Table sizes{{"week", "leader", "present", "audience", "chamber"}, {}};
        std::vector<std::size_t> aud_sizes, ch_sizes;
        for (std::size_t t = 0; t < net.n_weeks(); ++t) {
            const auto& g = net.week(t);
            const IdSet who = chamber_leaders(t);
            const auto chambers = compute_chambers(g, who, st.members[t], cfg_.workers);
            detail::put<std::int32_t>(bin, g.week());
            detail::put<std::uint64_t>(bin, chambers.size());
            for (const auto& c : chambers) {
                const bool present = sets::contains(st.present[t], c.leader);
                detail::put<std::uint32_t>(bin, c.leader);
                detail::put<std::uint8_t>(bin, present ? 1 : 0);
                write_ids(bin, c.audience);
                write_ids(bin, c.chamber);
                sizes.add({detail::num(g.week()), name_of(c.leader), present ? "1" : "0", detail::num(c.audience.size()),
                           detail::num(c.chamber.size())});
                if (present) {
                    aud_sizes.push_back(c.audience.size());
                    ch_sizes.push_back(c.chamber.size());
                }
            }
        }
        if (!bin) throw Error("failed writing chambers.bin");
        write_table(Stage::chambers, "sizes.tsv", sizes);

        Table summary{{"metric", "value"}, {}};
        if (aud_sizes.size() >= 2) {
            const auto d = size_diagnostics(aud_sizes, ch_sizes);
            summary.add({"audience_mean", detail::num(d.audience.mean)});
            summary.add({"audience_sd", detail::num(d.audience.sd)});
            summary.add({"chamber_mean", detail::num(d.chamber.mean)});
            summary.add({"chamber_sd", detail::num(d.chamber.sd)});
            summary.add({"size_correlation", detail::num(d.rho)});
        }
        summary.add({"samples", detail::num(aud_sizes.size())});
        write_table(Stage::chambers, "size_summary.tsv", summary);
    }

    struct WeekChambers {
        WeekIndex week;
        std::vector<LeaderChamber> chambers;
        std::vector<bool> present;
    };

    std::vector<WeekChambers> load_chambers() {
        std::ifstream in(artifact(Stage::chambers, "chambers.bin"), std::ios::binary);
        if (!in) throw StaleArtifactError("cannot open chambers.bin; run `echolens chambers`");
        detail::expect_magic(in, "ECHOCHMB", "chambers.bin");
        std::vector<WeekChambers> out(detail::get<std::uint64_t>(in));
        for (auto& w : out) {
            w.week = detail::get<std::int32_t>(in);
            const auto count = detail::get<std::uint64_t>(in);
            for (std::uint64_t k = 0; k < count; ++k) {
                LeaderChamber c;
                c.leader = detail::get<std::uint32_t>(in);
                w.present.push_back(detail::get<std::uint8_t>(in) != 0);
                c.audience = read_ids(in);
                c.chamber = read_ids(in);
                w.chambers.push_back(std::move(c));
            }
        }
        return out;
    }

    static std::vector<LeaderChamber> present_only(const WeekChambers& w) {
        std::vector<LeaderChamber> out;
        for (std::size_t k = 0; k < w.chambers.size(); ++k) {
            if (w.present[k]) out.push_back(w.chambers[k]);
        }
        return out;
    }

    void run_overlap() {
        const auto& st = leader_state();
        const auto weeks = load_chambers();
        const std::size_t n = st.leaders.size();
        std::ofstream bin(artifact(Stage::overlap, "overlap.bin"), std::ios::binary);
        detail::put_magic(bin, "ECHOOVLP");
        write_ids(bin, st.leaders);
        detail::put<std::uint64_t>(bin, weeks.size());
        Table pairs{{"week", "leader_i", "leader_j", "q"}, {}};
        std::vector<double> samples;
        std::vector<OverlapMatrix> weekly;
        for (const auto& w : weeks) {
            const auto q = overlap_from_chambers(st.leaders, present_only(w), cfg_.workers);
            detail::put<std::int32_t>(bin, w.week);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    detail::put<double>(bin, q.get(i, j).value_or(std::numeric_limits<double>::quiet_NaN()));
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    if (!q.defined(i, j)) continue;
                    const double v = *q.get(i, j);
                    samples.push_back(v);
                    pairs.add({detail::num(w.week), name_of(st.leaders[i]), name_of(st.leaders[j]), detail::num(v)});
                }
            }
            weekly.push_back(q);
        }
        if (!bin) throw Error("failed writing overlap.bin");
        bin.close();
        write_table(Stage::overlap, "pairs.tsv", pairs);

        const auto agg = aggregate(weekly);
        Table at{{"leader_i", "leader_j", "q"}, {}};
        for (std::size_t i = 0; i < agg.size(); ++i) {
            for (std::size_t j = i + 1; j < agg.size(); ++j) {
                if (agg.defined(i, j)) at.add({name_of(st.leaders[i]), name_of(st.leaders[j]), detail::num(*agg.get(i, j))});
            }
        }
        write_table(Stage::overlap, "aggregate.tsv", at);

        auto [dt, pj] = detail::density_bundle(samples, kde_options(), peak_options(), "q");
        write_table(Stage::overlap, "density.tsv", dt);
        write_json(Stage::overlap, "peaks.json", pj);

        if (cfg_.subchambers) run_subchambers();
    }

    void run_subchambers() {
        const auto& net = network();
        const auto& st = leader_state();
        Table pairs{{"week", "leader_i", "leader_j", "q"}, {}};
        std::vector<double> samples;
        for (std::size_t t = 0; t < net.n_weeks(); ++t) {
            const auto& g = net.week(t);
            const auto& present = st.present[t];
            std::vector<std::optional<double>> vals(present.size() * present.size());
            parallel_for(present.size(), cfg_.workers, [&](std::size_t a) {
                for (std::size_t b = a + 1; b < present.size(); ++b) {
                    vals[a * present.size() + b] = subchamber_overlap(g, present[a], present[b], st.members[t]);
                }
            });
            for (std::size_t a = 0; a < present.size(); ++a) {
                for (std::size_t b = a + 1; b < present.size(); ++b) {
                    if (const auto& v = vals[a * present.size() + b]) {
                        samples.push_back(*v);
                        pairs.add({detail::num(g.week()), name_of(present[a]), name_of(present[b]), detail::num(*v)});
                    }
                }
            }
        }
        write_table(Stage::overlap, "subchamber_pairs.tsv", pairs);
        auto [dt, pj] = detail::density_bundle(samples, kde_options(), peak_options(), "q");
        write_table(Stage::overlap, "subchamber_density.tsv", dt);
        write_json(Stage::overlap, "subchamber_peaks.json", pj);
    }

    struct OverlapSeries {
        std::vector<UserId> leaders;
        std::vector<WeekIndex> weeks;
        std::vector<OverlapMatrix> weekly;
    };

    OverlapSeries load_overlap() {
        std::ifstream in(artifact(Stage::overlap, "overlap.bin"), std::ios::binary);
        if (!in) throw StaleArtifactError("cannot open overlap.bin; run `echolens overlap`");
        detail::expect_magic(in, "ECHOOVLP", "overlap.bin");
        OverlapSeries s;
        s.leaders = read_ids(in);
        const std::size_t n = s.leaders.size();
        const auto weeks = detail::get<std::uint64_t>(in);
        for (std::uint64_t t = 0; t < weeks; ++t) {
            s.weeks.push_back(detail::get<std::int32_t>(in));
            OverlapMatrix q(s.leaders);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double v = detail::get<double>(in);
                    if (!std::isnan(v) && i <= j) q.set(i, j, v);
                }
            }
            s.weekly.push_back(std::move(q));
        }
        return s;
    }

    void run_null() {
        const auto& net = network();
        const auto& st = leader_state();
        Table pairs{{"week", "leader_i", "leader_j", "k_i", "k_j", "expected", "ratio", "approx"}, {}};
        Table degrees{{"week", "n", "mean_k", "mean_k2", "k_max", "sparsity"}, {}};
        std::vector<double> samples;
        for (std::size_t t = 0; t < net.n_weeks(); ++t) {
            const auto& g = net.week(t);
            const auto deg = DegreeSequence::from_graph(g, cfg_.degree_weighted);
            degrees.add({detail::num(g.week()), detail::num(deg.n()), detail::num(deg.mean()), detail::num(deg.mean_sq()),
                         detail::num(deg.k_max()), detail::num(deg.sparsity())});
            const auto& present = st.present[t];
            std::vector<std::uint32_t> local;
            for (UserId u : present) local.push_back(*g.local_of(u));
            const std::size_t p = present.size();
            std::vector<std::optional<double>> exact(p * p);
            std::vector<NullChamberOverlap> approx(p * p);
            parallel_for(p, cfg_.workers, [&](std::size_t a) {
                for (std::size_t b = a + 1; b < p; ++b) {
                    exact[a * p + b] = expected_chamber_jaccard(deg, local[a], local[b]);
                    approx[a * p + b] = expected_chamber_overlap(deg.k()[local[a]], deg.k()[local[b]], deg);
                }
            });
            for (std::size_t a = 0; a < p; ++a) {
                for (std::size_t b = a + 1; b < p; ++b) {
                    const auto& e = exact[a * p + b];
                    if (e) samples.push_back(*e);
                    pairs.add({detail::num(g.week()), name_of(present[a]), name_of(present[b]),
                               detail::num(deg.k()[local[a]]), detail::num(deg.k()[local[b]]), detail::num(e),
                               detail::num(approx[a * p + b].ratio), detail::num(approx[a * p + b].approx)});
                }
            }
        }
        write_table(Stage::null, "null_pairs.tsv", pairs);
        write_table(Stage::null, "degrees.tsv", degrees);
        auto [dt, pj] = detail::density_bundle(samples, kde_options(), peak_options(), "q");
        write_table(Stage::null, "null_density.tsv", dt);
        write_json(Stage::null, "null_peaks.json", pj);
    }

    PartitionOptions partition_options() const {
        PartitionOptions o;
        o.policy = cfg_.vector_policy;
        o.min_fraction = cfg_.min_fraction;
        o.eigenpairs = cfg_.eigenpairs;
        o.masked = cfg_.masked;
        return o;
    }

    void run_cluster() {
        const auto series = load_overlap();
        const auto agg = aggregate(series.weekly);
        if (agg.size() < 3) throw UndefinedError("clustering needs at least three leaders, found " + std::to_string(agg.size()));
        const auto r = spectral_partition(agg, partition_options());
        std::vector<std::size_t> position(agg.size());
        for (std::size_t k = 0; k < r.rank.size(); ++k) position[r.rank[k]] = k + 1;
        Table labels{{"leader", "component", "label", "rank"}, {}};
        for (std::size_t i = 0; i < agg.size(); ++i) {
            labels.add({name_of(series.leaders[i]), detail::num(r.vectors[r.chosen][i]), detail::num(r.labels[i]),
                        detail::num(position[i])});
        }
        write_table(Stage::cluster, "labels.tsv", labels);
        Table values{{"index", "eigenvalue", "chosen"}, {}};
        for (std::size_t k = 0; k < r.values.size(); ++k) {
            values.add({detail::num(k + 1), detail::num(r.values[k]), k == r.chosen ? "1" : "0"});
        }
        write_table(Stage::cluster, "eigenvalues.tsv", values);
        Table vectors{{"leader"}, {}};
        for (std::size_t k = 0; k < r.vectors.size(); ++k) vectors.header.push_back("u" + std::to_string(k + 1));
        for (std::size_t i = 0; i < agg.size(); ++i) {
            std::vector<std::string> row{name_of(series.leaders[i])};
            for (const auto& v : r.vectors) row.push_back(detail::num(v[i]));
            vectors.add(std::move(row));
        }
        write_table(Stage::cluster, "eigenvectors.tsv", vectors);
    }

    /// Cluster labels aligned with `leaders`.
    std::vector<int> load_labels(const std::vector<UserId>& leaders) {
        const auto t = read_table(artifact(Stage::cluster, "labels.tsv"));
        std::map<std::string, int> by_name;
        for (const auto& row : t.rows) by_name[row[0]] = std::stoi(row[2]);
        std::vector<int> out;
        for (UserId u : leaders) {
            auto it = by_name.find(name_of(u));
            if (it == by_name.end()) throw StaleArtifactError("cluster labels do not cover leader " + name_of(u));
            out.push_back(it->second);
        }
        return out;
    }

    void run_polarize() {
        const auto series = load_overlap();
        const auto labels = load_labels(series.leaders);
        const auto null_labels = reshuffle_labels(labels, cfg_.seed, cfg_.null_reps);
        const auto p = polarization_dynamics(series.weekly, series.weeks, labels, null_labels);
        Table t{{"week", "phi", "null_mean", "null_sd"}, {}};
        for (std::size_t k = 0; k < p.weeks.size(); ++k) {
            t.add({detail::num(p.weeks[k]), detail::num(p.phi[k]), detail::num(p.null_mean[k]), detail::num(p.null_sd[k])});
        }
        write_table(Stage::polarize, "phi.tsv", t);
        std::vector<double> nulls;
        for (const auto& v : p.null_mean) {
            if (v) nulls.push_back(*v);
        }
        std::size_t defined = 0;
        for (const auto& v : p.phi) defined += v ? 1 : 0;
        Table s{{"metric", "value"}, {}};
        s.add({"weeks_defined", detail::num(defined)});
        s.add({"mean_phi", defined ? detail::num(p.mean_phi()) : "NA"});
        s.add({"sd_phi", defined > 1 ? detail::num(p.sd_phi()) : "NA"});
        s.add({"null_mean", nulls.empty() ? "NA" : detail::num(stats::mean(nulls))});
        write_table(Stage::polarize, "phi_summary.tsv", s);
    }

    void run_echo() {
        const auto& net = network();
        const auto& st = leader_state();
        const auto weeks = load_chambers();
        const auto labels = load_labels(st.leaders);
        std::map<UserId, int> label_of;
        for (std::size_t i = 0; i < st.leaders.size(); ++i) label_of[st.leaders[i]] = labels[i];

        std::ofstream bin(artifact(Stage::echo, "echo.bin"), std::ios::binary);
        detail::put_magic(bin, "ECHOECHO");
        detail::put<std::uint64_t>(bin, weeks.size());
        Table sizes{{"week", "size0", "size1", "intersection", "population", "fraction0", "fraction1"}, {}};
        Table scores{{"week", "user", "n0", "n1", "score"}, {}};
        std::vector<double> values;
        for (std::size_t t = 0; t < weeks.size(); ++t) {
            const auto& g = net.week(t);
            const auto used = cfg_.echo_all_leaders ? weeks[t].chambers : present_only(weeks[t]);
            const auto base = build_echo_chambers(g, used, label_of);
            const auto scored = score_high_impact(g, st.members[t], st.leader_set, base);
            sizes.add({detail::num(base.week), detail::num(base.members[0].size()), detail::num(base.members[1].size()),
                       detail::num(base.intersection), detail::num(base.population), detail::num(base.fraction(0)),
                       detail::num(base.fraction(1))});
            detail::put<std::int32_t>(bin, base.week);
            detail::put<std::uint64_t>(bin, base.population);
            write_ids(bin, base.members[0]);
            write_ids(bin, base.members[1]);
            detail::put<std::uint64_t>(bin, scored.size());
            for (const auto& s : scored) {
                detail::put<std::uint32_t>(bin, s.record.user);
                detail::put<std::uint64_t>(bin, s.record.n[0]);
                detail::put<std::uint64_t>(bin, s.record.n[1]);
                detail::put<std::uint8_t>(bin, s.record.score ? 1 : 0);
                detail::put<double>(bin, s.record.score.value_or(0.0));
                write_ids(bin, s.audience);
                scores.add({detail::num(base.week), name_of(s.record.user), detail::num(s.record.n[0]),
                            detail::num(s.record.n[1]), detail::num(s.record.score)});
                if (s.record.score) values.push_back(*s.record.score);
            }
        }
        if (!bin) throw Error("failed writing echo.bin");
        write_table(Stage::echo, "echo_sizes.tsv", sizes);
        write_table(Stage::echo, "scores.tsv", scores);
        KdeOptions k = kde_options();
        k.lo = -1.0;
        k.hi = 1.0;
        k.reflect_lo = false;
        Table dens{{"score", "density"}, {}};
        try {
            dens = detail::density_table(kde(values, k), "score");
        } catch (const UndefinedError&) {
        }
        write_table(Stage::echo, "score_density.tsv", dens);
    }

    struct EchoWeek {
        WeeklyEcho base;
        std::vector<ScoredUser> scored;
    };

    std::vector<EchoWeek> load_echo() {
        std::ifstream in(artifact(Stage::echo, "echo.bin"), std::ios::binary);
        if (!in) throw StaleArtifactError("cannot open echo.bin; run `echolens echo`");
        detail::expect_magic(in, "ECHOECHO", "echo.bin");
        std::vector<EchoWeek> out(detail::get<std::uint64_t>(in));
        for (auto& w : out) {
            w.base.week = detail::get<std::int32_t>(in);
            w.base.population = detail::get<std::uint64_t>(in);
            w.base.members[0] = read_ids(in);
            w.base.members[1] = read_ids(in);
            w.base.intersection = sets::intersection_size(w.base.members[0], w.base.members[1]);
            const auto count = detail::get<std::uint64_t>(in);
            for (std::uint64_t k = 0; k < count; ++k) {
                ScoredUser s;
                s.record.user = detail::get<std::uint32_t>(in);
                s.record.week = w.base.week;
                s.record.n[0] = detail::get<std::uint64_t>(in);
                s.record.n[1] = detail::get<std::uint64_t>(in);
                const bool has = detail::get<std::uint8_t>(in) != 0;
                const double v = detail::get<double>(in);
                if (has) s.record.score = v;
                s.audience = read_ids(in);
                w.scored.push_back(std::move(s));
            }
        }
        return out;
    }

    void run_augment() {
        const auto weeks = load_echo();
        std::vector<AugmentedEcho> aug;
        for (const auto& w : weeks) aug.push_back(augment(w.base, w.scored, cfg_.eta));
        std::ofstream bin(artifact(Stage::augment, "augmented.bin"), std::ios::binary);
        detail::put_magic(bin, "ECHOAUGM");
        detail::put<std::uint64_t>(bin, aug.size());
        for (const auto& a : aug) {
            detail::put<std::int32_t>(bin, a.week);
            write_ids(bin, a.members[0]);
            write_ids(bin, a.members[1]);
        }
        if (!bin) throw Error("failed writing augmented.bin");
        const auto rows = size_series(aug);
        Table t{{"week", "size0", "size1", "intersection", "population", "ratio", "classified0", "classified1",
                 "unclassified", "unscorable"},
                {}};
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& r = rows[k];
            const auto& c = aug[k].census;
            t.add({detail::num(r.week), detail::num(r.size[0]), detail::num(r.size[1]), detail::num(r.intersection),
                   detail::num(r.population), detail::num(r.ratio), detail::num(c.classified[0]),
                   detail::num(c.classified[1]), detail::num(c.unclassified), detail::num(c.unscorable)});
        }
        write_table(Stage::augment, "augmented.tsv", t);
    }

    void run_flow() {
        std::ifstream in(artifact(Stage::augment, "augmented.bin"), std::ios::binary);
        if (!in) throw StaleArtifactError("cannot open augmented.bin; run `echolens augment`");
        detail::expect_magic(in, "ECHOAUGM", "augmented.bin");
        const auto count = detail::get<std::uint64_t>(in);
        std::vector<WeekIndex> weeks;
        std::array<std::vector<IdSet>, 2> members;
        for (std::uint64_t k = 0; k < count; ++k) {
            weeks.push_back(detail::get<std::int32_t>(in));
            members[0].push_back(read_ids(in));
            members[1].push_back(read_ids(in));
        }
        Table decay{{"group", "lag", "pairs", "median", "q25", "q75", "mean", "sd"}, {}};
        Table excluded{{"group", "week"}, {}};
        for (int grp = 0; grp < 2; ++grp) {
            try {
                const auto d = auto_overlap(weeks, members[grp]);
                for (const auto& l : d.lags) {
                    decay.add({detail::num(grp), detail::num(l.lag), detail::num(l.pairs), detail::num(l.median),
                               detail::num(l.q25), detail::num(l.q75), detail::num(l.mean),
                               l.pairs > 1 ? detail::num(l.sd) : "NA"});
                }
                for (WeekIndex w : d.excluded) excluded.add({detail::num(grp), detail::num(w)});
            } catch (const DomainError& e) {
                say("flow: group " + std::to_string(grp) + " skipped: " + e.what());
            }
        }
        write_table(Stage::flow, "decay.tsv", decay);
        write_table(Stage::flow, "excluded.tsv", excluded);
    }

    // ---- report ----

    static nlohmann::json cell_json(const std::string& column, const std::string& cell) {
        static const std::set<std::string> text{"user", "leader", "leader_i", "leader_j", "metric"};
        if (cell == "NA") return nullptr;
        if (text.count(column)) return cell;
        if (!cell.empty() && cell.find_first_not_of("-0123456789") == std::string::npos) {
            try {
                return std::stoll(cell);
            } catch (const std::exception&) {
                return cell;
            }
        }
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (!cell.empty() && *end == '\0') return round10(v);
        return cell;
    }

    /// Column-oriented JSON of a table.
    static nlohmann::json table_json(const Table& t) {
        nlohmann::json j = nlohmann::json::object();
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            auto& col = j[t.header[c]] = nlohmann::json::array();
            for (const auto& row : t.rows) col.push_back(cell_json(t.header[c], row[c]));
        }
        return j;
    }

    /// metric/value table as a flat object.
    static nlohmann::json metrics_json(const Table& t) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& row : t.rows) j[row[0]] = cell_json("value", row[1]);
        return j;
    }

    nlohmann::json table_from(Stage s, const std::string& name) { return table_json(read_table(artifact(s, name))); }

    nlohmann::json json_from(Stage s, const std::string& name) { return nlohmann::json::parse(read_text(artifact(s, name))); }

    void run_report() {
        nlohmann::json r;
        r["schema_version"] = cfg_.schema_version;
        r["digest"] = expected_digest(Stage::report);
        r["network"] = metrics_json(read_table(artifact(Stage::ingest, "ingest.tsv")));
        r["weekly"] = table_from(Stage::leaders, "weekly.tsv");
        r["leaders"] = table_from(Stage::leaders, "leaders.tsv");
        r["chamber_sizes"] = metrics_json(read_table(artifact(Stage::chambers, "size_summary.tsv")));
        r["overlap"] = {{"density", table_from(Stage::overlap, "density.tsv")},
                        {"peaks", json_from(Stage::overlap, "peaks.json")}};
        if (cfg_.subchambers) {
            r["subchamber_overlap"] = {{"density", table_from(Stage::overlap, "subchamber_density.tsv")},
                                       {"peaks", json_from(Stage::overlap, "subchamber_peaks.json")}};
        }
        r["null_overlap"] = {{"density", table_from(Stage::null, "null_density.tsv")},
                             {"peaks", json_from(Stage::null, "null_peaks.json")}};
        r["clusters"] = {{"labels", table_from(Stage::cluster, "labels.tsv")},
                         {"eigenvalues", table_from(Stage::cluster, "eigenvalues.tsv")}};
        r["polarization"] = {{"series", table_from(Stage::polarize, "phi.tsv")},
                             {"summary", metrics_json(read_table(artifact(Stage::polarize, "phi_summary.tsv")))}};
        r["echo_chambers"] = {{"base", table_from(Stage::echo, "echo_sizes.tsv")},
                              {"augmented", table_from(Stage::augment, "augmented.tsv")}};
        r["scores"] = {{"values", table_from(Stage::echo, "scores.tsv")},
                       {"density", table_from(Stage::echo, "score_density.tsv")}};
        r["auto_overlap"] = table_from(Stage::flow, "decay.tsv");
        write_json(Stage::report, "report.json", r);

        // columnar bundle next to the JSON
        const std::vector<std::pair<Stage, std::string>> bundle{
            {Stage::leaders, "weekly.tsv"},       {Stage::leaders, "leaders.tsv"},    {Stage::overlap, "density.tsv"},
            {Stage::null, "null_density.tsv"},    {Stage::cluster, "labels.tsv"},     {Stage::cluster, "eigenvalues.tsv"},
            {Stage::polarize, "phi.tsv"},         {Stage::echo, "echo_sizes.tsv"},    {Stage::augment, "augmented.tsv"},
            {Stage::echo, "scores.tsv"},          {Stage::flow, "decay.tsv"}};
        for (const auto& [s, name] : bundle) write_text(artifact(Stage::report, name), read_text(artifact(s, name)));
    }
};

/// Files of the report bundle (relative to the report directory).
inline std::vector<std::string> report_bundle_files() {
    return {"report.json", "weekly.tsv",  "leaders.tsv",    "density.tsv",   "null_density.tsv", "labels.tsv",
            "eigenvalues.tsv", "phi.tsv", "echo_sizes.tsv", "augmented.tsv", "scores.tsv",       "decay.tsv"};
}

} // namespace echolens

#endif // ECHOLENS_PIPELINE_HPP
