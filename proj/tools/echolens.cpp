#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "echolens/pipeline.hpp"

namespace {

std::string flag_name(std::string key) {
    for (char& c : key) {
        if (c == '_' || c == '.') c = '-';
    }
    return "--" + key;
}

} // namespace

int main(int argc, char** argv) {
    using namespace echolens;

    CLI::App app{"Leader, echo-chamber and polarization analysis of weekly retweet networks"};
    std::string stage_arg;
    std::string config_path;
    bool dump = false;
    bool quiet = false;
    app.add_option("stage", stage_arg,
                   "synth, ingest, leaders, chambers, overlap, null, cluster, polarize, echo, augment, flow, report or all");
    app.add_option("-c,--config", config_path, "key = value config file");
    app.add_flag("--dump-config", dump, "print the effective config and exit");
    app.add_flag("-q,--quiet", quiet, "no progress messages");

    std::map<std::string, std::string> overrides;
    for (const auto& f : config_fields()) {
        if (f.key == "schema_version") continue;
        app.add_option_function<std::string>(
            flag_name(f.key), [&overrides, key = f.key](const std::string& v) { overrides[key] = v; }, f.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config " + config_path);
            cfg = parse_config(in);
        }
        apply_environment(cfg);
        for (const auto& [key, value] : overrides) set_option(cfg, key, value);
        cfg.validate();

        if (dump) {
            std::cout << dump_config(cfg);
            return 0;
        }
        if (stage_arg.empty()) throw ConfigError("no stage given (try --help)");

        Pipeline p(cfg, quiet ? nullptr : &std::cerr);
        if (stage_arg == "all") {
            p.run_all();
        } else {
            const auto stage = parse_stage(stage_arg);
            if (!stage) throw ConfigError("unknown stage '" + stage_arg + "'");
            p.run(*stage);
        }
        return 0;
    } catch (const StaleArtifactError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 4;
    } catch (const UndefinedError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
