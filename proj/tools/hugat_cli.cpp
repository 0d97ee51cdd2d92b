// Command-line entry point for the urban-region embedding pipeline.
//
// Subcommands: build-graph, synth, train, eval, ablate, run. All read the
// same JSON config; --seed / --out / HUGAT_SEED override config values.
// Exit codes: 0 ok, 2 config error, 3 ingest error, 4 training divergence,
// 5 eval error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hugat/ingest.hpp"
#include "hugat/pipeline.hpp"
#include "hugat/synth.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string stage;
};

hugat::pipeline::PipelineConfig load(const CommonArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw hugat::ConfigError("cannot read config " + args.config_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw hugat::ConfigError(e.what());
    }
    if (args.seed) j["seed"] = *args.seed;
    if (const char* env = std::getenv("HUGAT_SEED"); env && !args.seed)
        j["seed"] = static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
    if (!args.out_dir.empty()) j["out_dir"] = args.out_dir;
    try {
        return hugat::pipeline::parse_config(j);
    } catch (const hugat::ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw hugat::ConfigError(e.what());
    }
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON pipeline config")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "root seed (overrides config and HUGAT_SEED)");
}

int dispatch(const std::string& name, const CommonArgs& args) {
    auto config = load(args);
    if (name == "synth") {
        if (!config.synthetic) throw hugat::ConfigError("'synth' needs a synthetic spec");
        auto city = hugat::synth::generate_synthetic_city(*config.synthetic);
        hugat::synth::write_city(city, config.out_dir + "/data");
        std::cout << "wrote synthetic city (" << city.inputs.regions.size() << " regions) to "
                  << config.out_dir << "/data\n";
        return 0;
    }
    if (name == "build-graph") {
        auto data = hugat::pipeline::prepare(config, "graph");
        std::cout << hugat::hug_stats_table(data.graph);
        return 0;
    }
    std::string until;
    if (name == "train") until = "train";
    if (name == "eval") until = "eval";
    if (name == "ablate") config.run_ablation = true;
    if (name == "run") until = args.stage;
    auto summary = hugat::pipeline::run_pipeline(config, until);
    std::cout << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HUGAT urban-region embedding pipeline"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"build-graph", "ingest inputs and build the heterogeneous urban graph"},
        {"synth", "generate a synthetic planted-community city"},
        {"train", "run the pipeline through training"},
        {"eval", "run the pipeline through evaluation"},
        {"ablate", "full pipeline plus the meta-path ablation table"},
        {"run", "full pipeline (optionally stop after --stage)"},
    };
    std::map<std::string, CommonArgs> args;
    for (const auto& [name, desc] : commands) {
        auto* cmd = app.add_subcommand(name, desc);
        add_common(cmd, args[name]);
        if (name == "run")
            cmd->add_option("--stage", args[name].stage,
                            "stop after stage: ingest|graph|metapaths|targets|train|eval");
    }

    CLI11_PARSE(app, argc, argv);

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        return dispatch(name, args[name]);
    } catch (const hugat::pipeline::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const hugat::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hugat::SchemaViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const hugat::MissingFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const hugat::DivergenceDetected& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
