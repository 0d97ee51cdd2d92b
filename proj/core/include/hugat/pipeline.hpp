#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "hugat/eval.hpp"
#include "hugat/han.hpp"
#include "hugat/ingest.hpp"
#include "hugat/synth.hpp"
#include "hugat/train.hpp"

namespace hugat::pipeline {

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::optional<synth::SyntheticCitySpec> synthetic;
    DatasetPaths inputs;
    HugConfig hug;
    han::HanConfig model;
    train::TrainingConfig training;
    int eval_clusters = 12;
    bool run_ablation = false;
};

PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const nlohmann::json& j);

// exit codes: 2 config, 3 ingest/graph, 4 training divergence, 5 eval
struct StageError : Error {
    StageError(std::string stage_name, int code, const std::string& msg)
        : Error("[" + stage_name + "] " + msg), stage(std::move(stage_name)), exit_code(code) {}
    std::string stage;
    int exit_code;
};

// Runs ingest -> graph -> meta-paths -> targets -> train -> eval [-> ablate],
// writing every stage artifact under config.out_dir before the next stage
// starts. Returns the machine-readable summary (also written as summary.json).
// `until` optionally stops after the named stage.
nlohmann::json run_pipeline(const PipelineConfig& config, const std::string& until = "");

// building blocks shared with the CLI subcommands
struct PreparedData {
    IngestResult ingested;
    HeterogeneousUrbanGraph graph;
    std::vector<MetaPathAdjacency> adjacencies;
    RegionTargets targets;
};

PreparedData prepare(const PipelineConfig& config, const std::string& until = "");

}  // namespace hugat::pipeline
