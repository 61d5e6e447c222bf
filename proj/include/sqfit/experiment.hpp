#pragma once

#include <string>
#include <vector>

#include "sqfit/fitting.hpp"
#include "sqfit/metrics.hpp"
#include "sqfit/simulator.hpp"

namespace sqfit {

struct UnknownStage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// "1,2,3D,3A" -> stage list. Case-insensitive, whitespace ignored.
std::vector<StageSpec> parse_pipeline(const std::string& spec);

/// Canonical text form of a stage list.
std::string pipeline_to_string(const std::vector<StageSpec>& stages);

struct ExperimentConfig {
    SceneConfig scene;
    std::vector<std::string> pipelines;
    int trials = 30;
    std::uint64_t base_seed = 1;
    int mc_samples = 100000;
    int workers = 0;          // 0 = hardware default
    bool record_timing = true;
    FitOptions fit;
};

/// Strict parse: unknown keys anywhere are an error.
ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

struct PipelineOutcome {
    std::string pipeline;
    TrialMetrics metrics;
    SuperquadricParams final_params;
    std::vector<double> stage_times_s;
    std::vector<std::string> stage_errors;  // one entry per failed stage
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    bool scene_ok = false;
    std::string scene_error;
    SuperquadricParams gt;
    std::vector<PipelineOutcome> outcomes;
};

struct ExperimentResult {
    std::vector<TrialRecord> trials;                 // by trial index
    std::vector<AggregateRow> aggregates;            // by pipeline index
    std::vector<std::string> pipeline_names;
    std::string csv;                                 // summary table content
};

/// Run every pipeline on `trials` seeded scenes and aggregate the metrics.
/// Per-trial failures are recorded as unsuccessful trials.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// run_experiment plus artifacts on disk: summary.csv and trials.json under
/// out_dir.
ExperimentResult run_experiment_to_dir(const ExperimentConfig& config,
                                       const std::string& out_dir);

/// Fit one scene file with one pipeline; writes report.json plus per-stage
/// silhouette and surface dumps for plotting.
FitReport fit_scene(const std::string& scene_path, const std::string& pipeline_spec,
                    const std::string& out_dir, const FitOptions& opts = {});

std::string experiment_csv(const std::vector<std::string>& pipeline_names,
                           const std::vector<AggregateRow>& aggregates);

}  // namespace sqfit
