#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eccnet/search.hpp"
#include "eccnet/stimuli.hpp"

namespace eccnet {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares on (x, y) points; needs at least two distinct x values.
LineFit fit_slope(std::span<const std::pair<double, double>> points);

/// (H - E) / (H + E); empty when H + E = 0.
std::optional<double> asymmetry_index(double hard_slope, double easy_slope);

struct TrialRecord {
    std::string trial_id;
    int experiment = 0;
    std::string condition;
    int set_size = 0;
    std::uint64_t seed = 0;
    TrialResult result;
};

struct SetSizeStats {
    int set_size = 0;
    int included = 0;
    int capped = 0;
    double mean_rt = 0.0;
    double se_rt = 0.0;
    double mean_n = 0.0;
};

struct ConditionSummary {
    int experiment = 0;
    std::string condition;
    bool hard = false;
    std::vector<SetSizeStats> per_size;
    std::optional<LineFit> fit;  // absent when fewer than two set sizes have data
};

struct ExperimentSummary {
    int experiment = 0;
    std::vector<ConditionSummary> conditions;
    std::optional<double> asymmetry_index;
};

struct RunOptions {
    std::vector<int> experiments{1, 2, 3, 4, 5, 6};
    std::optional<std::string> condition;
    SearchOptions search;
    bool paper_saliency_schemes = false;  // per-condition bottom-up scheme table
    std::optional<int> trials_per_condition;
    std::uint64_t master_seed = 1;
    int workers = 0;  // 0: ECCNET_WORKERS or hardware concurrency
    std::string weights_digest;
};

struct Report {
    RunOptions options;
    std::vector<TrialRecord> trials;
    std::vector<ExperimentSummary> experiments;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

int default_workers();

/// Runs every selected (experiment, condition, trial); outputs do not depend on
/// the worker count. A failing trial aborts the run with its id in the message.
Report run_experiments(const Backbone* backbone, const RunOptions& options, const ProgressFn& progress = {});

/// Aggregates trials into per-condition RT curves, slopes and asymmetry indices.
std::vector<ExperimentSummary> summarize(const std::vector<TrialRecord>& trials);

// Outputs
std::string results_csv(const Report& report);
std::string summary_json(const Report& report);
std::string scanpaths_jsonl(const Report& report);
std::string experiment_svg(const ExperimentSummary& summary);

/// results.csv, summary.json, scanpaths.jsonl and expK.svg per experiment.
void emit_outputs(const Report& report, const std::filesystem::path& out_dir);

} // namespace eccnet
