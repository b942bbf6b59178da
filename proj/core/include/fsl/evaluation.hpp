#pragma once

#include "fsl/ingestion.hpp"
#include "fsl/pipeline.hpp"
#include "fsl/roc.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fsl {

/// Binary scenario; class_b is the positive class of the ROC.
struct Scenario {
    int class_a = 0;
    int class_b = 1;
    std::string name;  // "a:b" using class names
};

/// Parses "healthy:covid" against the corpus class names.
Scenario parse_scenario(const std::string& text, const LabeledCorpus& corpus);

struct TrialConfig {
    Scenario scenario;
    int shots_k = 8;
    int n_trials = 10;
    double test_fraction = 0.2;
    bool group_aware_split = false;
    std::uint64_t base_seed = 0;
    PipelineConfig pipeline;
    int threads = 1;
};

struct QueryResult {
    std::string id;
    int true_label = 0;
    int predicted_label = 0;
    double score = 0.0;  // oriented so that larger => class_b
};

struct TrialResult {
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<QueryResult> queries;
    RocCurve roc;
    OperatingPoint operating_point;
    double accuracy = 0.0;
    double fit_time_s = 0.0;
};

struct TrialReport {
    TrialConfig config;
    std::vector<TrialResult> trials;
    std::vector<std::pair<double, double>> mean_roc;  // (fpr, tpr) on a 101-point grid
    double mean_auc = 0.0;
    double std_auc = 0.0;
    double mean_sensitivity = 0.0;
    double mean_specificity = 0.0;
    double mean_fit_time_s = 0.0;
};

/// Trial t uses seed base_seed + t: split, fit, classify queries, ROC.
/// Trials may run on config.threads workers; results are reduced in trial order.
TrialReport run_trials(const LabeledCorpus& corpus, const TrialConfig& config);

/// Aggregates per-trial results (mean ROC, mean/std AUC, ...).
void aggregate(TrialReport& report);

struct SweepCell {
    Scenario scenario;
    int shots_k = 0;
    std::optional<TrialReport> report;
    std::string error;  // non-empty when the cell failed
};

struct SweepReport {
    std::vector<Scenario> scenarios;
    std::vector<int> shots;
    std::vector<SweepCell> cells;  // scenario-major, then shots

    [[nodiscard]] const SweepCell& cell(std::size_t scenario, std::size_t shot) const {
        return cells.at(scenario * shots.size() + shot);
    }
};

/// Runs run_trials for every (scenario, shots) pair. A failing cell records
/// its error and the sweep continues.
SweepReport sweep(const LabeledCorpus& corpus, const std::vector<Scenario>& scenarios, const std::vector<int>& shot_list,
                  const TrialConfig& base);

struct ReportOptions {
    /// Zero wall-clock fields (fit times, timestamps) so output bytes depend only on inputs.
    bool deterministic = false;
    /// Resolved run configuration echoed into report.json (JSON text).
    std::string config_json = "{}";
    bool include_predictions = true;
};

std::string report_json(const SweepReport& report, const ReportOptions& options);
std::string summary_csv(const SweepReport& report, const ReportOptions& options);
std::string roc_grid_svg(const SweepReport& report, const ReportOptions& options);

/// Writes report.json, summary.csv and roc_grid.svg into `dir` (created if needed).
void write_sweep_outputs(const std::filesystem::path& dir, const SweepReport& report, const ReportOptions& options);

}  // namespace fsl
