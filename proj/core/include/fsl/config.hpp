#pragma once

#include "fsl/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fsl {

struct EvalConfig {
    std::vector<std::string> scenarios;
    std::vector<int> shots{8, 16, 32, 64};
    int trials = 10;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    bool group_aware_split = false;

    bool operator==(const EvalConfig&) const = default;
};

struct EmbeddingConfig {
    std::string model;
    std::string tap;

    bool operator==(const EmbeddingConfig&) const = default;
};

struct HeatmapConfig {
    int patch = 56;
    int stride = 28;
    double alpha = 0.45;

    bool operator==(const HeatmapConfig&) const = default;
};

/// Every default of the engine in one declarative document. Tables:
/// [pipeline], [eval], [embedding], [heatmap], [run].
struct RunConfig {
    PipelineConfig pipeline;
    EvalConfig eval;
    EmbeddingConfig embedding;
    HeatmapConfig heatmap;
    int threads = 1;
    bool deterministic = false;

    bool operator==(const RunConfig&) const = default;
};

/// Parses a TOML document on top of the defaults. Unknown tables or keys
/// and ill-typed values raise UsageError.
RunConfig parse_run_config(const std::string& toml_text, const std::string& source = "config");
RunConfig load_run_config(const std::filesystem::path& path);

std::string to_toml(const RunConfig& config);
std::string to_json(const RunConfig& config);

/// Range checks shared by the CLI and the library entry points.
void validate(const RunConfig& config);

}  // namespace fsl
