#pragma once

#include "fsl/classifier.hpp"
#include "fsl/dictionary.hpp"
#include "fsl/encoding.hpp"
#include "fsl/ingestion.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fsl {

/// Every tunable of the fitted stages. Defaults are the engine defaults.
struct PipelineConfig {
    int d_pca = 64;
    int n_words = 128;
    int kmeans_max_iters = 100;
    int kmeans_restarts = 3;
    EncodeMode encode_mode = EncodeMode::soft;
    /// Unlabeled activation vectors drawn for the PCA fit.
    int pca_subsample = 1000;
    int p = 1;
    double lambda = 0.5;
    std::optional<double> lda_reg;
    double lda_relative_reg = 1e-6;
    LdaRule lda_rule = LdaRule::nearest_mean;
    std::uint64_t seed = 0;

    bool operator==(const PipelineConfig&) const = default;
};

struct LabeledEmbedding {
    const EmbeddingSet* embedding = nullptr;
    int label = 0;
};

/// PCA + vocabulary + dictionary + LDA, immutable after fitting.
struct FittedModel {
    EncoderStack encoder;
    Dictionary dictionary;
    LdaModel lda;
    std::vector<std::string> class_names;  // full corpus label table
    PipelineConfig config;
    /// Free-form provenance echoed into the model manifest (left empty by the
    /// library so fitted bytes stay reproducible).
    std::string created_at;
    std::string source;
    std::map<std::string, double> stage_seconds;
    double fit_time_s = 0.0;
};

/// Fits all stages on the support set. pca_pool supplies the unlabeled
/// vectors for the PCA (the support set is used when empty); a random
/// subsample of config.pca_subsample vectors is drawn from it.
/// Stage failures are rethrown with the stage name prefixed.
FittedModel fit_pipeline(std::span<const LabeledEmbedding> support, const PipelineConfig& config,
                         std::span<const EmbeddingSet* const> pca_pool = {},
                         std::vector<std::string> class_names = {});

/// Convenience overload: supports from an episode split, PCA pool from the
/// non-query items of the split's classes.
FittedModel fit_pipeline(const LabeledCorpus& corpus, const EpisodeSplit& split, const PipelineConfig& config);

ImageSignature signature_of(const FittedModel& model, const EmbeddingSet& emb);
Prediction predict(const FittedModel& model, const EmbeddingSet& emb);

/// Draws `count` rows uniformly without replacement from the stacked
/// vectors of `pool` (all rows when the pool is smaller).
Matrix subsample_vectors(std::span<const EmbeddingSet* const> pool, int count, std::uint64_t seed);

}  // namespace fsl
