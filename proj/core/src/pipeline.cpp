#include "fsl/pipeline.hpp"

#include "fsl/error.hpp"
#include "fsl/rng.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <numeric>
#include <set>

namespace fsl {

namespace {

using Clock = std::chrono::steady_clock;

enum SeedStream : std::uint64_t { kPcaStream = 1, kVocabStream = 2, kDictStream = 3 };

template <typename Fn>
auto run_stage(const char* name, std::map<std::string, double>& timings, Fn&& fn) {
    const auto start = Clock::now();
    try {
        auto result = fn();
        timings[name] = std::chrono::duration<double>(Clock::now() - start).count();
        spdlog::debug("stage {} took {:.3f}s", name, timings[name]);
        return result;
    } catch (const UsageError& e) {
        throw UsageError(std::string(name) + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string(name) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(name) + ": " + e.what());
    }
}

}  // namespace

Matrix subsample_vectors(std::span<const EmbeddingSet* const> pool, int count, std::uint64_t seed) {
    std::vector<std::pair<std::size_t, Eigen::Index>> rows;
    for (std::size_t s = 0; s < pool.size(); ++s) {
        for (Eigen::Index r = 0; r < pool[s]->vectors.rows(); ++r) rows.emplace_back(s, r);
    }
    if (rows.empty()) throw DataError("empty vector pool");
    const std::size_t take = count > 0 ? std::min(rows.size(), static_cast<std::size_t>(count)) : rows.size();
    if (take < rows.size()) {
        // Partial Fisher-Yates: the first `take` slots are a uniform sample.
        Rng rng(seed);
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(rows.size() - i));
            std::swap(rows[i], rows[j]);
        }
        rows.resize(take);
        std::sort(rows.begin(), rows.end());
    }
    const auto d = pool.front()->vectors.cols();
    Matrix out(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [s, r] = rows[i];
        if (pool[s]->vectors.cols() != d) throw DataError("inconsistent latent dimensions in the PCA pool");
        out.row(static_cast<Eigen::Index>(i)) = pool[s]->vectors.row(r).cast<double>();
    }
    return out;
}

FittedModel fit_pipeline(std::span<const LabeledEmbedding> support, const PipelineConfig& config,
                         std::span<const EmbeddingSet* const> pca_pool, std::vector<std::string> class_names) {
    const auto start = Clock::now();
    if (support.empty()) throw DataError("fit_pipeline: empty support set");
    std::set<int> classes;
    for (const auto& s : support) classes.insert(s.label);
    if (classes.size() < 2) {
        throw DataError("fit_lda: need at least 2 classes in the support set, got " + std::to_string(classes.size()));
    }

    FittedModel model;
    model.config = config;
    model.class_names = std::move(class_names);

    std::vector<const EmbeddingSet*> support_sets;
    std::vector<int> labels;
    for (const auto& s : support) {
        support_sets.push_back(s.embedding);
        labels.push_back(s.label);
    }
    const std::span<const EmbeddingSet* const> pool = pca_pool.empty() ? std::span<const EmbeddingSet* const>(support_sets) : pca_pool;

    model.encoder.mode = config.encode_mode;
    model.encoder.pca = run_stage("fit_pca", model.stage_seconds, [&] {
        const Matrix sample = subsample_vectors(pool, config.pca_subsample, mix_seed(config.seed, kPcaStream));
        return fit_pca(sample, config.d_pca);
    });

    model.encoder.vocabulary = run_stage("fit_vocabulary", model.stage_seconds, [&] {
        const Matrix reduced = model.encoder.pca.project(stack_vectors(support_sets));
        VocabularyOptions vo;
        vo.n_words = config.n_words;
        vo.max_iters = config.kmeans_max_iters;
        vo.restarts = config.kmeans_restarts;
        vo.seed = mix_seed(config.seed, kVocabStream);
        return fit_vocabulary(reduced, vo);
    });

    const auto signatures = run_stage("encode", model.stage_seconds, [&] {
        std::vector<ImageSignature> out;
        out.reserve(support_sets.size());
        for (const auto* s : support_sets) out.push_back(encode(*s, model.encoder));
        return out;
    });

    model.dictionary = run_stage("fit_dictionary", model.stage_seconds, [&] {
        DictionaryOptions dopt;
        dopt.p = config.p;
        dopt.lambda = config.lambda;
        dopt.seed = mix_seed(config.seed, kDictStream);
        dopt.kmeans_max_iters = config.kmeans_max_iters;
        dopt.kmeans_restarts = config.kmeans_restarts;
        return fit_dictionary(signatures, labels, dopt);
    });

    model.lda = run_stage("fit_lda", model.stage_seconds, [&] {
        std::vector<DistanceVector> features;
        features.reserve(signatures.size());
        for (const auto& sig : signatures) features.push_back(distance_vector(sig, model.dictionary));
        LdaOptions lo;
        lo.reg = config.lda_reg;
        lo.relative_reg = config.lda_relative_reg;
        lo.rule = config.lda_rule;
        return fit_lda(features, labels, lo);
    });

    model.fit_time_s = std::chrono::duration<double>(Clock::now() - start).count();
    spdlog::debug("fit_pipeline: {} supports, {} classes, {:.3f}s", support.size(), classes.size(), model.fit_time_s);
    return model;
}

FittedModel fit_pipeline(const LabeledCorpus& corpus, const EpisodeSplit& split, const PipelineConfig& config) {
    if (!corpus.has_embeddings()) throw DataError("fit_pipeline: corpus payloads must be embeddings");
    std::vector<LabeledEmbedding> support;
    for (const auto& [label, ids] : split.support) {
        for (const auto& id : ids) support.push_back({&std::get<EmbeddingSet>(corpus.item(id).payload), label});
    }
    std::set<std::string> query(split.query.begin(), split.query.end());
    std::vector<const EmbeddingSet*> pool;
    for (const auto& item : corpus.items()) {
        if (split.support.contains(item.label) && !query.contains(item.id)) {
            pool.push_back(&std::get<EmbeddingSet>(item.payload));
        }
    }
    return fit_pipeline(support, config, pool, corpus.class_names());
}

ImageSignature signature_of(const FittedModel& model, const EmbeddingSet& emb) { return encode(emb, model.encoder); }

Prediction predict(const FittedModel& model, const EmbeddingSet& emb) {
    return classify(distance_vector(signature_of(model, emb), model.dictionary), model.lda);
}

}  // namespace fsl
