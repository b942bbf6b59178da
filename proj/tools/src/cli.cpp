#include "cli.hpp"

#include "corpus_manifest.hpp"
#include "fsl/config.hpp"
#include "fsl/embedding.hpp"
#include "fsl/error.hpp"
#include "fsl/evaluation.hpp"
#include "fsl/heatmap.hpp"
#include "fsl/model_io.hpp"
#include "fsl/rng.hpp"
#include "fsl/synth.hpp"

#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

namespace fsl::cli {

namespace {

namespace fs = std::filesystem;

void setup_logging() {
    auto logger = spdlog::get("fsl");
    if (!logger) {
        logger = spdlog::stderr_color_mt("fsl");
        spdlog::set_default_logger(logger);
    }
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("FSL_LOG"); env && *env) {
        const auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string(env) != "off") {
            spdlog::warn("FSL_LOG='{}' is not a log level; using info", env);
        } else {
            spdlog::set_level(level);
        }
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Options that overwrite RunConfig fields when given on the command line.
class Overrides {
public:
    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& name, std::function<void(RunConfig&, const T&)> apply,
                     const std::string& description) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app->add_option(name, *value, description);
        appliers_.push_back([opt, value, apply](RunConfig& c) {
            if (opt->count() > 0) apply(c, *value);
        });
        return opt;
    }

    CLI::Option* flag(CLI::App* app, const std::string& name, std::function<void(RunConfig&)> apply,
                      const std::string& description) {
        CLI::Option* opt = app->add_flag(name, description);
        appliers_.push_back([opt, apply](RunConfig& c) {
            if (opt->count() > 0) apply(c);
        });
        return opt;
    }

    void apply(RunConfig& c) const {
        for (const auto& f : appliers_) f(c);
    }

private:
    std::vector<std::function<void(RunConfig&)>> appliers_;
};

void add_pipeline_options(CLI::App* app, Overrides& o) {
    o.add<int>(app, "--d-pca", [](RunConfig& c, const int& v) { c.pipeline.d_pca = v; }, "PCA components");
    o.add<int>(app, "--n-words", [](RunConfig& c, const int& v) { c.pipeline.n_words = v; }, "vocabulary size");
    o.add<std::string>(app, "--encode-mode",
                       [](RunConfig& c, const std::string& v) { c.pipeline.encode_mode = parse_encode_mode(v); },
                       "soft or hard");
    o.add<int>(app, "--pca-subsample", [](RunConfig& c, const int& v) { c.pipeline.pca_subsample = v; },
               "activation vectors drawn for the PCA fit");
    o.add<int>(app, "--kmeans-restarts", [](RunConfig& c, const int& v) { c.pipeline.kmeans_restarts = v; },
               "k-means restarts");
    o.add<int>(app, "--kmeans-max-iters", [](RunConfig& c, const int& v) { c.pipeline.kmeans_max_iters = v; },
               "k-means iteration cap");
    o.add<int>(app, "--p", [](RunConfig& c, const int& v) { c.pipeline.p = v; }, "sub-centroids per class");
    o.add<double>(app, "--lambda", [](RunConfig& c, const double& v) { c.pipeline.lambda = v; },
                  "covariance shrinkage in [0, 1]");
    o.add<double>(app, "--lda-reg", [](RunConfig& c, const double& v) { c.pipeline.lda_reg = v; },
                  "absolute ridge added to the within-class scatter");
    o.add<std::string>(app, "--lda-rule",
                       [](RunConfig& c, const std::string& v) { c.pipeline.lda_rule = parse_lda_rule(v); },
                       "nearest_mean or posterior");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

LabeledCorpus load_embeddings(const fs::path& path) {
    if (fs::is_directory(path)) {
        throw UsageError("'" + path.string() + "' is an image folder; run `fsl embed` first");
    }
    return load_corpus(path, CorpusFormat::embedding_file);
}

LabeledCorpus load_image_corpus(const fs::path& path, const LoadOptions& options) {
    if (fs::is_directory(path)) return load_corpus(path, CorpusFormat::image_folders, options);
    if (path.extension() == ".json") return read_corpus_manifest(path);
    throw UsageError("'" + path.string() + "' is neither an image folder nor a corpus manifest (.json)");
}

std::vector<LabeledEmbedding> labeled_embeddings(const LabeledCorpus& corpus) {
    std::vector<LabeledEmbedding> out;
    for (const auto& item : corpus.items()) {
        const auto* emb = std::get_if<EmbeddingSet>(&item.payload);
        if (!emb) throw DataError("item '" + item.id + "' carries no embedding");
        out.push_back({emb, item.label});
    }
    return out;
}

std::vector<const EmbeddingSet*> embedding_pointers(const LabeledCorpus& corpus) {
    std::vector<const EmbeddingSet*> out;
    for (const auto& le : labeled_embeddings(corpus)) out.push_back(le.embedding);
    return out;
}

void log_stage_times(const FittedModel& model) {
    for (const char* stage : {"fit_pca", "fit_vocabulary", "encode", "fit_dictionary", "fit_lda"}) {
        const auto it = model.stage_seconds.find(stage);
        if (it != model.stage_seconds.end()) spdlog::info("stage {:<15} {:8.3f} s", stage, it->second);
    }
    spdlog::info("fit total {:.3f} s", model.fit_time_s);
}

std::string signatures_csv(const LabeledCorpus& corpus, const EncoderStack& encoder) {
    std::ostringstream out;
    out.precision(17);
    out << "id,label,degenerate";
    for (int j = 0; j < encoder.vocabulary.n_words(); ++j) out << ",r" << j;
    out << "\n";
    for (const auto& le : labeled_embeddings(corpus)) {
        const ImageSignature sig = encode(*le.embedding, encoder);
        out << sig.source_id << "," << le.label << "," << (sig.degenerate ? 1 : 0);
        for (Eigen::Index j = 0; j < sig.r.size(); ++j) out << "," << sig.r(j);
        out << "\n";
    }
    return out.str();
}

struct Context {
    std::string config_path;
    Overrides overrides;

    RunConfig resolve() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        overrides.apply(cfg);
        validate(cfg);
        return cfg;
    }
};

}  // namespace

int run(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Few-shot image classification with Mahalanobis class signatures", "fsl"};
    app.require_subcommand(1);
    app.fallthrough();
    app.failure_message(CLI::FailureMessage::help);

    Context ctx;
    Overrides& o = ctx.overrides;
    app.add_option("--config", ctx.config_path, "TOML run configuration")->check(CLI::ExistingFile);
    o.add<int>(&app, "--threads", [](RunConfig& c, const int& v) { c.threads = v; }, "worker threads");
    o.flag(&app, "--deterministic", [](RunConfig& c) { c.deterministic = true; },
           "zero wall-clock fields so outputs depend only on inputs");

    std::function<int()> action;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate a corpus and write it in canonical form");
    std::string ingest_root, ingest_format, ingest_out, group_sep;
    bool skip_corrupt = false;
    ingest->add_option("--root", ingest_root, "image folder root or embedding file")->required();
    ingest->add_option("--format", ingest_format, "image_folders or embeddings")
        ->required()
        ->check(CLI::IsMember({"image_folders", "embeddings", "embedding_file"}));
    ingest->add_option("--out", ingest_out, "output: .fsle for embeddings, JSON manifest for images")->required();
    ingest->add_flag("--skip-corrupt", skip_corrupt, "drop undecodable images with a warning");
    ingest->add_option("--group-separator", group_sep, "group frames by the file-name prefix before this string");
    ingest->callback([&] {
        action = [&] {
            LoadOptions lo;
            lo.skip_corrupt = skip_corrupt;
            lo.group_separator = group_sep;
            LabeledCorpus corpus;
            if (ingest_format == "image_folders") {
                corpus = load_corpus(ingest_root, CorpusFormat::image_folders, lo);
                write_text_file(ingest_out, corpus_manifest_json(corpus, ingest_root));
            } else {
                corpus = load_corpus(ingest_root, CorpusFormat::embedding_file, lo);
                write_embedding_file(ingest_out, corpus);
            }
            const auto counts = corpus.counts();
            for (int c = 0; c < corpus.n_classes(); ++c) {
                std::cout << corpus.class_names()[static_cast<std::size_t>(c)] << "\t"
                          << counts[static_cast<std::size_t>(c)] << "\n";
            }
            return 0;
        };
    });

    // embed
    auto* embed = app.add_subcommand("embed", "run the backbone over an image corpus");
    std::string embed_corpus_path, embed_out;
    bool embed_skip = false;
    o.add<std::string>(embed, "--model", [](RunConfig& c, const std::string& v) { c.embedding.model = v; },
                       "ONNX backbone");
    o.add<std::string>(embed, "--tap", [](RunConfig& c, const std::string& v) { c.embedding.tap = v; },
                       "layer name, 'pooled' or 'LAYER:pooled' (default: last spatial conv map)");
    embed->add_option("--corpus", embed_corpus_path, "image folder or manifest from `ingest`")->required();
    embed->add_option("--out", embed_out, "output .fsle")->required();
    embed->add_flag("--skip-corrupt", embed_skip, "drop undecodable images with a warning");
    embed->callback([&] {
        action = [&] {
            const RunConfig cfg = ctx.resolve();
            if (cfg.embedding.model.empty()) throw UsageError("embed: --model is required");
            const auto backbone = OnnxBackbone::load(cfg.embedding.model, TapSpec::parse(cfg.embedding.tap));
            LoadOptions lo;
            lo.skip_corrupt = embed_skip;
            lo.verify_images = false;
            const LabeledCorpus images = load_image_corpus(embed_corpus_path, lo);
            EmbedOptions eo;
            eo.skip_corrupt = embed_skip;
            eo.threads = cfg.threads;
            const auto start = std::chrono::steady_clock::now();
            const LabeledCorpus out = embed_corpus(*backbone, images, eo);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            write_embedding_file(embed_out, out);
            spdlog::info("embedded {} images with tap '{}' ({} x {}) in {:.2f} s", out.size(), backbone->tap_layer(),
                         backbone->n_locations(), backbone->d_latent(), secs);
            return 0;
        };
    });

    // encoder fit / apply
    auto* encoder = app.add_subcommand("encoder", "fit or apply the PCA + vocabulary encoder");
    encoder->require_subcommand(1);
    auto* enc_fit = encoder->add_subcommand("fit", "fit PCA and vocabulary on every vector of a corpus");
    std::string enc_corpus, enc_out;
    enc_fit->add_option("--corpus", enc_corpus, "embedding file")->required();
    enc_fit->add_option("--out", enc_out, "encoder file")->required();
    add_pipeline_options(enc_fit, o);
    o.add<std::uint64_t>(enc_fit, "--seed", [](RunConfig& c, const std::uint64_t& v) { c.pipeline.seed = v; },
                         "random seed");
    enc_fit->callback([&] {
        action = [&] {
            const RunConfig cfg = ctx.resolve();
            const LabeledCorpus corpus = load_embeddings(enc_corpus);
            const auto pool = embedding_pointers(corpus);
            EncoderStack enc;
            enc.mode = cfg.pipeline.encode_mode;
            enc.pca = fit_pca(subsample_vectors(pool, cfg.pipeline.pca_subsample, mix_seed(cfg.pipeline.seed, 1)),
                              cfg.pipeline.d_pca);
            VocabularyOptions vo;
            vo.n_words = cfg.pipeline.n_words;
            vo.max_iters = cfg.pipeline.kmeans_max_iters;
            vo.restarts = cfg.pipeline.kmeans_restarts;
            vo.seed = mix_seed(cfg.pipeline.seed, 2);
            enc.vocabulary = fit_vocabulary(enc.pca.project(stack_vectors(pool)), vo);
            save_encoder(enc_out, enc, pipeline_config_json(cfg.pipeline));
            return 0;
        };
    });
    auto* enc_apply = encoder->add_subcommand("apply", "write image signatures as CSV");
    std::string apply_encoder, apply_input, apply_out;
    enc_apply->add_option("--encoder", apply_encoder, "encoder file")->required();
    enc_apply->add_option("--input", apply_input, "embedding file")->required();
    enc_apply->add_option("--out", apply_out, "CSV output (stdout when omitted)");
    enc_apply->callback([&] {
        action = [&] {
            const EncoderStack enc = load_encoder(apply_encoder);
            const std::string csv = signatures_csv(load_embeddings(apply_input), enc);
            if (apply_out.empty()) std::cout << csv;
            else write_text_file(apply_out, csv);
            return 0;
        };
    });

    // dict fit
    auto* dict = app.add_subcommand("dict", "class signature dictionary");
    dict->require_subcommand(1);
    auto* dict_fit = dict->add_subcommand("fit", "fit class signatures from encoded supports");
    std::string dict_encoder, dict_support, dict_out;
    dict_fit->add_option("--encoder", dict_encoder, "encoder file")->required();
    dict_fit->add_option("--support", dict_support, "labeled support embeddings")->required();
    dict_fit->add_option("--out", dict_out, "dictionary file")->required();
    o.add<int>(dict_fit, "--p", [](RunConfig& c, const int& v) { c.pipeline.p = v; }, "sub-centroids per class");
    o.add<double>(dict_fit, "--lambda", [](RunConfig& c, const double& v) { c.pipeline.lambda = v; },
                  "covariance shrinkage in [0, 1]");
    o.add<std::uint64_t>(dict_fit, "--seed", [](RunConfig& c, const std::uint64_t& v) { c.pipeline.seed = v; },
                         "random seed");
    dict_fit->callback([&] {
        action = [&] {
            const RunConfig cfg = ctx.resolve();
            const EncoderStack enc = load_encoder(dict_encoder);
            const LabeledCorpus support = load_embeddings(dict_support);
            std::vector<ImageSignature> sigs;
            std::vector<int> labels;
            for (const auto& le : labeled_embeddings(support)) {
                sigs.push_back(encode(*le.embedding, enc));
                labels.push_back(le.label);
            }
            DictionaryOptions dopt;
            dopt.p = cfg.pipeline.p;
            dopt.lambda = cfg.pipeline.lambda;
            dopt.seed = mix_seed(cfg.pipeline.seed, 3);
            dopt.kmeans_max_iters = cfg.pipeline.kmeans_max_iters;
            dopt.kmeans_restarts = cfg.pipeline.kmeans_restarts;
            const Dictionary d = fit_dictionary(sigs, labels, dopt);
            nlohmann::ordered_json manifest{{"p", d.p}, {"lambda", cfg.pipeline.lambda},
                                            {"class_names", support.class_names()}};
            save_dictionary(dict_out, d, manifest.dump());
            return 0;
        };
    });

    // fit
    auto* fit = app.add_subcommand("fit", "fit the full pipeline and write a model file");
    std::string fit_corpus, fit_out, fit_classes;
    int fit_shots = 0;
    fit->add_option("--corpus", fit_corpus, "embedding file")->required();
    fit->add_option("--out", fit_out, "model file")->required();
    fit->add_option("--classes", fit_classes, "comma-separated class names (default: all)");
    fit->add_option("--shots", fit_shots, "draw this many supports per class instead of using every item")
        ->check(CLI::PositiveNumber);
    add_pipeline_options(fit, o);
    o.add<std::uint64_t>(fit, "--seed", [](RunConfig& c, const std::uint64_t& v) { c.pipeline.seed = v; },
                         "random seed (split and fit)");
    o.add<double>(fit, "--test-fraction", [](RunConfig& c, const double& v) { c.eval.test_fraction = v; },
                  "share of each class held out as queries when --shots is given");
    fit->callback([&] {
        action = [&] {
            const RunConfig cfg = ctx.resolve();
            const LabeledCorpus corpus = load_embeddings(fit_corpus);
            std::vector<int> classes;
            for (const auto& name : split_list(fit_classes)) classes.push_back(corpus.label_of(name));
            if (classes.empty()) {
                for (int c = 0; c < corpus.n_classes(); ++c) classes.push_back(c);
            }
            FittedModel model;
            if (fit_shots > 0) {
                SplitOptions so;
                so.test_fraction = cfg.eval.test_fraction;
                so.group_aware = cfg.eval.group_aware_split;
                const EpisodeSplit split = make_split(corpus, classes, fit_shots, cfg.pipeline.seed, so);
                model = fit_pipeline(corpus, split, cfg.pipeline);
            } else {
                std::vector<LabeledEmbedding> support;
                for (const auto& le : labeled_embeddings(corpus)) {
                    if (std::find(classes.begin(), classes.end(), le.label) != classes.end()) support.push_back(le);
                }
                model = fit_pipeline(support, cfg.pipeline, {}, corpus.class_names());
            }
            model.created_at = cfg.deterministic ? "" : utc_timestamp();
            model.source = fit_corpus;
            log_stage_times(model);
            save_model(fit_out, model);
            const ModelSize size = model_size(model);
            spdlog::info("model: {} bytes, {:.0f} bytes per class", size.total_bytes, size.per_class_bytes());
            return 0;
        };
    });

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "classify query embeddings");
    std::string pred_model, pred_input;
    bool pred_json = false;
    predict_cmd->add_option("--model", pred_model, "model file")->required();
    predict_cmd->add_option("--input", pred_input, "query embeddings")->required();
    predict_cmd->add_flag("--json", pred_json, "JSON output");
    predict_cmd->callback([&] {
        action = [&] {
            const FittedModel model = load_model(pred_model);
            const LabeledCorpus queries = load_embeddings(pred_input);
            auto name_of = [&](int label) {
                return label >= 0 && label < static_cast<int>(model.class_names.size())
                           ? model.class_names[static_cast<std::size_t>(label)]
                           : std::to_string(label);
            };
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const auto& le : labeled_embeddings(queries)) {
                const Prediction p = predict(model, *le.embedding);
                if (pred_json) {
                    std::vector<double> d(p.distances.d.data(), p.distances.d.data() + p.distances.d.size());
                    out.push_back({{"id", p.query_id}, {"label", name_of(p.predicted_label)}, {"score", p.score},
                                   {"distances", d}});
                } else {
                    std::cout << p.query_id << "\t" << name_of(p.predicted_label) << "\t" << p.score << "\n";
                }
            }
            if (pred_json) std::cout << out.dump(2) << "\n";
            return 0;
        };
    });

    // eval sweep
    auto* eval = app.add_subcommand("eval", "evaluation harness");
    eval->require_subcommand(1);
    auto* sweep_cmd = eval->add_subcommand("sweep", "trials over scenarios x shots; writes report.json, summary.csv, roc_grid.svg");
    std::string sweep_corpus, sweep_out;
    sweep_cmd->add_option("--corpus", sweep_corpus, "embedding file")->required();
    sweep_cmd->add_option("--out", sweep_out, "report directory")->required();
    o.add<std::string>(sweep_cmd, "--scenarios",
                       [](RunConfig& c, const std::string& v) { c.eval.scenarios = split_list(v); },
                       "comma-separated a:b pairs (b is the positive class)");
    o.add<std::string>(sweep_cmd, "--shots",
                       [](RunConfig& c, const std::string& v) {
                           c.eval.shots.clear();
                           for (const auto& s : split_list(v)) {
                               try {
                                   c.eval.shots.push_back(std::stoi(s));
                               } catch (const std::exception&) {
                                   throw UsageError("--shots: '" + s + "' is not an integer");
                               }
                           }
                       },
                       "comma-separated shot counts");
    o.add<int>(sweep_cmd, "--trials", [](RunConfig& c, const int& v) { c.eval.trials = v; }, "trials per cell");
    o.add<std::uint64_t>(sweep_cmd, "--seed", [](RunConfig& c, const std::uint64_t& v) { c.eval.seed = v; },
                         "base seed; trial t uses seed + t");
    o.add<double>(sweep_cmd, "--test-fraction", [](RunConfig& c, const double& v) { c.eval.test_fraction = v; },
                  "share of each class held out as queries");
    o.flag(sweep_cmd, "--group-aware", [](RunConfig& c) { c.eval.group_aware_split = true; },
           "keep grouped items on one side of the split");
    add_pipeline_options(sweep_cmd, o);
    sweep_cmd->callback([&] {
        action = [&] {
            RunConfig cfg = ctx.resolve();
            const LabeledCorpus corpus = load_embeddings(sweep_corpus);
            if (cfg.eval.scenarios.empty()) {
                for (int a = 0; a < corpus.n_classes(); ++a) {
                    for (int b = a + 1; b < corpus.n_classes(); ++b) {
                        cfg.eval.scenarios.push_back(corpus.class_names()[static_cast<std::size_t>(a)] + ":" +
                                                     corpus.class_names()[static_cast<std::size_t>(b)]);
                    }
                }
            }
            std::vector<Scenario> scenarios;
            for (const auto& s : cfg.eval.scenarios) scenarios.push_back(parse_scenario(s, corpus));
            TrialConfig base;
            base.n_trials = cfg.eval.trials;
            base.test_fraction = cfg.eval.test_fraction;
            base.group_aware_split = cfg.eval.group_aware_split;
            base.base_seed = cfg.eval.seed;
            base.pipeline = cfg.pipeline;
            base.threads = cfg.threads;
            const SweepReport report = sweep(corpus, scenarios, cfg.eval.shots, base);
            ReportOptions ro;
            ro.deterministic = cfg.deterministic;
            nlohmann::ordered_json echo = nlohmann::ordered_json::parse(to_json(cfg));
            echo["corpus"] = sweep_corpus;
            ro.config_json = echo.dump();
            write_sweep_outputs(sweep_out, report, ro);
            int failed = 0;
            for (const auto& cell : report.cells) failed += cell.error.empty() ? 0 : 1;
            if (failed > 0) {
                spdlog::error("{} of {} sweep cells failed; see report.json", failed, report.cells.size());
                return static_cast<int>(ExitCode::data);
            }
            return 0;
        };
    });

    // heatmap
    auto* heat = app.add_subcommand("heatmap", "per-patch distance map for one class");
    std::string heat_model, heat_image, heat_class, heat_out, heat_json;
    heat->add_option("--model", heat_model, "model file")->required();
    heat->add_option("--image", heat_image, "input image")->required();
    heat->add_option("--class", heat_class, "target class name")->required();
    heat->add_option("--out", heat_out, "overlay PNG");
    heat->add_option("--json", heat_json, "grid values as JSON");
    o.add<std::string>(heat, "--backbone", [](RunConfig& c, const std::string& v) { c.embedding.model = v; },
                       "ONNX backbone the model's embeddings came from");
    o.add<std::string>(heat, "--tap", [](RunConfig& c, const std::string& v) { c.embedding.tap = v; },
                       "tap used at embedding time");
    o.add<int>(heat, "--patch", [](RunConfig& c, const int& v) { c.heatmap.patch = v; }, "patch side in pixels");
    o.add<int>(heat, "--stride", [](RunConfig& c, const int& v) { c.heatmap.stride = v; }, "patch stride in pixels");
    o.add<double>(heat, "--alpha", [](RunConfig& c, const double& v) { c.heatmap.alpha = v; }, "overlay opacity");
    heat->callback([&] {
        action = [&] {
            const RunConfig cfg = ctx.resolve();
            if (cfg.embedding.model.empty()) throw UsageError("heatmap: --backbone is required");
            if (heat_out.empty() && heat_json.empty()) throw UsageError("heatmap: give --out and/or --json");
            const FittedModel model = load_model(heat_model);
            int target = -1;
            for (std::size_t i = 0; i < model.class_names.size(); ++i) {
                if (model.class_names[i] == heat_class) target = static_cast<int>(i);
            }
            if (target < 0) throw UsageError("heatmap: class '" + heat_class + "' is not in the model");
            const auto backbone = OnnxBackbone::load(cfg.embedding.model, TapSpec::parse(cfg.embedding.tap));
            if (backbone->d_latent() != model.encoder.pca.d_latent()) {
                throw DataError("heatmap: backbone tap has " + std::to_string(backbone->d_latent()) +
                                " channels, the model expects " + std::to_string(model.encoder.pca.d_latent()));
            }
            const cv::Mat decoded = decode_image(heat_image);
            const int size = backbone->input_size();
            const ImageTensor image = preprocess(decoded, size, size, backbone->standardization());
            const PatchGrid grid = patch_grid(image, cfg.heatmap.patch, cfg.heatmap.stride);
            const HeatmapGrid scores = score_patches(grid, model, *backbone, target, cfg.threads);
            if (!heat_out.empty()) write_file(heat_out, encode_png(render(scores, decoded, cfg.heatmap.alpha)));
            if (!heat_json.empty()) write_text_file(heat_json, heatmap_json(scores, heat_class, cfg.heatmap.alpha));
            Eigen::Index r = 0;
            Eigen::Index c = 0;
            scores.values.minCoeff(&r, &c);
            spdlog::info("closest patch to '{}': row {}, col {} (distance {:.4g})", heat_class, r, c, scores.values(r, c));
            return 0;
        };
    });

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic corpora");
    std::string synth_kind = "gaussian";
    std::string synth_out;
    SynthOptions so;
    int per_class = 40;
    int tex_size = 56;
    int quadrant = 0;
    synth->add_option("--kind", synth_kind,
                      "gaussian (embedding file), textures (image folders) or planted (one PNG with a target quadrant)")
        ->check(CLI::IsMember({"gaussian", "textures", "planted"}));
    synth->add_option("--quadrant", quadrant, "planted quadrant: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right")
        ->check(CLI::Range(0, 3));
    synth->add_option("--out", synth_out, "output .fsle or directory")->required();
    synth->add_option("--classes", so.n_classes, "number of classes")->capture_default_str();
    synth->add_option("--items", so.items_per_class, "items per class")->capture_default_str();
    synth->add_option("--locations", so.n_locations, "vectors per item")->capture_default_str();
    synth->add_option("--d-latent", so.d_latent, "latent dimension")->capture_default_str();
    synth->add_option("--separation", so.separation, "class mean offset")->capture_default_str();
    synth->add_option("--nuisance-rank", so.nuisance_rank, "rank of the shared nuisance subspace")->capture_default_str();
    synth->add_option("--nuisance-scale", so.nuisance_scale, "spread along the nuisance subspace")->capture_default_str();
    synth->add_option("--item-jitter", so.item_jitter, "isotropic per-item offset")->capture_default_str();
    synth->add_option("--location-noise", so.location_noise, "isotropic per-vector noise")->capture_default_str();
    synth->add_option("--per-class", per_class, "texture images per class")->capture_default_str();
    synth->add_option("--size", tex_size, "texture image side")->capture_default_str();
    synth->add_option("--seed", so.seed, "random seed")->capture_default_str();
    synth->callback([&] {
        action = [&] {
            if (synth_kind == "gaussian") {
                const LabeledCorpus corpus = synth_corpus(so);
                write_embedding_file(synth_out, corpus);
                spdlog::info("wrote {} items ({} classes) to {}", corpus.size(), corpus.n_classes(), synth_out);
            } else if (synth_kind == "textures") {
                write_texture_corpus(synth_out, per_class, tex_size, so.seed);
            } else {
                cv::Mat bgr;
                cv::cvtColor(planted_image(tex_size, quadrant, so.seed), bgr, cv::COLOR_RGB2BGR);
                std::vector<std::uint8_t> png;
                if (!cv::imencode(".png", bgr, png)) throw DataError("PNG encoding failed");
                write_file(synth_out, png);
            }
            return 0;
        };
    });

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
        }
        return action ? action() : static_cast<int>(ExitCode::usage);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::usage);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::numerical);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    }
}

int run(const std::vector<std::string>& args) {
    std::vector<std::string> copy = args;
    std::vector<char*> argv;
    for (auto& a : copy) argv.push_back(a.data());
    argv.push_back(nullptr);
    return run(static_cast<int>(copy.size()), argv.data());
}

}  // namespace fsl::cli
