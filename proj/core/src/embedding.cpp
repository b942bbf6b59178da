#include "fsl/embedding.hpp"

#include "fsl/error.hpp"
#include "fsl/parallel.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <optional>

namespace fsl {

TapSpec TapSpec::parse(const std::string& text) {
    TapSpec spec;
    if (text == "pooled") {
        spec.pooled = true;
        return spec;
    }
    constexpr std::string_view suffix = ":pooled";
    if (text.size() > suffix.size() && text.ends_with(suffix)) {
        spec.layer = text.substr(0, text.size() - suffix.size());
        spec.pooled = true;
        return spec;
    }
    spec.layer = text;
    return spec;
}

std::string TapSpec::to_string() const {
    if (layer.empty()) return pooled ? "pooled" : "";
    return pooled ? layer + ":pooled" : layer;
}

std::unique_ptr<OnnxBackbone> OnnxBackbone::load(const std::filesystem::path& model_path, const TapSpec& tap,
                                                 int input_size, Standardization norm) {
    if (!std::filesystem::exists(model_path)) {
        throw DataError("model file '" + model_path.string() + "' does not exist");
    }
    std::unique_ptr<OnnxBackbone> handle(new OnnxBackbone());
    try {
        handle->net_ = cv::dnn::readNetFromONNX(model_path.string());
    } catch (const cv::Exception& e) {
        throw DataError("failed to load model '" + model_path.string() + "': " + e.what());
    }
    if (handle->net_.empty()) throw DataError("failed to load model '" + model_path.string() + "'");
    handle->net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    handle->net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
    handle->model_path_ = model_path;
    handle->pooled_ = tap.pooled;
    handle->input_size_ = input_size;
    handle->norm_ = norm;

    const cv::dnn::MatShape input_shape{1, 3, input_size, input_size};
    auto output_shape = [&](int layer_id) -> std::optional<cv::dnn::MatShape> {
        std::vector<cv::dnn::MatShape> ins, outs;
        handle->net_.getLayerShapes(input_shape, layer_id, ins, outs);
        if (outs.empty()) return std::nullopt;
        return outs.front();
    };

    cv::dnn::MatShape shape;
    if (tap.layer.empty()) {
        const auto names = handle->net_.getLayerNames();
        for (auto it = names.rbegin(); it != names.rend(); ++it) {
            const auto s = output_shape(handle->net_.getLayerId(*it));
            if (s && s->size() == 4 && (*s)[2] > 1 && (*s)[3] > 1) {
                handle->layer_ = *it;
                shape = *s;
                break;
            }
        }
        if (handle->layer_.empty()) throw DataError("model has no spatial feature map to tap");
    } else {
        const int id = handle->net_.getLayerId(tap.layer);
        if (id < 0) throw DataError("layer '" + tap.layer + "' not found in model '" + model_path.string() + "'");
        handle->layer_ = tap.layer;
        const auto s = output_shape(id);
        if (!s) throw DataError("cannot infer output shape of layer '" + tap.layer + "'");
        shape = *s;
    }

    if (shape.size() == 4) {
        handle->d_latent_ = shape[1];
        handle->grid_h_ = shape[2];
        handle->grid_w_ = shape[3];
    } else if (shape.size() == 2) {
        handle->d_latent_ = shape[1];
        handle->grid_h_ = handle->grid_w_ = 1;
    } else {
        throw DataError("layer '" + handle->layer_ + "' output does not reshape to (locations, channels)");
    }
    handle->n_locations_ = handle->pooled_ ? 1 : handle->grid_h_ * handle->grid_w_;
    spdlog::debug("backbone '{}': tap '{}' -> {} x {}", model_path.string(), handle->layer_, handle->n_locations_,
                  handle->d_latent_);
    return handle;
}

EmbeddingSet OnnxBackbone::embed(const ImageTensor& image, const std::string& source_id) const {
    if (image.height() != input_size_ || image.width() != input_size_ || image.channels() != 3) {
        throw UsageError("image '" + source_id + "' does not match the backbone input spec (" +
                         std::to_string(input_size_) + "x" + std::to_string(input_size_) + "x3)");
    }
    const cv::Mat blob = cv::dnn::blobFromImage(image.mat());
    cv::Mat out;
    {
        std::lock_guard lock(mutex_);
        net_.setInput(blob);
        out = net_.forward(layer_).clone();
    }

    const int channels = d_latent_;
    const int locations = grid_h_ * grid_w_;
    if (static_cast<int>(out.total()) != channels * locations) {
        throw DataError("unexpected activation size from layer '" + layer_ + "'");
    }
    const float* data = out.ptr<float>();
    EmbeddingSet result;
    result.source_id = source_id;
    // NCHW -> one row per spatial position.
    RowMatrixF grid(locations, channels);
    for (int c = 0; c < channels; ++c) {
        for (int l = 0; l < locations; ++l) grid(l, c) = data[static_cast<std::size_t>(c) * locations + l];
    }
    if (!grid.allFinite()) {
        throw NumericalError("non-finite activations for '" + source_id + "' (corrupted model?)");
    }
    result.vectors = pooled_ ? RowMatrixF(grid.colwise().mean()) : std::move(grid);
    return result;
}

LabeledCorpus embed_corpus(const Embedder& embedder, const LabeledCorpus& corpus, const EmbedOptions& options) {
    const std::size_t n = corpus.size();
    std::vector<std::optional<EmbeddingSet>> results(n);
    std::vector<std::string> failures(n);
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    parallel_for(n, options.threads, [&](std::size_t i) {
        const auto& item = corpus.at(i);
        if (const auto* emb = std::get_if<EmbeddingSet>(&item.payload)) {
            results[i] = *emb;
        } else {
            const auto& ref = std::get<ImageRef>(item.payload);
            try {
                ImageRef sized = ref;
                sized.height = sized.width = embedder.input_size();
                results[i] = embedder.embed(preprocess_image(sized, embedder.standardization()), item.id);
            } catch (const DataError& e) {
                if (!options.skip_corrupt) throw DataError("item '" + item.id + "': " + e.what());
                failures[i] = e.what();
            } catch (const NumericalError& e) {
                throw NumericalError("item '" + item.id + "': " + e.what());
            }
        }
        const std::size_t finished = ++done;
        if (options.progress) {
            std::lock_guard lock(progress_mutex);
            options.progress(finished, n);
        }
    });

    std::vector<CorpusItem> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!results[i]) {
            spdlog::warn("skipped '{}': {}", corpus.at(i).id, failures[i]);
            continue;
        }
        CorpusItem item = corpus.at(i);
        item.payload = std::move(*results[i]);
        items.push_back(std::move(item));
    }
    return LabeledCorpus(corpus.class_names(), std::move(items));
}

}  // namespace fsl
