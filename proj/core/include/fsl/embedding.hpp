#pragma once

#include "fsl/image.hpp"
#include "fsl/ingestion.hpp"
#include "fsl/types.hpp"

#include <opencv2/dnn.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

namespace fsl {

/// Maps a preprocessed image to its latent activation set.
class Embedder {
public:
    virtual ~Embedder() = default;

    [[nodiscard]] virtual EmbeddingSet embed(const ImageTensor& image, const std::string& source_id) const = 0;
    [[nodiscard]] virtual int n_locations() const = 0;
    [[nodiscard]] virtual int d_latent() const = 0;
    [[nodiscard]] virtual int input_size() const { return kBackboneInputSize; }
    [[nodiscard]] virtual Standardization standardization() const { return Standardization::imagenet(); }
};

/// Which activations to extract. An empty layer selects the last layer
/// with a spatial (H, W > 1) output, i.e. the final convolutional feature map.
struct TapSpec {
    std::string layer;
    bool pooled = false;

    /// Parses "LAYER", "pooled" or "LAYER:pooled".
    static TapSpec parse(const std::string& text);
    [[nodiscard]] std::string to_string() const;
};

/// Pretrained convolutional network loaded from an ONNX file.
///
/// Inference goes through OpenCV's dnn module; calls to embed() are
/// serialised internally, so one handle may be shared between threads.
class OnnxBackbone final : public Embedder {
public:
    static std::unique_ptr<OnnxBackbone> load(const std::filesystem::path& model_path, const TapSpec& tap,
                                              int input_size = kBackboneInputSize,
                                              Standardization norm = Standardization::imagenet());

    [[nodiscard]] EmbeddingSet embed(const ImageTensor& image, const std::string& source_id) const override;
    [[nodiscard]] int n_locations() const override { return n_locations_; }
    [[nodiscard]] int d_latent() const override { return d_latent_; }
    [[nodiscard]] int input_size() const override { return input_size_; }
    [[nodiscard]] Standardization standardization() const override { return norm_; }
    [[nodiscard]] const std::string& tap_layer() const { return layer_; }
    [[nodiscard]] const std::filesystem::path& model_path() const { return model_path_; }

private:
    OnnxBackbone() = default;

    mutable std::mutex mutex_;
    mutable cv::dnn::Net net_;
    std::filesystem::path model_path_;
    std::string layer_;
    bool pooled_ = false;
    int input_size_ = kBackboneInputSize;
    int n_locations_ = 0;
    int d_latent_ = 0;
    int grid_h_ = 0;
    int grid_w_ = 0;
    Standardization norm_;
};

struct EmbedOptions {
    bool skip_corrupt = false;
    int threads = 1;
    /// Called after each item with (done, total).
    std::function<void(std::size_t, std::size_t)> progress;
};

/// Embeds every ImageRef payload of the corpus, preserving item order.
LabeledCorpus embed_corpus(const Embedder& embedder, const LabeledCorpus& corpus, const EmbedOptions& options = {});

}  // namespace fsl
