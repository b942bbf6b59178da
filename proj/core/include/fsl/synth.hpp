#pragma once

#include "fsl/ingestion.hpp"

#include <opencv2/core.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fsl {

/// Gaussian embedding corpus with controlled class overlap.
///
/// Every location vector of an item is
///   shared mean + separation * class direction + nuisance + item jitter + location noise
/// where the nuisance lies in a low-rank subspace with a large spread and is
/// drawn once per item. Classes differ only along unit directions that are
/// small next to the nuisance, so a good covariance estimate (more shots)
/// is what separates them.
struct SynthOptions {
    int n_classes = 3;
    int items_per_class = 400;
    int n_locations = 16;
    int d_latent = 128;
    int nuisance_rank = 8;
    double separation = 1.75;
    double nuisance_scale = 2.0;
    double item_jitter = 0.35;
    double location_noise = 1.0;
    std::uint64_t seed = 7;
    std::vector<std::string> class_names;  // default class_0, class_1, ...
};

LabeledCorpus synth_corpus(const SynthOptions& options);

/// Stationary 8-bit RGB textures used for the heat map tests.
enum class Texture { background, target };

cv::Mat texture_image(Texture texture, int height, int width, std::uint64_t seed);

/// A background image with one quadrant (0 = top-left, 1 = top-right,
/// 2 = bottom-left, 3 = bottom-right) filled with the target texture.
cv::Mat planted_image(int size, int quadrant, std::uint64_t seed);

/// Writes an image-folder corpus with classes "background" and "target",
/// each holding `per_class` PNG textures of side `size`.
void write_texture_corpus(const std::filesystem::path& root, int per_class, int size, std::uint64_t seed);

}  // namespace fsl
