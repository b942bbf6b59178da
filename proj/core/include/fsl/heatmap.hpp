#pragma once

#include "fsl/embedding.hpp"
#include "fsl/image.hpp"
#include "fsl/pipeline.hpp"

#include <opencv2/core.hpp>

#include <string>
#include <vector>

namespace fsl {

struct Patch {
    int row = 0;
    int col = 0;
    int x = 0;  // top-left corner in image pixels
    int y = 0;
    ImageTensor pixels;  // patch_size x patch_size crop
};

struct GridShape {
    int rows = 0;
    int cols = 0;
};

/// (floor((H - patch) / stride) + 1) x (floor((W - patch) / stride) + 1).
GridShape grid_shape(int height, int width, int patch_size, int stride);

/// Row-major patches plus the geometry they were cut with.
struct PatchGrid {
    GridShape shape;
    int patch_size = 0;
    int stride = 0;
    int image_height = 0;
    int image_width = 0;
    std::vector<Patch> patches;
};

/// Row-major crops of the image. Throws UsageError when the patch is larger
/// than the image or stride < 1.
PatchGrid patch_grid(const ImageTensor& image, int patch_size, int stride);

/// Per-patch distance to one class signature.
struct HeatmapGrid {
    int rows = 0;
    int cols = 0;
    int patch_size = 0;
    int stride = 0;
    int image_height = 0;
    int image_width = 0;
    Matrix values;  // raw min Mahalanobis distance per patch
    double norm_min = 0.0;
    double norm_max = 0.0;

    /// (v - min) / (max - min); a constant grid maps to 0.5 everywhere.
    [[nodiscard]] Matrix normalized() const;
    /// 1 - normalized(): hotter = closer to the class signature.
    [[nodiscard]] Matrix heat() const;
};

/// Builds a grid from raw values, setting the min-max normalisation.
HeatmapGrid make_grid(Matrix values, int patch_size, int stride, int image_height, int image_width);

/// Embeds each patch (upscaled to the backbone input size), encodes it and
/// takes the minimum Mahalanobis distance over the target class's
/// sub-centroids.
HeatmapGrid score_patches(const PatchGrid& patches, const FittedModel& model, const Embedder& embedder,
                          int target_class, int threads = 1);

/// Red-hot colour for a heat value in [0, 1]: black -> red -> yellow -> white.
cv::Vec3b hot_colour(double heat);

/// Alpha-blends the per-patch heat colour over the grayscale base image.
/// Each output pixel takes the patch whose centre is nearest (per axis) in
/// grid coordinates. Returns an 8-bit RGBA image the size of `base`.
cv::Mat render(const HeatmapGrid& grid, const cv::Mat& base, double alpha);

/// PNG encoding of an RGBA image (deterministic bytes).
Bytes encode_png(const cv::Mat& rgba);

std::string heatmap_json(const HeatmapGrid& grid, const std::string& class_name, double alpha);

}  // namespace fsl
