#include "fsl/heatmap.hpp"

#include "fsl/error.hpp"
#include "fsl/parallel.hpp"

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

namespace fsl {

GridShape grid_shape(int height, int width, int patch_size, int stride) {
    if (stride < 1) throw UsageError("stride must be >= 1");
    if (patch_size < 1 || patch_size > height || patch_size > width) {
        throw UsageError("patch size " + std::to_string(patch_size) + " larger than the image (" +
                         std::to_string(height) + "x" + std::to_string(width) + ")");
    }
    return {(height - patch_size) / stride + 1, (width - patch_size) / stride + 1};
}

PatchGrid patch_grid(const ImageTensor& image, int patch_size, int stride) {
    const GridShape shape = grid_shape(image.height(), image.width(), patch_size, stride);
    PatchGrid grid{shape, patch_size, stride, image.height(), image.width(), {}};
    auto& patches = grid.patches;
    patches.reserve(static_cast<std::size_t>(shape.rows * shape.cols));
    for (int r = 0; r < shape.rows; ++r) {
        for (int c = 0; c < shape.cols; ++c) {
            Patch p;
            p.row = r;
            p.col = c;
            p.x = c * stride;
            p.y = r * stride;
            p.pixels = image.crop(p.x, p.y, patch_size, patch_size);
            patches.push_back(std::move(p));
        }
    }
    return grid;
}

Matrix HeatmapGrid::normalized() const {
    const double span = norm_max - norm_min;
    if (!(span > 0.0)) return Matrix::Constant(values.rows(), values.cols(), 0.5);
    return (values.array() - norm_min) / span;
}

Matrix HeatmapGrid::heat() const { return (1.0 - normalized().array()).matrix(); }

HeatmapGrid make_grid(Matrix values, int patch_size, int stride, int image_height, int image_width) {
    if (values.size() < 1) throw UsageError("empty heat map grid");
    if (!values.allFinite()) throw NumericalError("non-finite heat map values");
    HeatmapGrid g;
    g.rows = static_cast<int>(values.rows());
    g.cols = static_cast<int>(values.cols());
    g.patch_size = patch_size;
    g.stride = stride;
    g.image_height = image_height;
    g.image_width = image_width;
    g.norm_min = values.minCoeff();
    g.norm_max = values.maxCoeff();
    g.values = std::move(values);
    return g;
}

HeatmapGrid score_patches(const PatchGrid& grid, const FittedModel& model, const Embedder& embedder,
                          int target_class, int threads) {
    if (grid.patches.empty()) throw UsageError("score_patches: no patches");
    const ClassSignature& sig = model.dictionary.signature_for(target_class);
    Matrix values = Matrix::Constant(grid.shape.rows, grid.shape.cols, std::nan(""));
    const int size = embedder.input_size();
    parallel_for(grid.patches.size(), threads, [&](std::size_t i) {
        const Patch& p = grid.patches[i];
        const std::string id = "patch(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
        try {
            const EmbeddingSet emb = embedder.embed(p.pixels.resized(size, size), id);
            values(p.row, p.col) = mahalanobis(signature_of(model, emb), sig).minCoeff();
        } catch (const DataError& e) {
            throw DataError(id + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError(id + ": " + e.what());
        }
    });
    return make_grid(std::move(values), grid.patch_size, grid.stride, grid.image_height, grid.image_width);
}

cv::Vec3b hot_colour(double heat) {
    const double h = std::clamp(heat, 0.0, 1.0);
    auto channel = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    return {channel(3.0 * h), channel(3.0 * h - 1.0), channel(3.0 * h - 2.0)};  // R, G, B
}

cv::Mat render(const HeatmapGrid& grid, const cv::Mat& base, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must be in [0, 1]");
    if (base.empty()) throw UsageError("render: empty base image");
    cv::Mat gray;
    if (base.channels() == 1) gray = base;
    else if (base.channels() == 3) cv::cvtColor(base, gray, cv::COLOR_RGB2GRAY);
    else if (base.channels() == 4) cv::cvtColor(base, gray, cv::COLOR_RGBA2GRAY);
    else throw UsageError("render: unsupported base image");
    if (gray.depth() != CV_8U) throw UsageError("render: base image must be 8-bit");

    const Matrix heat = grid.heat();
    std::vector<cv::Vec3b> colours(static_cast<std::size_t>(grid.rows * grid.cols));
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) colours[static_cast<std::size_t>(r * grid.cols + c)] = hot_colour(heat(r, c));
    }

    // Nearest patch centre along one axis, in grid (preprocessed image) coordinates.
    auto nearest = [&](int pixel, int base_extent, int grid_extent, int cells) {
        const double pos = (pixel + 0.5) * static_cast<double>(grid_extent) / base_extent - 0.5;
        const double idx = (pos - (grid.patch_size - 1) / 2.0) / grid.stride;
        return std::clamp(static_cast<int>(std::lround(idx)), 0, cells - 1);
    };
    std::vector<int> row_of(static_cast<std::size_t>(gray.rows));
    std::vector<int> col_of(static_cast<std::size_t>(gray.cols));
    for (int y = 0; y < gray.rows; ++y) row_of[static_cast<std::size_t>(y)] = nearest(y, gray.rows, grid.image_height, grid.rows);
    for (int x = 0; x < gray.cols; ++x) col_of[static_cast<std::size_t>(x)] = nearest(x, gray.cols, grid.image_width, grid.cols);

    cv::Mat out(gray.rows, gray.cols, CV_8UC4);
    for (int y = 0; y < gray.rows; ++y) {
        const std::uint8_t* src = gray.ptr<std::uint8_t>(y);
        cv::Vec4b* dst = out.ptr<cv::Vec4b>(y);
        for (int x = 0; x < gray.cols; ++x) {
            const cv::Vec3b& colour = colours[static_cast<std::size_t>(row_of[static_cast<std::size_t>(y)] * grid.cols +
                                                                        col_of[static_cast<std::size_t>(x)])];
            for (int ch = 0; ch < 3; ++ch) {
                const double v = (1.0 - alpha) * src[x] + alpha * colour[ch];
                dst[x][ch] = static_cast<std::uint8_t>(std::lround(v));
            }
            dst[x][3] = 255;
        }
    }
    return out;
}

Bytes encode_png(const cv::Mat& rgba) {
    cv::Mat bgra;
    cv::cvtColor(rgba, bgra, cv::COLOR_RGBA2BGRA);
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", bgra, buf)) throw DataError("PNG encoding failed");
    return buf;
}

std::string heatmap_json(const HeatmapGrid& grid, const std::string& class_name, double alpha) {
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    nlohmann::ordered_json normalized = nlohmann::ordered_json::array();
    const Matrix norm = grid.normalized();
    for (int r = 0; r < grid.rows; ++r) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        nlohmann::ordered_json nrow = nlohmann::ordered_json::array();
        for (int c = 0; c < grid.cols; ++c) {
            row.push_back(grid.values(r, c));
            nrow.push_back(norm(r, c));
        }
        values.push_back(std::move(row));
        normalized.push_back(std::move(nrow));
    }
    nlohmann::ordered_json out{
        {"class", class_name},
        {"rows", grid.rows},
        {"cols", grid.cols},
        {"patch_size", grid.patch_size},
        {"stride", grid.stride},
        {"alpha", alpha},
        {"normalization", {{"method", "min-max per image"}, {"min", grid.norm_min}, {"max", grid.norm_max}}},
        {"colormap", "hot on (1 - normalized distance)"},
        {"values", std::move(values)},
        {"normalized", std::move(normalized)},
    };
    return out.dump(2) + "\n";
}

}  // namespace fsl
