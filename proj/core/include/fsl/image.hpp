#pragma once

#include <opencv2/core.hpp>

#include <array>
#include <filesystem>

namespace fsl {

inline constexpr int kBackboneInputSize = 224;

/// Reference to an image on disk and the spatial size it is resampled to.
struct ImageRef {
    std::filesystem::path path;
    int height = kBackboneInputSize;
    int width = kBackboneInputSize;
};

/// Per-channel input standardisation, RGB order.
struct Standardization {
    std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
    std::array<float, 3> stddev{0.229f, 0.224f, 0.225f};

    /// ImageNet statistics published with the torchvision MobileNet weights.
    static Standardization imagenet() { return {}; }
    /// Pixels in [0,1], no further standardisation.
    static Standardization identity() { return {{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}}; }
};

/// Standardised float image, HWC, RGB, CV_32FC3.
class ImageTensor {
public:
    ImageTensor() = default;
    explicit ImageTensor(cv::Mat data);

    [[nodiscard]] int height() const { return data_.rows; }
    [[nodiscard]] int width() const { return data_.cols; }
    [[nodiscard]] int channels() const { return data_.channels(); }
    [[nodiscard]] float at(int y, int x, int c) const { return data_.ptr<float>(y)[x * 3 + c]; }
    [[nodiscard]] const cv::Mat& mat() const { return data_; }

    /// Copy of the rectangle at (x, y) with the given side length.
    [[nodiscard]] ImageTensor crop(int x, int y, int width, int height) const;
    /// Bilinear resample (half-pixel centres, edge clamped).
    [[nodiscard]] ImageTensor resized(int height, int width) const;

private:
    cv::Mat data_;
};

/// Decodes an image file to 8-bit RGB (grayscale is replicated to three
/// channels). Throws DataError if the file cannot be decoded.
cv::Mat decode_image(const std::filesystem::path& path);

/// Scales 8/16-bit pixels to [0,1], bilinear-resizes to (height, width) and
/// standardises each channel.
ImageTensor preprocess(const cv::Mat& decoded, int height, int width,
                       const Standardization& norm = Standardization::imagenet());

ImageTensor preprocess_image(const ImageRef& ref, const Standardization& norm = Standardization::imagenet());

}  // namespace fsl
