#include "fsl/image.hpp"

#include "fsl/error.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace fsl {

ImageTensor::ImageTensor(cv::Mat data) : data_(std::move(data)) {
    if (!data_.empty() && data_.type() != CV_32FC3) {
        throw UsageError("ImageTensor expects CV_32FC3 data");
    }
}

ImageTensor ImageTensor::crop(int x, int y, int width, int height) const {
    if (x < 0 || y < 0 || x + width > this->width() || y + height > this->height()) {
        throw UsageError("crop rectangle outside the image");
    }
    return ImageTensor(data_(cv::Rect(x, y, width, height)).clone());
}

ImageTensor ImageTensor::resized(int height, int width) const {
    if (height == this->height() && width == this->width()) return ImageTensor(data_.clone());
    cv::Mat out;
    cv::resize(data_, out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    return ImageTensor(std::move(out));
}

cv::Mat decode_image(const std::filesystem::path& path) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw DataError("cannot decode image '" + path.string() + "'");
    cv::Mat rgb;
    switch (raw.channels()) {
        case 1: cv::cvtColor(raw, rgb, cv::COLOR_GRAY2RGB); break;
        case 3: cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB); break;
        case 4: cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB); break;
        default: throw DataError("unsupported channel count in '" + path.string() + "'");
    }
    return rgb;
}

ImageTensor preprocess(const cv::Mat& decoded, int height, int width, const Standardization& norm) {
    if (decoded.empty()) throw DataError("empty image");
    cv::Mat rgb = decoded;
    if (decoded.channels() == 1) cv::cvtColor(decoded, rgb, cv::COLOR_GRAY2RGB);
    if (rgb.channels() != 3) throw DataError("expected a grayscale or RGB image");

    double scale = 1.0;
    switch (rgb.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        case CV_32F: break;
        default: throw DataError("unsupported pixel depth");
    }
    cv::Mat unit;
    rgb.convertTo(unit, CV_32FC3, scale);

    cv::Mat sized;
    if (unit.rows == height && unit.cols == width) {
        sized = unit;
    } else {
        cv::resize(unit, sized, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    }

    cv::Mat out(height, width, CV_32FC3);
    for (int y = 0; y < height; ++y) {
        const float* src = sized.ptr<float>(y);
        float* dst = out.ptr<float>(y);
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                dst[x * 3 + c] = (src[x * 3 + c] - norm.mean[c]) / norm.stddev[c];
            }
        }
    }
    return ImageTensor(std::move(out));
}

ImageTensor preprocess_image(const ImageRef& ref, const Standardization& norm) {
    return preprocess(decode_image(ref.path), ref.height, ref.width, norm);
}

}  // namespace fsl
