#include "fixtures.hpp"

#include "fsl/error.hpp"
#include "fsl/image.hpp"

#include <doctest.h>
#include <opencv2/core.hpp>

#include <cmath>
#include <fstream>

using namespace fsl;

TEST_CASE("224x224 input keeps its size and is standardised") {
    cv::Mat img(224, 224, CV_8UC3);
    cv::randu(img, 0, 256);
    const Standardization norm = Standardization::imagenet();
    const ImageTensor t = preprocess(img, 224, 224, norm);
    REQUIRE(t.height() == 224);
    REQUIRE(t.width() == 224);
    for (int y : {0, 100, 223}) {
        for (int x : {0, 57, 223}) {
            for (int c = 0; c < 3; ++c) {
                const double v = img.at<cv::Vec3b>(y, x)[c] / 255.0;
                CHECK(t.at(y, x, c) == doctest::Approx((v - norm.mean[c]) / norm.stddev[c]).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("constant 448x448 image maps to a constant 224x224 image") {
    const int v = 200;
    const cv::Mat img(448, 448, CV_8UC3, cv::Scalar(v, v, v));
    const Standardization norm = Standardization::imagenet();
    const ImageTensor t = preprocess(img, 224, 224, norm);
    REQUIRE(t.height() == 224);
    for (int c = 0; c < 3; ++c) {
        const double expected = (v / 255.0 - norm.mean[c]) / norm.stddev[c];
        for (int y = 0; y < 224; y += 37) {
            for (int x = 0; x < 224; x += 41) CHECK(t.at(y, x, c) == doctest::Approx(expected).epsilon(1e-6));
        }
    }
}

TEST_CASE("300x400 gradient matches an independent bilinear resampler") {
    const int h = 300, w = 400;
    cv::Mat img(h, w, CV_8UC3);
    oracle::Vec gray(static_cast<std::size_t>(h * w));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto v = static_cast<std::uint8_t>(std::lround(255.0 * (0.3 * x / (w - 1) + 0.7 * y / (h - 1))));
            img.at<cv::Vec3b>(y, x) = cv::Vec3b(v, v, v);
            gray[static_cast<std::size_t>(y * w + x)] = v / 255.0;
        }
    }
    for (const auto& [th, tw] : {std::pair{224, 224}, std::pair{600, 500}}) {
        const ImageTensor t = preprocess(img, th, tw, Standardization::identity());
        const oracle::Vec ref = oracle::bilinear_resize(gray, h, w, th, tw);
        double worst = 0.0;
        for (int y = 0; y < th; ++y) {
            for (int x = 0; x < tw; ++x) {
                worst = std::max(worst, std::abs(t.at(y, x, 1) - ref[static_cast<std::size_t>(y * tw + x)]));
            }
        }
        CHECK(worst < 1e-2);
    }
}

TEST_CASE("grayscale files are replicated to three channels") {
    fixture::TempDir dir("gray");
    cv::Mat g(10, 12, CV_8UC1, cv::Scalar(77));
    fixture::write_png(dir / "g.png", g);
    const cv::Mat rgb = decode_image(dir / "g.png");
    CHECK(rgb.channels() == 3);
    CHECK(rgb.at<cv::Vec3b>(5, 5) == cv::Vec3b(77, 77, 77));
    const ImageTensor t = preprocess_image({dir / "g.png", 224, 224}, Standardization::identity());
    CHECK(t.at(100, 100, 2) == doctest::Approx(77 / 255.0).epsilon(1e-6));
}

TEST_CASE("16-bit images are scaled by 1/65535") {
    const cv::Mat img(6, 6, CV_16UC3, cv::Scalar(65535, 0, 32768));
    const ImageTensor t = preprocess(img, 6, 6, Standardization::identity());
    CHECK(t.at(2, 2, 0) == doctest::Approx(1.0));
    CHECK(t.at(2, 2, 1) == doctest::Approx(0.0));
    CHECK(t.at(2, 2, 2) == doctest::Approx(32768.0 / 65535.0));
}

TEST_CASE("undecodable files raise a data error") {
    fixture::TempDir dir("bad");
    std::ofstream(dir / "x.png") << "garbage";
    CHECK_THROWS_AS(decode_image(dir / "x.png"), DataError);
    CHECK_THROWS_AS(decode_image(dir / "missing.png"), DataError);
}

TEST_CASE("crop and resize") {
    cv::Mat m(4, 6, CV_32FC3);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 6; ++x) m.at<cv::Vec3f>(y, x) = cv::Vec3f(static_cast<float>(y), static_cast<float>(x), 0.f);
    }
    const ImageTensor t(m);
    const ImageTensor c = t.crop(2, 1, 3, 2);
    CHECK(c.width() == 3);
    CHECK(c.height() == 2);
    CHECK(c.at(0, 0, 0) == 1.f);
    CHECK(c.at(1, 2, 1) == 4.f);
    CHECK_THROWS_AS(t.crop(4, 0, 3, 2), UsageError);
    CHECK(t.resized(8, 12).width() == 12);
}
