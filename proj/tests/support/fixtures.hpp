#pragma once

#include "fsl/ingestion.hpp"
#include "fsl/rng.hpp"
#include "fsl/types.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fixture {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::filesystem::path data_dir();
std::filesystem::path tiny_backbone();

oracle::Mat to_rows(const fsl::Matrix& m);
oracle::Vec to_vec(const fsl::Vector& v);
fsl::Matrix from_rows(const oracle::Mat& rows);

fsl::Matrix gaussian_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0);
fsl::EmbeddingSet gaussian_embedding(const std::string& id, int n_locations, int d_latent, std::uint64_t seed,
                                     double offset = 0.0);

/// C classes x n items of Gaussian embeddings; class c is shifted by
/// c * shift along every coordinate.
fsl::LabeledCorpus gaussian_corpus(int n_classes, int per_class, int n_locations, int d_latent, double shift,
                                   std::uint64_t seed);

/// Writes a PNG (8-bit RGB input) to disk.
void write_png(const std::filesystem::path& path, const cv::Mat& rgb);

}  // namespace fixture
