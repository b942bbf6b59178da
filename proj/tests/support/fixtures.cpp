#include "fixtures.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <atomic>
#include <chrono>
#include <stdexcept>

namespace fixture {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("fsl_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::filesystem::path data_dir() { return FSL_TEST_DATA_DIR; }
std::filesystem::path tiny_backbone() { return data_dir() / "tiny_backbone.onnx"; }

oracle::Mat to_rows(const fsl::Matrix& m) {
    oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
    return out;
}

oracle::Vec to_vec(const fsl::Vector& v) { return {v.data(), v.data() + v.size()}; }

fsl::Matrix from_rows(const oracle::Mat& rows) {
    fsl::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

fsl::Matrix gaussian_matrix(int rows, int cols, std::uint64_t seed, double scale) {
    fsl::Rng rng(seed);
    fsl::Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    }
    return m;
}

fsl::EmbeddingSet gaussian_embedding(const std::string& id, int n_locations, int d_latent, std::uint64_t seed,
                                     double offset) {
    fsl::EmbeddingSet e;
    e.vectors = (gaussian_matrix(n_locations, d_latent, seed).array() + offset).cast<float>();
    e.source_id = id;
    return e;
}

fsl::LabeledCorpus gaussian_corpus(int n_classes, int per_class, int n_locations, int d_latent, double shift,
                                   std::uint64_t seed) {
    std::vector<std::string> names;
    std::vector<fsl::CorpusItem> items;
    for (int c = 0; c < n_classes; ++c) {
        names.push_back("c" + std::to_string(c));
        for (int i = 0; i < per_class; ++i) {
            fsl::CorpusItem item;
            item.id = names.back() + "/" + std::to_string(i);
            item.label = c;
            item.payload = gaussian_embedding(item.id, n_locations, d_latent,
                                              fsl::mix_seed(seed, static_cast<std::uint64_t>(c * 100000 + i)), c * shift);
            items.push_back(std::move(item));
        }
    }
    return {std::move(names), std::move(items)};
}

void write_png(const std::filesystem::path& path, const cv::Mat& rgb) {
    cv::Mat out;
    if (rgb.channels() == 3) cv::cvtColor(rgb, out, cv::COLOR_RGB2BGR);
    else out = rgb;
    if (!cv::imwrite(path.string(), out)) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace fixture
