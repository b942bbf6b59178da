#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace fsl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Latent activations of one image: one row per spatial location.
struct EmbeddingSet {
    RowMatrixF vectors;  // (n_locations, d_latent)
    std::string source_id;

    [[nodiscard]] int n_locations() const { return static_cast<int>(vectors.rows()); }
    [[nodiscard]] int d_latent() const { return static_cast<int>(vectors.cols()); }
};

/// L2-normalised mean vocabulary response of one image.
struct ImageSignature {
    Vector r;
    std::string source_id;
    /// Set when the pre-normalisation vector was numerically zero; r is then all zeros.
    bool degenerate = false;
};

}  // namespace fsl
