#pragma once

#include "fsl/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fsl {

/// Appearance model of one class: sub-cluster centroids plus a shrunk
/// covariance shared by those centroids.
struct ClassSignature {
    int class_label = 0;
    Matrix centroids;   // (p, n_words)
    Matrix covariance;  // (n_words, n_words), SPD after regularisation
    Matrix precision;   // inverse of covariance
    double shrinkage_lambda = 0.0;

    /// Builds a signature from an already regularised covariance, computing
    /// the precision by Cholesky factorisation. Throws NumericalError when the
    /// covariance is not positive definite.
    static ClassSignature from_covariance(int class_label, Matrix centroids, Matrix covariance, double lambda);

    [[nodiscard]] int p() const { return static_cast<int>(centroids.rows()); }
    [[nodiscard]] int n_words() const { return static_cast<int>(covariance.rows()); }
};

struct Dictionary {
    std::vector<ClassSignature> signatures;  // ascending class_label
    int p = 1;
    int n_words = 0;

    [[nodiscard]] int n_classes() const { return static_cast<int>(signatures.size()); }
    [[nodiscard]] const ClassSignature& signature_for(int class_label) const;
    [[nodiscard]] std::vector<int> labels() const;
};

/// Mahalanobis distances of one query, ordered by (class, sub-cluster).
struct DistanceVector {
    Vector d;
    std::string query_id;
};

struct DictionaryOptions {
    int p = 1;
    double lambda = 0.5;
    std::uint64_t seed = 0;
    int kmeans_max_iters = 100;
    int kmeans_restarts = 3;
};

/// Shrinks S toward sigma^2 I with sigma^2 = trace(S)/n: (1-lambda) S + lambda sigma^2 I.
Matrix shrink_covariance(const Matrix& sample_cov, double lambda);

/// Unbiased (1/(n-1)) covariance of the rows of `samples`.
Matrix sample_covariance(const Matrix& samples);

/// Fits one ClassSignature per class present in `labels`. If the Cholesky
/// factorisation fails, lambda is raised to max(lambda, 0.1) once before
/// giving up with NumericalError.
Dictionary fit_dictionary(std::span<const ImageSignature> signatures, std::span<const int> labels,
                          const DictionaryOptions& options);

/// 0.5 (r - mu)^T Sigma^{-1} (r - mu) for each sub-centroid mu of the class.
Vector mahalanobis(const ImageSignature& query, const ClassSignature& sig);

/// Concatenation of mahalanobis() over classes in label order.
DistanceVector distance_vector(const ImageSignature& query, const Dictionary& dict);

}  // namespace fsl
