#pragma once

#include "fsl/types.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace fsl {

/// Principal-component projection fitted on unlabeled activation vectors.
struct PcaTransform {
    Vector mean;         // (d_latent)
    Matrix components;   // (d_pca, d_latent), orthonormal rows
    Vector eigenvalues;  // (d_pca), non-increasing

    [[nodiscard]] int d_latent() const { return static_cast<int>(mean.size()); }
    [[nodiscard]] int d_pca() const { return static_cast<int>(components.rows()); }

    /// Rows of `samples` projected: (samples - mean) * components^T.
    [[nodiscard]] Matrix project(const Matrix& samples) const;
    /// Inverse of project() restricted to the retained subspace.
    [[nodiscard]] Matrix reconstruct(const Matrix& projected) const;
};

/// Fits PCA on sample rows via a symmetric eigendecomposition of the
/// 1/(n-1) covariance. Each component's largest-magnitude entry is positive.
/// Throws DataError when n <= d_pca and NumericalError when the covariance
/// rank is below d_pca.
PcaTransform fit_pca(const Matrix& samples, int d_pca);

/// k-means centroids ("words") in PCA space.
struct Vocabulary {
    Matrix words;  // (n_words, d_pca)

    [[nodiscard]] int n_words() const { return static_cast<int>(words.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(words.cols()); }
};

struct VocabularyOptions {
    int n_words = 128;
    int max_iters = 100;
    int restarts = 3;
    std::uint64_t seed = 0;
};

Vocabulary fit_vocabulary(const Matrix& reduced, const VocabularyOptions& options);

enum class EncodeMode {
    /// Inner-product response against every word, mean-pooled over locations.
    soft,
    /// Histogram of nearest-word assignments.
    hard,
};

std::string to_string(EncodeMode mode);
EncodeMode parse_encode_mode(const std::string& text);

/// Fitted PCA + vocabulary.
struct EncoderStack {
    PcaTransform pca;
    Vocabulary vocabulary;
    EncodeMode mode = EncodeMode::soft;
};

/// Signature of one activation set. Throws UsageError on dimension mismatch.
ImageSignature encode(const EmbeddingSet& emb, const PcaTransform& pca, const Vocabulary& vocab,
                      EncodeMode mode = EncodeMode::soft);

inline ImageSignature encode(const EmbeddingSet& emb, const EncoderStack& encoder) {
    return encode(emb, encoder.pca, encoder.vocabulary, encoder.mode);
}

/// Mean vocabulary response before normalisation (exposed for tests and
/// diagnostics).
Vector encode_unnormalized(const EmbeddingSet& emb, const PcaTransform& pca, const Vocabulary& vocab,
                           EncodeMode mode = EncodeMode::soft);

/// Stacks the activation vectors of several sets into one float64 matrix.
Matrix stack_vectors(std::span<const EmbeddingSet* const> sets);

}  // namespace fsl
