#include "fsl/encoding.hpp"

#include "fsl/error.hpp"
#include "fsl/kmeans.hpp"

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <limits>
#include <set>
#include <vector>

namespace fsl {

namespace {

constexpr double kZeroNorm = 1e-12;

}  // namespace

Matrix PcaTransform::project(const Matrix& samples) const {
    return (samples.rowwise() - mean.transpose()) * components.transpose();
}

Matrix PcaTransform::reconstruct(const Matrix& projected) const {
    return (projected * components).rowwise() + mean.transpose();
}

PcaTransform fit_pca(const Matrix& samples, int d_pca) {
    const Eigen::Index n = samples.rows();
    const Eigen::Index d = samples.cols();
    if (d_pca < 1) throw UsageError("fit_pca: d_pca must be >= 1");
    if (d_pca > d) {
        throw UsageError("fit_pca: d_pca=" + std::to_string(d_pca) + " exceeds the latent dimension " + std::to_string(d));
    }
    if (n <= d_pca) {
        throw DataError("fit_pca: need more than d_pca=" + std::to_string(d_pca) + " samples, got " + std::to_string(n));
    }
    if (!samples.allFinite()) throw DataError("fit_pca: non-finite samples");

    PcaTransform pca;
    pca.mean = samples.colwise().mean().transpose();
    const Matrix centered = samples.rowwise() - pca.mean.transpose();
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    cov = 0.5 * (cov + cov.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericalError("fit_pca: eigendecomposition failed");

    // Eigen returns ascending eigenvalues.
    const Vector& values = solver.eigenvalues();
    const Matrix& vectors = solver.eigenvectors();
    pca.components.resize(d_pca, d);
    pca.eigenvalues.resize(d_pca);
    for (int j = 0; j < d_pca; ++j) {
        const Eigen::Index src = d - 1 - j;
        double lambda = values(src);
        if (lambda < 0.0) {
            if (lambda < -1e-10) throw NumericalError("fit_pca: negative covariance eigenvalue");
            lambda = 0.0;
        }
        pca.eigenvalues(j) = lambda;
        Vector v = vectors.col(src);
        Eigen::Index largest = 0;
        v.cwiseAbs().maxCoeff(&largest);
        if (v(largest) < 0.0) v = -v;
        pca.components.row(j) = v.transpose();
    }

    const double top = std::max(pca.eigenvalues(0), std::numeric_limits<double>::min());
    if (pca.eigenvalues(d_pca - 1) <= 1e-12 * top) {
        int rank = 0;
        for (Eigen::Index i = 0; i < d; ++i) {
            if (values(i) > 1e-12 * top) ++rank;
        }
        throw NumericalError("fit_pca: covariance rank " + std::to_string(rank) + " is below d_pca=" +
                             std::to_string(d_pca) + " (reduce d_pca)");
    }
    return pca;
}

Vocabulary fit_vocabulary(const Matrix& reduced, const VocabularyOptions& options) {
    if (options.n_words < 2) throw UsageError("fit_vocabulary: n_words must be >= 2");
    if (reduced.rows() < options.n_words) {
        throw DataError("fit_vocabulary: " + std::to_string(reduced.rows()) + " vectors for n_words=" +
                        std::to_string(options.n_words));
    }
    KMeansOptions km;
    km.k = options.n_words;
    km.max_iters = options.max_iters;
    km.restarts = options.restarts;
    km.seed = options.seed;
    km.allow_duplicate_centroids = false;
    const KMeansResult result = kmeans(reduced, km);
    if (!result.converged) {
        spdlog::debug("vocabulary k-means stopped at max_iters={} (inertia {:.6g})", options.max_iters, result.inertia);
    }
    return Vocabulary{result.centroids};
}

std::string to_string(EncodeMode mode) { return mode == EncodeMode::soft ? "soft" : "hard"; }

EncodeMode parse_encode_mode(const std::string& text) {
    if (text == "soft") return EncodeMode::soft;
    if (text == "hard") return EncodeMode::hard;
    throw UsageError("unknown encode mode '" + text + "' (expected soft|hard)");
}

Vector encode_unnormalized(const EmbeddingSet& emb, const PcaTransform& pca, const Vocabulary& vocab, EncodeMode mode) {
    if (emb.d_latent() != pca.d_latent()) {
        throw UsageError("encode: embedding dimension " + std::to_string(emb.d_latent()) +
                         " does not match PCA input dimension " + std::to_string(pca.d_latent()));
    }
    if (vocab.dim() != pca.d_pca()) {
        throw UsageError("encode: vocabulary dimension " + std::to_string(vocab.dim()) +
                         " does not match PCA output dimension " + std::to_string(pca.d_pca()));
    }
    if (emb.n_locations() < 1) throw UsageError("encode: empty embedding set");

    const Matrix reduced = pca.project(emb.vectors.cast<double>());
    if (mode == EncodeMode::soft) {
        const Matrix response = reduced * vocab.words.transpose();  // (n_locations, n_words)
        return response.colwise().mean().transpose();
    }

    Vector histogram = Vector::Zero(vocab.n_words());
    for (Eigen::Index i = 0; i < reduced.rows(); ++i) {
        Eigen::Index best = 0;
        (vocab.words.rowwise() - reduced.row(i)).rowwise().squaredNorm().minCoeff(&best);
        histogram(best) += 1.0;
    }
    return histogram / static_cast<double>(reduced.rows());
}

ImageSignature encode(const EmbeddingSet& emb, const PcaTransform& pca, const Vocabulary& vocab, EncodeMode mode) {
    ImageSignature sig;
    sig.source_id = emb.source_id;
    Vector mean_response = encode_unnormalized(emb, pca, vocab, mode);
    const double norm = mean_response.norm();
    if (norm < kZeroNorm) {
        spdlog::warn("signature of '{}' is numerically zero; using the zero vector", emb.source_id);
        sig.r = Vector::Zero(mean_response.size());
        sig.degenerate = true;
    } else {
        sig.r = mean_response / norm;
    }
    return sig;
}

Matrix stack_vectors(std::span<const EmbeddingSet* const> sets) {
    Eigen::Index rows = 0;
    Eigen::Index cols = -1;
    for (const auto* s : sets) {
        rows += s->vectors.rows();
        if (cols < 0) cols = s->vectors.cols();
        if (cols != s->vectors.cols()) throw DataError("stack_vectors: inconsistent latent dimensions");
    }
    Matrix out(rows, std::max<Eigen::Index>(cols, 0));
    Eigen::Index at = 0;
    for (const auto* s : sets) {
        out.middleRows(at, s->vectors.rows()) = s->vectors.cast<double>();
        at += s->vectors.rows();
    }
    return out;
}

}  // namespace fsl
