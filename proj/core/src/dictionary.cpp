#include "fsl/dictionary.hpp"

#include "fsl/error.hpp"
#include "fsl/kmeans.hpp"
#include "fsl/rng.hpp"

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace fsl {

ClassSignature ClassSignature::from_covariance(int class_label, Matrix centroids, Matrix covariance, double lambda) {
    if (covariance.rows() != covariance.cols()) throw UsageError("covariance must be square");
    if (centroids.cols() != covariance.rows()) throw UsageError("centroid and covariance dimensions differ");
    ClassSignature sig;
    sig.class_label = class_label;
    sig.centroids = std::move(centroids);
    sig.covariance = 0.5 * (covariance + covariance.transpose());
    sig.shrinkage_lambda = lambda;

    Eigen::LLT<Matrix> llt(sig.covariance);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("covariance of class " + std::to_string(class_label) + " is not positive definite");
    }
    const Matrix& l = llt.matrixLLT();
    const double min_pivot = l.diagonal().minCoeff();
    const double max_pivot = l.diagonal().maxCoeff();
    if (!(min_pivot > 1e-12 * max_pivot)) {
        throw NumericalError("covariance of class " + std::to_string(class_label) + " is numerically singular");
    }
    Matrix precision = llt.solve(Matrix::Identity(sig.covariance.rows(), sig.covariance.cols()));
    sig.precision = 0.5 * (precision + precision.transpose());
    if (!sig.precision.allFinite()) {
        throw NumericalError("precision of class " + std::to_string(class_label) + " is not finite");
    }
    return sig;
}

const ClassSignature& Dictionary::signature_for(int class_label) const {
    for (const auto& s : signatures) {
        if (s.class_label == class_label) return s;
    }
    throw UsageError("class " + std::to_string(class_label) + " is not in the dictionary");
}

std::vector<int> Dictionary::labels() const {
    std::vector<int> out;
    for (const auto& s : signatures) out.push_back(s.class_label);
    return out;
}

Matrix sample_covariance(const Matrix& samples) {
    if (samples.rows() < 2) throw DataError("covariance needs at least 2 samples");
    const Matrix centered = samples.rowwise() - samples.colwise().mean();
    Matrix cov = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
    return 0.5 * (cov + cov.transpose());
}

Matrix shrink_covariance(const Matrix& sample_cov, double lambda) {
    const auto n = sample_cov.rows();
    const double sigma2 = sample_cov.trace() / static_cast<double>(n);
    return (1.0 - lambda) * sample_cov + lambda * sigma2 * Matrix::Identity(n, n);
}

Dictionary fit_dictionary(std::span<const ImageSignature> signatures, std::span<const int> labels,
                          const DictionaryOptions& options) {
    if (signatures.size() != labels.size()) throw UsageError("fit_dictionary: signatures and labels differ in length");
    if (signatures.empty()) throw DataError("fit_dictionary: no support signatures");
    if (options.p < 1) throw UsageError("fit_dictionary: p must be >= 1");
    if (!(options.lambda >= 0.0 && options.lambda <= 1.0)) throw UsageError("fit_dictionary: lambda must be in [0, 1]");

    const auto n_words = signatures.front().r.size();
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < signatures.size(); ++i) {
        if (signatures[i].r.size() != n_words) throw UsageError("fit_dictionary: inconsistent signature lengths");
        by_class[labels[i]].push_back(i);
    }

    Dictionary dict;
    dict.p = options.p;
    dict.n_words = static_cast<int>(n_words);
    for (const auto& [label, members] : by_class) {
        if (members.size() < 2) {
            throw DataError("fit_dictionary: class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                            " support item(s), need at least 2");
        }
        if (members.size() < static_cast<std::size_t>(options.p)) {
            throw DataError("fit_dictionary: class " + std::to_string(label) + " has fewer supports than p=" +
                            std::to_string(options.p));
        }
        Matrix samples(static_cast<Eigen::Index>(members.size()), n_words);
        for (std::size_t i = 0; i < members.size(); ++i) samples.row(static_cast<Eigen::Index>(i)) = signatures[members[i]].r.transpose();

        Matrix centroids;
        if (options.p == 1) {
            centroids = samples.colwise().mean();
        } else {
            KMeansOptions km;
            km.k = options.p;
            km.max_iters = options.kmeans_max_iters;
            km.restarts = options.kmeans_restarts;
            km.seed = mix_seed(options.seed, static_cast<std::uint64_t>(label));
            km.allow_duplicate_centroids = true;
            centroids = kmeans(samples, km).centroids;
        }

        const Matrix raw = sample_covariance(samples);
        double lambda = options.lambda;
        try {
            dict.signatures.push_back(ClassSignature::from_covariance(label, centroids, shrink_covariance(raw, lambda), lambda));
        } catch (const NumericalError&) {
            const double escalated = std::max(lambda, 0.1);
            if (escalated == lambda) throw;
            spdlog::warn("class {} covariance not positive definite at lambda={}; retrying with lambda={}", label, lambda,
                         escalated);
            lambda = escalated;
            dict.signatures.push_back(ClassSignature::from_covariance(label, centroids, shrink_covariance(raw, lambda), lambda));
        }
    }
    return dict;
}

Vector mahalanobis(const ImageSignature& query, const ClassSignature& sig) {
    if (query.r.size() != sig.n_words()) {
        throw UsageError("mahalanobis: query length " + std::to_string(query.r.size()) + " does not match " +
                         std::to_string(sig.n_words()));
    }
    Vector out(sig.p());
    for (int j = 0; j < sig.p(); ++j) {
        const Vector diff = query.r - sig.centroids.row(j).transpose();
        const double value = 0.5 * diff.dot(sig.precision * diff);
        if (!std::isfinite(value)) {
            throw NumericalError("non-finite Mahalanobis distance for '" + query.source_id + "' (corrupted precision?)");
        }
        out(j) = std::max(0.0, value);
    }
    return out;
}

DistanceVector distance_vector(const ImageSignature& query, const Dictionary& dict) {
    if (dict.signatures.empty()) throw UsageError("distance_vector: empty dictionary");
    DistanceVector dv;
    dv.query_id = query.source_id;
    dv.d.resize(static_cast<Eigen::Index>(dict.signatures.size()) * dict.p);
    Eigen::Index at = 0;
    for (const auto& sig : dict.signatures) {
        dv.d.segment(at, sig.p()) = mahalanobis(query, sig);
        at += sig.p();
    }
    return dv;
}

}  // namespace fsl
