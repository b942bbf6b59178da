#include "fsl/classifier.hpp"

#include "fsl/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace fsl {

std::string to_string(LdaRule rule) { return rule == LdaRule::nearest_mean ? "nearest_mean" : "posterior"; }

LdaRule parse_lda_rule(const std::string& text) {
    if (text == "nearest_mean" || text == "nearest-mean") return LdaRule::nearest_mean;
    if (text == "posterior") return LdaRule::posterior;
    throw UsageError("unknown LDA rule '" + text + "' (expected nearest_mean|posterior)");
}

int LdaModel::index_of(int class_label) const {
    const auto it = std::find(class_labels.begin(), class_labels.end(), class_label);
    if (it == class_labels.end()) throw UsageError("class " + std::to_string(class_label) + " not in LDA model");
    return static_cast<int>(it - class_labels.begin());
}

LdaModel fit_lda(std::span<const DistanceVector> features, std::span<const int> labels, const LdaOptions& options) {
    if (features.size() != labels.size()) throw UsageError("fit_lda: features and labels differ in length");
    if (features.empty()) throw DataError("fit_lda: no training samples");
    const Eigen::Index dim = features.front().d.size();

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].d.size() != dim) throw UsageError("fit_lda: inconsistent feature lengths");
        by_class[labels[i]].push_back(i);
    }
    if (by_class.size() < 2) {
        throw DataError("fit_lda: need at least 2 classes, got " + std::to_string(by_class.size()));
    }
    for (const auto& [label, members] : by_class) {
        if (members.size() < 2) {
            throw DataError("fit_lda: class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                            " sample(s), need at least 2");
        }
    }

    LdaModel model;
    model.rule = options.rule;
    const auto n_classes = static_cast<Eigen::Index>(by_class.size());
    model.class_means.resize(n_classes, dim);
    Matrix within = Matrix::Zero(dim, dim);
    Eigen::Index c = 0;
    for (const auto& [label, members] : by_class) {
        model.class_labels.push_back(label);
        Vector mean = Vector::Zero(dim);
        for (std::size_t i : members) mean += features[i].d;
        mean /= static_cast<double>(members.size());
        model.class_means.row(c) = mean.transpose();
        for (std::size_t i : members) {
            const Vector diff = features[i].d - mean;
            within.noalias() += diff * diff.transpose();
        }
        ++c;
    }
    model.priors = Vector::Constant(n_classes, 1.0 / static_cast<double>(n_classes));

    const double reg = options.reg ? *options.reg : options.relative_reg * within.trace() / static_cast<double>(dim);
    if (reg < 0.0) throw UsageError("fit_lda: negative regularisation");
    model.within_scatter_reg = reg;
    Matrix within_reg = within + reg * Matrix::Identity(dim, dim);
    within_reg = 0.5 * (within_reg + within_reg.transpose());

    Eigen::LLT<Matrix> llt(within_reg);
    const bool factorised = llt.info() == Eigen::Success &&
                            llt.matrixLLT().diagonal().minCoeff() > 1e-12 * llt.matrixLLT().diagonal().maxCoeff();
    if (!factorised) {
        throw NumericalError("fit_lda: within-class scatter is singular (reg=" + std::to_string(reg) +
                             "); increase the regularisation");
    }

    if (n_classes == 2) {
        const Vector direction = llt.solve((model.class_means.row(1) - model.class_means.row(0)).transpose());
        const double norm = direction.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("fit_lda: degenerate discriminant direction");
        model.weights = (direction / norm).transpose();
    } else {
        const Vector grand = model.class_means.colwise().mean().transpose();
        Matrix between = Matrix::Zero(dim, dim);
        for (Eigen::Index k = 0; k < n_classes; ++k) {
            const Vector diff = model.class_means.row(k).transpose() - grand;
            between.noalias() += diff * diff.transpose();
        }
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(between, within_reg);
        if (solver.info() != Eigen::Success) throw NumericalError("fit_lda: generalized eigenproblem failed");
        const Eigen::Index n_dirs = std::min<Eigen::Index>(n_classes - 1, dim);
        model.weights.resize(n_dirs, dim);
        for (Eigen::Index j = 0; j < n_dirs; ++j) {
            Vector v = solver.eigenvectors().col(dim - 1 - j);
            v.normalize();
            Eigen::Index largest = 0;
            v.cwiseAbs().maxCoeff(&largest);
            if (v(largest) < 0.0) v = -v;
            model.weights.row(j) = v.transpose();
        }
    }
    if (!model.weights.allFinite()) throw NumericalError("fit_lda: non-finite discriminant weights");

    const double dof = std::max<double>(1.0, static_cast<double>(features.size()) - static_cast<double>(n_classes));
    model.projected_covariance = model.weights * (within_reg / dof) * model.weights.transpose();
    return model;
}

std::vector<double> lda_posterior(const DistanceVector& query, const LdaModel& model) {
    if (query.d.size() != model.dim()) throw UsageError("lda_posterior: dimension mismatch");
    const Vector z = model.weights * query.d;
    const Matrix means = model.projected_means();
    Eigen::LLT<Matrix> llt(model.projected_covariance);
    if (llt.info() != Eigen::Success) throw NumericalError("lda_posterior: projected covariance not positive definite");
    std::vector<double> log_post(static_cast<std::size_t>(model.n_classes()));
    for (int k = 0; k < model.n_classes(); ++k) {
        const Vector diff = z - means.row(k).transpose();
        log_post[static_cast<std::size_t>(k)] = -0.5 * diff.dot(llt.solve(diff)) + std::log(model.priors(k));
    }
    const double top = *std::max_element(log_post.begin(), log_post.end());
    double total = 0.0;
    for (double& v : log_post) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : log_post) v /= total;
    return log_post;
}

Prediction classify(const DistanceVector& query, const LdaModel& model) {
    if (query.d.size() != model.dim()) {
        throw UsageError("classify: distance vector length " + std::to_string(query.d.size()) +
                         " does not match model dimension " + std::to_string(model.dim()));
    }
    Prediction pred;
    pred.query_id = query.query_id;
    pred.distances = query;

    const Vector z = model.weights * query.d;
    const Matrix means = model.projected_means();
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < model.n_classes(); ++k) {
        const double d = (z - means.row(k).transpose()).squaredNorm();
        if (d < best_dist) {
            best_dist = d;
            best = k;
        }
    }

    if (model.n_classes() == 2) {
        const double midpoint = 0.5 * (means(0, 0) + means(1, 0));
        pred.score = z(0) - midpoint;
        // Equivalent to nearest-mean; an exact midpoint goes to class index 0.
        best = pred.score > 0.0 ? 1 : 0;
    } else {
        pred.score = z(0);
    }

    if (model.rule == LdaRule::posterior) {
        pred.posterior = lda_posterior(query, model);
        best = static_cast<int>(std::max_element(pred.posterior.begin(), pred.posterior.end()) - pred.posterior.begin());
    }
    pred.predicted_label = model.class_labels[static_cast<std::size_t>(best)];
    return pred;
}

}  // namespace fsl
