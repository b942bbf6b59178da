#pragma once

#include "fsl/dictionary.hpp"
#include "fsl/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fsl {

enum class LdaRule {
    /// Nearest class mean in the discriminant space (midpoint rule for C=2).
    nearest_mean,
    /// Gaussian posterior with a shared projected covariance and class priors.
    posterior,
};

std::string to_string(LdaRule rule);
LdaRule parse_lda_rule(const std::string& text);

/// Fisher discriminant over distance vectors.
struct LdaModel {
    std::vector<int> class_labels;  // ascending; index = class index
    Matrix weights;                 // (n_directions, dim); one row for C=2
    Matrix class_means;             // (C, dim), distance space
    Vector priors;                  // (C)
    double within_scatter_reg = 0.0;
    /// Within-class covariance in the projected space (for the posterior rule).
    Matrix projected_covariance;
    LdaRule rule = LdaRule::nearest_mean;

    [[nodiscard]] int n_classes() const { return static_cast<int>(class_labels.size()); }
    [[nodiscard]] int dim() const { return static_cast<int>(weights.cols()); }
    [[nodiscard]] Matrix projected_means() const { return class_means * weights.transpose(); }
    [[nodiscard]] int index_of(int class_label) const;
};

struct LdaOptions {
    /// Absolute ridge added to S_W. When unset, relative_reg * trace(S_W) / dim.
    std::optional<double> reg;
    double relative_reg = 1e-6;
    LdaRule rule = LdaRule::nearest_mean;
};

/// Fisher LDA: within-class scatter S_W (+ reg I), between-class scatter S_B
/// with uniform class weights, directions = top C-1 eigenvectors of
/// S_W^{-1} S_B. For C=2 the single direction is S_W^{-1}(mu_1 - mu_0),
/// normalised, so that class index 1 projects higher.
LdaModel fit_lda(std::span<const DistanceVector> features, std::span<const int> labels, const LdaOptions& options = {});

struct Prediction {
    std::string query_id;
    int predicted_label = 0;
    /// C=2: signed distance from the projected-means midpoint along the
    /// discriminant, positive => the larger class label. C>2: first
    /// discriminant coordinate.
    double score = 0.0;
    DistanceVector distances;
    /// Only filled for LdaRule::posterior.
    std::vector<double> posterior;
};

/// Projects the query and assigns the nearest projected class mean; ties
/// go to the lower label.
Prediction classify(const DistanceVector& query, const LdaModel& model);

/// Gaussian posterior over classes in the projected space.
std::vector<double> lda_posterior(const DistanceVector& query, const LdaModel& model);

}  // namespace fsl
