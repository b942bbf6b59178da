#pragma once

#include <span>
#include <utility>
#include <vector>

namespace fsl {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // +inf for the (0,0) anchor
};

/// Points are ordered by decreasing threshold, so FPR and TPR are
/// non-decreasing along the vector; first = (0,0), last = (1,1).
struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;

    /// TPR at a given FPR by linear interpolation; at a vertical step the
    /// upper value is returned.
    [[nodiscard]] double tpr_at(double fpr) const;
};

struct ScoredLabel {
    double score = 0.0;
    bool positive = false;
};

/// Sweeps every distinct score as a threshold (score >= t => positive).
/// Equal scores form one step, so ties contribute half credit to the
/// trapezoidal AUC. Throws DataError when only one class is present.
RocCurve roc(std::span<const ScoredLabel> scores);

struct OperatingPoint {
    double threshold = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
};

/// Point maximising Youden's J = TPR - FPR (first, i.e. highest threshold, on ties).
OperatingPoint youden_point(const RocCurve& curve);

/// Vertical average of several curves on an evenly spaced FPR grid.
std::vector<std::pair<double, double>> vertical_average(std::span<const RocCurve> curves, int grid_points = 101);

}  // namespace fsl
