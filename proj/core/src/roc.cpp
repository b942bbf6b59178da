#include "fsl/roc.hpp"

#include "fsl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsl {

RocCurve roc(std::span<const ScoredLabel> scores) {
    std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
    std::size_t n_pos = 0;
    for (const auto& s : sorted) {
        if (!std::isfinite(s.score)) throw DataError("roc: non-finite score");
        n_pos += s.positive ? 1 : 0;
    }
    const std::size_t n_neg = sorted.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("roc: both positive and negative labels are required");

    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    // Trapezoids accumulated in integer counts, normalised once at the end.
    double area = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const std::size_t prev_tp = tp;
        const std::size_t prev_fp = fp;
        const double threshold = sorted[i].score;
        while (i < sorted.size() && sorted[i].score == threshold) {
            (sorted[i].positive ? tp : fp) += 1;
            ++i;
        }
        area += static_cast<double>(fp - prev_fp) * static_cast<double>(tp + prev_tp);
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos), threshold});
    }
    curve.auc = area / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return curve;
}

double RocCurve::tpr_at(double fpr) const {
    if (points.empty()) return 0.0;
    // Last point with point.fpr <= fpr (the top of a vertical step).
    std::size_t idx = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].fpr <= fpr) idx = i;
        else break;
    }
    if (points[idx].fpr == fpr || idx + 1 == points.size()) return points[idx].tpr;
    const auto& a = points[idx];
    const auto& b = points[idx + 1];
    const double t = (fpr - a.fpr) / (b.fpr - a.fpr);
    return a.tpr + t * (b.tpr - a.tpr);
}

OperatingPoint youden_point(const RocCurve& curve) {
    OperatingPoint best;
    double best_j = -std::numeric_limits<double>::infinity();
    for (const auto& p : curve.points) {
        if (!std::isfinite(p.threshold)) continue;
        const double j = p.tpr - p.fpr;
        if (j > best_j) {
            best_j = j;
            best = {p.threshold, p.tpr, 1.0 - p.fpr};
        }
    }
    return best;
}

std::vector<std::pair<double, double>> vertical_average(std::span<const RocCurve> curves, int grid_points) {
    if (grid_points < 2) throw UsageError("vertical_average: need at least 2 grid points");
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(grid_points));
    for (int g = 0; g < grid_points; ++g) {
        const double fpr = static_cast<double>(g) / static_cast<double>(grid_points - 1);
        double sum = 0.0;
        for (const auto& c : curves) sum += c.tpr_at(fpr);
        out.emplace_back(fpr, curves.empty() ? 0.0 : sum / static_cast<double>(curves.size()));
    }
    return out;
}

}  // namespace fsl
