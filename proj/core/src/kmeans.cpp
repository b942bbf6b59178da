#include "fsl/kmeans.hpp"

#include "fsl/error.hpp"
#include "fsl/rng.hpp"

#include <limits>

namespace fsl {

namespace {

double squared_distance(const Matrix& points, Eigen::Index i, const Matrix& centroids, Eigen::Index c) {
    return (points.row(i) - centroids.row(c)).squaredNorm();
}

Matrix init_plus_plus(const Matrix& points, int k, Rng& rng, bool allow_duplicates) {
    const Eigen::Index m = points.rows();
    Matrix centroids(k, points.cols());
    centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(m))));
    Vector nearest(m);
    for (Eigen::Index i = 0; i < m; ++i) nearest(i) = squared_distance(points, i, centroids, 0);

    for (int c = 1; c < k; ++c) {
        const double total = nearest.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double running = 0.0;
            chosen = -1;
            for (Eigen::Index i = 0; i < m; ++i) {
                running += nearest(i);
                if (nearest(i) > 0.0 && running > target) {
                    chosen = i;
                    break;
                }
            }
            if (chosen < 0) {
                // Rounding left target beyond the running sum: take the last candidate.
                for (Eigen::Index i = m - 1; i >= 0; --i) {
                    if (nearest(i) > 0.0) {
                        chosen = i;
                        break;
                    }
                }
            }
        } else if (allow_duplicates) {
            chosen = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(m)));
        } else {
            throw DataError("k-means: fewer distinct points than k=" + std::to_string(k));
        }
        centroids.row(c) = points.row(chosen);
        for (Eigen::Index i = 0; i < m; ++i) {
            nearest(i) = std::min(nearest(i), squared_distance(points, i, centroids, c));
        }
    }
    return centroids;
}

/// Nearest centroid per point. Candidates come from the expanded form
/// |x|^2 - 2 x.c + |c|^2; a point only moves when its exact squared
/// distance strictly improves, so inertia cannot creep up from rounding.
bool assign(const Matrix& points, const Matrix& centroids, std::vector<int>& assignment) {
    const Matrix cross = points * centroids.transpose();
    const Vector c_norm = centroids.rowwise().squaredNorm();
    bool changed = false;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        Eigen::Index best = 0;
        double best_score = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double score = c_norm(c) - 2.0 * cross(i, c);
            if (score < best_score) {
                best_score = score;
                best = c;
            }
        }
        const int current = assignment[static_cast<std::size_t>(i)];
        if (current < 0) {
            assignment[static_cast<std::size_t>(i)] = static_cast<int>(best);
            changed = true;
        } else if (best != current &&
                   squared_distance(points, i, centroids, best) < squared_distance(points, i, centroids, current)) {
            assignment[static_cast<std::size_t>(i)] = static_cast<int>(best);
            changed = true;
        }
    }
    return changed;
}

/// Returns true when any empty cluster was reseeded.
bool repair_empty(const Matrix& points, Matrix& centroids, std::vector<int>& assignment, bool allow_duplicates) {
    const int k = static_cast<int>(centroids.rows());
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
    bool repaired = false;
    for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        Eigen::Index farthest = -1;
        double far_dist = 0.0;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const int owner = assignment[static_cast<std::size_t>(i)];
            if (sizes[static_cast<std::size_t>(owner)] < 2) continue;
            const double d = squared_distance(points, i, centroids, owner);
            if (d > far_dist) {
                far_dist = d;
                farthest = i;
            }
        }
        if (farthest < 0) {
            if (allow_duplicates) continue;
            throw DataError("k-means: cannot repair empty cluster (fewer distinct points than k)");
        }
        --sizes[static_cast<std::size_t>(assignment[static_cast<std::size_t>(farthest)])];
        assignment[static_cast<std::size_t>(farthest)] = c;
        ++sizes[static_cast<std::size_t>(c)];
        centroids.row(c) = points.row(farthest);
        repaired = true;
    }
    return repaired;
}

void update_centroids(const Matrix& points, Matrix& centroids, const std::vector<int>& assignment) {
    Matrix sums = Matrix::Zero(centroids.rows(), centroids.cols());
    std::vector<int> sizes(static_cast<std::size_t>(centroids.rows()), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int a = assignment[static_cast<std::size_t>(i)];
        sums.row(a) += points.row(i);
        ++sizes[static_cast<std::size_t>(a)];
    }
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) centroids.row(c) = sums.row(c) / sizes[static_cast<std::size_t>(c)];
    }
}

/// Hartigan-style single-point transfers after Lloyd has converged: a point
/// moves from cluster a to b when n_b/(n_b+1) |x-c_b|^2 < n_a/(n_a-1) |x-c_a|^2,
/// which strictly lowers the inertia. Lloyd stops at any Voronoi-consistent
/// partition; these moves escape many of those local optima.
/// Returns the number of passes that moved at least one point.
int refine_transfers(const Matrix& points, Matrix& centroids, std::vector<int>& assignment, int max_passes,
                     std::vector<double>& trace) {
    const Eigen::Index m = points.rows();
    const Eigen::Index k = centroids.rows();
    if (k < 2) return 0;
    const Matrix pts_t = points.transpose();
    Matrix cen_t = centroids.transpose();
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];

    int passes = 0;
    for (int pass = 0; pass < max_passes; ++pass) {
        bool moved = false;
        for (Eigen::Index i = 0; i < m; ++i) {
            const int a = assignment[static_cast<std::size_t>(i)];
            const int na = sizes[static_cast<std::size_t>(a)];
            if (na < 2) continue;
            const auto x = pts_t.col(i);
            const double remove_gain = na / (na - 1.0) * (x - cen_t.col(a)).squaredNorm();
            int best = a;
            double best_cost = remove_gain;
            for (Eigen::Index b = 0; b < k; ++b) {
                if (b == a) continue;
                const int nb = sizes[static_cast<std::size_t>(b)];
                const double cost = nb / (nb + 1.0) * (x - cen_t.col(b)).squaredNorm();
                if (cost < best_cost) {
                    best_cost = cost;
                    best = static_cast<int>(b);
                }
            }
            // Relative margin so rounding alone never triggers a move.
            if (best == a || best_cost >= remove_gain * (1.0 - 1e-12)) continue;
            const int nb = sizes[static_cast<std::size_t>(best)];
            cen_t.col(a) += (cen_t.col(a) - x) / (na - 1.0);
            cen_t.col(best) += (x - cen_t.col(best)) / (nb + 1.0);
            --sizes[static_cast<std::size_t>(a)];
            ++sizes[static_cast<std::size_t>(best)];
            assignment[static_cast<std::size_t>(i)] = best;
            moved = true;
        }
        if (!moved) break;
        ++passes;
        // Exact means, so incremental drift does not accumulate across passes.
        update_centroids(points, centroids, assignment);
        cen_t = centroids.transpose();
        trace.push_back(inertia_of(points, centroids, assignment));
    }
    return passes;
}

KMeansResult run_once(const Matrix& points, const KMeansOptions& options, Rng& rng) {
    KMeansResult result;
    result.centroids = init_plus_plus(points, options.k, rng, options.allow_duplicate_centroids);
    result.assignment.assign(static_cast<std::size_t>(points.rows()), -1);

    for (int iter = 0; iter < options.max_iters; ++iter) {
        const bool changed = assign(points, result.centroids, result.assignment);
        const bool repaired = repair_empty(points, result.centroids, result.assignment, options.allow_duplicate_centroids);
        result.inertia_trace.push_back(inertia_of(points, result.centroids, result.assignment));
        result.iterations = iter + 1;
        if (!changed && !repaired && iter > 0) {
            result.converged = true;
            break;
        }
        update_centroids(points, result.centroids, result.assignment);
    }
    if (!result.converged) {
        // Leave the assignment consistent with the final centroids.
        assign(points, result.centroids, result.assignment);
        repair_empty(points, result.centroids, result.assignment, options.allow_duplicate_centroids);
    } else {
        update_centroids(points, result.centroids, result.assignment);
        result.iterations += refine_transfers(points, result.centroids, result.assignment, options.max_iters,
                                              result.inertia_trace);
    }
    result.inertia = inertia_of(points, result.centroids, result.assignment);
    return result;
}

}  // namespace

double inertia_of(const Matrix& points, const Matrix& centroids, const std::vector<int>& assignment) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        total += squared_distance(points, i, centroids, assignment[static_cast<std::size_t>(i)]);
    }
    return total;
}

KMeansResult kmeans(const Matrix& points, const KMeansOptions& options) {
    if (options.k < 1) throw UsageError("k-means: k must be positive");
    if (points.rows() < options.k) {
        throw DataError("k-means: " + std::to_string(points.rows()) + " points for k=" + std::to_string(options.k));
    }
    if (!points.allFinite()) throw DataError("k-means: non-finite input");
    if (options.max_iters < 1 || options.restarts < 1) throw UsageError("k-means: max_iters and restarts must be >= 1");

    Rng rng(options.seed);
    KMeansResult best;
    for (int r = 0; r < options.restarts; ++r) {
        KMeansResult run = run_once(points, options, rng);
        if (r == 0 || run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

}  // namespace fsl
