#pragma once

#include "fsl/types.hpp"

#include <cstdint>
#include <vector>

namespace fsl {

struct KMeansOptions {
    int k = 2;
    int max_iters = 100;
    /// Independent k-means++ initialisations; the lowest final inertia wins.
    int restarts = 1;
    std::uint64_t seed = 0;
    /// When false, fewer distinct points than k is an error. When true,
    /// coincident centroids are kept.
    bool allow_duplicate_centroids = false;
};

struct KMeansResult {
    Matrix centroids;              // (k, dim)
    std::vector<int> assignment;   // per point
    double inertia = 0.0;          // sum of squared distances to assigned centroid
    /// Inertia after every assignment step of the winning restart.
    std::vector<double> inertia_trace;
    int iterations = 0;
    bool converged = false;
};

/// Lloyd's algorithm with k-means++ seeding, followed by single-point
/// transfer passes once the assignment is stable. Points are rows. An empty
/// cluster is reseeded with the point farthest from its current centroid
/// (lowest index on ties), which keeps the result deterministic for a seed.
KMeansResult kmeans(const Matrix& points, const KMeansOptions& options);

/// Sum of squared distances from each point to its assigned centroid.
double inertia_of(const Matrix& points, const Matrix& centroids, const std::vector<int>& assignment);

}  // namespace fsl
