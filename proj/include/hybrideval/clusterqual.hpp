#pragma once

// Cluster validity indices over labeled points (Euclidean distance).

#include "hybrideval/matrix.hpp"

#include <map>
#include <vector>

namespace hybrideval {

struct LabeledPoints {
    Matrix coords;
    std::vector<std::size_t> labels;
};

struct SilhouetteResult {
    std::vector<double> per_point;
    double mean = 0.0;
};

struct ClusterReport {
    double silhouette_mean = 0.0;
    double dbi = 0.0;
    std::vector<double> per_point_silhouette;
    std::map<std::size_t, double> per_cluster_dispersion;
};

/// s(i) = (b - a) / max(a, b); members of singleton clusters score 0.
/// Throws Error(Projection) when fewer than two labels are present.
SilhouetteResult silhouette(const LabeledPoints& points);

/// Mean distance of each cluster's points to its centroid.
std::map<std::size_t, double> cluster_dispersion(const LabeledPoints& points);

/// Davies-Bouldin index. Throws Error(Projection) naming the label pair when
/// two centroids coincide.
double davies_bouldin(const LabeledPoints& points);

ClusterReport cluster_report(const LabeledPoints& points);

}  // namespace hybrideval
