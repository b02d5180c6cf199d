#include "hybrideval/clusterqual.hpp"

#include "hybrideval/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybrideval {

namespace {

void check_points(const LabeledPoints& pts) {
    if (pts.labels.size() != pts.coords.rows) {
        throw Error(ErrorKind::Projection, "labels must have one entry per point");
    }
    for (double v : pts.coords.data) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Projection, "non-finite coordinate in cluster input");
    }
    std::vector<std::size_t> distinct(pts.labels);
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
        throw Error(ErrorKind::Projection, "cluster indices need at least two distinct labels");
    }
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

std::map<std::size_t, std::vector<double>> centroids(const LabeledPoints& pts) {
    std::map<std::size_t, std::vector<double>> sums;
    std::map<std::size_t, std::size_t> sizes;
    for (std::size_t i = 0; i < pts.coords.rows; ++i) {
        auto& s = sums[pts.labels[i]];
        s.resize(pts.coords.cols, 0.0);
        const auto row = pts.coords.row(i);
        for (std::size_t k = 0; k < row.size(); ++k) s[k] += row[k];
        ++sizes[pts.labels[i]];
    }
    for (auto& [label, s] : sums) {
        for (auto& v : s) v /= static_cast<double>(sizes[label]);
    }
    return sums;
}

}  // namespace

SilhouetteResult silhouette(const LabeledPoints& pts) {
    check_points(pts);
    const std::size_t n = pts.coords.rows;
    std::map<std::size_t, std::size_t> sizes;
    for (auto l : pts.labels) ++sizes[l];

    SilhouetteResult out;
    out.per_point.resize(n, 0.0);
    std::map<std::size_t, double> sum_to;
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = pts.labels[i];
        if (sizes[own] == 1) continue;
        for (auto& [label, s] : sum_to) s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sum_to[pts.labels[j]] += distance(pts.coords.row(i), pts.coords.row(j));
        }
        const double a = sum_to[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, s] : sum_to) {
            if (label != own) b = std::min(b, s / static_cast<double>(sizes[label]));
        }
        const double denom = std::max(a, b);
        out.per_point[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    double total = 0.0;
    for (double s : out.per_point) total += s;
    out.mean = total / static_cast<double>(n);
    return out;
}

std::map<std::size_t, double> cluster_dispersion(const LabeledPoints& pts) {
    const auto cents = centroids(pts);
    std::map<std::size_t, double> sums;
    std::map<std::size_t, std::size_t> sizes;
    for (std::size_t i = 0; i < pts.coords.rows; ++i) {
        const auto l = pts.labels[i];
        sums[l] += distance(pts.coords.row(i), cents.at(l));
        ++sizes[l];
    }
    for (auto& [l, s] : sums) s /= static_cast<double>(sizes[l]);
    return sums;
}

double davies_bouldin(const LabeledPoints& pts) {
    check_points(pts);
    const auto cents = centroids(pts);
    const auto sigma = cluster_dispersion(pts);
    double total = 0.0;
    for (const auto& [i, ci] : cents) {
        double worst = 0.0;
        for (const auto& [j, cj] : cents) {
            if (i == j) continue;
            const double d = distance(ci, cj);
            if (d == 0.0) {
                throw Error(ErrorKind::Projection, "clusters " + std::to_string(std::min(i, j)) + " and " +
                                                       std::to_string(std::max(i, j)) + " share a centroid");
            }
            worst = std::max(worst, (sigma.at(i) + sigma.at(j)) / d);
        }
        total += worst;
    }
    return total / static_cast<double>(cents.size());
}

ClusterReport cluster_report(const LabeledPoints& pts) {
    ClusterReport r;
    auto sil = silhouette(pts);
    r.silhouette_mean = sil.mean;
    r.per_point_silhouette = std::move(sil.per_point);
    r.dbi = davies_bouldin(pts);
    r.per_cluster_dispersion = cluster_dispersion(pts);
    return r;
}

}  // namespace hybrideval
