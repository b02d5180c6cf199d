#pragma once

// Shared types and kernels for the t-SNE and UMAP projectors.

#include "hybrideval/matrix.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hybrideval {

/// N x d features with aligned labels and ids.
struct EmbeddingSet {
    Matrix vectors;
    std::vector<std::size_t> labels;
    std::vector<std::string> ids;
    std::vector<std::string> class_names;

    std::size_t size() const { return vectors.rows; }
};

/// Throws Error(Projection) unless N >= 4, d >= 2, rows finite and the
/// label/id vectors line up.
void check_embedding(const EmbeddingSet& emb);

struct ProjectionResult {
    Matrix coords;
    std::vector<double> loss_trace;
    std::vector<std::pair<std::string, double>> params;  // echo of the settings used
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    double final_loss() const { return loss_trace.empty() ? 0.0 : loss_trace.back(); }
};

/// D(i, j) = |x_i - x_j|^2. Symmetric with an exact zero diagonal.
/// Throws Error(Projection) naming the first non-finite row.
Matrix pairwise_sq_dists(const Matrix& vectors);

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;  // Euclidean, not squared

    bool operator==(const Neighbor&) const = default;
};

/// neighbors[i] holds the k nearest points to i (self excluded), nearest
/// first, ties broken by lower index.
struct KnnGraph {
    std::size_t k = 0;
    std::vector<std::vector<Neighbor>> neighbors;
};

/// Exact k-NN by full scan. Throws Error(Projection) if k == 0 or k >= N.
KnnGraph knn_graph(const Matrix& vectors, std::size_t k);

}  // namespace hybrideval
