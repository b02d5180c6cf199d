#include "hybrideval/error.hpp"
#include "hybrideval/projection.hpp"

#include <algorithm>
#include <cmath>

namespace hybrideval {

void check_embedding(const EmbeddingSet& emb) {
    const auto n = emb.vectors.rows;
    if (n < 4) throw Error(ErrorKind::Projection, "embedding needs at least 4 points, got " + std::to_string(n));
    if (emb.vectors.cols < 2) throw Error(ErrorKind::Projection, "embedding dimension must be at least 2");
    if (emb.labels.size() != n || emb.ids.size() != n) {
        throw Error(ErrorKind::Projection, "labels and ids must have one entry per embedding row");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (double v : emb.vectors.row(i)) {
            if (!std::isfinite(v)) throw Error(ErrorKind::Projection, "non-finite value in row " + std::to_string(i));
        }
    }
}

Matrix pairwise_sq_dists(const Matrix& x) {
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (double v : x.row(i)) {
            if (!std::isfinite(v)) throw Error(ErrorKind::Projection, "non-finite value in row " + std::to_string(i));
        }
    }
    const std::size_t n = x.rows;
    Matrix d(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = x.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto xj = x.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < x.cols; ++k) {
                const double diff = xi[k] - xj[k];
                s += diff * diff;
            }
            d(i, j) = s;
            d(j, i) = s;
        }
    }
    return d;
}

KnnGraph knn_graph(const Matrix& vectors, std::size_t k) {
    const std::size_t n = vectors.rows;
    if (k == 0 || k >= n) {
        throw Error(ErrorKind::Projection,
                    "k-NN needs 0 < k < N (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
    }
    const Matrix d2 = pairwise_sq_dists(vectors);
    KnnGraph g;
    g.k = k;
    g.neighbors.resize(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) order.push_back(j);
        }
        auto closer = [&](std::size_t a, std::size_t b) {
            return d2(i, a) != d2(i, b) ? d2(i, a) < d2(i, b) : a < b;
        };
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
        auto& row = g.neighbors[i];
        row.reserve(k);
        for (std::size_t m = 0; m < k; ++m) row.push_back({order[m], std::sqrt(d2(i, order[m]))});
    }
    return g;
}

}  // namespace hybrideval
