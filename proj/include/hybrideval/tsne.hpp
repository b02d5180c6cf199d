#pragma once

// Exact O(N^2) t-SNE.

#include "hybrideval/projection.hpp"

#include <span>

namespace hybrideval {

struct TsneParams {
    double perplexity = 30.0;
    std::size_t out_dims = 2;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iters = 250;
    std::size_t total_iters = 1000;
    double learning_rate = 200.0;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    std::uint64_t seed = 0;
};

/// Largest perplexity strictly allowed for N points is (N - 1) / 3.
double max_perplexity(std::size_t n);

/// Throws Error(Projection) describing the violated bound.
void check_tsne_params(const TsneParams& params, std::size_t n);

struct PerplexityRow {
    double sigma = 0.0;           // Gaussian bandwidth, p_j ~ exp(-d_j / (2 sigma^2))
    std::vector<double> probs;    // same order as the input row, sums to 1
    double entropy_bits = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;      // all distances equal: uniform row, sigma = +inf
};

/// Bisection on the Gaussian precision until |2^H - perplexity| < tol or
/// max_iter steps. `sq_dists` are squared distances to the other N - 1 points.
PerplexityRow perplexity_calibration(std::span<const double> sq_dists, double perplexity,
                                     double tol = 1e-4, int max_iter = 100);

/// Symmetric joint affinities P = (P_j|i + P_i|j) / 2N with a zero diagonal.
/// Rows that failed to calibrate are reported through `warnings`.
Matrix tsne_joint_probabilities(const Matrix& sq_dists, double perplexity,
                                std::vector<std::string>* warnings = nullptr);

/// Student-t affinities of the low-dimensional coordinates, normalized to sum 1.
Matrix tsne_low_dim_affinities(const Matrix& coords);

/// dC/dy_i = 4 sum_j (p_ij - q_ij)(y_i - y_j)(1 + |y_i - y_j|^2)^-1
Matrix tsne_gradient(const Matrix& p, const Matrix& q, const Matrix& coords);

/// KL(P || Q) over off-diagonal pairs; both clamped at 1e-12 inside the log.
double tsne_kl(const Matrix& p, const Matrix& q);

/// loss_trace[t] is KL(P || Q) at the coordinates entering iteration t; the
/// final entry is the KL of the returned coordinates.
ProjectionResult tsne_run(const EmbeddingSet& emb, const TsneParams& params);

}  // namespace hybrideval
