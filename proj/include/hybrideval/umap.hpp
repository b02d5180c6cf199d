#pragma once

// UMAP with exact k-NN, spectral initialization and negative-sampling SGD.

#include "hybrideval/projection.hpp"

#include <optional>

namespace hybrideval {

enum class UmapInit { Spectral, Random };

struct UmapParams {
    std::size_t n_neighbors = 15;
    double min_dist = 0.1;
    std::size_t out_dims = 2;
    std::size_t n_epochs = 500;
    std::size_t negative_samples = 5;
    double learning_rate = 1.0;
    UmapInit init = UmapInit::Spectral;
    std::size_t loss_every = 10;  // epochs between cross-entropy evaluations
    std::uint64_t seed = 0;
};

void check_umap_params(const UmapParams& params, std::size_t n);

struct CurveFit {
    double a = 0.0;
    double b = 0.0;
    double rms = 0.0;        // residual RMS on the fit grid
    bool converged = false;
    bool fallback = false;   // tabulated min_dist = 0.1 values were used
};

/// Least-squares fit of 1 / (1 + a d^2b) to the target curve that is 1 up to
/// min_dist and exp(-(d - min_dist)) beyond, on 300 points of [0, 3].
CurveFit fit_ab(double min_dist);

/// Target curve and fitted kernel, exposed for checks.
double umap_target_curve(double d, double min_dist);
double umap_kernel(double d, double a, double b);

struct SmoothKnn {
    std::vector<double> rho;    // distance to the nearest neighbor
    std::vector<double> sigma;  // bandwidth solving the log2(k) constraint
    std::size_t unconverged = 0;
};

/// Per-point bisection so that sum_j exp(-max(0, d_ij - rho_i) / sigma_i)
/// equals log2(k) within 1e-5 (64 steps at most; failures keep the last sigma).
SmoothKnn smooth_knn(const KnnGraph& knn);

/// Directed membership strengths, aligned with knn.neighbors.
std::vector<std::vector<double>> membership_strengths(const KnnGraph& knn, const SmoothKnn& smooth);

struct FuzzyGraph {
    std::size_t n = 0;
    /// rows[i] = (j, w_ij) sorted by j; symmetric, weights in (0, 1].
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    SmoothKnn smooth;
    std::vector<std::string> warnings;

    double weight(std::size_t i, std::size_t j) const;
};

/// Symmetrizes the directed strengths with w = a + b - ab.
FuzzyGraph fuzzy_simplicial_set(const KnnGraph& knn);

/// Fuzzy-set cross entropy of the layout against the graph, over all pairs.
double umap_cross_entropy(const FuzzyGraph& graph, const Matrix& coords, double a, double b);

/// Eigenvectors 1..dims of the symmetric normalized Laplacian, or nullopt if
/// the eigensolver fails.
std::optional<Matrix> spectral_layout(const FuzzyGraph& graph, std::size_t dims);

/// loss_trace holds the cross entropy at epoch 0, every loss_every epochs,
/// and after the final epoch.
ProjectionResult umap_run(const EmbeddingSet& emb, const UmapParams& params);

}  // namespace hybrideval
