#include "hybrideval/tsne.hpp"

#include "hybrideval/error.hpp"
#include "hybrideval/rng.hpp"
#include "hybrideval/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace hybrideval {

namespace {
constexpr double kFloor = 1e-12;
}

double max_perplexity(std::size_t n) { return (static_cast<double>(n) - 1.0) / 3.0; }

void check_tsne_params(const TsneParams& p, std::size_t n) {
    if (p.out_dims != 2 && p.out_dims != 3) throw Error(ErrorKind::Projection, "t-SNE out_dims must be 2 or 3");
    if (!(p.perplexity >= 1.0)) throw Error(ErrorKind::Projection, "perplexity must be at least 1");
    if (!(p.perplexity < max_perplexity(n))) {
        throw Error(ErrorKind::Projection, "perplexity " + format_double(p.perplexity) + " is infeasible for N=" +
                                               std::to_string(n) + "; it must be below (N-1)/3 = " +
                                               format_double(max_perplexity(n)));
    }
    if (!(p.learning_rate > 0.0)) throw Error(ErrorKind::Projection, "learning rate must be positive");
    if (p.total_iters == 0) throw Error(ErrorKind::Projection, "total_iters must be positive");
}

PerplexityRow perplexity_calibration(std::span<const double> d, double perplexity, double tol, int max_iter) {
    if (!(perplexity >= 1.0)) throw Error(ErrorKind::Projection, "perplexity must be at least 1");
    if (d.empty()) throw Error(ErrorKind::Projection, "perplexity calibration needs at least one neighbor");

    PerplexityRow out;
    const std::size_t m = d.size();
    const double dmin = *std::min_element(d.begin(), d.end());
    std::vector<double> shifted(m);
    double mean_shift = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        shifted[j] = d[j] - dmin;
        mean_shift += shifted[j];
    }
    mean_shift /= static_cast<double>(m);

    out.probs.assign(m, 0.0);
    if (mean_shift == 0.0) {
        std::fill(out.probs.begin(), out.probs.end(), 1.0 / static_cast<double>(m));
        out.entropy_bits = std::log2(static_cast<double>(m));
        out.sigma = std::numeric_limits<double>::infinity();
        out.degenerate = true;
        out.converged = std::abs(static_cast<double>(m) - perplexity) < tol;
        return out;
    }

    // Evaluates the row at precision beta; returns 2^H.
    auto evaluate = [&](double beta) {
        double sum = 0.0, weighted = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            out.probs[j] = std::exp(-beta * shifted[j]);
            sum += out.probs[j];
            weighted += shifted[j] * out.probs[j];
        }
        for (auto& p : out.probs) p /= sum;
        const double h_nats = std::log(sum) + beta * weighted / sum;
        out.entropy_bits = h_nats / std::numbers::ln2;
        return std::exp2(out.entropy_bits);
    };

    double beta = 1.0 / mean_shift;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double perp = evaluate(beta);
    int it = 0;
    while (it < max_iter && !(std::abs(perp - perplexity) < tol)) {
        ++it;
        if (perp > perplexity) {
            lo = beta;
            beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
        perp = evaluate(beta);
    }
    out.iterations = it;
    out.converged = std::abs(perp - perplexity) < tol;
    out.sigma = std::sqrt(1.0 / (2.0 * beta));
    return out;
}

Matrix tsne_joint_probabilities(const Matrix& d2, double perplexity, std::vector<std::string>* warnings) {
    const std::size_t n = d2.rows;
    Matrix cond(n, n, 0.0);
    std::vector<double> row(n - 1);
    std::size_t failed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0, k = 0; j < n; ++j) {
            if (j != i) row[k++] = d2(i, j);
        }
        const auto cal = perplexity_calibration(row, perplexity);
        if (!cal.converged) ++failed;
        for (std::size_t j = 0, k = 0; j < n; ++j) {
            if (j != i) cond(i, j) = cal.probs[k++];
        }
    }
    if (failed > 0 && warnings) {
        warnings->push_back(std::to_string(failed) + " rows did not reach the target perplexity");
    }
    Matrix p(n, n, 0.0);
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (cond(i, j) + cond(j, i)) * scale;
            p(i, j) = v;
            p(j, i) = v;
        }
    }
    return p;
}

namespace {

// Unnormalized Student-t kernel (1 + |y_i - y_j|^2)^-1 with zero diagonal.
Matrix student_kernel(const Matrix& y) {
    const std::size_t n = y.rows;
    Matrix num(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < y.cols; ++k) {
                const double diff = y(i, k) - y(j, k);
                s += diff * diff;
            }
            const double v = 1.0 / (1.0 + s);
            num(i, j) = v;
            num(j, i) = v;
        }
    }
    return num;
}

Matrix normalized(Matrix num) {
    const double sum = std::accumulate(num.data.begin(), num.data.end(), 0.0);
    for (auto& v : num.data) v /= sum;
    return num;
}

Matrix gradient_from_kernel(const Matrix& p, double exaggeration, const Matrix& q, const Matrix& num,
                            const Matrix& y) {
    const std::size_t n = y.rows;
    Matrix grad(n, y.cols, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto g = grad.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double mult = (exaggeration * p(i, j) - q(i, j)) * num(i, j);
            for (std::size_t k = 0; k < y.cols; ++k) g[k] += mult * (y(i, k) - y(j, k));
        }
        for (auto& v : g) v *= 4.0;
    }
    return grad;
}

}  // namespace

Matrix tsne_low_dim_affinities(const Matrix& coords) { return normalized(student_kernel(coords)); }

Matrix tsne_gradient(const Matrix& p, const Matrix& q, const Matrix& coords) {
    return gradient_from_kernel(p, 1.0, q, student_kernel(coords), coords);
}

double tsne_kl(const Matrix& p, const Matrix& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
        for (std::size_t j = 0; j < p.cols; ++j) {
            if (i == j) continue;
            const double pij = std::max(p(i, j), kFloor);
            const double qij = std::max(q(i, j), kFloor);
            kl += p(i, j) * std::log(pij / qij);
        }
    }
    return kl;
}

ProjectionResult tsne_run(const EmbeddingSet& emb, const TsneParams& params) {
    check_embedding(emb);
    const std::size_t n = emb.size();
    check_tsne_params(params, n);

    ProjectionResult result;
    result.seed = params.seed;
    result.params = {{"perplexity", params.perplexity},
                     {"out_dims", static_cast<double>(params.out_dims)},
                     {"early_exaggeration", params.early_exaggeration},
                     {"exaggeration_iters", static_cast<double>(params.exaggeration_iters)},
                     {"total_iters", static_cast<double>(params.total_iters)},
                     {"learning_rate", params.learning_rate},
                     {"momentum_early", params.momentum_early},
                     {"momentum_late", params.momentum_late}};

    const Matrix p = tsne_joint_probabilities(pairwise_sq_dists(emb.vectors), params.perplexity, &result.warnings);

    const std::size_t dims = params.out_dims;
    Matrix y(n, dims);
    Rng rng(params.seed);
    for (auto& v : y.data) v = 1e-4 * rng.normal();

    Matrix update(n, dims, 0.0);
    Matrix gains(n, dims, 1.0);
    result.loss_trace.reserve(params.total_iters + 1);

    for (std::size_t it = 0; it < params.total_iters; ++it) {
        const Matrix num = student_kernel(y);
        const Matrix q = normalized(num);
        result.loss_trace.push_back(tsne_kl(p, q));

        const double exaggeration = it < params.exaggeration_iters ? params.early_exaggeration : 1.0;
        const double momentum = it < params.exaggeration_iters ? params.momentum_early : params.momentum_late;
        const Matrix grad = gradient_from_kernel(p, exaggeration, q, num, y);

        // Delta-bar-delta gains, as in the reference implementation.
        for (std::size_t k = 0; k < y.data.size(); ++k) {
            const bool same_sign = (grad.data[k] > 0.0) == (update.data[k] > 0.0);
            gains.data[k] = std::max(same_sign ? gains.data[k] * 0.8 : gains.data[k] + 0.2, 0.01);
            update.data[k] = momentum * update.data[k] - params.learning_rate * gains.data[k] * grad.data[k];
            y.data[k] += update.data[k];
        }
        for (std::size_t c = 0; c < dims; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += y(i, c);
            mean /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) y(i, c) -= mean;
        }
    }
    result.loss_trace.push_back(tsne_kl(p, tsne_low_dim_affinities(y)));

    for (double v : y.data) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Projection, "t-SNE diverged to non-finite coordinates");
    }
    result.coords = std::move(y);
    return result;
}

}  // namespace hybrideval
