#include "hybrideval/umap.hpp"

#include "hybrideval/error.hpp"
#include "hybrideval/rng.hpp"
#include "hybrideval/util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybrideval {

namespace {

constexpr double kFloor = 1e-12;
constexpr double kGradClip = 4.0;
constexpr std::size_t kFitGrid = 300;
// Values the reference implementation produces for min_dist = 0.1, spread = 1.
constexpr double kDefaultA = 1.5769434603113077;
constexpr double kDefaultB = 0.8950608779109733;

double clip(double v) { return std::clamp(v, -kGradClip, kGradClip); }

}  // namespace

void check_umap_params(const UmapParams& p, std::size_t n) {
    if (p.n_neighbors < 2 || p.n_neighbors >= n) {
        throw Error(ErrorKind::Projection, "n_neighbors must satisfy 2 <= k < N (k=" + std::to_string(p.n_neighbors) +
                                               ", N=" + std::to_string(n) + ")");
    }
    if (!(p.min_dist > 0.0)) throw Error(ErrorKind::Projection, "min_dist must be positive");
    if (p.out_dims != 2 && p.out_dims != 3) throw Error(ErrorKind::Projection, "UMAP out_dims must be 2 or 3");
    if (p.n_epochs == 0) throw Error(ErrorKind::Projection, "n_epochs must be positive");
    if (p.loss_every == 0) throw Error(ErrorKind::Projection, "loss_every must be positive");
}

double umap_target_curve(double d, double min_dist) { return d < min_dist ? 1.0 : std::exp(-(d - min_dist)); }

double umap_kernel(double d, double a, double b) { return 1.0 / (1.0 + a * std::pow(d, 2.0 * b)); }

CurveFit fit_ab(double min_dist) {
    if (!(min_dist > 0.0)) throw Error(ErrorKind::Projection, "min_dist must be positive");
    std::vector<double> xs(kFitGrid), ys(kFitGrid);
    for (std::size_t i = 0; i < kFitGrid; ++i) {
        xs[i] = 3.0 * static_cast<double>(i) / static_cast<double>(kFitGrid - 1);
        ys[i] = umap_target_curve(xs[i], min_dist);
    }
    auto sse = [&](double a, double b) {
        double s = 0.0;
        for (std::size_t i = 0; i < kFitGrid; ++i) {
            const double r = umap_kernel(xs[i], a, b) - ys[i];
            s += r * r;
        }
        return s;
    };

    // Levenberg-Marquardt on (a, b).
    double a = 1.0, b = 1.0, lambda = 1e-3;
    double cost = sse(a, b);
    bool converged = false;
    for (int it = 0; it < 500 && !converged; ++it) {
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, g0 = 0, g1 = 0;
        for (std::size_t i = 0; i < kFitGrid; ++i) {
            const double x = xs[i];
            const double f = umap_kernel(x, a, b);
            const double r = f - ys[i];
            const double x2b = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
            const double da = -x2b * f * f;
            const double db = x > 0.0 ? -a * x2b * 2.0 * std::log(x) * f * f : 0.0;
            jtj00 += da * da;
            jtj01 += da * db;
            jtj11 += db * db;
            g0 += da * r;
            g1 += db * r;
        }
        if (std::hypot(g0, g1) < 1e-12) {
            converged = true;
            break;
        }
        bool stepped = false;
        while (lambda < 1e12) {
            const double m00 = jtj00 * (1.0 + lambda), m11 = jtj11 * (1.0 + lambda);
            const double det = m00 * m11 - jtj01 * jtj01;
            if (det == 0.0) {
                lambda *= 10.0;
                continue;
            }
            const double step_a = -(m11 * g0 - jtj01 * g1) / det;
            const double step_b = -(m00 * g1 - jtj01 * g0) / det;
            const double na = a + step_a, nb = b + step_b;
            const double ncost = na > 0.0 && nb > 0.0 ? sse(na, nb) : std::numeric_limits<double>::infinity();
            if (ncost < cost) {
                const double rel = (cost - ncost) / std::max(cost, kFloor);
                a = na;
                b = nb;
                cost = ncost;
                lambda = std::max(lambda * 0.1, 1e-12);
                stepped = true;
                if (rel < 1e-14) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // No descent direction left at machine precision: a minimum.
            converged = true;
        }
    }

    CurveFit fit;
    if (!converged || !std::isfinite(a) || !std::isfinite(b)) {
        fit.a = kDefaultA;
        fit.b = kDefaultB;
        fit.fallback = true;
    } else {
        fit.a = a;
        fit.b = b;
        fit.converged = true;
    }
    fit.rms = std::sqrt(sse(fit.a, fit.b) / static_cast<double>(kFitGrid));
    return fit;
}

SmoothKnn smooth_knn(const KnnGraph& knn) {
    const std::size_t n = knn.neighbors.size();
    const double target = std::log2(static_cast<double>(knn.k));
    SmoothKnn out;
    out.rho.resize(n);
    out.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = knn.neighbors[i];
        const double rho = row.front().distance;
        out.rho[i] = rho;

        double mean_gap = 0.0;
        for (const auto& nb : row) mean_gap += nb.distance - rho;
        mean_gap /= static_cast<double>(row.size());

        auto psum = [&](double sigma) {
            double s = 0.0;
            for (const auto& nb : row) s += std::exp(-std::max(0.0, nb.distance - rho) / sigma);
            return s;
        };
        double lo = 0.0, hi = std::numeric_limits<double>::infinity();
        double mid = mean_gap > 0.0 ? mean_gap : 1.0;
        bool ok = false;
        for (int it = 0; it < 64; ++it) {
            const double s = psum(mid);
            if (std::abs(s - target) < 1e-5) {
                ok = true;
                break;
            }
            if (s > target) {
                hi = mid;
                mid = 0.5 * (lo + hi);
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
            }
        }
        if (!ok) ++out.unconverged;
        out.sigma[i] = mid;
    }
    return out;
}

std::vector<std::vector<double>> membership_strengths(const KnnGraph& knn, const SmoothKnn& smooth) {
    std::vector<std::vector<double>> w(knn.neighbors.size());
    for (std::size_t i = 0; i < knn.neighbors.size(); ++i) {
        for (const auto& nb : knn.neighbors[i]) {
            w[i].push_back(std::exp(-std::max(0.0, nb.distance - smooth.rho[i]) / smooth.sigma[i]));
        }
    }
    return w;
}

double FuzzyGraph::weight(std::size_t i, std::size_t j) const {
    const auto& row = rows[i];
    auto it = std::lower_bound(row.begin(), row.end(), j, [](const auto& e, std::size_t c) { return e.first < c; });
    return it != row.end() && it->first == j ? it->second : 0.0;
}

FuzzyGraph fuzzy_simplicial_set(const KnnGraph& knn) {
    FuzzyGraph g;
    g.n = knn.neighbors.size();
    g.smooth = smooth_knn(knn);
    if (g.smooth.unconverged > 0) {
        g.warnings.push_back(std::to_string(g.smooth.unconverged) +
                             " points did not meet the log2(k) bandwidth constraint; sigma clamped");
    }
    const auto directed = membership_strengths(knn, g.smooth);

    std::vector<std::vector<std::pair<std::size_t, double>>> out(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t m = 0; m < knn.neighbors[i].size(); ++m) out[i].push_back({knn.neighbors[i][m].index, directed[i][m]});
        std::sort(out[i].begin(), out[i].end());
    }
    auto directed_weight = [&](std::size_t i, std::size_t j) {
        const auto& row = out[i];
        auto it = std::lower_bound(row.begin(), row.end(), std::pair<std::size_t, double>{j, -1.0});
        return it != row.end() && it->first == j ? it->second : 0.0;
    };

    g.rows.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        for (const auto& [j, w_ij] : out[i]) {
            // Each unordered pair is produced once, from its lower index or from
            // the only side that lists it, and written to both rows.
            const double w_ji = directed_weight(j, i);
            if (w_ji > 0.0 && j < i) continue;
            // a + b - ab, arranged so a full-strength edge stays exactly 1.
            const double hi = std::max(w_ij, w_ji), lo = std::min(w_ij, w_ji);
            const double w = hi + lo * (1.0 - hi);
            if (!(w > 0.0)) continue;
            g.rows[i].push_back({j, w});
            g.rows[j].push_back({i, w});
        }
    }
    std::size_t isolated = 0;
    for (std::size_t i = 0; i < g.n; ++i) {
        if (g.rows[i].empty()) {
            const auto j = knn.neighbors[i].front().index;
            g.rows[i].push_back({j, 1.0});
            g.rows[j].push_back({i, 1.0});
            ++isolated;
        }
    }
    if (isolated > 0) g.warnings.push_back(std::to_string(isolated) + " isolated points joined to their nearest neighbor");
    for (auto& row : g.rows) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first == y.first; }),
                  row.end());
    }
    return g;
}

double umap_cross_entropy(const FuzzyGraph& graph, const Matrix& y, double a, double b) {
    double ce = 0.0;
    for (std::size_t i = 0; i < graph.n; ++i) {
        const auto& row = graph.rows[i];
        auto edge = row.begin();
        for (std::size_t j = i + 1; j < graph.n; ++j) {
            while (edge != row.end() && edge->first < j) ++edge;
            const double w = edge != row.end() && edge->first == j ? edge->second : 0.0;
            double d2 = 0.0;
            for (std::size_t k = 0; k < y.cols; ++k) {
                const double diff = y(i, k) - y(j, k);
                d2 += diff * diff;
            }
            const double q = 1.0 / (1.0 + a * std::pow(d2, b));
            if (w > 0.0) ce += w * std::log(std::max(w, kFloor) / std::max(q, kFloor));
            if (w < 1.0) ce += (1.0 - w) * std::log(std::max(1.0 - w, kFloor) / std::max(1.0 - q, kFloor));
        }
    }
    return ce;
}

std::optional<Matrix> spectral_layout(const FuzzyGraph& graph, std::size_t dims) {
    const auto n = static_cast<Eigen::Index>(graph.n);
    if (graph.n <= dims + 1) return std::nullopt;
    Eigen::VectorXd inv_sqrt_deg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double deg = 0.0;
        for (const auto& e : graph.rows[static_cast<std::size_t>(i)]) deg += e.second;
        if (!(deg > 0.0)) return std::nullopt;
        inv_sqrt_deg(i) = 1.0 / std::sqrt(deg);
    }
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (const auto& [j, w] : graph.rows[static_cast<std::size_t>(i)]) {
            const auto jj = static_cast<Eigen::Index>(j);
            lap(i, jj) -= w * inv_sqrt_deg(i) * inv_sqrt_deg(jj);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success) return std::nullopt;
    const auto& vecs = solver.eigenvectors();  // ascending eigenvalues
    Matrix out(graph.n, dims);
    for (std::size_t i = 0; i < graph.n; ++i) {
        for (std::size_t c = 0; c < dims; ++c) {
            out(i, c) = vecs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 1));
            if (!std::isfinite(out(i, c))) return std::nullopt;
        }
    }
    return out;
}

ProjectionResult umap_run(const EmbeddingSet& emb, const UmapParams& params) {
    check_embedding(emb);
    const std::size_t n = emb.size();
    check_umap_params(params, n);

    ProjectionResult result;
    result.seed = params.seed;
    const CurveFit curve = fit_ab(params.min_dist);
    if (curve.fallback) result.warnings.push_back("curve fit did not converge; using tabulated a, b for min_dist 0.1");
    const double a = curve.a, b = curve.b;
    result.params = {{"n_neighbors", static_cast<double>(params.n_neighbors)},
                     {"min_dist", params.min_dist},
                     {"out_dims", static_cast<double>(params.out_dims)},
                     {"n_epochs", static_cast<double>(params.n_epochs)},
                     {"negative_samples", static_cast<double>(params.negative_samples)},
                     {"learning_rate", params.learning_rate},
                     {"loss_every", static_cast<double>(params.loss_every)},
                     {"a", a},
                     {"b", b}};

    const FuzzyGraph graph = fuzzy_simplicial_set(knn_graph(emb.vectors, params.n_neighbors));
    result.warnings.insert(result.warnings.end(), graph.warnings.begin(), graph.warnings.end());

    const std::size_t dims = params.out_dims;
    Matrix y(n, dims);
    bool initialized = false;
    if (params.init == UmapInit::Spectral) {
        if (auto layout = spectral_layout(graph, dims)) {
            Rng noise(derive_seed(params.seed, "umap/init-noise"));
            for (std::size_t c = 0; c < dims; ++c) {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (std::size_t i = 0; i < n; ++i) {
                    lo = std::min(lo, (*layout)(i, c));
                    hi = std::max(hi, (*layout)(i, c));
                }
                const double span = hi > lo ? hi - lo : 1.0;
                for (std::size_t i = 0; i < n; ++i) y(i, c) = 10.0 * ((*layout)(i, c) - lo) / span;
            }
            for (auto& v : y.data) v += 1e-4 * noise.normal();
            initialized = true;
        } else {
            result.warnings.push_back("spectral initialization failed; using random initialization");
        }
    }
    if (!initialized) {
        Rng init(derive_seed(params.seed, "umap/init-random"));
        for (auto& v : y.data) v = init.uniform(-10.0, 10.0);
    }

    // Edge list in row-major order; each undirected pair appears twice.
    struct Edge {
        std::size_t head, tail;
        double epochs_per_sample;
    };
    double w_max = 0.0;
    for (const auto& row : graph.rows) {
        for (const auto& e : row) w_max = std::max(w_max, e.second);
    }
    const double epochs = static_cast<double>(params.n_epochs);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [j, w] : graph.rows[i]) {
            if (w < w_max / epochs) continue;
            edges.push_back({i, j, w_max / w});
        }
    }
    std::vector<double> next_sample(edges.size()), next_negative(edges.size()), per_negative(edges.size());
    const double neg_rate = static_cast<double>(params.negative_samples);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        next_sample[e] = edges[e].epochs_per_sample;
        per_negative[e] = neg_rate > 0.0 ? edges[e].epochs_per_sample / neg_rate : std::numeric_limits<double>::infinity();
        next_negative[e] = per_negative[e];
    }

    Rng rng(derive_seed(params.seed, "umap/negative"));
    result.loss_trace.push_back(umap_cross_entropy(graph, y, a, b));
    double alpha = params.learning_rate;
    for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double ep = static_cast<double>(epoch);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (next_sample[e] > ep) continue;
            auto cur = y.row(edges[e].head);
            auto other = y.row(edges[e].tail);
            double d2 = 0.0;
            for (std::size_t k = 0; k < dims; ++k) d2 += (cur[k] - other[k]) * (cur[k] - other[k]);
            double coeff = 0.0;
            if (d2 > 0.0) coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
            for (std::size_t k = 0; k < dims; ++k) {
                const double g = clip(coeff * (cur[k] - other[k]));
                cur[k] += g * alpha;
                other[k] -= g * alpha;
            }
            next_sample[e] += edges[e].epochs_per_sample;

            const auto n_neg = static_cast<std::size_t>(std::max(0.0, (ep - next_negative[e]) / per_negative[e]));
            for (std::size_t s = 0; s < n_neg; ++s) {
                const auto k_idx = static_cast<std::size_t>(rng.below(n));
                if (k_idx == edges[e].head) continue;
                auto neg = y.row(k_idx);
                double nd2 = 0.0;
                for (std::size_t k = 0; k < dims; ++k) nd2 += (cur[k] - neg[k]) * (cur[k] - neg[k]);
                double rcoeff = 0.0;
                if (nd2 > 0.0) rcoeff = 2.0 * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
                for (std::size_t k = 0; k < dims; ++k) {
                    const double g = rcoeff > 0.0 ? clip(rcoeff * (cur[k] - neg[k])) : kGradClip;
                    cur[k] += g * alpha;
                }
            }
            next_negative[e] += static_cast<double>(n_neg) * per_negative[e];
        }
        alpha = params.learning_rate * (1.0 - (ep + 1.0) / epochs);
        const bool last = epoch + 1 == params.n_epochs;
        if (last || (epoch + 1) % params.loss_every == 0) result.loss_trace.push_back(umap_cross_entropy(graph, y, a, b));
    }

    for (double v : y.data) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Projection, "UMAP diverged to non-finite coordinates");
    }
    result.coords = std::move(y);
    return result;
}

}  // namespace hybrideval
