#include <doctest.h>

#include "hybrideval/clusterqual.hpp"
#include "hybrideval/error.hpp"
#include "hybrideval/tsne.hpp"
#include "test_support.hpp"

#include <numeric>

using namespace hybrideval;

namespace {

// Perplexity of a Gaussian row with bandwidth sigma, in long double.
long double row_perplexity(const std::vector<double>& d, long double sigma) {
    std::vector<long double> w;
    const long double dmin = *std::min_element(d.begin(), d.end());
    long double z = 0;
    for (double v : d) {
        w.push_back(std::exp(-(v - dmin) / (2 * sigma * sigma)));
        z += w.back();
    }
    long double h = 0;
    for (long double x : w) {
        const long double p = x / z;
        if (p > 0) h -= p * std::log2(p);
    }
    return std::exp2(h);
}

// Bisection on sigma until the bracket is narrower than 1e-8 relative.
double sigma_oracle(const std::vector<double>& d, double perplexity) {
    long double lo = 1e-6, hi = 1e6;
    while ((hi - lo) > 1e-8L * lo) {
        const long double mid = std::sqrt(lo * hi);
        if (row_perplexity(d, mid) < perplexity) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return static_cast<double>(std::sqrt(lo * hi));
}

double entropy_bits(const std::vector<double>& p) {
    double h = 0;
    for (double v : p) {
        if (v > 0) h -= v * std::log2(v);
    }
    return h;
}

// KL(P || Q(Y)) evaluated from scratch.
double kl_oracle(const Matrix& p, const Matrix& y) {
    const std::size_t n = y.rows;
    double z = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) z += 1.0 / (1.0 + std::pow(testing::euclid(y, i, j), 2));
        }
    }
    double kl = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || p(i, j) <= 0) continue;
            const double q = 1.0 / (1.0 + std::pow(testing::euclid(y, i, j), 2)) / z;
            kl += p(i, j) * std::log(p(i, j) / q);
        }
    }
    return kl;
}

Matrix random_joint(std::size_t n, std::uint64_t seed) {
    auto raw = testing::random_matrix(n, n, seed);
    Matrix p(n, n);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            p(i, j) = std::abs(raw(i, j)) + std::abs(raw(j, i)) + 0.01;
            total += p(i, j);
        }
    }
    for (auto& v : p.data) v /= total;
    return p;
}

double relative_fd_error(std::size_t n, std::uint64_t seed) {
    const Matrix p = random_joint(n, seed);
    Matrix y = testing::random_matrix(n, 2, seed + 1000, 2.0);
    const Matrix g = tsne_gradient(p, tsne_low_dim_affinities(y), y);
    const double h = 1e-5;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < 2; ++k) {
            const double keep = y(i, k);
            y(i, k) = keep + h;
            const double up = kl_oracle(p, y);
            y(i, k) = keep - h;
            const double down = kl_oracle(p, y);
            y(i, k) = keep;
            const double fd = (up - down) / (2 * h);
            num += (g(i, k) - fd) * (g(i, k) - fd);
            den += fd * fd;
        }
    }
    return std::sqrt(num / den);
}

double silhouette_of(const Matrix& coords, const std::vector<std::size_t>& labels) {
    return silhouette({coords, labels}).mean;
}

Matrix rotate_first_plane(const Matrix& x, double angle) {
    Matrix r = x;
    const double c = std::cos(angle), s = std::sin(angle);
    for (std::size_t i = 0; i < x.rows; ++i) {
        r(i, 0) = c * x(i, 0) - s * x(i, 1);
        r(i, 1) = s * x(i, 0) + c * x(i, 1);
    }
    return r;
}

// Half turn in the (u, v) plane. Negation is exact, and every squared
// coordinate difference keeps its bits and its place in the sum.
Matrix half_turn(const Matrix& x, std::size_t u, std::size_t v) {
    Matrix r = x;
    for (std::size_t i = 0; i < x.rows; ++i) {
        r(i, u) = -x(i, u);
        r(i, v) = -x(i, v);
    }
    return r;
}

}  // namespace

TEST_CASE("calibrated rows hit the target perplexity") {
    const auto x = testing::random_matrix(200, 10, 12);
    const auto d = pairwise_sq_dists(x);
    for (std::size_t i = 0; i < 200; ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < 200; ++j) {
            if (j != i) row.push_back(d(i, j));
        }
        const auto r = perplexity_calibration(row, 30.0);
        REQUIRE(r.converged);
        CHECK(std::abs(std::exp2(entropy_bits(r.probs)) - 30.0) < 1e-3);
        CHECK(std::accumulate(r.probs.begin(), r.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("equidistant neighbors give a uniform row") {
    const std::vector<double> row{4.0, 4.0, 4.0};
    const auto r = perplexity_calibration(row, 3.0);
    for (double p : r.probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(r.degenerate);
}

TEST_CASE("sigma agrees with a high-precision bisection") {
    // Row 0 of six points on a skewed line.
    const double xs[] = {0.0, 0.3, 0.9, 1.4, 2.6, 4.0};
    std::vector<double> row;
    for (int j = 1; j < 6; ++j) row.push_back((xs[j] - xs[0]) * (xs[j] - xs[0]));
    const double oracle = sigma_oracle(row, 2.0);
    CHECK(std::abs(row_perplexity(row, oracle) - 2.0) < 1e-7);

    const auto tight = perplexity_calibration(row, 2.0, 1e-12, 200);
    CHECK(tight.sigma == doctest::Approx(oracle).epsilon(1e-8));
    const auto standard = perplexity_calibration(row, 2.0);
    CHECK(standard.sigma == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("joint probabilities are a symmetric distribution") {
    const auto d = pairwise_sq_dists(testing::random_matrix(60, 8, 3));
    const auto p = tsne_joint_probabilities(d, 15.0);
    double total = 0;
    for (std::size_t i = 0; i < 60; ++i) {
        CHECK(p(i, i) == 0.0);
        for (std::size_t j = 0; j < 60; ++j) {
            CHECK(p(i, j) == p(j, i));
            total += p(i, j);
        }
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("gradient matches central finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        CAPTURE(seed);
        CHECK(relative_fd_error(6, seed) < 1e-4);
        CHECK(relative_fd_error(8, seed + 50) < 1e-4);
    }
}

TEST_CASE("gradient vanishes at P = Q and sums to zero") {
    const auto y = testing::random_matrix(7, 2, 4);
    const auto q = tsne_low_dim_affinities(y);
    const auto g0 = tsne_gradient(q, q, y);
    for (double v : g0.data) CHECK(std::abs(v) < 1e-15);

    const auto g = tsne_gradient(random_joint(7, 9), q, y);
    for (std::size_t k = 0; k < 2; ++k) {
        double s = 0;
        for (std::size_t i = 0; i < 7; ++i) s += g(i, k);
        CHECK(std::abs(s) < 1e-14);
    }
    CHECK(tsne_kl(random_joint(7, 9), q) == doctest::Approx(kl_oracle(random_joint(7, 9), y)).epsilon(1e-12));
}

static void check_trailing_monotone(const ProjectionResult& r) {
    REQUIRE(r.loss_trace.size() > 100);
    for (std::size_t t = r.loss_trace.size() - 100; t < r.loss_trace.size(); ++t) {
        CHECK(r.loss_trace[t] <= r.loss_trace[t - 1] + 1e-6);
    }
}

TEST_CASE("two separated blobs embed as two clusters") {
    const auto emb = testing::two_blobs(20, 16, 10.0, 21);
    TsneParams params;
    params.perplexity = 10.0;
    params.seed = 3;
    const auto r = tsne_run(emb, params);
    REQUIRE(r.coords.rows == 40);
    REQUIRE(r.coords.cols == 2);
    for (double v : r.coords.data) REQUIRE(std::isfinite(v));
    CHECK(silhouette_of(r.coords, emb.labels) > 0.7);
    REQUIRE(r.loss_trace.size() == params.total_iters + 1);
    CHECK(r.final_loss() < r.loss_trace.front());
}

TEST_CASE("the loss settles over the final 100 iterations") {
    const auto emb = testing::two_blobs(200, 16, 10.0, 21);
    TsneParams params;
    params.seed = 1;
    check_trailing_monotone(tsne_run(emb, params));

    // Forty points with a gentler step.
    const auto small = testing::two_blobs(20, 16, 10.0, 21);
    params.perplexity = 10.0;
    params.learning_rate = 50.0;
    for (std::uint64_t seed : {3, 4, 5}) {
        params.seed = seed;
        check_trailing_monotone(tsne_run(small, params));
    }
}

// With only forty points the default step of 200 is too large for the
// momentum phase to settle: the tail keeps oscillating by up to ~1e-4.
TEST_CASE("forty points at the default step settle monotonically" * doctest::should_fail()) {
    const auto emb = testing::two_blobs(20, 16, 10.0, 21);
    TsneParams params;
    params.perplexity = 10.0;
    params.seed = 3;
    check_trailing_monotone(tsne_run(emb, params));
}

TEST_CASE("runs are reproducible from the seed") {
    const auto emb = testing::two_blobs(15, 6, 5.0, 2);
    TsneParams params;
    params.perplexity = 5.0;
    params.total_iters = 300;
    params.seed = 8;
    const auto a = tsne_run(emb, params);
    const auto b = tsne_run(emb, params);
    CHECK(a.coords == b.coords);
    CHECK(a.loss_trace == b.loss_trace);
    params.seed = 9;
    CHECK_FALSE(tsne_run(emb, params).coords == a.coords);
}

TEST_CASE("rotating the input leaves P unchanged") {
    const auto emb = testing::two_blobs(15, 6, 5.0, 2);
    const auto rotated = rotate_first_plane(emb.vectors, 0.7);
    const auto p1 = tsne_joint_probabilities(pairwise_sq_dists(emb.vectors), 5.0);
    const auto p2 = tsne_joint_probabilities(pairwise_sq_dists(rotated), 5.0);
    for (std::size_t i = 0; i < p1.data.size(); ++i) CHECK(std::abs(p1.data[i] - p2.data[i]) < 1e-9);
}

TEST_CASE("an exact rotation leaves the whole run unchanged") {
    // With bit-identical distances the run must be bit-identical too.
    const auto emb = testing::two_blobs(15, 6, 5.0, 2);
    auto turned = emb;
    turned.vectors = half_turn(emb.vectors, 1, 3);
    TsneParams params;
    params.perplexity = 5.0;
    params.seed = 8;
    const auto a = tsne_run(emb, params);
    const auto b = tsne_run(turned, params);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.coords == b.coords);
}

// A general rotation perturbs distances in the last bit. The optimizer
// amplifies that roughly exponentially (about 1e-10 after 10 iterations,
// order 0.1 after 30 on this fixture), so full-run traces cannot agree to
// 1e-9. Kept as an expected failure.
TEST_CASE("a general rotation leaves the full loss trace unchanged" * doctest::should_fail()) {
    const auto emb = testing::two_blobs(15, 6, 5.0, 2);
    auto rotated = emb;
    rotated.vectors = rotate_first_plane(emb.vectors, 0.7);
    TsneParams params;
    params.perplexity = 5.0;
    params.seed = 8;
    const auto a = tsne_run(emb, params);
    const auto b = tsne_run(rotated, params);
    double worst = 0;
    for (std::size_t t = 0; t < a.loss_trace.size(); ++t) worst = std::max(worst, std::abs(a.loss_trace[t] - b.loss_trace[t]));
    CHECK(worst < 1e-9);
}

TEST_CASE("infeasible perplexity fails before computing") {
    const auto emb = testing::two_blobs(5, 4, 3.0, 1);
    TsneParams params;
    try {
        tsne_run(emb, params);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Projection);
        const std::string msg = e.what();
        CHECK(msg.find("N=10") != std::string::npos);
        CHECK(msg.find("(N-1)/3 = 3") != std::string::npos);
    }
    CHECK(max_perplexity(91) == 30.0);
}
