#include <cmath>

#include "doctest.h"
#include "uvae/errors.hpp"
#include "uvae/linalg.hpp"
#include "uvae/pls.hpp"
#include "uvae/rng.hpp"

using namespace uvae;

namespace {

Tensor random_matrix(std::size_t n, std::size_t m, Rng& rng) {
    return Tensor({n, m}, rng.normal_vec(n * m).data);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace

TEST_CASE("exact recovery of a noise-free linear map at full rank") {
    Rng rng(1);
    std::size_t n = 40, p = 6, q = 3;
    Tensor x = random_matrix(n, p, rng);
    Tensor b = random_matrix(p, q, rng);
    Tensor y = matmul(x, b);
    PlsModel model = pls_fit(x, y, p);
    Tensor y_hat = pls_predict(model, x);
    CHECK(max_abs_diff(y_hat, y) < 1e-8);
}

TEST_CASE("univariate first weight is proportional to X'y") {
    Rng rng(2);
    std::size_t n = 30, p = 5;
    Tensor x = random_matrix(n, p, rng);
    Tensor y = random_matrix(n, 1, rng);
    PlsModel model = pls_fit(x, y, 1);

    // Centered X'y, compared by cosine similarity up to sign.
    Tensor xc = x;
    Tensor x_mean = Tensor::zeros({p});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) x_mean[j] += x.data[i * p + j];
    }
    for (double& v : x_mean.data) v /= static_cast<double>(n);
    double y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) y_mean += y.data[i];
    y_mean /= static_cast<double>(n);
    Tensor xty = Tensor::zeros({p});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            xty[j] += (x.data[i * p + j] - x_mean[j]) * (y.data[i] - y_mean);
        }
    }
    double dot_wv = 0.0, nw = 0.0, nv = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double w = model.weights.data[j * 1 + 0];
        dot_wv += w * xty[j];
        nw += w * w;
        nv += xty[j] * xty[j];
    }
    double cosine = std::abs(dot_wv) / std::sqrt(nw * nv);
    CHECK(cosine > 1.0 - 1e-10);
}

TEST_CASE("constant responses predict their constant") {
    Rng rng(3);
    Tensor x = random_matrix(20, 4, rng);
    Tensor y = Tensor::full({20, 2}, 0.0);
    for (std::size_t i = 0; i < 20; ++i) {
        y.data[i * 2 + 0] = 3.5;
        y.data[i * 2 + 1] = -1.25;
    }
    PlsModel model = pls_fit(x, y, 2);
    Tensor y_hat = pls_predict(model, random_matrix(7, 4, rng));
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(y_hat.data[i * 2 + 0] == doctest::Approx(3.5).epsilon(1e-12));
        CHECK(y_hat.data[i * 2 + 1] == doctest::Approx(-1.25).epsilon(1e-12));
    }
}

TEST_CASE("an all-zero centered input predicts the response means") {
    Rng rng(4);
    std::size_t n = 25, p = 4, q = 2;
    Tensor x = random_matrix(n, p, rng);
    Tensor y = random_matrix(n, q, rng);
    PlsModel model = pls_fit(x, y, 2);
    Tensor at_mean = Tensor::zeros({1, p});
    for (std::size_t j = 0; j < p; ++j) at_mean.data[j] = model.x_mean[j];
    Tensor y_hat = pls_predict(model, at_mean);
    for (std::size_t j = 0; j < q; ++j) {
        CHECK(y_hat.data[j] == doctest::Approx(model.y_mean[j]).epsilon(1e-12));
    }
}

TEST_CASE("full-rank PLS agrees with the normal-equations solution") {
    Rng rng(5);
    std::size_t n = 50, p = 4, q = 2;
    Tensor x = random_matrix(n, p, rng);
    Tensor y = matmul(x, random_matrix(p, q, rng));
    // Add noise so the two solvers actually have work to agree on.
    for (double& v : y.data) v += 0.01 * rng.normal();

    PlsModel model = pls_fit(x, y, p);
    Tensor y_pls = pls_predict(model, x);

    // Centered least squares via the normal equations.
    Tensor xc = x, yc = y;
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x.data[i * p + j];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) xc.data[i * p + j] -= mean;
    }
    Tensor y_means = Tensor::zeros({q});
    for (std::size_t j = 0; j < q; ++j) {
        for (std::size_t i = 0; i < n; ++i) y_means[j] += y.data[i * q + j];
        y_means[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) yc.data[i * q + j] -= y_means[j];
    }
    Tensor xtx = matmul(transpose(xc), xc);
    Tensor xty = matmul(transpose(xc), yc);
    Tensor beta = Tensor::zeros({p, q});
    for (std::size_t col = 0; col < q; ++col) {
        Tensor rhs = Tensor::zeros({p});
        for (std::size_t r = 0; r < p; ++r) rhs[r] = xty.data[r * q + col];
        Tensor sol = solve_linear(xtx, rhs);
        for (std::size_t r = 0; r < p; ++r) beta.data[r * q + col] = sol[r];
    }
    Tensor y_ls = matmul(xc, beta);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            CHECK(y_pls.data[i * q + j] ==
                  doctest::Approx(y_ls.data[i * q + j] + y_means[j]).epsilon(1e-6));
        }
    }
}

TEST_CASE("component scores are mutually orthogonal") {
    Rng rng(6);
    std::size_t n = 40, p = 6, q = 3, k = 4;
    Tensor x = random_matrix(n, p, rng);
    Tensor y = matmul(x, random_matrix(p, q, rng));
    for (double& v : y.data) v += 0.05 * rng.normal();
    PlsModel model = pls_fit(x, y, k);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dot += model.scores.data[i * k + a] * model.scores.data[i * k + b];
            }
            CHECK(std::abs(dot) < 1e-8);
        }
    }
}

TEST_CASE("training error is non-increasing in the component count") {
    Rng rng(7);
    std::size_t n = 40, p = 6, q = 2;
    Tensor x = random_matrix(n, p, rng);
    Tensor y = matmul(x, random_matrix(p, q, rng));
    for (double& v : y.data) v += 0.1 * rng.normal();
    double prev = 1e300;
    for (std::size_t k = 1; k <= p; ++k) {
        PlsModel model = pls_fit(x, y, k);
        Tensor y_hat = pls_predict(model, x);
        double sse = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            double d = y_hat[i] - y[i];
            sse += d * d;
        }
        CHECK(sse <= prev + 1e-9);
        prev = sse;
    }
}

TEST_CASE("fit is invariant under row permutations") {
    Rng rng(8);
    std::size_t n = 30, p = 5, q = 2, k = 3;
    Tensor x = random_matrix(n, p, rng);
    Tensor y = matmul(x, random_matrix(p, q, rng));
    for (double& v : y.data) v += 0.05 * rng.normal();

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = (i * 7 + 3) % n;
    Tensor xp = Tensor::zeros({n, p}), yp = Tensor::zeros({n, q});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) xp.data[i * p + j] = x.data[perm[i] * p + j];
        for (std::size_t j = 0; j < q; ++j) yp.data[i * q + j] = y.data[perm[i] * q + j];
    }
    PlsModel a = pls_fit(x, y, k);
    PlsModel b = pls_fit(xp, yp, k);
    Tensor probe = random_matrix(10, p, rng);
    CHECK(max_abs_diff(pls_predict(a, probe), pls_predict(b, probe)) < 1e-8);
}

TEST_CASE("degenerate inputs error out") {
    Rng rng(9);
    Tensor x_flat = Tensor::full({10, 3}, 2.5);
    Tensor y = random_matrix(10, 2, rng);
    CHECK_THROWS_AS(pls_fit(x_flat, y, 1), NumericError);
    Tensor x = random_matrix(10, 3, rng);
    CHECK_THROWS_AS(pls_fit(x, y, 0), ContractError);
    CHECK_THROWS_AS(pls_fit(x, y, 4), ContractError);
    CHECK_THROWS_AS(pls_predict(pls_fit(x, y, 2), random_matrix(5, 7, rng)), ContractError);
}

TEST_CASE("simplex projection clamps and renormalizes rows") {
    Tensor y({2, 3}, {0.5, -0.1, 0.8, -1.0, -2.0, -3.0});
    Tensor p = project_rows_to_simplex(y);
    CHECK(p.data[0] == doctest::Approx(0.5 / 1.3));
    CHECK(p.data[1] == 0.0);
    CHECK(p.data[2] == doctest::Approx(0.8 / 1.3));
    // All-nonpositive rows fall back to uniform.
    for (std::size_t j = 3; j < 6; ++j) CHECK(p.data[j] == doctest::Approx(1.0 / 3));
}
