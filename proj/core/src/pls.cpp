#include "uvae/pls.hpp"

#include <cmath>

#include "uvae/errors.hpp"
#include "uvae/linalg.hpp"

namespace uvae {

namespace {
constexpr int kMaxIterations = 500;
constexpr double kConvergenceTol = 1e-12;
} // namespace

PlsModel pls_fit(const Tensor& x, const Tensor& y, std::size_t k) {
    if (x.rank() != 2 || y.rank() != 2) throw ContractError("pls_fit: X and Y must be matrices");
    std::size_t n = x.extent(0), p = x.extent(1), q = y.extent(1);
    if (y.extent(0) != n) throw ContractError("pls_fit: X and Y row counts differ");
    if (k < 1) throw ContractError("pls_fit: k must be at least 1");
    if (k > std::min(n, p)) throw ContractError("pls_fit: k exceeds min(rows, columns)");

    PlsModel model;
    model.components = k;
    model.x_mean = Tensor::zeros({p});
    model.y_mean = Tensor::zeros({q});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) model.x_mean[j] += x.data[i * p + j];
        for (std::size_t j = 0; j < q; ++j) model.y_mean[j] += y.data[i * q + j];
    }
    for (double& v : model.x_mean.data) v /= static_cast<double>(n);
    for (double& v : model.y_mean.data) v /= static_cast<double>(n);

    Tensor e = Tensor::zeros({n, p});
    Tensor f = Tensor::zeros({n, q});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) e.data[i * p + j] = x.data[i * p + j] - model.x_mean[j];
        for (std::size_t j = 0; j < q; ++j) f.data[i * q + j] = y.data[i * q + j] - model.y_mean[j];
    }

    double x_var = 0.0;
    for (double v : e.data) x_var += v * v;
    if (x_var < 1e-24) throw NumericError("pls_fit: X has zero variance");

    // Start each score iteration from the Y column with the largest variance.
    std::size_t start_col = 0;
    double best_var = -1.0;
    for (std::size_t j = 0; j < q; ++j) {
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += f.data[i * q + j] * f.data[i * q + j];
        if (var > best_var) {
            best_var = var;
            start_col = j;
        }
    }

    model.weights = Tensor::zeros({p, k});
    model.x_loadings = Tensor::zeros({p, k});
    model.y_loadings = Tensor::zeros({q, k});
    model.scores = Tensor::zeros({n, k});

    if (best_var < 1e-24) {
        // Constant response: the centered map is zero and predictions fall
        // back to the Y means.
        model.coefficients = Tensor::zeros({p, q});
        return model;
    }

    std::vector<double> u(n), w(p), w_prev(p), t(n), qv(q);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t i = 0; i < n; ++i) u[i] = f.data[i * q + start_col];
        std::fill(w_prev.begin(), w_prev.end(), 0.0);
        double t_dot = 0.0;
        bool converged = false;
        for (int iter = 0; iter < kMaxIterations; ++iter) {
            // w = E'u / ||E'u||
            std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double ui = u[i];
                if (ui == 0.0) continue;
                const double* row = &e.data[i * p];
                for (std::size_t j = 0; j < p; ++j) w[j] += row[j] * ui;
            }
            double norm = 0.0;
            for (double v : w) norm += v * v;
            norm = std::sqrt(norm);
            if (norm < 1e-150) {
                throw NumericError("pls_fit: component " + std::to_string(a + 1) +
                                   " degenerate (X deflated to zero)");
            }
            for (double& v : w) v /= norm;
            // t = E w
            t_dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                const double* row = &e.data[i * p];
                for (std::size_t j = 0; j < p; ++j) acc += row[j] * w[j];
                t[i] = acc;
                t_dot += acc * acc;
            }
            if (t_dot < 1e-300) {
                throw NumericError("pls_fit: component " + std::to_string(a + 1) +
                                   " produced zero scores");
            }
            // q = F't / (t't), u = F q / (q'q)
            std::fill(qv.begin(), qv.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double ti = t[i];
                const double* row = &f.data[i * q];
                for (std::size_t j = 0; j < q; ++j) qv[j] += row[j] * ti;
            }
            for (double& v : qv) v /= t_dot;
            double q_dot = 0.0;
            for (double v : qv) q_dot += v * v;
            if (q_dot < 1e-300) {
                throw NumericError("pls_fit: component " + std::to_string(a + 1) +
                                   " uncorrelated with Y");
            }
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                const double* row = &f.data[i * q];
                for (std::size_t j = 0; j < q; ++j) acc += row[j] * qv[j];
                u[i] = acc / q_dot;
            }
            double delta = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                double d = w[j] - w_prev[j];
                delta += d * d;
            }
            if (std::sqrt(delta) < kConvergenceTol) {
                converged = true;
                break;
            }
            w_prev = w;
        }
        if (!converged) {
            throw NumericError("pls_fit: component " + std::to_string(a + 1) +
                               " did not converge within " + std::to_string(kMaxIterations) +
                               " iterations");
        }
        // Loadings and X deflation.
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += e.data[i * p + j] * t[i];
            model.x_loadings.data[j * k + a] = acc / t_dot;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double ti = t[i];
            for (std::size_t j = 0; j < p; ++j) {
                e.data[i * p + j] -= ti * model.x_loadings.data[j * k + a];
            }
        }
        for (std::size_t j = 0; j < p; ++j) model.weights.data[j * k + a] = w[j];
        for (std::size_t j = 0; j < q; ++j) model.y_loadings.data[j * k + a] = qv[j];
        for (std::size_t i = 0; i < n; ++i) model.scores.data[i * k + a] = t[i];
    }

    // B = W (P'W)^-1 Q'
    Tensor ptw = matmul(transpose(model.x_loadings), model.weights);  // k x k
    Tensor qt = transpose(model.y_loadings);                          // k x q
    Tensor s = Tensor::zeros({k, q});
    for (std::size_t col = 0; col < q; ++col) {
        Tensor rhs = Tensor::zeros({k});
        for (std::size_t r = 0; r < k; ++r) rhs[r] = qt.data[r * q + col];
        Tensor sol = solve_linear(ptw, rhs);
        for (std::size_t r = 0; r < k; ++r) s.data[r * q + col] = sol[r];
    }
    model.coefficients = matmul(model.weights, s);
    return model;
}

Tensor pls_predict(const PlsModel& model, const Tensor& x) {
    if (x.rank() != 2) throw ContractError("pls_predict: X must be a matrix");
    std::size_t n = x.extent(0), p = x.extent(1);
    if (p != model.x_mean.size()) throw ContractError("pls_predict: column count mismatch");
    std::size_t q = model.y_mean.size();
    Tensor out = Tensor::zeros({n, q});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < q; ++j) {
            double acc = model.y_mean[j];
            for (std::size_t c = 0; c < p; ++c) {
                acc += (x.data[i * p + c] - model.x_mean[c]) * model.coefficients.data[c * q + j];
            }
            out.data[i * q + j] = acc;
        }
    }
    return out;
}

Tensor project_rows_to_simplex(const Tensor& y) {
    if (y.rank() != 2) throw ContractError("project_rows_to_simplex: matrix expected");
    std::size_t n = y.extent(0), q = y.extent(1);
    Tensor out = y;
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            double v = std::max(out.data[i * q + j], 0.0);
            out.data[i * q + j] = v;
            total += v;
        }
        if (total <= 0.0) {
            for (std::size_t j = 0; j < q; ++j) out.data[i * q + j] = 1.0 / static_cast<double>(q);
        } else {
            for (std::size_t j = 0; j < q; ++j) out.data[i * q + j] /= total;
        }
    }
    return out;
}

} // namespace uvae
