#include "uvae/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uvae/errors.hpp"

namespace uvae {

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
        throw ContractError("matmul: incompatible shapes");
    }
    std::size_t n = a.extent(0), k = a.extent(1), m = b.extent(1);
    Tensor out = Tensor::zeros({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            double av = a.data[i * k + kk];
            if (av == 0.0) continue;
            const double* brow = &b.data[kk * m];
            double* orow = &out.data[i * m];
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ContractError("transpose: rank-2 only");
    std::size_t n = a.extent(0), m = a.extent(1);
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) out.data[j * n + i] = a.data[i * m + j];
    }
    return out;
}

Tensor matvec(const Tensor& a, const Tensor& x) {
    if (a.rank() != 2 || a.extent(1) != x.size()) throw ContractError("matvec: incompatible shapes");
    std::size_t n = a.extent(0), m = a.extent(1);
    Tensor out = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const double* row = &a.data[i * m];
        for (std::size_t j = 0; j < m; ++j) acc += row[j] * x[j];
        out[i] = acc;
    }
    return out;
}

Tensor solve_linear(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || a.extent(0) != a.extent(1) || a.extent(0) != b.size()) {
        throw ContractError("solve_linear: shape mismatch");
    }
    std::size_t n = a.extent(0);
    Tensor m = a;
    Tensor x = b;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(m.data[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double v = std::abs(m.data[r * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best < 1e-14) throw NumericError("solve_linear: singular matrix");
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m.data[col * n + j], m.data[pivot * n + j]);
            std::swap(x[col], x[pivot]);
        }
        double d = m.data[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = m.data[r * n + col] / d;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) m.data[r * n + j] -= f * m.data[col * n + j];
            x[r] -= f * x[col];
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        double acc = x[col];
        for (std::size_t j = col + 1; j < n; ++j) acc -= m.data[col * n + j] * x[j];
        x[col] = acc / m.data[col * n + col];
    }
    return x;
}

EigenResult jacobi_eigen_sym(const Tensor& a, double tol, int max_sweeps) {
    if (a.rank() != 2 || a.extent(0) != a.extent(1)) throw ContractError("jacobi: square only");
    std::size_t n = a.extent(0);
    Tensor m = a;
    Tensor v = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) v.data[i * n + i] = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) off += m.data[i * n + j] * m.data[i * n + j];
        }
        if (std::sqrt(off) < tol) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = m.data[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double app = m.data[p * n + p], aqq = m.data[q * n + q];
                double theta = 0.5 * (aqq - app) / apq;
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double mkp = m.data[k * n + p], mkq = m.data[k * n + q];
                    m.data[k * n + p] = c * mkp - s * mkq;
                    m.data[k * n + q] = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double mpk = m.data[p * n + k], mqk = m.data[q * n + k];
                    m.data[p * n + k] = c * mpk - s * mqk;
                    m.data[q * n + k] = s * mpk + c * mqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v.data[k * n + p], vkq = v.data[k * n + q];
                    v.data[k * n + p] = c * vkp - s * vkq;
                    v.data[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = m.data[i * n + i];
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    EigenResult out;
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t idx = order[r];
        out.values.push_back(diag[idx]);
        Tensor vec = Tensor::zeros({n});
        for (std::size_t k = 0; k < n; ++k) vec[k] = v.data[k * n + idx];
        out.vectors.push_back(std::move(vec));
    }
    return out;
}

Tensor row_covariance(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw ContractError("row_covariance: no rows");
    std::size_t d = rows[0].size();
    Tensor mean = Tensor::zeros({d});
    for (const Tensor& r : rows) {
        for (std::size_t i = 0; i < d; ++i) mean[i] += r[i];
    }
    for (double& v : mean.data) v /= static_cast<double>(rows.size());
    Tensor cov = Tensor::zeros({d, d});
    for (const Tensor& r : rows) {
        for (std::size_t i = 0; i < d; ++i) {
            double di = r[i] - mean[i];
            for (std::size_t j = i; j < d; ++j) {
                cov.data[i * d + j] += di * (r[j] - mean[j]);
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double v = cov.data[i * d + j] / static_cast<double>(rows.size());
            cov.data[i * d + j] = v;
            cov.data[j * d + i] = v;
        }
    }
    return cov;
}

std::vector<Tensor> pca_project(const std::vector<Tensor>& rows, std::size_t k) {
    Tensor cov = row_covariance(rows);
    EigenResult eig = jacobi_eigen_sym(cov);
    std::size_t d = rows[0].size();
    k = std::min(k, eig.vectors.size());

    Tensor mean = Tensor::zeros({d});
    for (const Tensor& r : rows) {
        for (std::size_t i = 0; i < d; ++i) mean[i] += r[i];
    }
    for (double& v : mean.data) v /= static_cast<double>(rows.size());

    std::vector<Tensor> out;
    for (const Tensor& r : rows) {
        Tensor p = Tensor::zeros({k});
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < d; ++i) acc += (r[i] - mean[i]) * eig.vectors[c][i];
            p[c] = acc;
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace uvae
