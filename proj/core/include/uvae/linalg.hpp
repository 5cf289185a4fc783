#pragma once

#include <vector>

#include "uvae/tensor.hpp"

namespace uvae {

// Rank-2 tensors as matrices, row-major. Small-problem routines only.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor matvec(const Tensor& a, const Tensor& x);

/// Solve A x = b by Gaussian elimination with partial pivoting.
Tensor solve_linear(const Tensor& a, const Tensor& b);

struct EigenResult {
    std::vector<double> values;          // descending
    std::vector<Tensor> vectors;         // matching unit eigenvectors
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
EigenResult jacobi_eigen_sym(const Tensor& a, double tol = 1e-12, int max_sweeps = 100);

/// Covariance matrix of rows (population normalization).
Tensor row_covariance(const std::vector<Tensor>& rows);

/// Projection of rows onto the top `k` principal components.
std::vector<Tensor> pca_project(const std::vector<Tensor>& rows, std::size_t k);

} // namespace uvae
