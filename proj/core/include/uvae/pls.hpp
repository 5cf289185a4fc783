#pragma once

#include "uvae/tensor.hpp"

namespace uvae {

/// Partial least squares (PLS2) fit via NIPALS with X deflation.
struct PlsModel {
    std::size_t components = 0;
    Tensor x_mean, y_mean;
    Tensor weights;      // p x k, column per component
    Tensor x_loadings;   // p x k
    Tensor y_loadings;   // q x k
    Tensor coefficients; // p x q, centered-space regression map
    Tensor scores;       // n x k (training scores, kept for diagnostics)
};

/// NIPALS extraction of k components. Deterministic: the score iteration
/// starts from the Y column with the largest variance. Errors on
/// zero-variance X and on components that fail to converge within the
/// iteration cap.
PlsModel pls_fit(const Tensor& x, const Tensor& y, std::size_t k);

Tensor pls_predict(const PlsModel& model, const Tensor& x);

/// Row-wise clamp-to-zero and renormalize, so predictions can be scored as
/// distributions.
Tensor project_rows_to_simplex(const Tensor& y);

} // namespace uvae
