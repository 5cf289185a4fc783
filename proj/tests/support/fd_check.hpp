#pragma once

// Central finite-difference comparison against an analytic ParamSet-shaped
// gradient. The objective callback must be a pure function of the params
// (fixed noise inside).

#include <cmath>
#include <functional>
#include <string>

#include "uvae/param_set.hpp"

namespace testsupport {

struct FdResult {
    bool pass = true;
    double max_excess = 0.0;  // worst |ad-fd| minus the allowed tolerance
    double worst_ad = 0.0;
    double worst_fd = 0.0;
    std::string worst_param;
    std::size_t checked = 0;
};

inline FdResult fd_compare(const std::function<double(const uvae::ParamSet&)>& f,
                           const uvae::ParamSet& params, const uvae::ParamSet& analytic,
                           double step = 1e-6, double rel_tol = 1e-4, double abs_floor = 1e-8) {
    FdResult result;
    for (const auto& [name, value] : params.values) {
        const uvae::Tensor& ad = analytic.at(name);
        for (std::size_t i = 0; i < value.size(); ++i) {
            uvae::ParamSet plus = params;
            uvae::ParamSet minus = params;
            plus.values.at(name)[i] += step;
            minus.values.at(name)[i] -= step;
            double fd = (f(plus) - f(minus)) / (2.0 * step);
            double tol = abs_floor + rel_tol * std::max(std::abs(ad[i]), std::abs(fd));
            double excess = std::abs(ad[i] - fd) - tol;
            ++result.checked;
            if (excess > result.max_excess) {
                result.max_excess = excess;
                result.worst_param = name + "[" + std::to_string(i) + "]";
                result.worst_ad = ad[i];
                result.worst_fd = fd;
                if (excess > 0.0) result.pass = false;
            }
        }
    }
    return result;
}

} // namespace testsupport
