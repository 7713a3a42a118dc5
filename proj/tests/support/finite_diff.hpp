// SPDX-License-Identifier: Apache-2.0
#pragma once

// Central finite-difference oracle, independent of the reverse-mode engine.

#include "geoprox/nd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace geoprox::testsupport {

/// Numerical gradient of `loss` w.r.t. every entry of `param`, perturbing the
/// parameter in place and restoring it afterwards.
inline nd::Matrix central_difference(nd::Parameter& param, const std::function<double()>& loss, double step = 1e-6)
{
    nd::Matrix g(param.value.matrix().rows(), param.value.matrix().cols());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        double& w = param.value.data()[i];
        const double saved = w;
        w = saved + step;
        const double up = loss();
        w = saved - step;
        const double down = loss();
        w = saved;
        g.data()[i] = (up - down) / (2.0 * step);
    }
    return g;
}

/// Relative error ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const nd::Matrix& a, const nd::Matrix& b, double floor = 1e-8)
{
    const double denom = std::max({a.norm(), b.norm(), floor});
    return (a - b).norm() / denom;
}

} // namespace geoprox::testsupport
