// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/metrics/metrics.hpp"

#include <Eigen/Core>

#include <span>

namespace geoprox::fusion {

/// Least squares y = X a + b via the normal equations. When they are
/// numerically singular a ridge penalty of 1e-8 is added and reported.
struct OlsFit {
    Eigen::VectorXd coef;
    double intercept = 0.0;
    bool ridge_used = false;

    [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

[[nodiscard]] OlsFit fit_ols(const Eigen::MatrixXd& x, std::span<const double> y);

struct RegressionResult {
    OlsFit fit;
    metrics::MetricReport test;
};

/// Proxy values z (n x m) at labeled points to targets y, fit on train and
/// scored on test.
[[nodiscard]] RegressionResult proxy_only_regression(const Eigen::MatrixXd& z_train, std::span<const double> y_train,
                                                     const Eigen::MatrixXd& z_test, std::span<const double> y_test);

} // namespace geoprox::fusion
