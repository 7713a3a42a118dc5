// SPDX-License-Identifier: Apache-2.0
#include "geoprox/fusion/baselines.hpp"

#include "geoprox/errors.hpp"

#include <Eigen/Cholesky>

namespace geoprox::fusion {

Eigen::VectorXd OlsFit::predict(const Eigen::MatrixXd& x) const
{
    if (x.cols() != coef.size()) {
        throw DimensionError("ols: " + std::to_string(x.cols()) + " columns, fitted on " +
                             std::to_string(coef.size()));
    }
    return (x * coef).array() + intercept;
}

OlsFit fit_ols(const Eigen::MatrixXd& x, std::span<const double> y)
{
    const auto n = x.rows();
    if (static_cast<std::size_t>(n) != y.size()) {
        throw DimensionError("ols: design has " + std::to_string(n) + " rows for " + std::to_string(y.size()) +
                             " targets");
    }
    if (n == 0) {
        throw DataError("ols: no rows");
    }
    Eigen::MatrixXd design(n, x.cols() + 1);
    design.leftCols(x.cols()) = x;
    design.col(x.cols()).setOnes();
    const Eigen::Map<const Eigen::VectorXd> target(y.data(), n);

    Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::VectorXd rhs = design.transpose() * target;
    OlsFit fit;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-12) {
        gram.diagonal().array() += 1e-8;
        ldlt.compute(gram);
        fit.ridge_used = true;
    }
    const Eigen::VectorXd beta = ldlt.solve(rhs);
    fit.coef = beta.head(x.cols());
    fit.intercept = beta(x.cols());
    return fit;
}

RegressionResult proxy_only_regression(const Eigen::MatrixXd& z_train, std::span<const double> y_train,
                                       const Eigen::MatrixXd& z_test, std::span<const double> y_test)
{
    RegressionResult r;
    r.fit = fit_ols(z_train, y_train);
    const Eigen::VectorXd yhat = r.fit.predict(z_test);
    r.test = metrics::compute_metrics(std::span(yhat.data(), static_cast<std::size_t>(yhat.size())), y_test);
    return r;
}

} // namespace geoprox::fusion
