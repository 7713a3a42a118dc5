// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/io/points.hpp"
#include "geoprox/io/proxy_field.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace geoprox::io {

/// Column-wise z-score with population standard deviation.
struct ZScore {
    std::vector<std::string> names;
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd std;

    [[nodiscard]] Eigen::Index size() const noexcept { return mean.size(); }
    [[nodiscard]] Eigen::RowVectorXd apply(const Eigen::RowVectorXd& x) const;
    [[nodiscard]] Eigen::RowVectorXd invert(const Eigen::RowVectorXd& z) const;
    /// Row-wise versions over an n×k matrix.
    [[nodiscard]] Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& x) const;
    [[nodiscard]] Eigen::MatrixXd invert_rows(const Eigen::MatrixXd& z) const;

    /// Throws DataError naming the first constant column.
    [[nodiscard]] static ZScore fit(const Eigen::MatrixXd& rows, std::vector<std::string> names);
};

struct NormalizationStats {
    ZScore features;
    ZScore target;
    ZScore proxy;  // empty when no field is in play

    [[nodiscard]] double apply_target(double y) const { return (y - target.mean(0)) / target.std(0); }
    [[nodiscard]] double invert_target(double z) const { return z * target.std(0) + target.mean(0); }
};

/// Statistics from the given (training) samples only. Proxy statistics come
/// from the field sampled at those samples' space-time points; points where
/// the field is missing are skipped.
[[nodiscard]] NormalizationStats fit_normalization(std::span<const LabeledSample> train,
                                                   const std::vector<std::string>& feature_names,
                                                   const ProxyField* field = nullptr);

} // namespace geoprox::io
