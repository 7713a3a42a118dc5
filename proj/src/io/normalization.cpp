// SPDX-License-Identifier: Apache-2.0
#include "geoprox/io/normalization.hpp"

#include "geoprox/errors.hpp"

#include <cmath>

namespace geoprox::io {

Eigen::RowVectorXd ZScore::apply(const Eigen::RowVectorXd& x) const
{
    if (x.size() != size()) {
        throw DimensionError("normalization: got " + std::to_string(x.size()) + " columns, expected " +
                             std::to_string(size()));
    }
    return (x - mean).cwiseQuotient(std);
}

Eigen::RowVectorXd ZScore::invert(const Eigen::RowVectorXd& z) const
{
    if (z.size() != size()) {
        throw DimensionError("normalization: got " + std::to_string(z.size()) + " columns, expected " +
                             std::to_string(size()));
    }
    return z.cwiseProduct(std) + mean;
}

Eigen::MatrixXd ZScore::apply_rows(const Eigen::MatrixXd& x) const
{
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out.row(i) = apply(x.row(i));
    }
    return out;
}

Eigen::MatrixXd ZScore::invert_rows(const Eigen::MatrixXd& z) const
{
    Eigen::MatrixXd out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        out.row(i) = invert(z.row(i));
    }
    return out;
}

ZScore ZScore::fit(const Eigen::MatrixXd& rows, std::vector<std::string> names)
{
    if (rows.rows() == 0) {
        throw DataError("normalization: no rows to fit");
    }
    if (static_cast<Eigen::Index>(names.size()) != rows.cols()) {
        throw DimensionError("normalization: column names do not match data width");
    }
    ZScore z;
    z.names = std::move(names);
    z.mean = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - z.mean;
    z.std = (centered.array().square().colwise().sum() / static_cast<double>(rows.rows())).sqrt();
    for (Eigen::Index j = 0; j < z.std.size(); ++j) {
        if (!(z.std(j) > 0.0) || !std::isfinite(z.std(j))) {
            throw DataError("normalization: column '" + z.names[static_cast<std::size_t>(j)] +
                            "' has zero variance");
        }
    }
    return z;
}

NormalizationStats fit_normalization(std::span<const LabeledSample> train,
                                     const std::vector<std::string>& feature_names, const ProxyField* field)
{
    if (train.empty()) {
        throw DataError("normalization: training split is empty");
    }
    const auto n = static_cast<Eigen::Index>(train.size());
    const auto k = static_cast<Eigen::Index>(feature_names.size());
    Eigen::MatrixXd x(n, k);
    Eigen::MatrixXd y(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = train[static_cast<std::size_t>(i)];
        if (s.features.size() != k) {
            throw DimensionError("normalization: sample '" + s.id + "' has " + std::to_string(s.features.size()) +
                                 " features, expected " + std::to_string(k));
        }
        x.row(i) = s.features;
        y(i, 0) = s.y;
    }
    NormalizationStats stats;
    stats.features = ZScore::fit(x, feature_names);
    stats.target = ZScore::fit(y, {"y"});
    if (field != nullptr) {
        Eigen::MatrixXd z(n, field->channel_count());
        Eigen::Index used = 0;
        for (const auto& s : train) {
            if (auto v = field->sample(s.lon, s.lat, s.date.days())) {
                z.row(used++) = *v;
            }
        }
        stats.proxy = ZScore::fit(z.topRows(used), field->channels());
    }
    return stats;
}

} // namespace geoprox::io
