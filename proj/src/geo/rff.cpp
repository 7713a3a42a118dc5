// SPDX-License-Identifier: Apache-2.0
#include "geoprox/geo/rff.hpp"

#include "geoprox/errors.hpp"

#include <algorithm>
#include <numbers>

namespace geoprox::geo {

RffBank::RffBank(std::vector<RffLevel> levels) : levels_(std::move(levels))
{
    std::stable_sort(levels_.begin(), levels_.end(),
                     [](const RffLevel& a, const RffLevel& b) { return a.sigma < b.sigma; });
    for (const auto& l : levels_) {
        const auto d = static_cast<int>(l.freqs.cols());
        if (input_dim_ != 0 && d != input_dim_) {
            throw DimensionError("rff: levels disagree on input dimension");
        }
        input_dim_ = d;
    }
}

RffBank RffBank::sample(std::span<const double> sigmas, int freqs_per_level, int input_dim, std::mt19937_64& rng)
{
    if (freqs_per_level <= 0 || input_dim <= 0) {
        throw ConfigError("rff: frequencies per level and input dimension must be positive");
    }
    std::vector<RffLevel> levels;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double s : sigmas) {
        if (!(s > 0.0)) {
            throw ConfigError("rff: scales must be positive");
        }
        RffLevel l{s, nd::Matrix(freqs_per_level, input_dim)};
        for (Eigen::Index i = 0; i < l.freqs.size(); ++i) {
            l.freqs.data()[i] = s * normal(rng);
        }
        levels.push_back(std::move(l));
    }
    return RffBank(std::move(levels));
}

int RffBank::output_dim() const noexcept
{
    int n = 0;
    for (const auto& l : levels_) {
        n += 2 * static_cast<int>(l.freqs.rows());
    }
    return n;
}

nd::Matrix RffBank::encode(const nd::Matrix& points) const
{
    if (!levels_.empty() && points.cols() != input_dim_) {
        throw DimensionError("rff: expected " + std::to_string(input_dim_) + " input columns, got " +
                             std::to_string(points.cols()));
    }
    nd::Matrix out(points.rows(), output_dim());
    Eigen::Index at = 0;
    for (const auto& l : levels_) {
        const auto r = l.freqs.rows();
        nd::Matrix phase(points.rows(), r);
        phase.noalias() = points * l.freqs.transpose();
        phase *= 2.0 * std::numbers::pi;
        out.middleCols(at, r) = phase.array().cos().matrix();
        out.middleCols(at + r, r) = phase.array().sin().matrix();
        at += 2 * r;
    }
    return out;
}

Eigen::RowVectorXd rff_encode(const EqualEarthPoint& p, const RffBank& bank)
{
    nd::Matrix pt(1, 2);
    pt << p.x, p.y;
    return bank.encode(pt).row(0);
}

} // namespace geoprox::geo
