// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/geo/equal_earth.hpp"
#include "geoprox/nd/tensor.hpp"

#include <random>
#include <span>
#include <vector>

namespace geoprox::geo {

/// One scale of a random Fourier feature bank: `freqs` is r x input_dim with
/// entries drawn from Normal(0, sigma^2).
struct RffLevel {
    double sigma = 1.0;
    nd::Matrix freqs;
};

/// Fixed multi-scale random Fourier features. For input p and level k the
/// features are [cos(2 pi W_k p), sin(2 pi W_k p)]; levels are concatenated in
/// ascending sigma.
class RffBank {
public:
    RffBank() = default;
    explicit RffBank(std::vector<RffLevel> levels);

    static RffBank sample(std::span<const double> sigmas, int freqs_per_level, int input_dim, std::mt19937_64& rng);

    /// points: n x input_dim. Returns n x output_dim().
    [[nodiscard]] nd::Matrix encode(const nd::Matrix& points) const;

    [[nodiscard]] int input_dim() const noexcept { return input_dim_; }
    [[nodiscard]] int output_dim() const noexcept;
    [[nodiscard]] const std::vector<RffLevel>& levels() const noexcept { return levels_; }
    [[nodiscard]] bool empty() const noexcept { return levels_.empty(); }

private:
    std::vector<RffLevel> levels_;
    int input_dim_ = 0;
};

/// Single-point convenience over a 2-D bank.
[[nodiscard]] Eigen::RowVectorXd rff_encode(const EqualEarthPoint& p, const RffBank& bank);

} // namespace geoprox::geo
