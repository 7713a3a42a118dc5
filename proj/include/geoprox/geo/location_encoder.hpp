// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/calendar.hpp"
#include "geoprox/domain.hpp"
#include "geoprox/geo/rff.hpp"
#include "geoprox/nd/graph.hpp"
#include "geoprox/nd/mlp.hpp"

#include <random>
#include <span>
#include <string>
#include <vector>

namespace geoprox::geo {

enum class TimeKind { none, day_of_year, year };

[[nodiscard]] TimeKind parse_time_kind(const std::string& text);
[[nodiscard]] std::string to_string(TimeKind kind);

/// Mean tropical year length used to place day-of-year on the unit circle.
inline constexpr double kDaysPerYear = 365.25;

/// Temporal feature map.
///
/// * day_of_year: theta = 2 pi d / 365.25, then an RFF bank over
///   (cos theta, sin theta).
/// * year: the calendar year rescaled linearly to [-1, 1] over
///   [year_min, year_max] (one feature).
/// * none: no features.
class TimeEncoder {
public:
    TimeEncoder() = default;
    TimeEncoder(TimeKind kind, RffBank bank, int year_min, int year_max);

    [[nodiscard]] TimeKind kind() const noexcept { return kind_; }
    [[nodiscard]] int output_dim() const noexcept;
    [[nodiscard]] const RffBank& bank() const noexcept { return bank_; }

    /// Features for a (possibly fractional) day of year; day_of_year kind only.
    [[nodiscard]] Eigen::RowVectorXd encode_day_of_year(double doy) const;
    [[nodiscard]] Eigen::RowVectorXd encode(const Date& date) const;

private:
    TimeKind kind_ = TimeKind::none;
    RffBank bank_;
    int year_min_ = 0;
    int year_max_ = 0;
};

[[nodiscard]] Eigen::RowVectorXd encode_time(const Date& date, const TimeEncoder& encoder);

struct LocationEncoderConfig {
    std::vector<double> sigmas{1.0, 4.0, 16.0, 64.0};
    int freqs_per_level = 32;
    TimeKind time_kind = TimeKind::day_of_year;
    std::vector<double> time_sigmas{1.0, 4.0};
    int time_freqs = 16;
    std::vector<int> hidden{128, 128};
    int out_dim = 64;
};

/// Location-time encoder: Equal Earth projection rescaled to [-1,1] over the
/// domain box, multi-scale spatial RFF, temporal features, and a trainable
/// trunk MLP producing e_loc. The RFF banks are fixed at construction; the
/// trunk parameters form the "loc_encoder" group.
class LocationTimeEncoder {
public:
    LocationTimeEncoder() = default;
    LocationTimeEncoder(const LocationEncoderConfig& cfg, const DomainBox& box, int year_min, int year_max,
                        std::mt19937_64& rng);

    /// Constant trunk inputs (spatial RFF then temporal features), one row per point.
    [[nodiscard]] nd::Matrix input_features(std::span<const SpaceTime> points) const;

    /// Projected coordinates rescaled to [-1,1]^2 over the domain box.
    [[nodiscard]] EqualEarthPoint normalized_projection(double lon, double lat) const;

    [[nodiscard]] nd::Var embed(std::span<const SpaceTime> points);
    [[nodiscard]] nd::Matrix evaluate(std::span<const SpaceTime> points) const;

    /// Same as embed/evaluate on precomputed `input_features` rows.
    [[nodiscard]] nd::Var embed_inputs(const nd::Matrix& inputs);
    [[nodiscard]] nd::Matrix evaluate_inputs(const nd::Matrix& inputs) const;

    [[nodiscard]] int out_dim() const noexcept { return trunk_.out_dim(); }
    [[nodiscard]] const RffBank& spatial_bank() const noexcept { return spatial_; }
    [[nodiscard]] const TimeEncoder& time_encoder() const noexcept { return time_; }
    [[nodiscard]] nd::Mlp& trunk() noexcept { return trunk_; }
    [[nodiscard]] const nd::Mlp& trunk() const noexcept { return trunk_; }
    [[nodiscard]] const DomainBox& box() const noexcept { return box_; }

private:
    RffBank spatial_;
    TimeEncoder time_;
    nd::Mlp trunk_;
    DomainBox box_;
    double x_min_ = -1.0, x_max_ = 1.0, y_min_ = -1.0, y_max_ = 1.0;
};

/// e_loc for a single point.
[[nodiscard]] Eigen::RowVectorXd embed_location_time(double lon, double lat, const Date& date,
                                                     const LocationTimeEncoder& encoder);

} // namespace geoprox::geo
