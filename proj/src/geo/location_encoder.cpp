// SPDX-License-Identifier: Apache-2.0
#include "geoprox/geo/location_encoder.hpp"

#include "geoprox/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace geoprox::geo {

TimeKind parse_time_kind(const std::string& text)
{
    if (text == "none") {
        return TimeKind::none;
    }
    if (text == "doy" || text == "day_of_year") {
        return TimeKind::day_of_year;
    }
    if (text == "year") {
        return TimeKind::year;
    }
    throw ConfigError("unknown temporal encoder kind '" + text + "' (expected none|doy|year)");
}

std::string to_string(TimeKind kind)
{
    switch (kind) {
    case TimeKind::none: return "none";
    case TimeKind::day_of_year: return "doy";
    case TimeKind::year: return "year";
    }
    return "none";
}

TimeEncoder::TimeEncoder(TimeKind kind, RffBank bank, int year_min, int year_max)
    : kind_(kind), bank_(std::move(bank)), year_min_(year_min), year_max_(year_max)
{
    if (kind_ == TimeKind::day_of_year && (bank_.empty() || bank_.input_dim() != 2)) {
        throw ConfigError("time encoder: day-of-year kind needs a 2-D RFF bank");
    }
    if (year_max_ < year_min_) {
        throw ConfigError("time encoder: year_max < year_min");
    }
}

int TimeEncoder::output_dim() const noexcept
{
    switch (kind_) {
    case TimeKind::none: return 0;
    case TimeKind::day_of_year: return bank_.output_dim();
    case TimeKind::year: return 1;
    }
    return 0;
}

Eigen::RowVectorXd TimeEncoder::encode_day_of_year(double doy) const
{
    if (kind_ != TimeKind::day_of_year) {
        throw ConfigError("time encoder: encode_day_of_year requires the day-of-year kind");
    }
    const double theta = 2.0 * std::numbers::pi * doy / kDaysPerYear;
    nd::Matrix u(1, 2);
    u << std::cos(theta), std::sin(theta);
    return bank_.encode(u).row(0);
}

Eigen::RowVectorXd TimeEncoder::encode(const Date& date) const
{
    switch (kind_) {
    case TimeKind::none: return Eigen::RowVectorXd(0);
    case TimeKind::day_of_year: return encode_day_of_year(date.day_of_year());
    case TimeKind::year: {
        Eigen::RowVectorXd v(1);
        const double span = static_cast<double>(year_max_ - year_min_);
        v(0) = span > 0.0 ? 2.0 * (date.year - year_min_) / span - 1.0 : 0.0;
        return v;
    }
    }
    return Eigen::RowVectorXd(0);
}

Eigen::RowVectorXd encode_time(const Date& date, const TimeEncoder& encoder)
{
    return encoder.encode(date);
}

LocationTimeEncoder::LocationTimeEncoder(const LocationEncoderConfig& cfg, const DomainBox& box, int year_min,
                                         int year_max, std::mt19937_64& rng)
    : box_(box)
{
    if (!(box.lon_min < box.lon_max) || !(box.lat_min < box.lat_max)) {
        throw ConfigError("location encoder: degenerate domain box");
    }
    if (cfg.sigmas.empty()) {
        throw ConfigError("location encoder: at least one RFF scale is required");
    }
    spatial_ = RffBank::sample(cfg.sigmas, cfg.freqs_per_level, 2, rng);
    RffBank tbank;
    if (cfg.time_kind == TimeKind::day_of_year) {
        tbank = RffBank::sample(cfg.time_sigmas, cfg.time_freqs, 2, rng);
    }
    time_ = TimeEncoder(cfg.time_kind, std::move(tbank), year_min, year_max);

    // The projected image of a lon/lat box is not a rectangle, so scan a grid
    // over the box for the projected extent.
    x_min_ = y_min_ = std::numeric_limits<double>::infinity();
    x_max_ = y_max_ = -std::numeric_limits<double>::infinity();
    constexpr int kScan = 64;
    for (int i = 0; i <= kScan; ++i) {
        for (int j = 0; j <= kScan; ++j) {
            const double lon = box.lon_min + box.width() * i / kScan;
            const double lat = box.lat_min + box.height() * j / kScan;
            const auto p = equal_earth_project(lon, lat);
            x_min_ = std::min(x_min_, p.x);
            x_max_ = std::max(x_max_, p.x);
            y_min_ = std::min(y_min_, p.y);
            y_max_ = std::max(y_max_, p.y);
        }
    }

    const int in_dim = spatial_.output_dim() + time_.output_dim();
    trunk_ = nd::Mlp("loc_encoder", in_dim, cfg.hidden, cfg.out_dim, rng);
}

EqualEarthPoint LocationTimeEncoder::normalized_projection(double lon, double lat) const
{
    const auto p = equal_earth_project(lon, lat);
    return {2.0 * (p.x - x_min_) / (x_max_ - x_min_) - 1.0, 2.0 * (p.y - y_min_) / (y_max_ - y_min_) - 1.0};
}

nd::Matrix LocationTimeEncoder::input_features(std::span<const SpaceTime> points) const
{
    const auto n = static_cast<Eigen::Index>(points.size());
    nd::Matrix xy(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto p = normalized_projection(points[i].lon, points[i].lat);
        xy(i, 0) = p.x;
        xy(i, 1) = p.y;
    }
    const int sd = spatial_.output_dim();
    const int td = time_.output_dim();
    nd::Matrix out(n, sd + td);
    out.leftCols(sd) = spatial_.encode(xy);
    if (td > 0) {
        if (time_.kind() == TimeKind::day_of_year) {
            nd::Matrix u(n, 2);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double theta = 2.0 * std::numbers::pi * Date::from_days(points[i].day).day_of_year() / kDaysPerYear;
                u(i, 0) = std::cos(theta);
                u(i, 1) = std::sin(theta);
            }
            out.rightCols(td) = time_.bank().encode(u);
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                out.row(i).tail(td) = time_.encode(Date::from_days(points[i].day));
            }
        }
    }
    return out;
}

nd::Var LocationTimeEncoder::embed(std::span<const SpaceTime> points)
{
    return trunk_.forward(nd::constant(input_features(points)));
}

nd::Matrix LocationTimeEncoder::evaluate(std::span<const SpaceTime> points) const
{
    return trunk_.evaluate(input_features(points));
}

nd::Var LocationTimeEncoder::embed_inputs(const nd::Matrix& inputs)
{
    return trunk_.forward(nd::constant(inputs));
}

nd::Matrix LocationTimeEncoder::evaluate_inputs(const nd::Matrix& inputs) const
{
    return trunk_.evaluate(inputs);
}

Eigen::RowVectorXd embed_location_time(double lon, double lat, const Date& date, const LocationTimeEncoder& encoder)
{
    const SpaceTime p{lon, lat, date.days()};
    return encoder.evaluate(std::span<const SpaceTime>(&p, 1)).row(0);
}

} // namespace geoprox::geo
