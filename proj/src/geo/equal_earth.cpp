// SPDX-License-Identifier: Apache-2.0
#include "geoprox/geo/equal_earth.hpp"

#include "geoprox/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace geoprox::geo {
namespace {

constexpr double A1 = 1.340264;
constexpr double A2 = -0.081106;
constexpr double A3 = 0.000893;
constexpr double A4 = 0.003796;

} // namespace

EqualEarthPoint equal_earth_project(double lon_deg, double lat_deg)
{
    if (!(lon_deg >= -180.0 && lon_deg <= 180.0) || !(lat_deg >= -90.0 && lat_deg <= 90.0)) {
        throw DomainError("equal_earth_project: (" + std::to_string(lon_deg) + ", " + std::to_string(lat_deg) +
                          ") outside [-180,180]x[-90,90]");
    }
    constexpr double deg = std::numbers::pi / 180.0;
    const double lambda = lon_deg * deg;
    const double phi = lat_deg * deg;
    const double theta = std::asin(std::numbers::sqrt3 / 2.0 * std::sin(phi));
    const double t2 = theta * theta;
    const double t6 = t2 * t2 * t2;
    const double y = theta * (A1 + A2 * t2 + t6 * (A3 + A4 * t2));
    const double x = 2.0 * std::numbers::sqrt3 * lambda * std::cos(theta) /
                     (3.0 * (A1 + 3.0 * A2 * t2 + t6 * (7.0 * A3 + 9.0 * A4 * t2)));
    return {x, y};
}

} // namespace geoprox::geo
