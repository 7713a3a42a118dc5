// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace geoprox::geo {

/// Equal Earth projected coordinates on the unit sphere.
struct EqualEarthPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Forward Equal Earth projection (Šavrič, Patterson & Jenny, 2018).
/// Throws DomainError for lon outside [-180, 180] or lat outside [-90, 90].
[[nodiscard]] EqualEarthPoint equal_earth_project(double lon_deg, double lat_deg);

} // namespace geoprox::geo
