// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace geoprox {

/// Longitude/latitude bounding box in degrees.
struct DomainBox {
    double lon_min = 0.0;
    double lon_max = 0.0;
    double lat_min = 0.0;
    double lat_max = 0.0;

    [[nodiscard]] bool contains(double lon, double lat) const noexcept
    {
        return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
    }
    [[nodiscard]] double width() const noexcept { return lon_max - lon_min; }
    [[nodiscard]] double height() const noexcept { return lat_max - lat_min; }
};

/// Inclusive range of day numbers.
struct TimeSpan {
    std::int64_t first_day = 0;
    std::int64_t last_day = 0;

    [[nodiscard]] std::int64_t length() const noexcept { return last_day - first_day + 1; }
};

} // namespace geoprox
