// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace geoprox {

/// Proleptic Gregorian calendar date. Internally every time value in the
/// library is an integer day number counted from 1970-01-01.
struct Date {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;

    /// Parses "YYYY-MM-DD"; throws DataError on malformed or invalid dates.
    static Date parse(std::string_view text);
    static Date from_days(std::int64_t days);

    [[nodiscard]] std::int64_t days() const;
    [[nodiscard]] int day_of_year() const;
    [[nodiscard]] std::string str() const;

    friend bool operator==(const Date&, const Date&) = default;
};

[[nodiscard]] bool is_leap_year(int year) noexcept;

/// A point in space and time: degrees and day number.
struct SpaceTime {
    double lon = 0.0;
    double lat = 0.0;
    std::int64_t day = 0;
};

} // namespace geoprox
