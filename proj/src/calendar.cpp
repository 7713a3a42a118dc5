// SPDX-License-Identifier: Apache-2.0
#include "geoprox/calendar.hpp"

#include "geoprox/errors.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace geoprox {
namespace {

int parse_int(std::string_view s, std::string_view whole)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("invalid date '" + std::string(whole) + "'");
    }
    return v;
}

} // namespace

Date Date::parse(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("invalid date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    Date d{parse_int(text.substr(0, 4), text), static_cast<unsigned>(parse_int(text.substr(5, 2), text)),
           static_cast<unsigned>(parse_int(text.substr(8, 2), text))};
    const std::chrono::year_month_day ymd{std::chrono::year{d.year}, std::chrono::month{d.month},
                                          std::chrono::day{d.day}};
    if (!ymd.ok()) {
        throw DataError("invalid date '" + std::string(text) + "'");
    }
    return d;
}

Date Date::from_days(std::int64_t days)
{
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day())};
}

std::int64_t Date::days() const
{
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

int Date::day_of_year() const
{
    return static_cast<int>(days() - Date{year, 1, 1}.days()) + 1;
}

std::string Date::str() const
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    return buf;
}

bool is_leap_year(int year) noexcept
{
    return std::chrono::year{year}.is_leap();
}

} // namespace geoprox
