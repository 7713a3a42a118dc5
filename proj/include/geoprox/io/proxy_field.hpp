// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/calendar.hpp"
#include "geoprox/domain.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace geoprox::io {

/// Regular lon/lat grid; (lon0, lat0) is the lower-left corner of cell (0, 0)
/// and cell centers sit at lon0 + (i + 0.5) * cell.
struct GridSpec {
    double lon0 = 0.0;
    double lat0 = 0.0;
    double cell = 1.0;
    int nx = 0;
    int ny = 0;

    [[nodiscard]] DomainBox extent() const { return {lon0, lon0 + nx * cell, lat0, lat0 + ny * cell}; }
    [[nodiscard]] double center_lon(int ix) const { return lon0 + (ix + 0.5) * cell; }
    [[nodiscard]] double center_lat(int iy) const { return lat0 + (iy + 0.5) * cell; }
};

struct TimeAxis {
    std::int64_t start_day = 0;
    int step_days = 1;
    int nt = 0;

    [[nodiscard]] std::int64_t day_of(int it) const { return start_day + static_cast<std::int64_t>(it) * step_days; }
    [[nodiscard]] TimeSpan span() const { return {start_day, day_of(nt - 1)}; }
};

/// Gridded space-time proxy raster with m channels. Values are laid out
/// t-major, then row-major (y, x), then channel.
class ProxyField {
public:
    ProxyField() = default;
    ProxyField(std::vector<std::string> channels, GridSpec grid, TimeAxis time, std::vector<double> values,
               double missing = -9999.0);

    [[nodiscard]] const std::vector<std::string>& channels() const noexcept { return channels_; }
    [[nodiscard]] int channel_count() const noexcept { return static_cast<int>(channels_.size()); }
    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] const TimeAxis& time() const noexcept { return time_; }
    [[nodiscard]] double missing() const noexcept { return missing_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    [[nodiscard]] std::size_t index(int it, int iy, int ix, int c) const
    {
        return ((static_cast<std::size_t>(it) * grid_.ny + iy) * grid_.nx + ix) * channels_.size() + c;
    }
    [[nodiscard]] double at(int it, int iy, int ix, int c) const { return values_[index(it, iy, ix, c)]; }
    [[nodiscard]] bool is_missing(double v) const noexcept { return v == missing_; }

    /// Bilinear in space between cell centers (clamped to the edge centers),
    /// nearest in time. Missing cells drop out of the weights, which are
    /// renormalized; a channel with no valid weight makes the result missing
    /// (nullopt). Throws DomainError outside the grid or time axis.
    [[nodiscard]] std::optional<Eigen::RowVectorXd> sample(double lon, double lat, std::int64_t day) const;

    /// Writes `<stem>.spec` (text sidecar) and `<stem>.bin` (little-endian f64).
    void save(const std::filesystem::path& spec_path) const;
    [[nodiscard]] static ProxyField load(const std::filesystem::path& spec_path);

private:
    std::vector<std::string> channels_;
    GridSpec grid_;
    TimeAxis time_;
    std::vector<double> values_;
    double missing_ = -9999.0;
};

[[nodiscard]] std::optional<Eigen::RowVectorXd> sample_proxy(const ProxyField& field, double lon, double lat,
                                                             std::int64_t day);

} // namespace geoprox::io
