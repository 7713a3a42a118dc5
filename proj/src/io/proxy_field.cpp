// SPDX-License-Identifier: Apache-2.0
#include "geoprox/io/proxy_field.hpp"

#include "geoprox/errors.hpp"
#include "geoprox/io/keyvalue.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace geoprox::io {
namespace {

// Interpolation coordinate along one axis: lower index and fraction towards
// the next center, clamped to the edge centers.
std::pair<int, double> axis_position(double coord, double origin, double cell, int n)
{
    double f = (coord - origin) / cell - 0.5;
    f = std::clamp(f, 0.0, static_cast<double>(n - 1));
    if (n == 1) {
        return {0, 0.0};
    }
    int i0 = static_cast<int>(std::floor(f));
    i0 = std::min(i0, n - 2);
    return {i0, f - i0};
}

} // namespace

ProxyField::ProxyField(std::vector<std::string> channels, GridSpec grid, TimeAxis time, std::vector<double> values,
                       double missing)
    : channels_(std::move(channels)), grid_(grid), time_(time), values_(std::move(values)), missing_(missing)
{
    if (channels_.empty()) {
        throw DataError("proxy field: at least one channel is required");
    }
    if (grid_.nx <= 0 || grid_.ny <= 0 || !(grid_.cell > 0.0) || time_.nt <= 0 || time_.step_days <= 0) {
        throw DataError("proxy field: grid and time axis must be non-empty with positive steps");
    }
    const std::size_t expect =
        static_cast<std::size_t>(time_.nt) * grid_.ny * grid_.nx * channels_.size();
    if (values_.size() != expect) {
        throw DataError("proxy field: " + std::to_string(values_.size()) + " values, expected " +
                        std::to_string(expect));
    }
}

std::optional<Eigen::RowVectorXd> ProxyField::sample(double lon, double lat, std::int64_t day) const
{
    const auto box = grid_.extent();
    if (!box.contains(lon, lat)) {
        std::ostringstream os;
        os << "proxy field: (" << lon << ", " << lat << ") outside grid extent";
        throw DomainError(os.str());
    }
    const double tf = static_cast<double>(day - time_.start_day) / time_.step_days;
    const auto it = static_cast<long long>(std::llround(tf));
    if (it < 0 || it >= time_.nt) {
        throw DomainError("proxy field: day " + Date::from_days(day).str() + " outside time axis");
    }

    const auto [ix, tx] = axis_position(lon, grid_.lon0, grid_.cell, grid_.nx);
    const auto [iy, ty] = axis_position(lat, grid_.lat0, grid_.cell, grid_.ny);
    const int ix1 = std::min(ix + 1, grid_.nx - 1);
    const int iy1 = std::min(iy + 1, grid_.ny - 1);
    const std::array<std::pair<int, int>, 4> corner{{{iy, ix}, {iy, ix1}, {iy1, ix}, {iy1, ix1}}};
    const std::array<double, 4> weight{(1 - ty) * (1 - tx), (1 - ty) * tx, ty * (1 - tx), ty * tx};

    const int m = channel_count();
    Eigen::RowVectorXd out(m);
    for (int c = 0; c < m; ++c) {
        double acc = 0.0;
        double wsum = 0.0;
        for (int k = 0; k < 4; ++k) {
            if (weight[k] == 0.0) {
                continue;
            }
            const double v = at(static_cast<int>(it), corner[k].first, corner[k].second, c);
            if (is_missing(v)) {
                continue;
            }
            acc += weight[k] * v;
            wsum += weight[k];
        }
        if (wsum <= 0.0) {
            return std::nullopt;
        }
        out(c) = acc / wsum;
    }
    return out;
}

void ProxyField::save(const std::filesystem::path& spec_path) const
{
    auto bin_path = spec_path;
    bin_path.replace_extension(".bin");
    {
        std::ofstream os(spec_path, std::ios::trunc);
        if (!os) {
            throw DataError("cannot open " + spec_path.string() + " for writing");
        }
        os << "channels = ";
        for (std::size_t i = 0; i < channels_.size(); ++i) {
            os << (i ? "," : "") << channels_[i];
        }
        os << "\nlon0 = " << format_double(grid_.lon0) << "\nlat0 = " << format_double(grid_.lat0)
           << "\ncell = " << format_double(grid_.cell) << "\nnx = " << grid_.nx << "\nny = " << grid_.ny
           << "\nt0 = " << Date::from_days(time_.start_day).str() << "\ntstep = " << time_.step_days
           << "\nnt = " << time_.nt << "\nmissing = " << format_double(missing_)
           << "\nlayout = t,y,x,channel\nencoding = f64le\ndata = " << bin_path.filename().string() << "\n";
    }
    std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
    if (!bin) {
        throw DataError("cannot open " + bin_path.string() + " for writing");
    }
    std::vector<unsigned char> buf(values_.size() * 8);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(values_[i]);
        for (int b = 0; b < 8; ++b) {
            buf[i * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
        }
    }
    bin.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!bin) {
        throw DataError("write failed for " + bin_path.string());
    }
}

ProxyField ProxyField::load(const std::filesystem::path& spec_path)
{
    if (!std::filesystem::exists(spec_path)) {
        throw DataError("proxy field spec not found: " + spec_path.string());
    }
    KeyValueDoc doc;
    GridSpec grid;
    TimeAxis time;
    std::vector<std::string> channels;
    double missing = -9999.0;
    std::filesystem::path bin_path;
    try {
        doc = KeyValueDoc::load(spec_path);
        channels = split_list(doc.require_string("channels"));
        grid.lon0 = doc.require_double("lon0");
        grid.lat0 = doc.require_double("lat0");
        grid.cell = doc.require_double("cell");
        grid.nx = static_cast<int>(doc.require_int("nx"));
        grid.ny = static_cast<int>(doc.require_int("ny"));
        time.start_day = Date::parse(doc.require_string("t0")).days();
        time.step_days = static_cast<int>(doc.get_int("tstep", 1));
        time.nt = static_cast<int>(doc.require_int("nt"));
        missing = doc.get_double("missing", -9999.0);
        bin_path = spec_path.parent_path() / doc.require_string("data");
    } catch (const ConfigError& e) {
        throw DataError(spec_path.string() + ": " + e.what());
    }
    if (grid.nx <= 0 || grid.ny <= 0 || time.nt <= 0 || channels.empty()) {
        throw DataError(spec_path.string() + ": empty grid, time axis or channel list");
    }

    const std::size_t n = static_cast<std::size_t>(time.nt) * grid.ny * grid.nx * channels.size();
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) {
        throw DataError("cannot open " + bin_path.string());
    }
    std::vector<unsigned char> buf(n * 8);
    bin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(bin.gcount()) != buf.size() || bin.peek() != std::char_traits<char>::eof()) {
        throw DataError(bin_path.string() + ": size does not match " + spec_path.filename().string());
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
        }
        values[i] = std::bit_cast<double>(bits);
    }
    return ProxyField(std::move(channels), grid, time, std::move(values), missing);
}

std::optional<Eigen::RowVectorXd> sample_proxy(const ProxyField& field, double lon, double lat, std::int64_t day)
{
    return field.sample(lon, lat, day);
}

} // namespace geoprox::io
