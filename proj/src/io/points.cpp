// SPDX-License-Identifier: Apache-2.0
#include "geoprox/io/points.hpp"

#include "geoprox/errors.hpp"
#include "geoprox/io/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace geoprox::io {
namespace {

std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) {
            break;
        }
        start = tab + 1;
    }
    return out;
}

struct RowContext {
    const std::filesystem::path& path;
    std::size_t line;
};

[[noreturn]] void row_error(const RowContext& ctx, const std::string& what)
{
    throw DataError(ctx.path.string() + ":" + std::to_string(ctx.line) + ": " + what);
}

double parse_cell(const std::string& cell, const std::string& column, const RowContext& ctx)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        row_error(ctx, "column '" + column + "': cannot parse '" + cell + "'");
    }
    if (!std::isfinite(v)) {
        row_error(ctx, "column '" + column + "': non-finite value");
    }
    return v;
}

} // namespace

void SiteTable::add(const Site& site)
{
    if (auto it = index_.find(site.id); it != index_.end()) {
        const auto& known = sites_[it->second];
        if (known.lon != site.lon || known.lat != site.lat) {
            throw DataError("site '" + site.id + "' appears with two different coordinates");
        }
        return;
    }
    index_.emplace(site.id, sites_.size());
    sites_.push_back(site);
}

std::size_t SiteTable::index_of(const std::string& id) const
{
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw DataError("unknown site '" + id + "'");
    }
    return it->second;
}

Dataset load_labeled_table(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw DataError(path.string() + ": missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const auto header = split_tabs(line);
    const std::vector<std::string> fixed{"id", "site", "lon", "lat", "date"};
    if (header.size() < fixed.size() + 1 || !std::equal(fixed.begin(), fixed.end(), header.begin()) ||
        header.back() != "y") {
        throw DataError(path.string() + ":1: header must be 'id site lon lat date <features...> y'");
    }

    Dataset data;
    data.feature_names.assign(header.begin() + 5, header.end() - 1);
    const std::size_t k = data.feature_names.size();

    std::map<std::pair<double, double>, std::string> generated;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const RowContext ctx{path, lineno};
        const auto cells = split_tabs(line);
        if (cells.size() != header.size()) {
            row_error(ctx, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
        }
        LabeledSample s;
        s.id = cells[0];
        if (s.id.empty()) {
            row_error(ctx, "empty sample id");
        }
        s.lon = parse_cell(cells[2], "lon", ctx);
        s.lat = parse_cell(cells[3], "lat", ctx);
        if (s.lon < -180.0 || s.lon > 180.0 || s.lat < -90.0 || s.lat > 90.0) {
            row_error(ctx, "coordinates out of range");
        }
        try {
            s.date = Date::parse(cells[4]);
        } catch (const DataError& e) {
            row_error(ctx, e.what());
        }
        s.features.resize(static_cast<Eigen::Index>(k));
        for (std::size_t j = 0; j < k; ++j) {
            s.features(static_cast<Eigen::Index>(j)) = parse_cell(cells[5 + j], data.feature_names[j], ctx);
        }
        s.y = parse_cell(cells.back(), "y", ctx);

        s.site = cells[1];
        if (s.site.empty()) {
            auto [it, inserted] = generated.try_emplace({s.lon, s.lat}, "");
            if (inserted) {
                it->second = "site" + std::to_string(generated.size() - 1);
            }
            s.site = it->second;
        }
        try {
            data.sites.add({s.site, s.lon, s.lat});
        } catch (const DataError& e) {
            row_error(ctx, e.what());
        }
        data.samples.push_back(std::move(s));
    }
    return data;
}

void write_labeled_table(const std::filesystem::path& path, const Dataset& data)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    os << "id\tsite\tlon\tlat\tdate";
    for (const auto& f : data.feature_names) {
        os << '\t' << f;
    }
    os << "\ty\n";
    for (const auto& s : data.samples) {
        os << s.id << '\t' << s.site << '\t' << format_double(s.lon) << '\t' << format_double(s.lat) << '\t'
           << s.date.str();
        for (Eigen::Index j = 0; j < s.features.size(); ++j) {
            os << '\t' << format_double(s.features(j));
        }
        os << '\t' << format_double(s.y) << '\n';
    }
    if (!os) {
        throw DataError("write failed for " + path.string());
    }
}

} // namespace geoprox::io
