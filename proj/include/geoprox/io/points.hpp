// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/calendar.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace geoprox::io {

/// One supervised point.
struct LabeledSample {
    std::string id;
    std::string site;
    double lon = 0.0;
    double lat = 0.0;
    Date date;
    Eigen::RowVectorXd features;
    double y = 0.0;

    [[nodiscard]] SpaceTime where() const { return {lon, lat, date.days()}; }
};

struct Site {
    std::string id;
    double lon = 0.0;
    double lat = 0.0;
};

/// Measurement sites; ids are unique and every sample references one.
class SiteTable {
public:
    /// Adds a site or checks consistency with an existing one of the same id.
    void add(const Site& site);

    [[nodiscard]] const std::vector<Site>& sites() const noexcept { return sites_; }
    [[nodiscard]] std::size_t size() const noexcept { return sites_.size(); }
    [[nodiscard]] std::size_t index_of(const std::string& id) const;
    [[nodiscard]] bool contains(const std::string& id) const { return index_.count(id) != 0; }

private:
    std::vector<Site> sites_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<LabeledSample> samples;
    SiteTable sites;

    [[nodiscard]] std::size_t feature_count() const noexcept { return feature_names.size(); }
};

/// Reads `points.tsv`: tab-separated with header
/// `id site lon lat date f_1 ... f_k y`. Blank site cells get generated ids
/// ("site<k>") by deduplicating exact coordinates.
[[nodiscard]] Dataset load_labeled_table(const std::filesystem::path& path);

/// Writes the same format with exactly round-tripping floats.
void write_labeled_table(const std::filesystem::path& path, const Dataset& data);

} // namespace geoprox::io
