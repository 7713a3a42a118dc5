// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace geoprox::io {

/// Sectioned key=value text (INI style), used for configs and raster sidecars.
/// Keys are addressed as "section.key"; top-level keys as "key".
class KeyValueDoc {
public:
    KeyValueDoc() = default;
    explicit KeyValueDoc(boost::property_tree::ptree tree) : tree_(std::move(tree)) {}

    static KeyValueDoc load(const std::filesystem::path& path);
    static KeyValueDoc parse(const std::string& text);

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] std::optional<std::string> find(const std::string& key) const;

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] std::string require_string(const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] double require_double(const std::string& key) const;
    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
    [[nodiscard]] long long require_int(const std::string& key) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
    [[nodiscard]] std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) const;

    void set(const std::string& key, const std::string& value);

    /// Every "section.key" present, in document order.
    [[nodiscard]] std::vector<std::string> keys() const;

    [[nodiscard]] const boost::property_tree::ptree& tree() const noexcept { return tree_; }

private:
    boost::property_tree::ptree tree_;
};

[[nodiscard]] std::vector<std::string> split_list(const std::string& text, char sep = ',');
[[nodiscard]] double parse_double(const std::string& text, const std::string& what);
[[nodiscard]] long long parse_int(const std::string& text, const std::string& what);

/// Shortest rendering that round-trips exactly through parse_double.
[[nodiscard]] std::string format_double(double v);

} // namespace geoprox::io
