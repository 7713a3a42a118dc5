// SPDX-License-Identifier: Apache-2.0
#include "geoprox/io/keyvalue.hpp"

#include "geoprox/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace geoprox::io {
namespace {

std::string trim(std::string s)
{
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

} // namespace

KeyValueDoc KeyValueDoc::load(const std::filesystem::path& path)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    return KeyValueDoc(std::move(tree));
}

KeyValueDoc KeyValueDoc::parse(const std::string& text)
{
    boost::property_tree::ptree tree;
    std::istringstream is(text);
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    return KeyValueDoc(std::move(tree));
}

bool KeyValueDoc::has(const std::string& key) const
{
    return find(key).has_value();
}

std::optional<std::string> KeyValueDoc::find(const std::string& key) const
{
    if (auto v = tree_.get_optional<std::string>(key)) {
        return trim(*v);
    }
    return std::nullopt;
}

std::string KeyValueDoc::get_string(const std::string& key, const std::string& fallback) const
{
    return find(key).value_or(fallback);
}

std::string KeyValueDoc::require_string(const std::string& key) const
{
    if (auto v = find(key)) {
        return *v;
    }
    throw ConfigError("missing required key '" + key + "'");
}

double KeyValueDoc::get_double(const std::string& key, double fallback) const
{
    auto v = find(key);
    return v ? parse_double(*v, key) : fallback;
}

double KeyValueDoc::require_double(const std::string& key) const
{
    return parse_double(require_string(key), key);
}

long long KeyValueDoc::get_int(const std::string& key, long long fallback) const
{
    auto v = find(key);
    return v ? parse_int(*v, key) : fallback;
}

long long KeyValueDoc::require_int(const std::string& key) const
{
    return parse_int(require_string(key), key);
}

bool KeyValueDoc::get_bool(const std::string& key, bool fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
        return true;
    }
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
        return false;
    }
    throw ConfigError("'" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<double> KeyValueDoc::get_doubles(const std::string& key, std::vector<double> fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    std::vector<double> out;
    for (const auto& item : split_list(*v)) {
        out.push_back(parse_double(item, key));
    }
    return out;
}

std::vector<int> KeyValueDoc::get_ints(const std::string& key, std::vector<int> fallback) const
{
    auto v = find(key);
    if (!v) {
        return fallback;
    }
    std::vector<int> out;
    for (const auto& item : split_list(*v)) {
        out.push_back(static_cast<int>(parse_int(item, key)));
    }
    return out;
}

void KeyValueDoc::set(const std::string& key, const std::string& value)
{
    tree_.put(key, value);
}

std::vector<std::string> KeyValueDoc::keys() const
{
    std::vector<std::string> out;
    for (const auto& [name, child] : tree_) {
        if (child.empty()) {
            out.push_back(name);
            continue;
        }
        for (const auto& [sub, leaf] : child) {
            out.push_back(name + "." + sub);
        }
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double parse_double(const std::string& text, const std::string& what)
{
    const auto s = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("'" + what + "': expected a number, got '" + text + "'");
    }
    return v;
}

long long parse_int(const std::string& text, const std::string& what)
{
    const auto s = trim(text);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("'" + what + "': expected an integer, got '" + text + "'");
    }
    return v;
}

std::string format_double(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

} // namespace geoprox::io
