// SPDX-License-Identifier: Apache-2.0
#include "geoprox/splits/split.hpp"

#include "geoprox/errors.hpp"
#include "geoprox/io/keyvalue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace geoprox::splits {
namespace {

std::size_t validation_count(std::size_t n_train, double share)
{
    if (share <= 0.0 || n_train < 2) {
        return 0;
    }
    const auto k = static_cast<std::size_t>(std::llround(share * static_cast<double>(n_train)));
    return std::clamp<std::size_t>(k, 1, n_train - 1);
}

SplitAssignment blank(const io::Dataset& data)
{
    SplitAssignment s;
    s.sample_ids.reserve(data.samples.size());
    for (const auto& x : data.samples) {
        s.sample_ids.push_back(x.id);
    }
    s.roles.assign(data.samples.size(), Role::test);
    return s;
}

} // namespace

std::string_view to_string(Role r) noexcept
{
    switch (r) {
    case Role::train: return "train";
    case Role::validation: return "val";
    case Role::test: return "test";
    }
    return "?";
}

Role parse_role(std::string_view text)
{
    if (text == "train") {
        return Role::train;
    }
    if (text == "val" || text == "validation") {
        return Role::validation;
    }
    if (text == "test") {
        return Role::test;
    }
    throw DataError("unknown split role '" + std::string(text) + "'");
}

std::string_view to_string(Offset o) noexcept
{
    switch (o) {
    case Offset::original: return "original";
    case Offset::right: return "right";
    case Offset::up: return "up";
    case Offset::both: return "both";
    }
    return "?";
}

Offset parse_offset(std::string_view text)
{
    int k = 0;
    for (auto o : {Offset::original, Offset::right, Offset::up, Offset::both}) {
        if (text == to_string(o) || text == std::to_string(k++)) {
            return o;
        }
    }
    throw ConfigError("unknown checkerboard offset '" + std::string(text) + "' (0-3 or original|right|up|both)");
}

std::vector<std::size_t> SplitAssignment::indices(Role r) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < roles.size(); ++i) {
        if (roles[i] == r) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t SplitAssignment::count(Role r) const
{
    return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), r));
}

SplitAssignment uar_site_split(const io::Dataset& data, double fraction, std::uint64_t seed, double validation_share)
{
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("site split fraction must lie in (0, 1)");
    }
    const auto n = data.sites.size();
    if (n < 2) {
        throw DataError("site split needs at least 2 sites, got " + std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));
    const auto n_val = validation_count(n_train, validation_share);
    std::vector<Role> site_role(n, Role::test);
    for (std::size_t k = 0; k < n_train; ++k) {
        site_role[order[k]] = k < n_val ? Role::validation : Role::train;
    }

    auto split = blank(data);
    split.header = {"uar", fraction, 0.0, Offset::original, false, seed, validation_share};
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        split.roles[i] = site_role[data.sites.index_of(data.samples[i].site)];
    }
    return split;
}

bool checkerboard_even(double lon, double lat, const CheckerboardConfig& cfg) noexcept
{
    const bool shift_x = cfg.offset == Offset::right || cfg.offset == Offset::both;
    const bool shift_y = cfg.offset == Offset::up || cfg.offset == Offset::both;
    const double x0 = cfg.lon0 + (shift_x ? cfg.delta / 2.0 : 0.0);
    const double y0 = cfg.lat0 + (shift_y ? cfg.delta / 2.0 : 0.0);
    const auto i = static_cast<long long>(std::floor((lon - x0) / cfg.delta));
    const auto j = static_cast<long long>(std::floor((lat - y0) / cfg.delta));
    return ((i + j) & 1) == 0;
}

SplitAssignment checkerboard_split(const io::Dataset& data, const CheckerboardConfig& cfg, std::uint64_t seed,
                                   double validation_share)
{
    if (!(cfg.delta > 0.0)) {
        throw ConfigError("checkerboard delta must be positive");
    }
    auto split = blank(data);
    split.header = {"checkerboard", 0.0, cfg.delta, cfg.offset, cfg.swap, seed, validation_share};
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const auto& s = data.samples[i];
        const bool is_train = checkerboard_even(s.lon, s.lat, cfg) != cfg.swap;
        split.roles[i] = is_train ? Role::train : Role::test;
        if (is_train) {
            train.push_back(i);
        }
    }
    std::mt19937_64 rng(seed);
    std::shuffle(train.begin(), train.end(), rng);
    const auto n_val = validation_count(train.size(), validation_share);
    for (std::size_t k = 0; k < n_val; ++k) {
        split.roles[train[k]] = Role::validation;
    }
    return split;
}

void write_split_file(const std::filesystem::path& path, const SplitAssignment& split)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    const auto& h = split.header;
    os << "# protocol=" << h.protocol << " fraction=" << io::format_double(h.fraction)
       << " delta=" << io::format_double(h.delta) << " offset=" << to_string(h.offset) << " swap=" << (h.swap ? 1 : 0)
       << " seed=" << h.seed << " validation=" << io::format_double(h.validation_share) << "\n";
    os << "sample_id,role\n";
    for (std::size_t i = 0; i < split.roles.size(); ++i) {
        os << split.sample_ids[i] << ',' << to_string(split.roles[i]) << '\n';
    }
    if (!os) {
        throw DataError("write failed for " + path.string());
    }
}

SplitAssignment read_split_file(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open " + path.string());
    }
    SplitAssignment split;
    std::string line;
    std::size_t lineno = 0;
    bool saw_columns = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            std::istringstream fields(line.substr(1));
            std::string kv;
            while (fields >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) {
                    continue;
                }
                const auto key = kv.substr(0, eq);
                const auto value = kv.substr(eq + 1);
                auto& h = split.header;
                try {
                    if (key == "protocol") {
                        h.protocol = value;
                    } else if (key == "fraction") {
                        h.fraction = io::parse_double(value, key);
                    } else if (key == "delta") {
                        h.delta = io::parse_double(value, key);
                    } else if (key == "offset") {
                        h.offset = parse_offset(value);
                    } else if (key == "swap") {
                        h.swap = value == "1" || value == "true";
                    } else if (key == "seed") {
                        h.seed = static_cast<std::uint64_t>(std::stoull(value));
                    } else if (key == "validation") {
                        h.validation_share = io::parse_double(value, key);
                    }
                } catch (const std::exception& e) {
                    throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
                }
            }
            continue;
        }
        if (!saw_columns && line == "sample_id,role") {
            saw_columns = true;
            continue;
        }
        const auto comma = line.rfind(',');
        if (comma == std::string::npos || comma == 0) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 'sample_id,role'");
        }
        split.sample_ids.push_back(line.substr(0, comma));
        try {
            split.roles.push_back(parse_role(line.substr(comma + 1)));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return split;
}

SplitAssignment align_split(const SplitAssignment& split, const io::Dataset& data)
{
    std::unordered_map<std::string, Role> by_id;
    for (std::size_t i = 0; i < split.sample_ids.size(); ++i) {
        if (!by_id.emplace(split.sample_ids[i], split.roles[i]).second) {
            throw DataError("split assigns sample '" + split.sample_ids[i] + "' twice");
        }
    }
    auto out = blank(data);
    out.header = split.header;
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        auto it = by_id.find(data.samples[i].id);
        if (it == by_id.end()) {
            throw DataError("split has no role for sample '" + data.samples[i].id + "'");
        }
        out.roles[i] = it->second;
    }
    return out;
}

} // namespace geoprox::splits
