// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/io/points.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace geoprox::splits {

enum class Role { train, validation, test };

[[nodiscard]] std::string_view to_string(Role r) noexcept;
[[nodiscard]] Role parse_role(std::string_view text);

enum class Offset { original, right, up, both };

[[nodiscard]] std::string_view to_string(Offset o) noexcept;
[[nodiscard]] Offset parse_offset(std::string_view text);

struct CheckerboardConfig {
    double delta = 2.0;
    double lon0 = 0.0;
    double lat0 = 0.0;
    Offset offset = Offset::original;
    bool swap = false;
};

/// Echoed at the top of a split file.
struct SplitHeader {
    std::string protocol;  // "uar" or "checkerboard"
    double fraction = 0.5;
    double delta = 0.0;
    Offset offset = Offset::original;
    bool swap = false;
    std::uint64_t seed = 0;
    double validation_share = 0.1;
};

/// One role per sample, aligned with the dataset's sample order.
struct SplitAssignment {
    SplitHeader header;
    std::vector<std::string> sample_ids;
    std::vector<Role> roles;

    [[nodiscard]] std::vector<std::size_t> indices(Role r) const;
    [[nodiscard]] std::size_t count(Role r) const;
};

/// Sites permuted by the seed; the first floor(fraction*n) go to train, the
/// rest to test. round(validation_share * n_train) train sites (at least one
/// when there are two or more) are moved to validation.
[[nodiscard]] SplitAssignment uar_site_split(const io::Dataset& data, double fraction, std::uint64_t seed,
                                             double validation_share = 0.1);

/// Cell (i, j) = floor((lon - lon0') / delta), floor((lat - lat0') / delta)
/// with the origin shifted by delta/2 per offset variant. Even parity is
/// train unless swapped. A seeded validation_share of train samples becomes
/// validation.
[[nodiscard]] SplitAssignment checkerboard_split(const io::Dataset& data, const CheckerboardConfig& cfg,
                                                 std::uint64_t seed, double validation_share = 0.1);

/// Parity of the cell containing (lon, lat): true means train (before swap).
[[nodiscard]] bool checkerboard_even(double lon, double lat, const CheckerboardConfig& cfg) noexcept;

void write_split_file(const std::filesystem::path& path, const SplitAssignment& split);
[[nodiscard]] SplitAssignment read_split_file(const std::filesystem::path& path);

/// Reorders a loaded split to the dataset's sample order; every sample must be present.
[[nodiscard]] SplitAssignment align_split(const SplitAssignment& split, const io::Dataset& data);

} // namespace geoprox::splits
