// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace geoprox::splits {

/// Named RNG streams derived from one master seed. Each stream depends only
/// on (master, name), so consumers never share state.
class SeedStreams {
public:
    explicit SeedStreams(std::uint64_t master) noexcept : master_(master) {}

    [[nodiscard]] std::uint64_t seed_for(std::string_view name) const noexcept;
    [[nodiscard]] std::mt19937_64 stream(std::string_view name) const { return std::mt19937_64(seed_for(name)); }
    [[nodiscard]] std::uint64_t master() const noexcept { return master_; }

private:
    std::uint64_t master_;
};

[[nodiscard]] SeedStreams make_seed_streams(std::uint64_t master) noexcept;

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace geoprox::splits
