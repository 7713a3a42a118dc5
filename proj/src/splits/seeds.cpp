// SPDX-License-Identifier: Apache-2.0
#include "geoprox/splits/seeds.hpp"

#include "geoprox/nd/checkpoint.hpp"

namespace geoprox::splits {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t SeedStreams::seed_for(std::string_view name) const noexcept
{
    return splitmix64(splitmix64(master_) ^ nd::fnv1a64(name));
}

SeedStreams make_seed_streams(std::uint64_t master) noexcept
{
    return SeedStreams(master);
}

} // namespace geoprox::splits
