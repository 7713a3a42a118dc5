// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/calendar.hpp"
#include "geoprox/domain.hpp"

#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace geoprox::splits {

enum class SamplerMode { random_only, sites_only, sites_random };

[[nodiscard]] std::string_view to_string(SamplerMode m) noexcept;
[[nodiscard]] SamplerMode parse_sampler_mode(std::string_view text);

struct SamplerConfig {
    int batch = 256;
    double rho = 16.0;
    SamplerMode mode = SamplerMode::random_only;
    std::uint64_t seed = 0;
};

/// Optional land/valid-area predicate over (lon, lat); empty means the full box.
using DomainMask = std::function<bool(double lon, double lat)>;

/// Number of uniform points drawn per step for a labeled batch of size b.
[[nodiscard]] std::size_t random_count(const SamplerConfig& cfg, std::size_t b);

/// random-only: round(rho * |labeled|) points uniform over the box (inside the
/// mask) with uniform integer days over the span. sites-only: the labeled
/// points themselves. sites+random: both, sites first.
[[nodiscard]] std::vector<SpaceTime> sample_proxy_batch(const DomainBox& box, const TimeSpan& span,
                                                        const SamplerConfig& cfg, std::span<const SpaceTime> labeled,
                                                        std::mt19937_64& rng, const DomainMask& mask = {});

/// Uniform points only, n of them.
[[nodiscard]] std::vector<SpaceTime> sample_uniform(const DomainBox& box, const TimeSpan& span, std::size_t n,
                                                    std::mt19937_64& rng, const DomainMask& mask = {});

} // namespace geoprox::splits
