// SPDX-License-Identifier: Apache-2.0
#include "geoprox/splits/sampler.hpp"

#include "geoprox/errors.hpp"

#include <cmath>

namespace geoprox::splits {

std::string_view to_string(SamplerMode m) noexcept
{
    switch (m) {
    case SamplerMode::random_only: return "random";
    case SamplerMode::sites_only: return "sites";
    case SamplerMode::sites_random: return "sites+random";
    }
    return "?";
}

SamplerMode parse_sampler_mode(std::string_view text)
{
    if (text == "random" || text == "random-only") {
        return SamplerMode::random_only;
    }
    if (text == "sites" || text == "sites-only") {
        return SamplerMode::sites_only;
    }
    if (text == "sites+random") {
        return SamplerMode::sites_random;
    }
    throw ConfigError("unknown sampler mode '" + std::string(text) + "' (random|sites|sites+random)");
}

std::size_t random_count(const SamplerConfig& cfg, std::size_t b)
{
    if (!(cfg.rho >= 0.0) || !std::isfinite(cfg.rho)) {
        throw ConfigError("proxy sampling ratio must be finite and >= 0");
    }
    if (cfg.mode == SamplerMode::sites_only) {
        return 0;
    }
    return static_cast<std::size_t>(std::llround(cfg.rho * static_cast<double>(b)));
}

std::vector<SpaceTime> sample_uniform(const DomainBox& box, const TimeSpan& span, std::size_t n,
                                      std::mt19937_64& rng, const DomainMask& mask)
{
    if (!(box.width() > 0.0) || !(box.height() > 0.0) || span.length() <= 0) {
        throw ConfigError("proxy sampler needs a non-empty box and time span");
    }
    std::uniform_real_distribution<double> ulon(box.lon_min, box.lon_max);
    std::uniform_real_distribution<double> ulat(box.lat_min, box.lat_max);
    std::uniform_int_distribution<std::int64_t> uday(span.first_day, span.last_day);
    std::vector<SpaceTime> out;
    out.reserve(n);
    constexpr int max_rejections = 100000;
    int rejected = 0;
    while (out.size() < n) {
        const double lon = ulon(rng);
        const double lat = ulat(rng);
        if (mask && !mask(lon, lat)) {
            if (++rejected > max_rejections) {
                throw DataError("proxy sampler: domain mask rejects nearly all of the box");
            }
            continue;
        }
        out.push_back({lon, lat, uday(rng)});
    }
    return out;
}

std::vector<SpaceTime> sample_proxy_batch(const DomainBox& box, const TimeSpan& span, const SamplerConfig& cfg,
                                          std::span<const SpaceTime> labeled, std::mt19937_64& rng,
                                          const DomainMask& mask)
{
    const auto n_random = random_count(cfg, labeled.size());
    std::vector<SpaceTime> out;
    if (cfg.mode != SamplerMode::random_only) {
        out.assign(labeled.begin(), labeled.end());
    }
    if (n_random > 0) {
        auto extra = sample_uniform(box, span, n_random, rng, mask);
        out.insert(out.end(), extra.begin(), extra.end());
    }
    return out;
}

} // namespace geoprox::splits
