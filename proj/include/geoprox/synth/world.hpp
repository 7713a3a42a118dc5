// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/calendar.hpp"
#include "geoprox/domain.hpp"
#include "geoprox/io/keyvalue.hpp"
#include "geoprox/io/points.hpp"
#include "geoprox/io/proxy_field.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace geoprox::synth {

struct WorldConfig {
    DomainBox box{-100.0, -80.0, 30.0, 50.0};
    Date start{2017, 1, 1};
    int days = 730;

    // latent field: Gaussian bumps with seasonal modulation plus one broad
    // bump driven by an AR(1) daily anomaly
    int bumps = 25;
    double bump_width_min = 1.0;
    double bump_width_max = 3.0;
    double seasonal_amplitude = 0.6;
    double anomaly_std = 0.6;
    double anomaly_ar = 0.9;
    double anomaly_width = 6.0;

    // stations
    int sites = 60;
    int samples_per_site = 120;
    int clusters = 12;
    double cluster_spread = 1.0;
    double site_offset_std = 0.15;
    double obs_noise_std = 0.3;

    // observation features
    int informative_features = 6;
    int noise_features = 4;
    double feature_noise_std = 2.0;

    // proxy raster
    double proxy_cell = 0.5;
    double proxy_blur = 2.0;
    double proxy_bias = 0.8;
    double proxy_noise_std = 1.0;

    std::uint64_t seed = 1;

    [[nodiscard]] TimeSpan span() const { return {start.days(), start.days() + days - 1}; }

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// Reads keys of the [world] section; absent keys keep their defaults.
    [[nodiscard]] static WorldConfig from_doc(const io::KeyValueDoc& doc);
    [[nodiscard]] std::string to_text() const;
};

struct Bump {
    double lon = 0.0;
    double lat = 0.0;
    double width = 1.0;
    double amplitude = 0.0;
    double seasonal = 0.0;
    double phase = 0.0;
};

/// Closed-form latent field shared by the generator.
class TruthOracle {
public:
    TruthOracle() = default;
    TruthOracle(std::vector<Bump> bumps, Bump anomaly_shape, std::vector<double> anomaly, std::int64_t first_day,
                std::vector<Bump> bias, double blur);

    [[nodiscard]] double latent(double lon, double lat, std::int64_t day) const;
    /// Latent field convolved with an isotropic Gaussian of the blur radius.
    [[nodiscard]] double blurred(double lon, double lat, std::int64_t day) const;
    [[nodiscard]] double bias(double lon, double lat) const;
    /// Noise-free proxy: blurred latent plus bias.
    [[nodiscard]] double proxy_mean(double lon, double lat, std::int64_t day) const;

    [[nodiscard]] double anomaly(std::int64_t day) const;
    [[nodiscard]] const std::vector<Bump>& bumps() const noexcept { return bumps_; }

private:
    [[nodiscard]] double field(double lon, double lat, std::int64_t day, double blur) const;

    std::vector<Bump> bumps_;
    Bump anomaly_shape_;
    std::vector<double> anomaly_;
    std::int64_t first_day_ = 0;
    std::vector<Bump> bias_;
    double blur_ = 0.0;
};

/// Observation features: informative j < p are
/// alpha_j * L + beta_j * tanh(L) + noise, the rest pure noise.
struct FeatureMap {
    std::vector<double> alpha;
    std::vector<double> beta;
};

struct World {
    WorldConfig cfg;
    io::Dataset data;
    io::ProxyField field;
    TruthOracle oracle;
    FeatureMap features;
};

[[nodiscard]] World generate_world(const WorldConfig& cfg);

struct WorldReport {
    std::size_t sites = 0;
    std::size_t samples = 0;
    double proxy_target_r = 0.0;
    double proxy_only_r2 = 0.0;      // OLS on a seeded 50% site split
    double coordinate_only_r2 = 0.0;  // OLS on (lon, lat), checkerboard with a quarter-box square
    double autocorrelation_length = 0.0;  // degrees, 1/e crossing of the site-mean correlogram

    [[nodiscard]] std::string to_text() const;
};

[[nodiscard]] WorldReport world_report(const World& world);

/// points.tsv, field.spec/field.bin, world.cfg and report.txt.
void write_world(const std::filesystem::path& dir, const World& world);

} // namespace geoprox::synth
