// SPDX-License-Identifier: Apache-2.0
#include "geoprox/synth/world.hpp"

#include "geoprox/errors.hpp"
#include "geoprox/fusion/baselines.hpp"
#include "geoprox/splits/seeds.hpp"
#include "geoprox/splits/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace geoprox::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double gaussian(double lon, double lat, const Bump& b, double blur)
{
    const double w2 = b.width * b.width;
    const double s2 = w2 + blur * blur;
    const double d2 = (lon - b.lon) * (lon - b.lon) + (lat - b.lat) * (lat - b.lat);
    return (w2 / s2) * std::exp(-0.5 * d2 / s2);
}

double seasonal_factor(const Bump& b, std::int64_t day)
{
    const double doy = static_cast<double>(Date::from_days(day).day_of_year());
    return 1.0 + b.seasonal * std::cos(kTwoPi * (doy - b.phase) / 365.25);
}

void require(bool ok, const char* field, const std::string& what)
{
    if (!ok) {
        throw ConfigError(std::string("world.") + field + ": " + what);
    }
}

double pearson(std::span<const double> a, std::span<const double> b)
{
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

void WorldConfig::validate() const
{
    require(std::isfinite(box.lon_min) && std::isfinite(box.lon_max) && box.lon_min < box.lon_max, "lon_min",
            "must be below lon_max");
    require(std::isfinite(box.lat_min) && std::isfinite(box.lat_max) && box.lat_min < box.lat_max, "lat_min",
            "must be below lat_max");
    require(box.lon_min >= -180.0 && box.lon_max <= 180.0, "lon_max", "box must lie within [-180, 180]");
    require(box.lat_min >= -90.0 && box.lat_max <= 90.0, "lat_max", "box must lie within [-90, 90]");
    require(days > 0, "days", "must be positive");
    require(bumps > 0, "bumps", "must be positive");
    require(bump_width_min > 0.0 && bump_width_min <= bump_width_max, "bump_width_min",
            "must be positive and at most bump_width_max");
    require(seasonal_amplitude >= 0.0 && seasonal_amplitude < 1.0, "seasonal_amplitude", "must lie in [0, 1)");
    require(anomaly_std >= 0.0, "anomaly_std", "must be >= 0");
    require(anomaly_ar >= 0.0 && anomaly_ar < 1.0, "anomaly_ar", "must lie in [0, 1)");
    require(anomaly_width > 0.0, "anomaly_width", "must be positive");
    require(sites > 0, "sites", "must be positive");
    require(samples_per_site > 0 && samples_per_site <= days, "samples_per_site", "must lie in [1, days]");
    require(clusters > 0, "clusters", "must be positive");
    require(cluster_spread > 0.0, "cluster_spread", "must be positive");
    require(site_offset_std >= 0.0, "site_offset_std", "must be >= 0");
    require(obs_noise_std >= 0.0, "obs_noise_std", "must be >= 0");
    require(informative_features >= 0 && noise_features >= 0, "informative_features", "counts must be >= 0");
    require(informative_features + noise_features > 0, "informative_features", "at least one feature is required");
    require(feature_noise_std >= 0.0, "feature_noise_std", "must be >= 0");
    require(proxy_cell > 0.0, "proxy_cell", "must be positive");
    require(proxy_blur >= 0.0, "proxy_blur", "must be >= 0");
    require(proxy_noise_std >= 0.0, "proxy_noise_std", "must be >= 0");
}

WorldConfig WorldConfig::from_doc(const io::KeyValueDoc& doc)
{
    WorldConfig c;
    const auto d = [&doc](const char* key, double fallback) { return doc.get_double(std::string("world.") + key, fallback); };
    const auto i = [&doc](const char* key, int fallback) {
        return static_cast<int>(doc.get_int(std::string("world.") + key, fallback));
    };
    c.box.lon_min = d("lon_min", c.box.lon_min);
    c.box.lon_max = d("lon_max", c.box.lon_max);
    c.box.lat_min = d("lat_min", c.box.lat_min);
    c.box.lat_max = d("lat_max", c.box.lat_max);
    if (auto s = doc.find("world.start")) {
        try {
            c.start = Date::parse(*s);
        } catch (const DataError& e) {
            throw ConfigError(std::string("world.start: ") + e.what());
        }
    }
    c.days = i("days", c.days);
    c.bumps = i("bumps", c.bumps);
    c.bump_width_min = d("bump_width_min", c.bump_width_min);
    c.bump_width_max = d("bump_width_max", c.bump_width_max);
    c.seasonal_amplitude = d("seasonal_amplitude", c.seasonal_amplitude);
    c.anomaly_std = d("anomaly_std", c.anomaly_std);
    c.anomaly_ar = d("anomaly_ar", c.anomaly_ar);
    c.anomaly_width = d("anomaly_width", c.anomaly_width);
    c.sites = i("sites", c.sites);
    c.samples_per_site = i("samples_per_site", c.samples_per_site);
    c.clusters = i("clusters", c.clusters);
    c.cluster_spread = d("cluster_spread", c.cluster_spread);
    c.site_offset_std = d("site_offset_std", c.site_offset_std);
    c.obs_noise_std = d("obs_noise_std", c.obs_noise_std);
    c.informative_features = i("informative_features", c.informative_features);
    c.noise_features = i("noise_features", c.noise_features);
    c.feature_noise_std = d("feature_noise_std", c.feature_noise_std);
    c.proxy_cell = d("proxy_cell", c.proxy_cell);
    c.proxy_blur = d("proxy_blur", c.proxy_blur);
    c.proxy_bias = d("proxy_bias", c.proxy_bias);
    c.proxy_noise_std = d("proxy_noise_std", c.proxy_noise_std);
    c.seed = static_cast<std::uint64_t>(doc.get_int("world.seed", static_cast<long long>(c.seed)));
    c.validate();
    return c;
}

std::string WorldConfig::to_text() const
{
    using io::format_double;
    std::ostringstream os;
    os << "[world]\n"
       << "lon_min = " << format_double(box.lon_min) << "\nlon_max = " << format_double(box.lon_max)
       << "\nlat_min = " << format_double(box.lat_min) << "\nlat_max = " << format_double(box.lat_max)
       << "\nstart = " << start.str() << "\ndays = " << days << "\nbumps = " << bumps
       << "\nbump_width_min = " << format_double(bump_width_min)
       << "\nbump_width_max = " << format_double(bump_width_max)
       << "\nseasonal_amplitude = " << format_double(seasonal_amplitude)
       << "\nanomaly_std = " << format_double(anomaly_std) << "\nanomaly_ar = " << format_double(anomaly_ar)
       << "\nanomaly_width = " << format_double(anomaly_width) << "\nsites = " << sites
       << "\nsamples_per_site = " << samples_per_site << "\nclusters = " << clusters
       << "\ncluster_spread = " << format_double(cluster_spread)
       << "\nsite_offset_std = " << format_double(site_offset_std)
       << "\nobs_noise_std = " << format_double(obs_noise_std)
       << "\ninformative_features = " << informative_features << "\nnoise_features = " << noise_features
       << "\nfeature_noise_std = " << format_double(feature_noise_std)
       << "\nproxy_cell = " << format_double(proxy_cell) << "\nproxy_blur = " << format_double(proxy_blur)
       << "\nproxy_bias = " << format_double(proxy_bias)
       << "\nproxy_noise_std = " << format_double(proxy_noise_std) << "\nseed = " << seed << "\n";
    return os.str();
}

TruthOracle::TruthOracle(std::vector<Bump> bumps, Bump anomaly_shape, std::vector<double> anomaly,
                         std::int64_t first_day, std::vector<Bump> bias, double blur)
    : bumps_(std::move(bumps)),
      anomaly_shape_(anomaly_shape),
      anomaly_(std::move(anomaly)),
      first_day_(first_day),
      bias_(std::move(bias)),
      blur_(blur)
{
}

double TruthOracle::anomaly(std::int64_t day) const
{
    const auto k = day - first_day_;
    if (k < 0 || k >= static_cast<std::int64_t>(anomaly_.size())) {
        throw DomainError("truth oracle: day " + Date::from_days(day).str() + " outside the world's time span");
    }
    return anomaly_[static_cast<std::size_t>(k)];
}

double TruthOracle::field(double lon, double lat, std::int64_t day, double blur) const
{
    double v = anomaly(day) * gaussian(lon, lat, anomaly_shape_, blur);
    for (const auto& b : bumps_) {
        v += b.amplitude * seasonal_factor(b, day) * gaussian(lon, lat, b, blur);
    }
    return v;
}

double TruthOracle::latent(double lon, double lat, std::int64_t day) const
{
    return field(lon, lat, day, 0.0);
}

double TruthOracle::blurred(double lon, double lat, std::int64_t day) const
{
    return field(lon, lat, day, blur_);
}

double TruthOracle::bias(double lon, double lat) const
{
    double v = 0.0;
    for (const auto& b : bias_) {
        v += b.amplitude * gaussian(lon, lat, b, 0.0);
    }
    return v;
}

double TruthOracle::proxy_mean(double lon, double lat, std::int64_t day) const
{
    return blurred(lon, lat, day) + bias(lon, lat);
}

World generate_world(const WorldConfig& cfg)
{
    cfg.validate();
    const auto streams = splits::make_seed_streams(cfg.seed);
    const auto& box = cfg.box;
    const auto span = cfg.span();

    // Latent field.
    auto rng = streams.stream("latent");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Bump> bumps;
    for (int k = 0; k < cfg.bumps; ++k) {
        Bump b;
        b.lon = box.lon_min - 2.0 + unit(rng) * (box.width() + 4.0);
        b.lat = box.lat_min - 2.0 + unit(rng) * (box.height() + 4.0);
        b.width = cfg.bump_width_min + unit(rng) * (cfg.bump_width_max - cfg.bump_width_min);
        b.amplitude = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unit(rng));
        b.seasonal = cfg.seasonal_amplitude * unit(rng);
        b.phase = 365.25 * unit(rng);
        bumps.push_back(b);
    }
    Bump shape;
    shape.lon = box.lon_min + box.width() * (0.3 + 0.4 * unit(rng));
    shape.lat = box.lat_min + box.height() * (0.3 + 0.4 * unit(rng));
    shape.width = cfg.anomaly_width;
    shape.amplitude = 1.0;

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> anomaly(static_cast<std::size_t>(cfg.days));
    const double innovation = std::sqrt(1.0 - cfg.anomaly_ar * cfg.anomaly_ar) * cfg.anomaly_std;
    anomaly[0] = cfg.anomaly_std * normal(rng);
    for (std::size_t t = 1; t < anomaly.size(); ++t) {
        anomaly[t] = cfg.anomaly_ar * anomaly[t - 1] + innovation * normal(rng);
    }

    std::vector<Bump> bias;
    for (int k = 0; k < 3; ++k) {
        Bump b;
        b.lon = box.lon_min + unit(rng) * box.width();
        b.lat = box.lat_min + unit(rng) * box.height();
        b.width = 0.25 * std::min(box.width(), box.height()) * (1.0 + unit(rng));
        b.amplitude = cfg.proxy_bias * (k % 2 == 0 ? 1.0 : -1.0) * (0.5 + unit(rng));
        bias.push_back(b);
    }

    World w;
    w.cfg = cfg;
    w.oracle = TruthOracle(bumps, shape, anomaly, span.first_day, bias, cfg.proxy_blur);

    // Feature map.
    auto frng = streams.stream("features");
    for (int j = 0; j < cfg.informative_features; ++j) {
        w.features.alpha.push_back(0.5 + unit(frng));
        w.features.beta.push_back(-1.0 + 2.0 * unit(frng));
    }

    // Stations from a Poisson cluster process.
    auto srng = streams.stream("stations");
    std::vector<std::pair<double, double>> centers;
    for (int c = 0; c < cfg.clusters; ++c) {
        centers.emplace_back(box.lon_min + 1.0 + unit(srng) * std::max(box.width() - 2.0, 0.0),
                             box.lat_min + 1.0 + unit(srng) * std::max(box.height() - 2.0, 0.0));
    }
    std::uniform_int_distribution<int> pick(0, cfg.clusters - 1);
    std::vector<io::Site> sites;
    while (static_cast<int>(sites.size()) < cfg.sites) {
        const auto& c = centers[static_cast<std::size_t>(pick(srng))];
        const double lon = c.first + cfg.cluster_spread * normal(srng);
        const double lat = c.second + cfg.cluster_spread * normal(srng);
        if (!box.contains(lon, lat)) {
            continue;
        }
        char id[16];
        std::snprintf(id, sizeof id, "site%03zu", sites.size());
        sites.push_back({id, lon, lat});
    }

    // Labeled samples.
    auto nrng = streams.stream("noise");
    const int k_features = cfg.informative_features + cfg.noise_features;
    for (int j = 0; j < cfg.informative_features; ++j) {
        w.data.feature_names.push_back("x" + std::to_string(j + 1));
    }
    for (int j = 0; j < cfg.noise_features; ++j) {
        w.data.feature_names.push_back("n" + std::to_string(j + 1));
    }
    std::vector<std::int64_t> all_days(static_cast<std::size_t>(cfg.days));
    std::iota(all_days.begin(), all_days.end(), span.first_day);
    for (const auto& site : sites) {
        w.data.sites.add(site);
        const double offset = cfg.site_offset_std * normal(nrng);
        std::shuffle(all_days.begin(), all_days.end(), nrng);
        std::vector<std::int64_t> days(all_days.begin(), all_days.begin() + cfg.samples_per_site);
        std::sort(days.begin(), days.end());
        for (std::size_t k = 0; k < days.size(); ++k) {
            io::LabeledSample s;
            s.id = site.id + "_" + std::to_string(k);
            s.site = site.id;
            s.lon = site.lon;
            s.lat = site.lat;
            s.date = Date::from_days(days[k]);
            const double latent = w.oracle.latent(site.lon, site.lat, days[k]);
            s.features.resize(k_features);
            for (int j = 0; j < cfg.informative_features; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                s.features(j) = w.features.alpha[ju] * latent + w.features.beta[ju] * std::tanh(latent) +
                                cfg.feature_noise_std * normal(nrng);
            }
            for (int j = cfg.informative_features; j < k_features; ++j) {
                s.features(j) = normal(nrng);
            }
            s.y = latent + offset + cfg.obs_noise_std * normal(nrng);
            w.data.samples.push_back(std::move(s));
        }
    }

    // Proxy raster: blurred latent plus bias plus noise at cell centers.
    io::GridSpec grid;
    grid.lon0 = box.lon_min;
    grid.lat0 = box.lat_min;
    grid.cell = cfg.proxy_cell;
    grid.nx = static_cast<int>(std::ceil(box.width() / cfg.proxy_cell - 1e-9));
    grid.ny = static_cast<int>(std::ceil(box.height() / cfg.proxy_cell - 1e-9));
    io::TimeAxis axis{span.first_day, 1, cfg.days};
    const auto cells = static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);

    // Per-cell spatial kernels are time independent.
    std::vector<double> kernel(cells * (bumps.size() + 1));
    std::vector<double> cell_bias(cells);
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const auto c = static_cast<std::size_t>(iy) * grid.nx + ix;
            const double lon = grid.center_lon(ix);
            const double lat = grid.center_lat(iy);
            for (std::size_t k = 0; k < bumps.size(); ++k) {
                kernel[c * (bumps.size() + 1) + k] = bumps[k].amplitude * gaussian(lon, lat, bumps[k], cfg.proxy_blur);
            }
            kernel[c * (bumps.size() + 1) + bumps.size()] = gaussian(lon, lat, shape, cfg.proxy_blur);
            cell_bias[c] = w.oracle.bias(lon, lat);
        }
    }
    auto prng = streams.stream("proxy");
    std::vector<double> values(cells * static_cast<std::size_t>(cfg.days));
    std::vector<double> factor(bumps.size() + 1);
    for (int t = 0; t < cfg.days; ++t) {
        const auto day = axis.day_of(t);
        for (std::size_t k = 0; k < bumps.size(); ++k) {
            factor[k] = seasonal_factor(bumps[k], day);
        }
        factor[bumps.size()] = anomaly[static_cast<std::size_t>(t)];
        for (std::size_t c = 0; c < cells; ++c) {
            double v = cell_bias[c];
            const double* kc = &kernel[c * (bumps.size() + 1)];
            for (std::size_t k = 0; k <= bumps.size(); ++k) {
                v += factor[k] * kc[k];
            }
            values[static_cast<std::size_t>(t) * cells + c] = v + cfg.proxy_noise_std * normal(prng);
        }
    }
    w.field = io::ProxyField({"proxy"}, grid, axis, std::move(values), -9999.0);
    return w;
}

std::string WorldReport::to_text() const
{
    using io::format_double;
    std::ostringstream os;
    os << "sites = " << sites << "\nsamples = " << samples << "\nproxy_target_r = " << format_double(proxy_target_r)
       << "\nproxy_only_r2 = " << format_double(proxy_only_r2)
       << "\ncoordinate_only_checkerboard_r2 = " << format_double(coordinate_only_r2)
       << "\nautocorrelation_length_deg = " << format_double(autocorrelation_length) << "\n";
    return os.str();
}

WorldReport world_report(const World& world)
{
    const auto& data = world.data;
    WorldReport r;
    r.sites = data.sites.size();
    r.samples = data.samples.size();
    if (data.samples.size() < 4) {
        return r;
    }

    std::vector<double> z, y;
    z.reserve(data.samples.size());
    y.reserve(data.samples.size());
    for (const auto& s : data.samples) {
        const auto v = world.field.sample(s.lon, s.lat, s.date.days());
        z.push_back(v ? (*v)(0) : std::nan(""));
        y.push_back(s.y);
    }
    r.proxy_target_r = pearson(z, y);

    const auto fit_and_score = [&](const splits::SplitAssignment& split, auto&& design) {
        const auto train = split.indices(splits::Role::train);
        const auto test = split.indices(splits::Role::test);
        const auto width = design(data.samples.front()).size();
        Eigen::MatrixXd xtr(static_cast<Eigen::Index>(train.size()), width);
        Eigen::MatrixXd xte(static_cast<Eigen::Index>(test.size()), width);
        std::vector<double> ytr, yte;
        for (std::size_t i = 0; i < train.size(); ++i) {
            xtr.row(static_cast<Eigen::Index>(i)) = design(data.samples[train[i]]);
            ytr.push_back(data.samples[train[i]].y);
        }
        for (std::size_t i = 0; i < test.size(); ++i) {
            xte.row(static_cast<Eigen::Index>(i)) = design(data.samples[test[i]]);
            yte.push_back(data.samples[test[i]].y);
        }
        const auto res = fusion::proxy_only_regression(xtr, ytr, xte, yte);
        return res.test.r2.value_or(0.0);
    };

    if (data.sites.size() >= 2) {
        const auto uar = splits::uar_site_split(data, 0.5, world.cfg.seed, 0.0);
        r.proxy_only_r2 = fit_and_score(uar, [&](const io::LabeledSample& s) {
            Eigen::RowVectorXd row(1);
            row(0) = (*world.field.sample(s.lon, s.lat, s.date.days()))(0);
            return row;
        });
    }
    splits::CheckerboardConfig cb;
    cb.delta = 0.25 * std::min(world.cfg.box.width(), world.cfg.box.height());
    cb.lon0 = world.cfg.box.lon_min;
    cb.lat0 = world.cfg.box.lat_min;
    const auto board = splits::checkerboard_split(data, cb, world.cfg.seed, 0.0);
    if (board.count(splits::Role::train) > 2 && board.count(splits::Role::test) > 1) {
        r.coordinate_only_r2 = fit_and_score(board, [](const io::LabeledSample& s) {
            Eigen::RowVectorXd row(2);
            row << s.lon, s.lat;
            return row;
        });
    }

    // Correlogram of centered site means in 1-degree bins.
    const auto& sites = data.sites.sites();
    std::vector<double> mean(sites.size(), 0.0);
    std::vector<int> count(sites.size(), 0);
    for (const auto& s : data.samples) {
        const auto k = data.sites.index_of(s.site);
        mean[k] += s.y;
        ++count[k];
    }
    double grand = 0.0;
    for (std::size_t k = 0; k < sites.size(); ++k) {
        mean[k] /= count[k];
        grand += mean[k];
    }
    grand /= static_cast<double>(sites.size());
    double var = 0.0;
    for (double m : mean) {
        var += (m - grand) * (m - grand);
    }
    var /= static_cast<double>(sites.size());
    constexpr int bins = 15;
    std::vector<double> prod(bins, 0.0);
    std::vector<int> pairs(bins, 0);
    for (std::size_t a = 0; a < sites.size(); ++a) {
        for (std::size_t b = a + 1; b < sites.size(); ++b) {
            const double d = std::hypot(sites[a].lon - sites[b].lon, sites[a].lat - sites[b].lat);
            const auto bin = static_cast<int>(d);
            if (bin < bins) {
                prod[static_cast<std::size_t>(bin)] += (mean[a] - grand) * (mean[b] - grand);
                ++pairs[static_cast<std::size_t>(bin)];
            }
        }
    }
    r.autocorrelation_length = static_cast<double>(bins);
    double prev_corr = 1.0;
    double prev_x = 0.0;
    for (int bin = 0; bin < bins; ++bin) {
        if (pairs[static_cast<std::size_t>(bin)] == 0 || !(var > 0.0)) {
            continue;
        }
        const double corr = prod[static_cast<std::size_t>(bin)] / pairs[static_cast<std::size_t>(bin)] / var;
        const double x = bin + 0.5;
        if (corr < 1.0 / std::numbers::e) {
            const double f = (prev_corr - 1.0 / std::numbers::e) / (prev_corr - corr);
            r.autocorrelation_length = prev_x + f * (x - prev_x);
            break;
        }
        prev_corr = corr;
        prev_x = x;
    }
    return r;
}

void write_world(const std::filesystem::path& dir, const World& world)
{
    std::filesystem::create_directories(dir);
    io::write_labeled_table(dir / "points.tsv", world.data);
    world.field.save(dir / "field.spec");
    {
        std::ofstream os(dir / "world.cfg", std::ios::trunc);
        os << world.cfg.to_text();
    }
    std::ofstream os(dir / "report.txt", std::ios::trunc);
    os << world_report(world).to_text();
    if (!os) {
        throw DataError("write failed in " + dir.string());
    }
}

} // namespace geoprox::synth
