// SPDX-License-Identifier: Apache-2.0
#include "geoprox/errors.hpp"
#include "geoprox/splits/sampler.hpp"
#include "geoprox/splits/seeds.hpp"
#include "geoprox/splits/split.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

using namespace geoprox;
using namespace geoprox::splits;
namespace fs = std::filesystem;

namespace {

io::Dataset grid_dataset(int sites, int per_site, double spacing = 0.37)
{
    io::Dataset d;
    d.feature_names = {"f"};
    for (int s = 0; s < sites; ++s) {
        const double lon = -100.0 + spacing * (s % 7) + 0.013 * s;
        const double lat = 30.0 + spacing * (s / 7) + 0.007 * s;
        const std::string site = "site" + std::to_string(s);
        d.sites.add({site, lon, lat});
        for (int k = 0; k < per_site; ++k) {
            io::LabeledSample x;
            x.id = site + "_" + std::to_string(k);
            x.site = site;
            x.lon = lon;
            x.lat = lat;
            x.date = Date::from_days(17000 + k);
            x.features = Eigen::RowVectorXd::Zero(1);
            d.samples.push_back(x);
        }
    }
    return d;
}

io::Dataset points_dataset(const std::vector<std::pair<double, double>>& pts)
{
    io::Dataset d;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        io::LabeledSample x;
        x.id = "p" + std::to_string(i);
        x.site = x.id;
        x.lon = pts[i].first;
        x.lat = pts[i].second;
        d.sites.add({x.site, x.lon, x.lat});
        d.samples.push_back(x);
    }
    return d;
}

void expect_partition(const SplitAssignment& s, std::size_t n)
{
    ASSERT_EQ(s.roles.size(), n);
    EXPECT_EQ(s.count(Role::train) + s.count(Role::validation) + s.count(Role::test), n);
}

} // namespace

TEST(UarSiteSplit, TenSitesHalfFraction)
{
    const auto d = grid_dataset(10, 3);
    const auto s = uar_site_split(d, 0.5, 7, 0.0);
    expect_partition(s, d.samples.size());
    std::set<std::string> train_sites;
    std::set<std::string> test_sites;
    for (std::size_t i = 0; i < s.roles.size(); ++i) {
        (s.roles[i] == Role::test ? test_sites : train_sites).insert(d.samples[i].site);
    }
    EXPECT_EQ(train_sites.size(), 5U);
    EXPECT_EQ(test_sites.size(), 5U);
    for (const auto& t : train_sites) {
        EXPECT_EQ(test_sites.count(t), 0U);
    }
}

TEST(UarSiteSplit, SeedDeterminesAssignmentAndSitesStayCoherent)
{
    const auto d = grid_dataset(40, 4);
    const auto a = uar_site_split(d, 0.5, 11);
    const auto b = uar_site_split(d, 0.5, 11);
    const auto c = uar_site_split(d, 0.5, 12);
    EXPECT_EQ(a.roles, b.roles);
    EXPECT_NE(a.roles, c.roles);
    for (std::size_t i = 0; i < d.samples.size(); i += 4) {
        for (int k = 1; k < 4; ++k) {
            EXPECT_EQ(a.roles[i], a.roles[i + k]);
        }
    }
    // 20 train sites, 2 of them validation
    EXPECT_EQ(a.count(Role::validation), 2U * 4U);
    EXPECT_EQ(a.count(Role::train), 18U * 4U);
    EXPECT_EQ(a.count(Role::test), 20U * 4U);
}

TEST(UarSiteSplit, Errors)
{
    EXPECT_THROW((void)uar_site_split(grid_dataset(1, 2), 0.5, 1), DataError);
    EXPECT_THROW((void)uar_site_split(grid_dataset(4, 2), 1.0, 1), ConfigError);
    EXPECT_THROW((void)uar_site_split(grid_dataset(4, 2), 0.0, 1), ConfigError);
}

TEST(Checkerboard, InteriorParityAndSwap)
{
    const auto d = points_dataset({{0.5, 0.5}, {1.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}});
    CheckerboardConfig cfg{1.0, 0.0, 0.0, Offset::original, false};
    const auto s = checkerboard_split(d, cfg, 1, 0.0);
    EXPECT_EQ(s.roles, (std::vector<Role>{Role::train, Role::test, Role::test, Role::train}));
    cfg.swap = true;
    const auto w = checkerboard_split(d, cfg, 1, 0.0);
    EXPECT_EQ(w.roles, (std::vector<Role>{Role::test, Role::train, Role::train, Role::test}));
}

TEST(Checkerboard, HalfOpenBoundaries)
{
    CheckerboardConfig cfg{2.0, 0.0, 0.0, Offset::original, false};
    EXPECT_TRUE(checkerboard_even(0.0, 0.0, cfg));
    EXPECT_FALSE(checkerboard_even(2.0, 0.0, cfg));
    EXPECT_TRUE(checkerboard_even(std::nextafter(2.0, 0.0), 0.0, cfg));
    EXPECT_FALSE(checkerboard_even(-1e-12, 0.0, cfg));
}

TEST(Checkerboard, EachSampleInTestForFourOfEightPartitions)
{
    // Oracle: points at cell centers of a delta/2 lattice; parity from integer
    // half-cell coordinates, independent of the floor-based implementation.
    const double delta = 2.0;
    std::vector<std::pair<double, double>> pts;
    std::vector<std::pair<int, int>> half;
    for (int a = -5; a < 5; ++a) {
        for (int b = -5; b < 5; ++b) {
            pts.emplace_back((a + 0.5) * delta / 2.0, (b + 0.5) * delta / 2.0);
            half.emplace_back(a, b);
        }
    }
    const auto d = points_dataset(pts);
    std::vector<int> test_count(pts.size(), 0);
    for (auto off : {Offset::original, Offset::right, Offset::up, Offset::both}) {
        for (bool swap : {false, true}) {
            CheckerboardConfig cfg{delta, 0.0, 0.0, off, swap};
            const auto s = checkerboard_split(d, cfg, 3, 0.0);
            expect_partition(s, pts.size());
            const int sx = (off == Offset::right || off == Offset::both) ? 1 : 0;
            const int sy = (off == Offset::up || off == Offset::both) ? 1 : 0;
            for (std::size_t k = 0; k < pts.size(); ++k) {
                const auto floor_div2 = [](int v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); };
                const int i = floor_div2(half[k].first - sx);
                const int j = floor_div2(half[k].second - sy);
                const bool oracle_train = (((i + j) % 2) + 2) % 2 == 0;
                EXPECT_EQ(s.roles[k] == Role::train, oracle_train != swap) << k;
                test_count[k] += s.roles[k] == Role::test ? 1 : 0;
            }
        }
    }
    for (int c : test_count) {
        EXPECT_EQ(c, 4);
    }
}

TEST(Checkerboard, SwapComplementAndTwoDeltaShift)
{
    const auto d = grid_dataset(49, 1, 0.61);
    CheckerboardConfig cfg{1.5, -100.0, 30.0, Offset::up, false};
    const auto a = checkerboard_split(d, cfg, 5, 0.0);
    cfg.swap = true;
    const auto b = checkerboard_split(d, cfg, 5, 0.0);
    for (std::size_t i = 0; i < a.roles.size(); ++i) {
        EXPECT_EQ(a.roles[i] == Role::train, b.roles[i] == Role::test);
    }
    cfg.swap = false;
    cfg.lon0 += 2 * cfg.delta;
    cfg.lat0 -= 2 * cfg.delta;
    EXPECT_EQ(checkerboard_split(d, cfg, 5, 0.0).roles, a.roles);
}

TEST(Checkerboard, ValidationComesFromTrain)
{
    const auto d = grid_dataset(49, 3, 0.61);
    CheckerboardConfig cfg{1.0, -100.0, 30.0, Offset::original, false};
    const auto plain = checkerboard_split(d, cfg, 9, 0.0);
    const auto with_val = checkerboard_split(d, cfg, 9, 0.1);
    const auto n_train = plain.count(Role::train);
    EXPECT_EQ(with_val.count(Role::validation), static_cast<std::size_t>(std::llround(0.1 * n_train)));
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        if (with_val.roles[i] == Role::validation) {
            EXPECT_EQ(plain.roles[i], Role::train);
        }
        EXPECT_EQ(with_val.roles[i] == Role::test, plain.roles[i] == Role::test);
    }
}

TEST(SplitFile, RoundTripAndAlign)
{
    const auto d = grid_dataset(12, 2);
    CheckerboardConfig cfg{0.5, -100.0, 30.0, Offset::both, true};
    const auto s = checkerboard_split(d, cfg, 21);
    const auto path = fs::temp_directory_path() / "geoprox_split_roundtrip.csv";
    write_split_file(path, s);
    const auto back = read_split_file(path);
    fs::remove(path);
    EXPECT_EQ(back.roles, s.roles);
    EXPECT_EQ(back.sample_ids, s.sample_ids);
    EXPECT_EQ(back.header.protocol, "checkerboard");
    EXPECT_EQ(back.header.delta, 0.5);
    EXPECT_EQ(back.header.offset, Offset::both);
    EXPECT_TRUE(back.header.swap);
    EXPECT_EQ(back.header.seed, 21U);

    auto shuffled = back;
    std::reverse(shuffled.sample_ids.begin(), shuffled.sample_ids.end());
    std::reverse(shuffled.roles.begin(), shuffled.roles.end());
    EXPECT_EQ(align_split(shuffled, d).roles, s.roles);
    shuffled.sample_ids.pop_back();
    shuffled.roles.pop_back();
    EXPECT_THROW((void)align_split(shuffled, d), DataError);
}

TEST(ProxySampler, RandomOnlyCounts)
{
    const DomainBox box{-100, -80, 30, 50};
    const TimeSpan span{17000, 17729};
    std::mt19937_64 rng(1);
    std::vector<SpaceTime> labeled(256, SpaceTime{-90, 40, 17100});
    SamplerConfig cfg{256, 0.0, SamplerMode::random_only, 1};
    EXPECT_TRUE(sample_proxy_batch(box, span, cfg, labeled, rng).empty());
    cfg.rho = 16.0;
    const auto pts = sample_proxy_batch(box, span, cfg, labeled, rng);
    EXPECT_EQ(pts.size(), 4096U);
    for (const auto& p : pts) {
        EXPECT_TRUE(box.contains(p.lon, p.lat));
        EXPECT_GE(p.day, span.first_day);
        EXPECT_LE(p.day, span.last_day);
    }
    cfg.rho = -1.0;
    EXPECT_THROW((void)sample_proxy_batch(box, span, cfg, labeled, rng), ConfigError);
}

TEST(ProxySampler, SitesModes)
{
    const DomainBox box{-100, -80, 30, 50};
    const TimeSpan span{17000, 17729};
    std::mt19937_64 rng(2);
    const std::vector<SpaceTime> labeled{{-91.25, 41.5, 17010}, {-85.0, 33.0, 17200}, {-91.25, 41.5, 17011}};
    SamplerConfig cfg{3, 8.0, SamplerMode::sites_only, 0};
    const auto sites = sample_proxy_batch(box, span, cfg, labeled, rng);
    ASSERT_EQ(sites.size(), labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        EXPECT_EQ(sites[i].lon, labeled[i].lon);
        EXPECT_EQ(sites[i].lat, labeled[i].lat);
        EXPECT_EQ(sites[i].day, labeled[i].day);
    }
    cfg.mode = SamplerMode::sites_random;
    const auto both = sample_proxy_batch(box, span, cfg, labeled, rng);
    EXPECT_EQ(both.size(), 3U + 24U);
    EXPECT_EQ(both[1].lon, labeled[1].lon);
}

TEST(ProxySampler, MaskIsRespected)
{
    const DomainBox box{0, 10, 0, 10};
    const TimeSpan span{0, 9};
    std::mt19937_64 rng(3);
    const DomainMask land = [](double lon, double lat) { return lon + lat < 10.0; };
    for (const auto& p : sample_uniform(box, span, 2000, rng, land)) {
        EXPECT_LT(p.lon + p.lat, 10.0);
    }
    const DomainMask never = [](double, double) { return false; };
    EXPECT_THROW((void)sample_uniform(box, span, 1, rng, never), DataError);
}

TEST(SeedStreams, DeterministicAndIndependent)
{
    const auto a = make_seed_streams(42);
    const auto b = make_seed_streams(42);
    const auto c = make_seed_streams(43);
    auto a1 = a.stream("split");
    auto b1 = b.stream("split");
    auto c1 = c.stream("split");
    EXPECT_EQ(a1(), b1());
    EXPECT_NE(a.stream("split")(), c1());
    EXPECT_NE(a.seed_for("init"), a.seed_for("sampler"));

    // Draining one stream leaves another untouched.
    auto init = a.stream("init");
    for (int i = 0; i < 1000; ++i) {
        (void)init();
    }
    EXPECT_EQ(a.stream("sampler")(), b.stream("sampler")());

    // Crude independence check: correlation of uniform draws.
    auto s1 = a.stream("init");
    auto s2 = a.stream("sampler");
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double sxy = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        sxy += u(s1) * u(s2);
    }
    EXPECT_LT(std::abs(sxy / n) / (1.0 / 3.0), 0.05);
}
