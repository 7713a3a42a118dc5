// SPDX-License-Identifier: Apache-2.0
#include "geoprox/errors.hpp"
#include "geoprox/geo/equal_earth.hpp"
#include "geoprox/geo/frozen_table.hpp"
#include "geoprox/geo/location_encoder.hpp"
#include "geoprox/geo/rff.hpp"

#include "support/finite_diff.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace geoprox;
using namespace geoprox::geo;

namespace {

const DomainBox kBox{-100.0, -80.0, 30.0, 50.0};

LocationTimeEncoder small_encoder(std::uint64_t seed, TimeKind kind = TimeKind::day_of_year)
{
    LocationEncoderConfig cfg;
    cfg.sigmas = {1.0, 4.0};
    cfg.freqs_per_level = 4;
    cfg.time_kind = kind;
    cfg.time_sigmas = {1.0};
    cfg.time_freqs = 3;
    cfg.hidden = {6};
    cfg.out_dim = 5;
    std::mt19937_64 rng(seed);
    return LocationTimeEncoder(cfg, kBox, 2017, 2018, rng);
}

} // namespace

TEST(EqualEarth, OriginMapsToOrigin)
{
    const auto p = equal_earth_project(0.0, 0.0);
    EXPECT_EQ(p.x, 0.0);
    EXPECT_EQ(p.y, 0.0);
}

TEST(EqualEarth, OddSymmetry)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> lon(-180, 180), lat(-90, 90);
    for (int i = 0; i < 100; ++i) {
        const double a = lon(rng), b = lat(rng);
        const auto p = equal_earth_project(a, b);
        const auto q = equal_earth_project(-a, -b);
        EXPECT_DOUBLE_EQ(q.x, -p.x);
        EXPECT_DOUBLE_EQ(q.y, -p.y);
    }
}

TEST(EqualEarth, ReferenceValues)
{
    // Reference values from PROJ (+proj=eqearth +R=1).
    const auto p = equal_earth_project(10.0, 50.0);
    EXPECT_NEAR(p.x, 0.12403502783330472, 1e-12);
    EXPECT_NEAR(p.y, 0.941540234660433, 1e-12);
    EXPECT_NEAR(equal_earth_project(180.0, 0.0).x, 2.7066299836960743, 1e-12);
    EXPECT_NEAR(equal_earth_project(0.0, 90.0).y, 1.3173627591574133, 1e-12);
}

TEST(EqualEarth, RejectsOutOfRange)
{
    EXPECT_THROW((void)equal_earth_project(181.0, 0.0), DomainError);
    EXPECT_THROW((void)equal_earth_project(0.0, -90.5), DomainError);
    EXPECT_THROW((void)equal_earth_project(std::nan(""), 0.0), DomainError);
}

TEST(Rff, ZeroFrequenciesGiveUnitCosinesAndZeroSines)
{
    RffBank bank({RffLevel{1.0, nd::Matrix::Zero(3, 2)}});
    const auto f = rff_encode({0.37, -0.81}, bank);
    ASSERT_EQ(f.size(), 6);
    EXPECT_TRUE((f.head(3).array() == 1.0).all());
    EXPECT_TRUE((f.tail(3).array() == 0.0).all());
}

TEST(Rff, PythagoreanIdentity)
{
    std::mt19937_64 rng(2);
    const std::vector<double> sigmas{1, 4, 16, 64};
    auto bank = RffBank::sample(sigmas, 8, 2, rng);
    ASSERT_EQ(bank.output_dim(), 2 * 8 * 4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 20; ++i) {
        const auto f = rff_encode({u(rng), u(rng)}, bank);
        for (int level = 0; level < 4; ++level) {
            const auto block = f.segment(level * 16, 16);
            const Eigen::ArrayXd s = block.head(8).array().square() + block.tail(8).array().square();
            EXPECT_LT((s - 1.0).abs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Rff, DisplacementOrthogonalToFrequenciesIsInvisible)
{
    nd::Matrix w(1, 2);
    w << 1.0, 2.0;
    RffBank bank({RffLevel{1.0, w}});
    // (2, -1) is orthogonal to (1, 2).
    const auto a = rff_encode({0.3, 0.1}, bank);
    const auto b = rff_encode({0.3 + 2.0 * 0.17, 0.1 - 0.17}, bank);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rff, LevelsSortedAscendingAndSeedStable)
{
    std::mt19937_64 r1(9), r2(9);
    const std::vector<double> sigmas{16, 1, 4};
    auto a = RffBank::sample(sigmas, 4, 2, r1);
    auto b = RffBank::sample(sigmas, 4, 2, r2);
    ASSERT_EQ(a.levels().size(), 3u);
    EXPECT_EQ(a.levels()[0].sigma, 1.0);
    EXPECT_EQ(a.levels()[2].sigma, 16.0);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_TRUE(a.levels()[i].freqs == b.levels()[i].freqs);
    }
}

TEST(TimeEncoding, NoneKindIsEmpty)
{
    TimeEncoder none;
    EXPECT_EQ(encode_time(Date{2018, 3, 4}, none).size(), 0);
}

TEST(TimeEncoding, DayOfYearIsPeriodicAndContinuousAcrossNewYear)
{
    auto enc = small_encoder(3).time_encoder();
    for (double d : {1.0, 45.5, 200.0, 366.0}) {
        EXPECT_LT((enc.encode_day_of_year(d) - enc.encode_day_of_year(d + kDaysPerYear)).cwiseAbs().maxCoeff(), 1e-6);
    }
    const auto jan1 = encode_time(Date{2017, 1, 1}, enc);
    const auto jan2 = encode_time(Date{2017, 1, 2}, enc);
    const auto dec31_leap = encode_time(Date{2016, 12, 31}, enc);
    EXPECT_EQ(Date({2016, 12, 31}).day_of_year(), 366);
    EXPECT_LT((dec31_leap - jan1).norm(), (jan2 - jan1).norm());
}

TEST(TimeEncoding, SameDayOfYearDifferentYearsIdentical)
{
    auto enc = small_encoder(3).time_encoder();
    EXPECT_EQ(encode_time(Date{2017, 6, 1}, enc), encode_time(Date{2018, 6, 1}, enc));
}

TEST(TimeEncoding, YearKindSpansMinusOneToOne)
{
    TimeEncoder enc(TimeKind::year, {}, 2010, 2020);
    EXPECT_DOUBLE_EQ(encode_time(Date{2010, 5, 5}, enc)(0), -1.0);
    EXPECT_DOUBLE_EQ(encode_time(Date{2015, 1, 1}, enc)(0), 0.0);
    EXPECT_DOUBLE_EQ(encode_time(Date{2020, 12, 31}, enc)(0), 1.0);
}

TEST(LocationEncoder, DeterministicWithDeclaredWidth)
{
    auto enc = small_encoder(11);
    const auto a = embed_location_time(-90.0, 40.0, Date{2017, 7, 1}, enc);
    const auto b = embed_location_time(-90.0, 40.0, Date{2017, 7, 1}, enc);
    EXPECT_EQ(a, b);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> lon(-100, -80), lat(30, 50);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(embed_location_time(lon(rng), lat(rng), Date{2018, 1, 9}, enc).size(), 5);
    }
}

TEST(LocationEncoder, SameSeedSameBanks)
{
    auto a = small_encoder(5);
    auto b = small_encoder(5);
    for (std::size_t i = 0; i < a.spatial_bank().levels().size(); ++i) {
        EXPECT_TRUE(a.spatial_bank().levels()[i].freqs == b.spatial_bank().levels()[i].freqs);
    }
    EXPECT_TRUE(nd::bit_equal(a.trunk().group(), b.trunk().group()));
}

TEST(LocationEncoder, NoTimeKindIgnoresDate)
{
    auto enc = small_encoder(4, TimeKind::none);
    EXPECT_EQ(embed_location_time(-85, 35, Date{2017, 1, 1}, enc), embed_location_time(-85, 35, Date{2018, 9, 9}, enc));
}

TEST(LocationEncoder, TrunkGradientMatchesFiniteDifferences)
{
    auto enc = small_encoder(12);
    const std::vector<SpaceTime> pts{{-95.0, 33.0, Date{2017, 2, 1}.days()}, {-82.5, 47.0, Date{2018, 8, 15}.days()}};
    for (int coord = 0; coord < 5; ++coord) {
        auto objective = [&] { return enc.evaluate(pts).col(coord).sum(); };
        enc.trunk().group().zero_grad();
        auto e = enc.embed(pts);
        nd::Matrix pick = nd::Matrix::Zero(e.rows(), e.cols());
        pick.col(coord).setOnes();
        nd::backward(nd::scale(nd::mean(nd::mul(e, nd::constant(pick))), static_cast<double>(e.rows() * e.cols())));
        for (auto& p : enc.trunk().group().params) {
            const nd::Matrix fd = testsupport::central_difference(p, objective, 1e-6);
            EXPECT_LT(testsupport::relative_error(p.grad, fd), 1e-4) << p.name << " coord " << coord;
        }
    }
}

TEST(LocationEncoder, ContinuousUnderTinyPerturbation)
{
    LocationEncoderConfig cfg; // full default scales
    std::mt19937_64 rng(21);
    LocationTimeEncoder enc(cfg, kBox, 2017, 2018, rng);
    std::uniform_real_distribution<double> lon(-99, -81), lat(31, 49);
    for (int i = 0; i < 20; ++i) {
        const double a = lon(rng), b = lat(rng);
        const auto e0 = embed_location_time(a, b, Date{2017, 4, 4}, enc);
        const auto e1 = embed_location_time(a + 1e-9, b - 1e-9, Date{2017, 4, 4}, enc);
        EXPECT_LT((e0 - e1).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(LocationEncoder, PropagatesProjectionDomainErrors)
{
    auto enc = small_encoder(1);
    EXPECT_THROW((void)embed_location_time(200.0, 0.0, Date{2017, 1, 1}, enc), DomainError);
}

TEST(FrozenTable, SaveLoadLookup)
{
    nd::Matrix emb(3, 2);
    emb << 0.1, 0.2, 1.0 / 3.0, -4.5, 1e-300, 7.0;
    FrozenEmbeddingTable table({-90.0, -85.5, -81.25}, {40.0, 33.0, 45.125}, emb, 0.01);
    const auto path = std::filesystem::temp_directory_path() / "geoprox_frozen.txt";
    table.save(path);
    const auto back = FrozenEmbeddingTable::load(path);
    EXPECT_TRUE(back.bit_identical(table));
    EXPECT_EQ(back.find(-85.5 + 0.005, 33.0), 1u);
    const std::vector<SpaceTime> q{{-81.25, 45.125, 0}, {-90.0, 40.0, 99}};
    const auto rows = back.lookup(q);
    EXPECT_EQ(rows.row(0), emb.row(2));
    EXPECT_EQ(rows.row(1), emb.row(0));
    EXPECT_THROW((void)back.find(-85.0, 33.0), DataError);
    std::filesystem::remove(path);
}

TEST(FrozenTable, MalformedFilesRejected)
{
    const auto path = std::filesystem::temp_directory_path() / "geoprox_frozen_bad.txt";
    {
        std::ofstream os(path);
        os << "2 3 0.1\n-90 40 1 2 3\n-80 30 1 2\n";
    }
    EXPECT_THROW((void)FrozenEmbeddingTable::load(path), DataError);
    std::filesystem::remove(path);
}
