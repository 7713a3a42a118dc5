// SPDX-License-Identifier: Apache-2.0
#include "geoprox/errors.hpp"
#include "geoprox/fusion/baselines.hpp"
#include "geoprox/fusion/experiment.hpp"
#include "geoprox/fusion/model.hpp"
#include "geoprox/fusion/trainer.hpp"
#include "geoprox/synth/world.hpp"

#include "support/finite_diff.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace geoprox;
using namespace geoprox::fusion;

namespace {

const DomainBox kBox{-100.0, -80.0, 30.0, 50.0};

ModelConfig small_config(Regime regime, int k = 3, int m = 1)
{
    ModelConfig c;
    c.regime = regime;
    c.feature_dim = k;
    c.proxy_channels = m;
    c.obs_hidden = {6};
    c.d1 = 4;
    c.head_hidden = {5};
    c.loc.sigmas = {1.0, 4.0};
    c.loc.freqs_per_level = 3;
    c.loc.time_sigmas = {1.0};
    c.loc.time_freqs = 2;
    c.loc.hidden = {6};
    c.loc.out_dim = 4;
    return c;
}

std::vector<SpaceTime> random_points(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> lon(kBox.lon_min, kBox.lon_max);
    std::uniform_real_distribution<double> lat(kBox.lat_min, kBox.lat_max);
    std::uniform_int_distribution<std::int64_t> day(Date{2017, 1, 1}.days(), Date{2018, 12, 31}.days());
    std::vector<SpaceTime> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({lon(rng), lat(rng), day(rng)});
    }
    return out;
}

nd::Matrix normal_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    nd::Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    return m;
}

LabeledBatch labeled_batch(const ModelConfig& c, std::size_t n, std::mt19937_64& rng)
{
    LabeledBatch b;
    b.features = normal_matrix(static_cast<Eigen::Index>(n), c.obs_input_dim(), rng);
    b.where = random_points(n, rng);
    b.y = normal_matrix(static_cast<Eigen::Index>(n), 1, rng);
    return b;
}

ProxyBatch proxy_batch(const ModelConfig& c, std::size_t n, std::mt19937_64& rng)
{
    ProxyBatch b;
    b.where = random_points(n, rng);
    b.z = normal_matrix(static_cast<Eigen::Index>(n), c.proxy_channels, rng);
    return b;
}

FusionModel make_model(const ModelConfig& c, std::uint64_t seed = 7,
                       std::shared_ptr<const geo::FrozenEmbeddingTable> table = nullptr)
{
    std::mt19937_64 rng(seed);
    return FusionModel(c, kBox, 2017, 2018, rng, std::move(table));
}

std::vector<std::string> group_names(const FusionModel& m)
{
    std::vector<std::string> out;
    for (const auto* g : m.groups()) {
        out.push_back(g->name);
    }
    return out;
}

std::shared_ptr<const geo::FrozenEmbeddingTable> site_table(const std::vector<SpaceTime>& pts, int dim,
                                                             std::mt19937_64& rng)
{
    std::vector<double> lon;
    std::vector<double> lat;
    for (const auto& p : pts) {
        lon.push_back(p.lon);
        lat.push_back(p.lat);
    }
    return std::make_shared<const geo::FrozenEmbeddingTable>(lon, lat, normal_matrix(
        static_cast<Eigen::Index>(pts.size()), dim, rng), 1e-9);
}

synth::WorldConfig tiny_world()
{
    synth::WorldConfig w;
    w.sites = 12;
    w.samples_per_site = 10;
    w.clusters = 4;
    w.days = 60;
    w.proxy_cell = 1.0;
    w.bumps = 8;
    w.seed = 3;
    return w;
}

TrainConfig tiny_training()
{
    TrainConfig t;
    t.epochs = 3;
    t.pretrain_epochs = 2;
    t.batch = 32;
    t.rho = 2.0;
    t.adam.lr = 1e-2;
    return t;
}

} // namespace

TEST(FusionModelStructure, GroupsFollowRegime)
{
    using V = std::vector<std::string>;
    EXPECT_EQ(group_names(make_model(small_config(Regime::trained_le_pcl))),
              (V{"obs_encoder", "loc_encoder", "fusion_head_f", "proxy_head_g"}));
    EXPECT_EQ(group_names(make_model(small_config(Regime::obs_only))), (V{"obs_encoder", "fusion_head_f"}));
    EXPECT_EQ(group_names(make_model(small_config(Regime::proxy_stacked))), (V{"obs_encoder", "fusion_head_f"}));

    std::mt19937_64 rng(1);
    const auto table = site_table(random_points(4, rng), 4, rng);
    EXPECT_EQ(group_names(make_model(small_config(Regime::frozen_le), 7, table)), (V{"obs_encoder", "fusion_head_f"}));
}

TEST(FusionModelStructure, FrozenRegimeNeedsTable)
{
    EXPECT_THROW(make_model(small_config(Regime::frozen_le)), ConfigError);
}

TEST(FusionModelStructure, ObservationEmbeddingHasWidthD1)
{
    auto m = make_model(small_config(Regime::trained_le_pcl));
    std::mt19937_64 rng(2);
    for (int n : {1, 5, 17}) {
        const auto e = m.obs_embedding(normal_matrix(n, 3, rng));
        EXPECT_EQ(e.value().rows(), n);
        EXPECT_EQ(e.value().cols(), 4);
    }
}

TEST(FusionModelStructure, ProxyStackedWidensObservationInput)
{
    const auto c = small_config(Regime::proxy_stacked, 3, 2);
    EXPECT_EQ(c.obs_input_dim(), 5);
    const auto m = make_model(c);
    EXPECT_EQ(m.group("obs_encoder")->params[0].value.matrix().rows(), 5);
    std::mt19937_64 rng(3);
    EXPECT_THROW((void)m.predict(normal_matrix(2, 3, rng), random_points(2, rng)), DimensionError);
}

TEST(FusionModelPredict, ObsOnlyIgnoresCoordinates)
{
    std::mt19937_64 rng(4);
    const nd::Matrix x = normal_matrix(1, 3, rng);
    nd::Matrix twice(2, 3);
    twice << x, x;
    const std::vector<SpaceTime> where{{-95.0, 35.0, Date{2017, 3, 1}.days()}, {-85.0, 45.0, Date{2018, 9, 1}.days()}};

    const auto obs = make_model(small_config(Regime::obs_only)).predict(twice, where);
    EXPECT_EQ(obs(0), obs(1));
    const auto fused = make_model(small_config(Regime::trained_le)).predict(twice, where);
    EXPECT_NE(fused(0), fused(1));
}

TEST(FusionModelPredict, ProxyHeadDependsOnlyOnSpaceTime)
{
    auto m = make_model(small_config(Regime::trained_le_pcl, 3, 3));
    std::mt19937_64 rng(5);
    const auto pts = random_points(6, rng);
    const auto z = m.proxy_predict(pts);
    EXPECT_EQ(z.rows(), 6);
    EXPECT_EQ(z.cols(), 3);

    // a recorded pass through the full model leaves the proxy output untouched
    LabeledBatch b;
    b.features = normal_matrix(6, 3, rng);
    b.where = pts;
    b.y = normal_matrix(6, 1, rng);
    (void)m.loss_graph(b, {});
    EXPECT_EQ(m.proxy_predict(pts), z);

    for (auto& p : m.group("proxy_head_g")->params) {
        p.value.matrix().setZero();
    }
    EXPECT_TRUE(m.proxy_predict(pts).isZero(0.0));
}

TEST(FusionModelPredict, UnsupportedRegimesRaise)
{
    const auto obs = make_model(small_config(Regime::obs_only));
    std::mt19937_64 rng(6);
    EXPECT_THROW((void)obs.proxy_predict(random_points(2, rng)), UnsupportedRegimeError);
    EXPECT_THROW((void)obs.location_embedding(random_points(2, rng)), UnsupportedRegimeError);
}

TEST(FusionLoss, PerfectPredictionsGiveZero)
{
    auto m = make_model(small_config(Regime::trained_le_pcl));
    std::mt19937_64 rng(7);
    auto b = labeled_batch(m.config(), 8, rng);
    auto p = proxy_batch(m.config(), 16, rng);
    b.y = m.predict(b.features, b.where);
    p.z = m.proxy_predict(p.where);
    const auto rec = m.loss_total(b, p);
    EXPECT_NEAR(rec.total, 0.0, 1e-28);
    EXPECT_NEAR(rec.pred, 0.0, 1e-28);
    EXPECT_NEAR(rec.pc, 0.0, 1e-28);
}

TEST(FusionLoss, ZeroLambdaIgnoresProxyBatch)
{
    auto c = small_config(Regime::trained_le_pcl);
    c.loss.lambda = 0.0;
    auto m = make_model(c);
    std::mt19937_64 rng(8);
    const auto b = labeled_batch(c, 10, rng);
    const auto with = m.loss_total(b, proxy_batch(c, 40, rng));
    const auto without = m.loss_total(b, {});
    EXPECT_EQ(with.total, with.pred);
    EXPECT_EQ(with.total, without.total);
}

TEST(FusionLoss, WeightedProxyLossHandValue)
{
    auto c = small_config(Regime::trained_le_pcl, 3, 2);
    c.loss.weights = {0.2, 0.4};
    auto m = make_model(c);
    for (auto& p : m.group("proxy_head_g")->params) {
        p.value.matrix().setZero();
    }
    std::mt19937_64 rng(9);
    auto b = labeled_batch(c, 4, rng);
    ProxyBatch p;
    p.where = random_points(1, rng);
    p.z = nd::Matrix::Constant(1, 2, 1.0);
    EXPECT_NEAR(m.loss_total(b, p).pc, 0.6, 1e-15);
}

TEST(FusionLoss, DecompositionOnRandomBatches)
{
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> lambda(0.01, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        auto c = small_config(Regime::trained_le_pcl, 2, 1 + trial % 3);
        c.obs_hidden = {3};
        c.head_hidden = {3};
        c.loc.hidden = {3};
        c.loss.lambda = lambda(rng);
        auto m = make_model(c, static_cast<std::uint64_t>(trial));
        const auto rec = m.loss_total(labeled_batch(c, 1 + trial % 7, rng), proxy_batch(c, 1 + trial % 11, rng));
        const double expect = rec.pred + c.loss.lambda * rec.pc;
        ASSERT_LE(std::abs(rec.total - expect), 1e-12 * std::max(1.0, std::abs(expect))) << "trial " << trial;
    }
}

TEST(FusionLoss, ScalarProxyMatchesUnitWeightVector)
{
    auto scalar = small_config(Regime::trained_le_pcl, 3, 1);
    auto vec = scalar;
    vec.loss.weights = {1.0};
    auto a = make_model(scalar, 11);
    auto b = make_model(vec, 11);
    std::mt19937_64 rng(11);
    const auto lb = labeled_batch(scalar, 6, rng);
    const auto pb = proxy_batch(scalar, 25, rng);
    const auto ra = a.loss_total(lb, pb);
    const auto rb = b.loss_total(lb, pb);
    EXPECT_EQ(ra.pc, rb.pc);
    EXPECT_EQ(ra.total, rb.total);

    const nd::Matrix d = a.proxy_predict(pb.where) - pb.z;
    double sq = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        sq += d(i, 0) * d(i, 0);
    }
    EXPECT_NEAR(ra.pc, sq / static_cast<double>(d.rows()), 1e-14);
}

TEST(FusionLoss, EmptyBatchesRaise)
{
    auto m = make_model(small_config(Regime::trained_le_pcl));
    std::mt19937_64 rng(12);
    EXPECT_THROW((void)m.loss_total({}, proxy_batch(m.config(), 4, rng)), DataError);
    EXPECT_THROW((void)m.loss_total(labeled_batch(m.config(), 4, rng), {}), DataError);
}

TEST(FusionLoss, NonFiniteTargetRaises)
{
    auto m = make_model(small_config(Regime::obs_only));
    std::mt19937_64 rng(13);
    auto b = labeled_batch(m.config(), 4, rng);
    b.y(2, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW((void)m.loss_total(b, {}), NumericalError);
}

TEST(FusionGradients, FusedLossMatchesFiniteDifferences)
{
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        auto c = small_config(Regime::trained_le_pcl, 2, 1 + trial % 2);
        c.obs_hidden = {3};
        c.head_hidden = {3};
        c.loc.hidden = {4};
        c.loc.out_dim = 3;
        c.loss.lambda = 0.2 + 0.1 * trial;
        auto m = make_model(c, 100 + static_cast<std::uint64_t>(trial));
        const auto lb = labeled_batch(c, 5, rng);
        const auto pb = proxy_batch(c, 7, rng);

        m.zero_grad();
        nd::backward(m.loss_graph(lb, pb).total);
        for (auto* g : m.groups()) {
            for (auto& p : g->params) {
                const nd::Matrix analytic = p.grad;
                const auto numeric =
                    testsupport::central_difference(p, [&] { return m.loss_total(lb, pb).total; });
                EXPECT_LT(testsupport::relative_error(analytic, numeric), 1e-4)
                    << "trial " << trial << " " << g->name << "/" << p.name;
            }
        }
    }
}

TEST(FusionGradients, ProxyLossNeverReachesObservationPath)
{
    auto m = make_model(small_config(Regime::trained_le_pcl));
    std::mt19937_64 rng(15);
    m.zero_grad();
    nd::backward(m.loss_graph(labeled_batch(m.config(), 6, rng), proxy_batch(m.config(), 12, rng),
                              LossMask{false, true}).total);
    EXPECT_FALSE(m.group("obs_encoder")->any_touched());
    EXPECT_FALSE(m.group("fusion_head_f")->any_touched());
    EXPECT_TRUE(m.group("loc_encoder")->any_touched());
    EXPECT_TRUE(m.group("proxy_head_g")->any_touched());
}

TEST(FusionTrainStep, MaskedPredictionLeavesObservationPathBitIdentical)
{
    auto m = make_model(small_config(Regime::trained_le_pcl));
    const auto obs = *m.group("obs_encoder");
    const auto f = *m.group("fusion_head_f");
    const auto loc = *m.group("loc_encoder");
    std::mt19937_64 rng(16);
    nd::OptimizerState opt(nd::AdamWConfig{.lr = 1e-2});
    (void)train_step(m, labeled_batch(m.config(), 8, rng), proxy_batch(m.config(), 32, rng), opt,
                     LossMask{false, true});
    EXPECT_TRUE(nd::bit_equal(*m.group("obs_encoder"), obs));
    EXPECT_TRUE(nd::bit_equal(*m.group("fusion_head_f"), f));
    EXPECT_FALSE(nd::bit_equal(*m.group("loc_encoder"), loc));
}

TEST(FusionTrainStep, MaskedProxyLossLeavesProxyHeadBitIdentical)
{
    auto m = make_model(small_config(Regime::trained_le_pcl));
    const auto g = *m.group("proxy_head_g");
    std::mt19937_64 rng(17);
    nd::OptimizerState opt(nd::AdamWConfig{.lr = 1e-2});
    (void)train_step(m, labeled_batch(m.config(), 8, rng), proxy_batch(m.config(), 32, rng), opt,
                     LossMask{true, false});
    EXPECT_TRUE(nd::bit_equal(*m.group("proxy_head_g"), g));
}

TEST(FusionTrainStep, ZeroLambdaLeavesProxyHeadBitIdentical)
{
    auto c = small_config(Regime::trained_le_pcl);
    c.loss.lambda = 0.0;
    auto m = make_model(c);
    const auto g = *m.group("proxy_head_g");
    std::mt19937_64 rng(18);
    nd::OptimizerState opt(nd::AdamWConfig{.lr = 1e-2});
    for (int i = 0; i < 5; ++i) {
        (void)train_step(m, labeled_batch(c, 8, rng), proxy_batch(c, 32, rng), opt);
    }
    EXPECT_TRUE(nd::bit_equal(*m.group("proxy_head_g"), g));
}

TEST(FusionTrainStep, FrozenTableNeverChanges)
{
    std::mt19937_64 rng(19);
    const auto sites = random_points(5, rng);
    const auto table = site_table(sites, 4, rng);
    const auto before = *table;
    auto m = make_model(small_config(Regime::frozen_le), 19, table);
    nd::OptimizerState opt(nd::AdamWConfig{.lr = 1e-2});
    for (int i = 0; i < 10; ++i) {
        LabeledBatch b = labeled_batch(m.config(), 5, rng);
        b.where = sites;
        (void)train_step(m, b, {}, opt);
    }
    EXPECT_TRUE(m.table()->bit_identical(before));
}

TEST(FusionTrainStep, FrozenTableRejectsUnknownSite)
{
    std::mt19937_64 rng(20);
    const auto table = site_table(random_points(3, rng), 4, rng);
    auto m = make_model(small_config(Regime::frozen_le), 20, table);
    EXPECT_THROW((void)m.predict(normal_matrix(1, 3, rng), random_points(1, rng)), DataError);
}

TEST(ProxyOnlyRegression, ExactLineOnThreePoints)
{
    Eigen::MatrixXd z(3, 1);
    z << 0.0, 1.0, 2.0;
    const std::vector<double> y{1.0, 3.0, 5.0};
    const auto fit = fit_ols(z, y);
    EXPECT_NEAR(fit.coef(0), 2.0, 1e-12);
    EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
}

TEST(ProxyOnlyRegression, IdenticalProxyGivesPerfectR2)
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd ztr(50, 1);
    Eigen::MatrixXd zte(30, 1);
    std::vector<double> ytr;
    std::vector<double> yte;
    for (int i = 0; i < 50; ++i) {
        ztr(i, 0) = n(rng);
        ytr.push_back(ztr(i, 0));
    }
    for (int i = 0; i < 30; ++i) {
        zte(i, 0) = n(rng);
        yte.push_back(zte(i, 0));
    }
    EXPECT_NEAR(*proxy_only_regression(ztr, ytr, zte, yte).test.r2, 1.0, 1e-12);
}

TEST(ProxyOnlyRegression, IndependentNoiseHasNoSkill)
{
    std::mt19937_64 rng(22);
    std::normal_distribution<double> n(0.0, 1.0);
    double total = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        Eigen::MatrixXd ztr(40, 1);
        Eigen::MatrixXd zte(40, 1);
        std::vector<double> ytr;
        std::vector<double> yte;
        for (int i = 0; i < 40; ++i) {
            ztr(i, 0) = n(rng);
            zte(i, 0) = n(rng);
            ytr.push_back(n(rng));
            yte.push_back(n(rng));
        }
        total += *proxy_only_regression(ztr, ytr, zte, yte).test.r2;
    }
    EXPECT_LE(total / 100.0, 0.0);
}

class TinyWorldTraining : public ::testing::Test {
protected:
    static void SetUpTestSuite() { world_ = new synth::World(synth::generate_world(tiny_world())); }
    static void TearDownTestSuite()
    {
        delete world_;
        world_ = nullptr;
    }

    static ExperimentConfig config(Regime regime)
    {
        ExperimentConfig c;
        c.model = small_config(regime, static_cast<int>(world_->data.feature_count()));
        c.train = tiny_training();
        c.seed = 5;
        return c;
    }

    static splits::SplitAssignment split() { return splits::uar_site_split(world_->data, 0.5, 5, 0.2); }

    static synth::World* world_;
};

synth::World* TinyWorldTraining::world_ = nullptr;

TEST_F(TinyWorldTraining, ObsOnlyReducesTrainingLoss)
{
    auto c = config(Regime::obs_only);
    c.train.epochs = 15;
    c.train.restore_best = false;
    const auto run = run_experiment(c, world_->data, world_->field, split());
    ASSERT_GE(run.train.steps.size(), 2u);
    EXPECT_LT(run.train.epochs.back().train_loss, run.train.epochs.front().train_loss);
}

TEST_F(TinyWorldTraining, ZeroLambdaRunIgnoresProxyBatches)
{
    auto c = config(Regime::trained_le_pcl);
    c.model.loss.lambda = 0.0;
    const auto plain = run_experiment(c, world_->data, world_->field, split());
    c.train.always_sample_proxy = true;
    const auto sampled = run_experiment(c, world_->data, world_->field, split());
    ASSERT_EQ(plain.train.steps.size(), sampled.train.steps.size());
    for (std::size_t i = 0; i < plain.train.steps.size(); ++i) {
        EXPECT_EQ(plain.train.steps[i].loss.pred, sampled.train.steps[i].loss.pred);
    }
    EXPECT_EQ(plain.test.rmse, sampled.test.rmse);
    EXPECT_NE(sampled.train.steps.front().loss.pc, 0.0);
}

TEST_F(TinyWorldTraining, RepeatedRunsAreIdentical)
{
    const auto c = config(Regime::trained_le_pcl);
    const auto a = run_experiment(c, world_->data, world_->field, split());
    const auto b = run_experiment(c, world_->data, world_->field, split());
    EXPECT_EQ(a.test.rmse, b.test.rmse);
    EXPECT_EQ(a.test.r2, b.test.r2);
}

TEST_F(TinyWorldTraining, PretrainStageOneLeavesObservationPathAlone)
{
    const auto c = config(Regime::proxy_pretrain);
    auto data = prepare_data(world_->data, world_->field, split(), Regime::proxy_pretrain);
    const splits::SeedStreams streams(c.seed);
    auto init = streams.stream("init");
    FusionModel m(resolve_model_config(c, world_->data, world_->field), data.box, data.year_min, data.year_max, init);
    cache_encoder_inputs(data, m);
    const auto obs = *m.group("obs_encoder");
    const auto f = *m.group("fusion_head_f");
    TrainResult r;
    proxy_pretrain(m, data, c.train, streams, r);
    EXPECT_TRUE(nd::bit_equal(*m.group("obs_encoder"), obs));
    EXPECT_TRUE(nd::bit_equal(*m.group("fusion_head_f"), f));
    EXPECT_FALSE(m.has_proxy_head());
    EXPECT_FALSE(m.group("loc_encoder")->trainable);

    const auto loc = *m.group("loc_encoder");
    auto stage2 = c.train;
    (void)train_model(m, data, stage2, streams);
    EXPECT_TRUE(nd::bit_equal(*m.group("loc_encoder"), loc));
}

TEST_F(TinyWorldTraining, PretrainLogHasStageMarkers)
{
    std::ostringstream log;
    const auto run = run_experiment(config(Regime::proxy_pretrain), world_->data, world_->field, split(), &log);
    const auto text = log.str();
    const auto s1 = text.find("# stage 1");
    const auto s2 = text.find("# stage 2");
    ASSERT_NE(s1, std::string::npos);
    ASSERT_NE(s2, std::string::npos);
    EXPECT_LT(s1, s2);
    EXPECT_EQ(run.train.epochs.front().stage, 1);
    EXPECT_EQ(run.train.epochs.back().stage, 2);
}

TEST_F(TinyWorldTraining, PretrainFitsConstantProxy)
{
    const auto& f = world_->field;
    const io::ProxyField flat(f.channels(), f.grid(), f.time(), std::vector<double>(f.values().size(), 3.5));

    auto c = config(Regime::proxy_pretrain);
    c.train.pretrain_epochs = 50;
    c.train.epochs = 0;
    auto data = prepare_data(world_->data, f, split(), Regime::proxy_pretrain);
    data.field = &flat;
    const splits::SeedStreams streams(c.seed);
    auto init = streams.stream("init");
    FusionModel m(resolve_model_config(c, world_->data, f), data.box, data.year_min, data.year_max, init);
    TrainResult r;
    proxy_pretrain(m, data, c.train, streams, r);
    EXPECT_GT(r.epochs.front().train_loss, 10.0 * r.epochs.back().train_loss);
    EXPECT_LT(r.epochs.back().train_loss, 0.05 * r.epochs.front().train_loss);
}

TEST_F(TinyWorldTraining, CheckpointRoundTripPredictsIdentically)
{
    const auto c = config(Regime::trained_le_pcl);
    const auto run = run_experiment(c, world_->data, world_->field, split());
    const auto dir = std::filesystem::temp_directory_path() / "geoprox_ckpt_test";
    std::filesystem::create_directories(dir);
    save_model_checkpoint(dir / "model.bin", c, *run.model, run.data);

    const auto loaded = load_model_checkpoint(dir / "model.bin");
    const auto rows = run.split.indices(splits::Role::test);
    const auto prepared = prepare_for_model(loaded, world_->data, world_->field, rows);
    EXPECT_EQ(predict_split(*loaded.model, prepared, loaded.stats), predict_split(*run.model, run.data.test,
                                                                                  run.data.stats));
    EXPECT_EQ(loaded.config.to_text(), c.to_text());
    std::filesystem::remove_all(dir);
}

TEST_F(TinyWorldTraining, CheckpointAfterPretrainHasNoProxyHead)
{
    const auto c = config(Regime::proxy_pretrain);
    const auto run = run_experiment(c, world_->data, world_->field, split());
    const auto path = std::filesystem::temp_directory_path() / "geoprox_pretrain_ckpt.bin";
    save_model_checkpoint(path, c, *run.model, run.data);
    const auto loaded = load_model_checkpoint(path);
    EXPECT_FALSE(loaded.model->has_proxy_head());
    EXPECT_FALSE(loaded.model->group("loc_encoder")->trainable);
    std::filesystem::remove(path);
}

TEST_F(TinyWorldTraining, MissingCheckpointIsDataError)
{
    EXPECT_THROW((void)load_model_checkpoint("/nonexistent/geoprox.bin"), DataError);
}

TEST_F(TinyWorldTraining, FrozenRunUsesExportedTable)
{
    const auto c = config(Regime::trained_le_pcl);
    const auto trained = run_experiment(c, world_->data, world_->field, split());
    const auto path = std::filesystem::temp_directory_path() / "geoprox_table_test.txt";
    export_site_table(*trained.model, world_->data.sites, trained.data.span).save(path);

    auto fc = config(Regime::frozen_le);
    fc.table = path.string();
    const auto frozen = run_experiment(fc, world_->data, world_->field, split());
    EXPECT_TRUE(frozen.model->table()->bit_identical(geo::FrozenEmbeddingTable::load(path)));
    std::filesystem::remove(path);
}

TEST_F(TinyWorldTraining, ProxyStackedAppendsProxyColumns)
{
    const auto data = prepare_data(world_->data, world_->field, split(), Regime::proxy_stacked);
    EXPECT_EQ(data.train.features.cols(), static_cast<Eigen::Index>(world_->data.feature_count()) + 1);
    const auto& s = world_->data.samples[data.train.index[0]];
    const auto z = world_->field.sample(s.lon, s.lat, s.date.days());
    ASSERT_TRUE(z.has_value());
    EXPECT_DOUBLE_EQ(data.train.features(0, data.train.features.cols() - 1), data.stats.proxy.apply(*z)(0));
}

TEST(ExperimentConfigText, RoundTrip)
{
    ExperimentConfig c;
    c.model.regime = Regime::proxy_pretrain;
    c.model.loss.lambda = 0.35;
    c.model.loss.weights = {1.0, 0.5};
    c.model.loc.sigmas = {0.5, 2.0};
    c.train.rho = 8.0;
    c.train.mode = splits::SamplerMode::sites_random;
    c.split.protocol = "checkerboard";
    c.split.delta = 5.0;
    c.split.offset = splits::Offset::both;
    c.split.swap = true;
    c.split.lon0 = -100.0;
    c.seed = 42;
    c.points = "world/points.tsv";
    const auto back = ExperimentConfig::from_doc(io::KeyValueDoc::parse(c.to_text()));
    EXPECT_EQ(back.to_text(), c.to_text());
    EXPECT_EQ(back.hash(), c.hash());
    EXPECT_FALSE(back.split.lat0.has_value());
}

TEST(ExperimentConfigText, RejectsUnknownKeysAndBadValues)
{
    EXPECT_THROW((void)ExperimentConfig::from_doc(io::KeyValueDoc::parse("[loss]\nlamda = 0.2\n")), ConfigError);
    EXPECT_THROW((void)ExperimentConfig::from_doc(io::KeyValueDoc::parse("[loss]\nlambda = -1\n")), ConfigError);
    EXPECT_THROW((void)ExperimentConfig::from_doc(io::KeyValueDoc::parse("[sampler]\nrho = -2\n")), ConfigError);
    EXPECT_THROW((void)ExperimentConfig::from_doc(io::KeyValueDoc::parse("[experiment]\nregime = magic\n")),
                 ConfigError);
}
