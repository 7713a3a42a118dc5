// SPDX-License-Identifier: Apache-2.0
#include "geoprox/fusion/trainer.hpp"

#include "geoprox/errors.hpp"
#include "geoprox/io/keyvalue.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geoprox::fusion {
namespace {

PreparedSplit gather(const io::Dataset& data, const std::vector<std::size_t>& rows, const io::NormalizationStats& stats,
                     const io::ProxyField& field, bool stack_proxy)
{
    PreparedSplit s;
    s.index = rows;
    const auto k = static_cast<Eigen::Index>(data.feature_count());
    const Eigen::Index m = stack_proxy ? field.channel_count() : 0;
    s.features.resize(static_cast<Eigen::Index>(rows.size()), k + m);
    s.y.resize(static_cast<Eigen::Index>(rows.size()), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& x = data.samples[rows[i]];
        const auto r = static_cast<Eigen::Index>(i);
        s.features.row(r).head(k) = stats.features.apply(x.features);
        if (stack_proxy) {
            const auto z = field.sample(x.lon, x.lat, x.date.days());
            s.features.row(r).tail(m) = z ? stats.proxy.apply(*z) : Eigen::RowVectorXd::Zero(m);
        }
        s.where.push_back(x.where());
        s.y(r, 0) = stats.apply_target(x.y);
        s.y_raw.push_back(x.y);
    }
    return s;
}

LabeledBatch make_batch(const PreparedSplit& s, std::span<const std::size_t> rows)
{
    LabeledBatch b;
    const auto n = static_cast<Eigen::Index>(rows.size());
    b.features.resize(n, s.features.cols());
    b.y.resize(n, 1);
    if (s.loc_inputs.rows() > 0) {
        b.loc_inputs.resize(n, s.loc_inputs.cols());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
        b.features.row(i) = s.features.row(r);
        b.y(i, 0) = s.y(r, 0);
        if (s.loc_inputs.rows() > 0) {
            b.loc_inputs.row(i) = s.loc_inputs.row(r);
        }
        b.where.push_back(s.where[static_cast<std::size_t>(r)]);
    }
    return b;
}

double split_loss(const FusionModel& model, const PreparedSplit& s)
{
    const Eigen::VectorXd yhat = model.predict(s.features, s.where, s.loc_inputs.rows() ? &s.loc_inputs : nullptr);
    return (yhat - s.y.col(0)).squaredNorm() / static_cast<double>(s.size());
}

std::vector<std::vector<nd::Matrix>> snapshot(const FusionModel& model)
{
    std::vector<std::vector<nd::Matrix>> out;
    for (const auto* g : model.groups()) {
        auto& vals = out.emplace_back();
        for (const auto& p : g->params) {
            vals.push_back(p.value.matrix());
        }
    }
    return out;
}

void restore(FusionModel& model, const std::vector<std::vector<nd::Matrix>>& snap)
{
    auto groups = model.groups();
    for (std::size_t gi = 0; gi < groups.size() && gi < snap.size(); ++gi) {
        if (!groups[gi]->trainable) {
            continue;
        }
        for (std::size_t pi = 0; pi < groups[gi]->params.size(); ++pi) {
            groups[gi]->params[pi].value.matrix() = snap[gi][pi];
        }
    }
}

void write_line(std::ostream* log, const LogLine& l)
{
    if (log) {
        *log << l.step << ", " << io::format_double(l.loss.total) << ", " << io::format_double(l.loss.pred) << ", "
             << io::format_double(l.loss.pc) << ", " << io::format_double(l.lr) << '\n';
    }
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, int batch, std::mt19937_64& rng)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch)) {
        const auto end = std::min(n, start + static_cast<std::size_t>(batch));
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

splits::SamplerConfig sampler_config(const TrainConfig& cfg)
{
    return {cfg.batch, cfg.rho, cfg.mode, 0};
}

} // namespace

PreparedData prepare_data(const io::Dataset& data, const io::ProxyField& field, const splits::SplitAssignment& split,
                          Regime regime)
{
    if (split.roles.size() != data.samples.size()) {
        throw DataError("split has " + std::to_string(split.roles.size()) + " entries for " +
                        std::to_string(data.samples.size()) + " samples");
    }
    PreparedData p;
    p.field = &field;
    p.box = field.grid().extent();
    p.span = field.time().span();
    p.year_min = Date::from_days(p.span.first_day).year;
    p.year_max = Date::from_days(p.span.last_day).year;

    const auto train_rows = split.indices(splits::Role::train);
    if (train_rows.empty()) {
        throw DataError("split has no training samples");
    }
    std::vector<io::LabeledSample> train_samples;
    train_samples.reserve(train_rows.size());
    for (auto i : train_rows) {
        train_samples.push_back(data.samples[i]);
    }
    p.stats = io::fit_normalization(train_samples, data.feature_names, &field);
    const bool stack = regime == Regime::proxy_stacked;
    p.train = gather(data, train_rows, p.stats, field, stack);
    p.val = gather(data, split.indices(splits::Role::validation), p.stats, field, stack);
    p.test = gather(data, split.indices(splits::Role::test), p.stats, field, stack);
    return p;
}

void cache_encoder_inputs(PreparedData& data, const FusionModel& model)
{
    for (auto* s : {&data.train, &data.val, &data.test}) {
        s->loc_inputs = s->size() ? model.encoder_inputs(s->where) : nd::Matrix{};
    }
}

ProxyBatch draw_proxy_batch(const PreparedData& data, const splits::SamplerConfig& cfg,
                            std::span<const SpaceTime> labeled, std::mt19937_64& rng, int max_rounds)
{
    const auto& field = *data.field;
    ProxyBatch b;
    auto points = splits::sample_proxy_batch(data.box, data.span, cfg, labeled, rng);
    std::vector<Eigen::RowVectorXd> z;
    z.reserve(points.size());
    const auto keep = [&](const std::vector<SpaceTime>& pts) {
        std::size_t dropped = 0;
        for (const auto& p : pts) {
            if (auto v = field.sample(p.lon, p.lat, p.day)) {
                b.where.push_back(p);
                z.push_back(data.stats.proxy.apply(*v));
            } else {
                ++dropped;
            }
        }
        return dropped;
    };
    auto missing = keep(points);
    for (int round = 0; round < max_rounds && missing > 0; ++round) {
        missing = keep(splits::sample_uniform(data.box, data.span, missing, rng));
    }
    b.z.resize(static_cast<Eigen::Index>(z.size()), field.channel_count());
    for (std::size_t i = 0; i < z.size(); ++i) {
        b.z.row(static_cast<Eigen::Index>(i)) = z[i];
    }
    return b;
}

void proxy_pretrain(FusionModel& model, const PreparedData& data, const TrainConfig& cfg,
                    const splits::SeedStreams& streams, TrainResult& result, std::ostream* log)
{
    if (model.regime() != Regime::proxy_pretrain) {
        throw UnsupportedRegimeError("proxy pretraining requires the proxy-pretrain regime");
    }
    if (splits::random_count(sampler_config(cfg), static_cast<std::size_t>(cfg.batch)) == 0 &&
        cfg.mode == splits::SamplerMode::random_only) {
        throw ConfigError("proxy pretraining needs rho > 0");
    }
    if (!(model.config().loss.lambda > 0.0)) {
        throw ConfigError("proxy pretraining needs lambda > 0");
    }
    model.set_trainable(kObsGroup, false);
    model.set_trainable(kHeadFGroup, false);
    model.set_trainable(kLocGroup, true);
    model.set_trainable(kHeadGGroup, true);

    auto shuffle = streams.stream("pretrain-shuffle");
    auto sampler = streams.stream("pretrain-sampler");
    nd::OptimizerState opt(cfg.adam, cfg.plateau);
    const LabeledBatch none;
    const auto scfg = sampler_config(cfg);
    if (log) {
        *log << "# stage 1: proxy pretraining\n";
    }
    for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        double sum = 0.0;
        int count = 0;
        for (const auto& rows : epoch_batches(data.train.size(), cfg.batch, shuffle)) {
            std::vector<SpaceTime> where;
            for (auto r : rows) {
                where.push_back(data.train.where[r]);
            }
            const auto proxy = draw_proxy_batch(data, scfg, where, sampler, cfg.max_redraw_rounds);
            const auto rec = train_step(model, none, proxy, opt, LossMask{false, true});
            LogLine line{1, epoch, opt.step, rec.loss, rec.lr};
            write_line(log, line);
            result.steps.push_back(line);
            sum += rec.loss.pc;
            ++count;
        }
        result.epochs.push_back({1, epoch, count ? sum / count : 0.0, 0.0, opt.lr});
    }
    model.drop_proxy_head();
    model.set_trainable(kLocGroup, false);
    model.set_trainable(kObsGroup, true);
    model.set_trainable(kHeadFGroup, true);
}

TrainResult train_model(FusionModel& model, const PreparedData& data, const TrainConfig& cfg,
                        const splits::SeedStreams& streams, std::ostream* log)
{
    if (cfg.batch <= 0 || cfg.epochs < 0 || cfg.pretrain_epochs < 0) {
        throw ConfigError("training: batch must be positive and epoch counts non-negative");
    }
    if (data.train.size() == 0) {
        throw DataError("training: empty training split");
    }
    TrainResult result;
    if (model.regime() == Regime::proxy_pretrain && model.has_proxy_head()) {
        proxy_pretrain(model, data, cfg, streams, result, log);
    }
    if (log) {
        *log << "# stage 2: supervised training (" << to_string(model.regime()) << ")\n";
    }

    auto shuffle = streams.stream("shuffle");
    auto sampler = streams.stream("sampler");
    nd::OptimizerState opt(cfg.adam, cfg.plateau);
    const auto scfg = sampler_config(cfg);
    const bool need_proxy = model.pcl_active() || (cfg.always_sample_proxy && model.has_proxy_head());
    const ProxyBatch no_proxy;

    auto best = snapshot(model);
    double best_val = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double sum = 0.0;
        int count = 0;
        for (const auto& rows : epoch_batches(data.train.size(), cfg.batch, shuffle)) {
            const auto batch = make_batch(data.train, rows);
            const auto proxy = need_proxy ? draw_proxy_batch(data, scfg, batch.where, sampler, cfg.max_redraw_rounds)
                                          : no_proxy;
            const auto rec = train_step(model, batch, proxy, opt);
            LogLine line{2, epoch, opt.step, rec.loss, rec.lr};
            write_line(log, line);
            result.steps.push_back(line);
            sum += rec.loss.pred;
            ++count;
        }
        const double train_loss = sum / count;
        const double val_loss = data.val.size() ? split_loss(model, data.val) : train_loss;
        if (!std::isfinite(val_loss)) {
            throw NumericalError("training: validation loss is not finite at epoch " + std::to_string(epoch));
        }
        result.epochs.push_back({2, epoch, train_loss, val_loss, opt.lr});
        if (val_loss < best_val) {
            best_val = val_loss;
            result.best_epoch = epoch;
            if (cfg.restore_best) {
                best = snapshot(model);
            }
        }
        const auto decision = nd::plateau_and_early_stop(opt, val_loss);
        if (decision.stop) {
            result.early_stopped = true;
            break;
        }
    }
    result.best_val = best_val;
    if (cfg.restore_best && result.best_epoch >= 0) {
        restore(model, best);
    }
    return result;
}

std::vector<double> predict_split(const FusionModel& model, const PreparedSplit& split,
                                  const io::NormalizationStats& stats)
{
    if (split.size() == 0) {
        return {};
    }
    const Eigen::VectorXd yhat =
        model.predict(split.features, split.where, split.loc_inputs.rows() ? &split.loc_inputs : nullptr);
    std::vector<double> out(static_cast<std::size_t>(yhat.size()));
    for (Eigen::Index i = 0; i < yhat.size(); ++i) {
        out[static_cast<std::size_t>(i)] = stats.invert_target(yhat(i));
    }
    return out;
}

metrics::MetricReport evaluate_split(const FusionModel& model, const PreparedSplit& split,
                                     const io::NormalizationStats& stats)
{
    const auto yhat = predict_split(model, split, stats);
    return metrics::compute_metrics(yhat, split.y_raw);
}

} // namespace geoprox::fusion
