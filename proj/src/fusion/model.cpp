// SPDX-License-Identifier: Apache-2.0
#include "geoprox/fusion/model.hpp"

#include "geoprox/errors.hpp"

#include <cmath>

namespace geoprox::fusion {
namespace {

void check_finite(const nd::Matrix& m, const char* what)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (!m.row(i).allFinite()) {
            throw NumericalError(std::string(what) + ": non-finite target at sample index " + std::to_string(i));
        }
    }
}

} // namespace

std::string_view to_string(Regime r) noexcept
{
    switch (r) {
    case Regime::obs_only: return "obs-only";
    case Regime::proxy_stacked: return "proxy-stacked";
    case Regime::frozen_le: return "frozen-LE";
    case Regime::trained_le: return "trained-LE";
    case Regime::trained_le_pcl: return "trained-LE+PCL";
    case Regime::proxy_pretrain: return "proxy-pretrain";
    }
    return "?";
}

Regime parse_regime(std::string_view text)
{
    for (auto r : {Regime::obs_only, Regime::proxy_stacked, Regime::frozen_le, Regime::trained_le,
                   Regime::trained_le_pcl, Regime::proxy_pretrain}) {
        if (text == to_string(r)) {
            return r;
        }
    }
    if (text == "pcl" || text == "PCL") {
        return Regime::trained_le_pcl;
    }
    if (text == "proxy-pretrain-then-freeze") {
        return Regime::proxy_pretrain;
    }
    throw ConfigError("unknown regime '" + std::string(text) +
                      "' (obs-only|proxy-stacked|frozen-LE|trained-LE|trained-LE+PCL|proxy-pretrain)");
}

bool uses_location(Regime r) noexcept
{
    return r != Regime::obs_only && r != Regime::proxy_stacked;
}

bool owns_encoder(Regime r) noexcept
{
    return r == Regime::trained_le || r == Regime::trained_le_pcl || r == Regime::proxy_pretrain;
}

Eigen::RowVectorXd LossConfig::weight_vector(int channels) const
{
    validate(channels);
    if (weights.empty()) {
        return Eigen::RowVectorXd::Ones(channels);
    }
    return Eigen::Map<const Eigen::RowVectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
}

void LossConfig::validate(int channels) const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("loss.lambda must be finite and >= 0");
    }
    if (!weights.empty() && static_cast<int>(weights.size()) != channels) {
        throw ConfigError("loss.weights has " + std::to_string(weights.size()) + " entries for " +
                          std::to_string(channels) + " proxy channels");
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ConfigError("loss.weights entries must be finite and >= 0");
        }
    }
}

int ModelConfig::obs_input_dim() const noexcept
{
    return feature_dim + (regime == Regime::proxy_stacked ? proxy_channels : 0);
}

FusionModel::FusionModel(const ModelConfig& cfg, const DomainBox& box, int year_min, int year_max,
                         std::mt19937_64& rng, std::shared_ptr<const geo::FrozenEmbeddingTable> table)
    : cfg_(cfg), table_(std::move(table))
{
    if (cfg_.obs_input_dim() <= 0) {
        throw ConfigError("model: observation encoder needs at least one input feature");
    }
    if (cfg_.proxy_channels <= 0) {
        throw ConfigError("model: proxy channel count must be positive");
    }
    weights_ = cfg_.loss.weight_vector(cfg_.proxy_channels);
    if (cfg_.regime == Regime::frozen_le && !table_) {
        throw ConfigError("model: frozen-LE regime needs an embedding table");
    }
    if (cfg_.regime != Regime::frozen_le) {
        table_.reset();
    }

    obs_ = nd::Mlp(std::string(kObsGroup), cfg_.obs_input_dim(), cfg_.obs_hidden, cfg_.d1, rng);
    if (owns_encoder(cfg_.regime)) {
        encoder_.emplace(cfg_.loc, box, year_min, year_max, rng);
    }
    f_ = nd::Mlp(std::string(kHeadFGroup), cfg_.d1 + location_dim(), cfg_.head_hidden, 1, rng);
    if (owns_encoder(cfg_.regime)) {
        g_.emplace(std::string(kHeadGGroup), encoder_->out_dim(), cfg_.head_hidden, cfg_.proxy_channels, rng);
    }
}

int FusionModel::location_dim() const noexcept
{
    if (encoder_) {
        return encoder_->out_dim();
    }
    if (table_) {
        return table_->dim();
    }
    return 0;
}

bool FusionModel::pcl_active() const noexcept
{
    return cfg_.loss.lambda > 0.0 && g_.has_value() &&
           (cfg_.regime == Regime::trained_le_pcl || cfg_.regime == Regime::proxy_pretrain);
}

void FusionModel::unsupported(const char* what) const
{
    throw UnsupportedRegimeError(std::string(what) + " is not available in the " + std::string(to_string(regime())) +
                                 " regime");
}

void FusionModel::check_features(const nd::Matrix& features) const
{
    if (features.cols() != cfg_.obs_input_dim()) {
        throw DimensionError("model (" + std::string(to_string(regime())) + "): observation features have " +
                             std::to_string(features.cols()) + " columns, expected " +
                             std::to_string(cfg_.obs_input_dim()));
    }
}

nd::Var FusionModel::obs_embedding(const nd::Matrix& features)
{
    check_features(features);
    return obs_.forward(nd::constant(features));
}

nd::Var FusionModel::loc_embedding(std::span<const SpaceTime> where, const nd::Matrix* cached_inputs)
{
    if (encoder_) {
        if (cached_inputs && cached_inputs->rows() == static_cast<Eigen::Index>(where.size()) &&
            cached_inputs->rows() > 0) {
            return encoder_->embed_inputs(*cached_inputs);
        }
        return encoder_->embed(where);
    }
    if (table_) {
        return nd::constant(table_->lookup(where));
    }
    unsupported("a location embedding");
}

nd::Var FusionModel::predict_graph(const LabeledBatch& batch)
{
    if (static_cast<std::size_t>(batch.features.rows()) != batch.where.size()) {
        throw DimensionError("model: " + std::to_string(batch.features.rows()) + " feature rows for " +
                             std::to_string(batch.where.size()) + " locations");
    }
    auto e_obs = obs_embedding(batch.features);
    if (!uses_location(regime())) {
        return f_.forward(e_obs);
    }
    auto e_loc = loc_embedding(batch.where, batch.loc_inputs.size() ? &batch.loc_inputs : nullptr);
    return f_.forward(nd::concat_cols(e_obs, e_loc));
}

nd::Var FusionModel::proxy_graph(std::span<const SpaceTime> where)
{
    if (!encoder_ || !g_) {
        unsupported("proxy prediction");
    }
    return g_->forward(encoder_->embed(where));
}

LossGraph FusionModel::loss_graph(const LabeledBatch& labeled, const ProxyBatch& proxy, LossMask mask)
{
    LossGraph out;
    const double lambda = pcl_active() ? cfg_.loss.lambda : 0.0;

    if (labeled.y.rows() > 0) {
        check_finite(labeled.y, "labeled batch");
        if (labeled.y.cols() != 1 || labeled.y.rows() != static_cast<Eigen::Index>(labeled.where.size())) {
            throw DimensionError("model: labeled targets must be n x 1 matching the batch");
        }
        if (mask.pred) {
            out.pred = nd::mse(predict_graph(labeled), nd::constant(labeled.y));
            out.values.pred = out.pred.scalar();
        } else {
            const Eigen::VectorXd yhat =
                predict(labeled.features, labeled.where, labeled.loc_inputs.size() ? &labeled.loc_inputs : nullptr);
            out.values.pred = (yhat - labeled.y.col(0)).squaredNorm() / static_cast<double>(yhat.size());
        }
    }

    if (!proxy.where.empty() && g_) {
        check_finite(proxy.z, "proxy batch");
        if (proxy.z.rows() != static_cast<Eigen::Index>(proxy.where.size()) || proxy.z.cols() != cfg_.proxy_channels) {
            throw DimensionError("model: proxy targets must be n x " + std::to_string(cfg_.proxy_channels));
        }
        if (mask.pc && lambda > 0.0) {
            out.pc = nd::weighted_mse(proxy_graph(proxy.where), nd::constant(proxy.z), weights_);
            out.values.pc = out.pc.scalar();
        } else {
            const nd::Matrix d = proxy_predict(proxy.where) - proxy.z;
            out.values.pc = (d.array().square().rowwise() * weights_.array()).sum() / static_cast<double>(d.rows());
        }
    }

    const bool pred_in = static_cast<bool>(out.pred);
    const bool pc_in = static_cast<bool>(out.pc);
    if (pred_in && pc_in) {
        out.total = nd::add(out.pred, nd::scale(out.pc, lambda));
    } else if (pred_in) {
        out.total = out.pred;
    } else if (pc_in) {
        out.total = nd::scale(out.pc, lambda);
    }
    out.values.total = (mask.pred ? out.values.pred : 0.0) + (mask.pc ? lambda * out.values.pc : 0.0);
    if (out.total) {
        out.values.total = out.total.scalar();
    }
    return out;
}

LossRecord FusionModel::loss_total(const LabeledBatch& labeled, const ProxyBatch& proxy)
{
    if (labeled.y.rows() == 0) {
        throw DataError("loss: labeled batch is empty");
    }
    if (proxy.where.empty() && pcl_active() && cfg_.regime == Regime::trained_le_pcl) {
        throw DataError("loss: proxy batch is empty while lambda > 0");
    }
    return loss_graph(labeled, proxy).values;
}

Eigen::VectorXd FusionModel::predict(const nd::Matrix& features, std::span<const SpaceTime> where,
                                     const nd::Matrix* cached_inputs) const
{
    check_features(features);
    if (static_cast<std::size_t>(features.rows()) != where.size()) {
        throw DimensionError("model: " + std::to_string(features.rows()) + " feature rows for " +
                             std::to_string(where.size()) + " locations");
    }
    const nd::Matrix e_obs = obs_.evaluate(features);
    if (!uses_location(regime())) {
        return f_.evaluate(e_obs).col(0);
    }
    nd::Matrix e_loc;
    if (encoder_) {
        e_loc = cached_inputs && cached_inputs->rows() == features.rows() ? encoder_->evaluate_inputs(*cached_inputs)
                                                                         : encoder_->evaluate(where);
    } else {
        e_loc = table_->lookup(where);
    }
    nd::Matrix h(features.rows(), e_obs.cols() + e_loc.cols());
    h << e_obs, e_loc;
    return f_.evaluate(h).col(0);
}

nd::Matrix FusionModel::proxy_predict(std::span<const SpaceTime> where) const
{
    if (!encoder_ || !g_) {
        unsupported("proxy prediction");
    }
    return g_->evaluate(encoder_->evaluate(where));
}

nd::Matrix FusionModel::location_embedding(std::span<const SpaceTime> where) const
{
    if (encoder_) {
        return encoder_->evaluate(where);
    }
    if (table_) {
        return table_->lookup(where);
    }
    unsupported("a location embedding");
}

nd::Matrix FusionModel::encoder_inputs(std::span<const SpaceTime> where) const
{
    return encoder_ ? encoder_->input_features(where) : nd::Matrix{};
}

std::vector<nd::ParameterGroup*> FusionModel::groups()
{
    std::vector<nd::ParameterGroup*> out{&obs_.group()};
    if (encoder_) {
        out.push_back(&encoder_->trunk().group());
    }
    out.push_back(&f_.group());
    if (g_) {
        out.push_back(&g_->group());
    }
    return out;
}

std::vector<const nd::ParameterGroup*> FusionModel::groups() const
{
    std::vector<const nd::ParameterGroup*> out{&obs_.group()};
    if (encoder_) {
        out.push_back(&encoder_->trunk().group());
    }
    out.push_back(&f_.group());
    if (g_) {
        out.push_back(&g_->group());
    }
    return out;
}

nd::ParameterGroup* FusionModel::group(std::string_view name)
{
    for (auto* g : groups()) {
        if (g->name == name) {
            return g;
        }
    }
    return nullptr;
}

const nd::ParameterGroup* FusionModel::group(std::string_view name) const
{
    for (const auto* g : groups()) {
        if (g->name == name) {
            return g;
        }
    }
    return nullptr;
}

void FusionModel::set_trainable(std::string_view name, bool trainable)
{
    auto* g = group(name);
    if (!g) {
        throw ConfigError("model: no parameter group '" + std::string(name) + "' in the " +
                          std::string(to_string(regime())) + " regime");
    }
    g->trainable = trainable;
}

void FusionModel::zero_grad()
{
    for (auto* g : groups()) {
        g->zero_grad();
    }
}

void FusionModel::drop_proxy_head()
{
    g_.reset();
}

StepRecord train_step(FusionModel& model, const LabeledBatch& labeled, const ProxyBatch& proxy,
                      nd::OptimizerState& opt, LossMask mask)
{
    model.zero_grad();
    auto graph = model.loss_graph(labeled, proxy, mask);
    StepRecord rec;
    rec.loss = graph.values;
    if (graph.total) {
        nd::backward(graph.total);
        const auto groups = model.groups();
        const auto report = nd::adamw_step(std::span<nd::ParameterGroup* const>(groups), opt);
        rec.grad_norm = report.grad_norm;
    }
    rec.lr = opt.lr;
    return rec;
}

} // namespace geoprox::fusion
