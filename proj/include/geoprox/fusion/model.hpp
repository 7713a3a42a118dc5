// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/calendar.hpp"
#include "geoprox/domain.hpp"
#include "geoprox/geo/frozen_table.hpp"
#include "geoprox/geo/location_encoder.hpp"
#include "geoprox/nd/graph.hpp"
#include "geoprox/nd/mlp.hpp"
#include "geoprox/nd/optim.hpp"

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geoprox::fusion {

enum class Regime { obs_only, proxy_stacked, frozen_le, trained_le, trained_le_pcl, proxy_pretrain };

[[nodiscard]] std::string_view to_string(Regime r) noexcept;
[[nodiscard]] Regime parse_regime(std::string_view text);

/// Regimes whose prediction head sees a location embedding.
[[nodiscard]] bool uses_location(Regime r) noexcept;
/// Regimes that own a trainable location encoder (and a proxy head).
[[nodiscard]] bool owns_encoder(Regime r) noexcept;

inline constexpr std::string_view kObsGroup = "obs_encoder";
inline constexpr std::string_view kLocGroup = "loc_encoder";
inline constexpr std::string_view kHeadFGroup = "fusion_head_f";
inline constexpr std::string_view kHeadGGroup = "proxy_head_g";

struct LossConfig {
    double lambda = 0.2;
    std::vector<double> weights;  // diagonal of Lambda; empty means identity

    [[nodiscard]] Eigen::RowVectorXd weight_vector(int channels) const;
    void validate(int channels) const;
};

struct ModelConfig {
    Regime regime = Regime::trained_le_pcl;
    int feature_dim = 0;      // base observation features
    int proxy_channels = 1;   // m
    std::vector<int> obs_hidden{64, 64};
    int d1 = 32;
    geo::LocationEncoderConfig loc;
    std::vector<int> head_hidden{64, 64};
    LossConfig loss;

    /// Observation encoder input width: base features, plus m proxy values
    /// in the proxy-stacked regime.
    [[nodiscard]] int obs_input_dim() const noexcept;
};

/// Labeled minibatch in normalized units. `loc_inputs` optionally caches the
/// encoder's constant input features for `where`.
struct LabeledBatch {
    nd::Matrix features;
    std::vector<SpaceTime> where;
    nd::Matrix y;  // n x 1
    nd::Matrix loc_inputs;
};

struct ProxyBatch {
    std::vector<SpaceTime> where;
    nd::Matrix z;  // n x m
};

/// Drops a term from the graph entirely.
struct LossMask {
    bool pred = true;
    bool pc = true;
};

struct LossRecord {
    double total = 0.0;
    double pred = 0.0;
    double pc = 0.0;
};

struct LossGraph {
    nd::Var total;  // null when both terms are masked
    nd::Var pred;
    nd::Var pc;
    LossRecord values;
};

/// Observation encoder, location source (trainable encoder or frozen table),
/// prediction head f and proxy head g, with the multi-task loss
/// L = L_pred + lambda * L_pc.
class FusionModel {
public:
    FusionModel(const ModelConfig& cfg, const DomainBox& box, int year_min, int year_max, std::mt19937_64& rng,
                std::shared_ptr<const geo::FrozenEmbeddingTable> table = nullptr);

    [[nodiscard]] const ModelConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] Regime regime() const noexcept { return cfg_.regime; }
    [[nodiscard]] int location_dim() const noexcept;

    // Recorded forward passes.
    [[nodiscard]] nd::Var obs_embedding(const nd::Matrix& features);
    [[nodiscard]] nd::Var loc_embedding(std::span<const SpaceTime> where, const nd::Matrix* cached_inputs = nullptr);
    [[nodiscard]] nd::Var predict_graph(const LabeledBatch& batch);
    [[nodiscard]] nd::Var proxy_graph(std::span<const SpaceTime> where);

    /// Builds the loss. A term is left out of the graph when masked, when its
    /// batch is empty, or (for L_pc) when lambda is 0 or the regime has no
    /// proxy head; its value is still reported when it can be computed.
    [[nodiscard]] LossGraph loss_graph(const LabeledBatch& labeled, const ProxyBatch& proxy, LossMask mask = {});
    [[nodiscard]] LossRecord loss_total(const LabeledBatch& labeled, const ProxyBatch& proxy);

    // Tape-free evaluation.
    [[nodiscard]] Eigen::VectorXd predict(const nd::Matrix& features, std::span<const SpaceTime> where,
                                          const nd::Matrix* cached_inputs = nullptr) const;
    [[nodiscard]] nd::Matrix proxy_predict(std::span<const SpaceTime> where) const;
    [[nodiscard]] nd::Matrix location_embedding(std::span<const SpaceTime> where) const;

    /// Constant encoder inputs for caching; empty for regimes without an encoder.
    [[nodiscard]] nd::Matrix encoder_inputs(std::span<const SpaceTime> where) const;

    [[nodiscard]] std::vector<nd::ParameterGroup*> groups();
    [[nodiscard]] std::vector<const nd::ParameterGroup*> groups() const;
    [[nodiscard]] nd::ParameterGroup* group(std::string_view name);
    [[nodiscard]] const nd::ParameterGroup* group(std::string_view name) const;
    void set_trainable(std::string_view name, bool trainable);
    void zero_grad();

    /// Removes g after proxy pretraining.
    void drop_proxy_head();
    [[nodiscard]] bool has_proxy_head() const noexcept { return g_.has_value(); }

    [[nodiscard]] const geo::LocationTimeEncoder* encoder() const noexcept { return encoder_ ? &*encoder_ : nullptr; }
    [[nodiscard]] const geo::FrozenEmbeddingTable* table() const noexcept { return table_.get(); }

    /// L_pc actually enters the graph.
    [[nodiscard]] bool pcl_active() const noexcept;

private:
    void check_features(const nd::Matrix& features) const;
    [[noreturn]] void unsupported(const char* what) const;

    ModelConfig cfg_;
    nd::Mlp obs_;
    std::optional<geo::LocationTimeEncoder> encoder_;
    std::shared_ptr<const geo::FrozenEmbeddingTable> table_;
    nd::Mlp f_;
    std::optional<nd::Mlp> g_;
    Eigen::RowVectorXd weights_;
};

struct StepRecord {
    LossRecord loss;
    double lr = 0.0;
    double grad_norm = 0.0;
};

/// Zero gradients, one backward over the combined loss, then one AdamW step
/// over the model's groups (frozen groups carrying gradient abort).
StepRecord train_step(FusionModel& model, const LabeledBatch& labeled, const ProxyBatch& proxy,
                      nd::OptimizerState& opt, LossMask mask = {});

} // namespace geoprox::fusion
