// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/fusion/model.hpp"
#include "geoprox/io/normalization.hpp"
#include "geoprox/io/points.hpp"
#include "geoprox/io/proxy_field.hpp"
#include "geoprox/metrics/metrics.hpp"
#include "geoprox/nd/optim.hpp"
#include "geoprox/splits/sampler.hpp"
#include "geoprox/splits/seeds.hpp"
#include "geoprox/splits/split.hpp"

#include <ostream>
#include <vector>

namespace geoprox::fusion {

struct TrainConfig {
    int epochs = 100;
    int pretrain_epochs = 50;
    int batch = 256;
    double rho = 16.0;
    splits::SamplerMode mode = splits::SamplerMode::random_only;
    nd::AdamWConfig adam;
    nd::PlateauConfig plateau;
    bool restore_best = true;
    int max_redraw_rounds = 10;
    /// Draw proxy batches even when L_pc is not in the graph.
    bool always_sample_proxy = false;
};

/// One split's samples in normalized units.
struct PreparedSplit {
    std::vector<std::size_t> index;  // rows of the source dataset
    nd::Matrix features;
    std::vector<SpaceTime> where;
    nd::Matrix y;                 // normalized, n x 1
    std::vector<double> y_raw;    // original units
    nd::Matrix loc_inputs;        // cached encoder inputs, may be empty

    [[nodiscard]] std::size_t size() const noexcept { return where.size(); }
};

struct PreparedData {
    io::NormalizationStats stats;
    PreparedSplit train;
    PreparedSplit val;
    PreparedSplit test;
    const io::ProxyField* field = nullptr;
    DomainBox box;
    TimeSpan span;
    int year_min = 0;
    int year_max = 0;
};

/// Normalization is fitted on the train role only. In the proxy-stacked
/// regime the normalized proxy values at each sample are appended to its
/// features (missing values become the train mean, i.e. 0).
[[nodiscard]] PreparedData prepare_data(const io::Dataset& data, const io::ProxyField& field,
                                        const splits::SplitAssignment& split, Regime regime);

/// Fills `loc_inputs` of every split from the model's encoder.
void cache_encoder_inputs(PreparedData& data, const FusionModel& model);

/// Proxy batch for one step: sampler points with targets from the field;
/// points with missing values are dropped and replaced by fresh uniform
/// draws for at most `max_rounds` rounds.
[[nodiscard]] ProxyBatch draw_proxy_batch(const PreparedData& data, const splits::SamplerConfig& cfg,
                                          std::span<const SpaceTime> labeled, std::mt19937_64& rng,
                                          int max_rounds = 10);

struct LogLine {
    int stage = 2;  // 1 = proxy pretraining, 2 = main training
    int epoch = 0;
    std::uint64_t step = 0;
    LossRecord loss;
    double lr = 0.0;
};

struct EpochLine {
    int stage = 2;
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<LogLine> steps;
    std::vector<EpochLine> epochs;
    int best_epoch = -1;
    double best_val = 0.0;
    bool early_stopped = false;
};

/// Runs the model's regime end to end. Batch order uses the "shuffle" seed
/// stream and proxy points the "sampler" stream. When `log` is given, one
/// line `step, L, L_pred, L_pc, lr` is written per step, with `# stage`
/// markers.
TrainResult train_model(FusionModel& model, const PreparedData& data, const TrainConfig& cfg,
                        const splits::SeedStreams& streams, std::ostream* log = nullptr);

/// Stage 1 of the two-stage regime alone: trains {loc_encoder, proxy_head_g}
/// on L_pc, then drops g and freezes the encoder.
void proxy_pretrain(FusionModel& model, const PreparedData& data, const TrainConfig& cfg,
                    const splits::SeedStreams& streams, TrainResult& result, std::ostream* log = nullptr);

/// Predictions in original target units.
[[nodiscard]] std::vector<double> predict_split(const FusionModel& model, const PreparedSplit& split,
                                                const io::NormalizationStats& stats);

[[nodiscard]] metrics::MetricReport evaluate_split(const FusionModel& model, const PreparedSplit& split,
                                                   const io::NormalizationStats& stats);

} // namespace geoprox::fusion
