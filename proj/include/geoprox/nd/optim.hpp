// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/nd/tensor.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace geoprox::nd {

struct AdamWConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double clip_norm = 1.0; ///< <= 0 disables clipping
};

/// ReduceLROnPlateau and early stopping on a minimized validation metric.
struct PlateauConfig {
    double factor = 0.5;
    int patience = 5;
    double min_delta = 1e-4; ///< absolute improvement required to reset the counters
    int stop_patience = 15;
    double min_lr = 0.0;
};

struct Moments {
    Matrix first;
    Matrix second;
    std::uint64_t steps = 0;
};

struct OptimizerState {
    AdamWConfig hyper;
    PlateauConfig plateau;
    double lr = hyper.lr;
    std::uint64_t step = 0;
    std::map<std::string, Moments> moments; ///< keyed by "group/parameter"

    double plateau_best = std::numeric_limits<double>::infinity();
    int plateau_bad_rounds = 0;
    double stop_best = std::numeric_limits<double>::infinity();
    int stop_bad_rounds = 0;

    OptimizerState() = default;
    explicit OptimizerState(AdamWConfig hyper, PlateauConfig plateau = {});
};

struct StepReport {
    double grad_norm = 0.0;    ///< global norm before clipping
    double applied_norm = 0.0; ///< global norm of the gradient actually used
    std::size_t updated_groups = 0;
};

/// One AdamW update over every trainable group that received gradient.
///
/// The global gradient norm (over touched parameters of trainable groups) is
/// clipped to `clip_norm` first. Decoupled weight decay and moment updates are
/// applied only to touched parameters, so a group the loss did not reach stays
/// bit-identical. Throws NumericalError naming the group if any gradient is
/// non-finite; in that case nothing is modified. Throws InvariantViolation if a
/// non-trainable group carries gradient.
StepReport adamw_step(std::span<ParameterGroup* const> groups, OptimizerState& state);
StepReport adamw_step(std::span<ParameterGroup> groups, OptimizerState& state);

struct ScheduleDecision {
    double lr = 0.0;
    bool stop = false;
    bool improved = false;
};

/// Feed one validation metric (lower is better) to the plateau scheduler and
/// the early-stopping monitor.
ScheduleDecision plateau_and_early_stop(OptimizerState& state, double val_metric);

} // namespace geoprox::nd
