// SPDX-License-Identifier: Apache-2.0
#include "geoprox/nd/optim.hpp"

#include "geoprox/errors.hpp"

#include <cmath>

namespace geoprox::nd {

OptimizerState::OptimizerState(AdamWConfig hyper_, PlateauConfig plateau_)
    : hyper(hyper_), plateau(plateau_), lr(hyper_.lr)
{
    if (!(lr > 0.0)) {
        throw ConfigError("optimizer: learning rate must be positive");
    }
}

StepReport adamw_step(std::span<ParameterGroup> groups, OptimizerState& state)
{
    std::vector<ParameterGroup*> ptrs;
    for (auto& g : groups) {
        ptrs.push_back(&g);
    }
    return adamw_step(std::span<ParameterGroup* const>(ptrs), state);
}

StepReport adamw_step(std::span<ParameterGroup* const> groups, OptimizerState& state)
{
    StepReport report;
    double sq = 0.0;
    for (const auto* gp : groups) {
        const auto& g = *gp;
        if (!g.trainable) {
            if (g.any_touched()) {
                throw InvariantViolation("adamw: frozen group '" + g.name + "' received gradient");
            }
            continue;
        }
        for (const auto& p : g.params) {
            if (!p.touched) {
                continue;
            }
            if (!p.grad.allFinite()) {
                throw NumericalError("adamw: non-finite gradient in group '" + g.name + "' (" + p.name + ")");
            }
            sq += p.grad.squaredNorm();
        }
    }
    report.grad_norm = std::sqrt(sq);
    double clip_scale = 1.0;
    if (state.hyper.clip_norm > 0.0 && report.grad_norm > state.hyper.clip_norm) {
        clip_scale = state.hyper.clip_norm / report.grad_norm;
    }
    report.applied_norm = report.grad_norm * clip_scale;

    const double lr = state.lr;
    const double b1 = state.hyper.beta1;
    const double b2 = state.hyper.beta2;
    for (auto* gp : groups) {
        auto& g = *gp;
        if (!g.trainable || !g.any_touched()) {
            continue;
        }
        ++report.updated_groups;
        for (auto& p : g.params) {
            if (!p.touched) {
                continue;
            }
            auto& mom = state.moments[g.name + "/" + p.name];
            if (mom.first.size() == 0) {
                mom.first = Matrix::Zero(p.grad.rows(), p.grad.cols());
                mom.second = Matrix::Zero(p.grad.rows(), p.grad.cols());
            }
            ++mom.steps;
            const Matrix grad = p.grad * clip_scale;
            mom.first = b1 * mom.first + (1.0 - b1) * grad;
            mom.second = b2 * mom.second + (1.0 - b2) * grad.cwiseAbs2();
            const double bc1 = 1.0 - std::pow(b1, static_cast<double>(mom.steps));
            const double bc2 = 1.0 - std::pow(b2, static_cast<double>(mom.steps));

            auto& w = p.value.matrix();
            if (state.hyper.weight_decay != 0.0) {
                w *= 1.0 - lr * state.hyper.weight_decay;
            }
            w.array() -= lr * (mom.first.array() / bc1) / ((mom.second.array() / bc2).sqrt() + state.hyper.eps);
        }
    }
    ++state.step;
    return report;
}

ScheduleDecision plateau_and_early_stop(OptimizerState& state, double val_metric)
{
    const auto& cfg = state.plateau;
    ScheduleDecision d;

    if (val_metric < state.plateau_best - cfg.min_delta) {
        state.plateau_best = val_metric;
        state.plateau_bad_rounds = 0;
        d.improved = true;
    } else if (++state.plateau_bad_rounds > cfg.patience) {
        state.lr = std::max(state.lr * cfg.factor, cfg.min_lr);
        state.plateau_bad_rounds = 0;
    }

    if (val_metric < state.stop_best - cfg.min_delta) {
        state.stop_best = val_metric;
        state.stop_bad_rounds = 0;
    } else {
        ++state.stop_bad_rounds;
    }
    d.stop = state.stop_bad_rounds >= cfg.stop_patience;
    d.lr = state.lr;
    return d;
}

} // namespace geoprox::nd
