// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/nd/graph.hpp"
#include "geoprox/nd/tensor.hpp"

#include <random>
#include <string>
#include <vector>

namespace geoprox::nd {

enum class Activation { silu, tanh };

/// Fully connected network `in -> hidden... -> out` with a smooth activation
/// between layers and a linear output. Owns its parameters as one group whose
/// entries are named "layer<i>.weight" / "layer<i>.bias".
class Mlp {
public:
    Mlp() = default;
    Mlp(std::string group_name, int in_dim, std::vector<int> hidden, int out_dim, std::mt19937_64& rng,
        Activation act = Activation::silu);

    /// Recorded forward pass; parameters enter the tape as trainable leaves
    /// only when the group is trainable.
    [[nodiscard]] Var forward(const Var& x);

    /// Tape-free evaluation.
    [[nodiscard]] Matrix evaluate(const Matrix& x) const;

    [[nodiscard]] int in_dim() const noexcept { return in_dim_; }
    [[nodiscard]] int out_dim() const noexcept { return out_dim_; }
    [[nodiscard]] std::size_t layer_count() const noexcept { return group_.params.size() / 2; }

    [[nodiscard]] ParameterGroup& group() noexcept { return group_; }
    [[nodiscard]] const ParameterGroup& group() const noexcept { return group_; }

    /// Replace parameter values from a group with the same layout.
    void load(const ParameterGroup& source);

private:
    ParameterGroup group_;
    int in_dim_ = 0;
    int out_dim_ = 0;
    Activation act_ = Activation::silu;
};

} // namespace geoprox::nd
