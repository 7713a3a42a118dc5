// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "geoprox/nd/tensor.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace geoprox::nd {

namespace detail {

struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backprop;
    Parameter* param = nullptr;
    const char* op = "";
    bool requires_grad = false;
    bool released = false;
};

} // namespace detail

/// Handle to a value recorded on the define-by-run tape.
///
/// Every operation below evaluates eagerly and keeps the record needed for
/// reverse-mode differentiation. The record is released by `backward`.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

    [[nodiscard]] const Matrix& value() const { return node_->value; }
    [[nodiscard]] Eigen::Index rows() const { return node_->value.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return node_->value.cols(); }
    [[nodiscard]] double scalar() const;
    [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
    [[nodiscard]] explicit operator bool() const noexcept { return static_cast<bool>(node_); }

    [[nodiscard]] const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

// Leaves.
[[nodiscard]] Var constant(Matrix values);
[[nodiscard]] Var leaf(Parameter& param, bool trainable = true);

// Linear algebra and elementwise arithmetic. `add` broadcasts a 1xN right
// operand across the rows of the left one (bias addition).
[[nodiscard]] Var matmul(const Var& a, const Var& b);
[[nodiscard]] Var add(const Var& a, const Var& b);
[[nodiscard]] Var sub(const Var& a, const Var& b);
[[nodiscard]] Var mul(const Var& a, const Var& b);
[[nodiscard]] Var scale(const Var& a, double factor);

// Nonlinearities.
[[nodiscard]] Var silu(const Var& a);
[[nodiscard]] Var tanh(const Var& a);
[[nodiscard]] Var square(const Var& a);

// Structure.
[[nodiscard]] Var concat_cols(const std::vector<Var>& parts);
[[nodiscard]] Var concat_cols(const Var& a, const Var& b);

// Reductions to 1x1.
[[nodiscard]] Var mean(const Var& a);
[[nodiscard]] Var mse(const Var& prediction, const Var& target);

/// Mean over rows of sum_j w_j (a_ij - b_ij)^2.
[[nodiscard]] Var weighted_mse(const Var& prediction, const Var& target, const Eigen::RowVectorXd& weights);

/// Reverse sweep from a scalar output. Gradients of trainable leaves are
/// accumulated into `Parameter::grad` and flagged `touched`; the tape is then
/// released and cannot be differentiated again.
void backward(const Var& output);

} // namespace geoprox::nd
