// SPDX-License-Identifier: Apache-2.0
#include "geoprox/nd/graph.hpp"

#include "geoprox/errors.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

namespace geoprox::nd {
namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::string dims(const Matrix& m)
{
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b)
{
    throw DimensionError(std::string(op) + ": incompatible shapes " + dims(a) + " and " + dims(b));
}

void require(const Var& v, const char* op)
{
    if (!v) {
        throw std::invalid_argument(std::string(op) + ": empty operand");
    }
    if (v.node()->released) {
        throw std::logic_error(std::string(op) + ": operand belongs to a released tape");
    }
}

template <typename Expr>
void accumulate(Node& n, const Expr& g)
{
    if (!n.requires_grad) {
        return;
    }
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

NodePtr make_node(const char* op, Matrix value, std::vector<NodePtr> inputs)
{
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = std::move(value);
    for (const auto& in : inputs) {
        n->requires_grad = n->requires_grad || in->requires_grad;
    }
    n->inputs = std::move(inputs);
    return n;
}

Var finish(NodePtr n, std::function<void(Node&)> fn)
{
    if (n->requires_grad) {
        n->backprop = std::move(fn);
    } else {
        // Nothing upstream needs a gradient; drop the record now.
        n->inputs.clear();
    }
    return Var(std::move(n));
}

template <typename F, typename DF>
Var unary(const char* op, const Var& a, F&& f, DF&& df)
{
    require(a, op);
    Matrix out = a.value().unaryExpr(f);
    auto n = make_node(op, std::move(out), {a.node()});
    return finish(std::move(n), [df](Node& self) {
        Node& x = *self.inputs[0];
        accumulate(x, (self.grad.array() * x.value.unaryExpr(df).array()).matrix());
    });
}

} // namespace

double Var::scalar() const
{
    if (!node_ || node_->value.size() != 1) {
        throw DimensionError("scalar: value is not 1x1");
    }
    return node_->value(0, 0);
}

Var constant(Matrix values)
{
    auto n = std::make_shared<Node>();
    n->op = "constant";
    n->value = std::move(values);
    return Var(std::move(n));
}

Var leaf(Parameter& param, bool trainable)
{
    auto n = std::make_shared<Node>();
    n->op = "parameter";
    n->value = param.value.matrix();
    if (trainable) {
        n->requires_grad = true;
        n->param = &param;
        n->backprop = [](Node& self) {
            self.param->grad += self.grad;
            self.param->touched = true;
        };
    }
    return Var(std::move(n));
}

Var matmul(const Var& a, const Var& b)
{
    require(a, "matmul");
    require(b, "matmul");
    if (a.cols() != b.rows()) {
        shape_error("matmul", a.value(), b.value());
    }
    Matrix out(a.rows(), b.cols());
    out.noalias() = a.value() * b.value();
    auto n = make_node("matmul", std::move(out), {a.node(), b.node()});
    return finish(std::move(n), [](Node& self) {
        Node& x = *self.inputs[0];
        Node& w = *self.inputs[1];
        if (x.requires_grad) {
            Matrix gx(x.value.rows(), x.value.cols());
            gx.noalias() = self.grad * w.value.transpose();
            accumulate(x, gx);
        }
        if (w.requires_grad) {
            Matrix gw(w.value.rows(), w.value.cols());
            gw.noalias() = x.value.transpose() * self.grad;
            accumulate(w, gw);
        }
    });
}

Var add(const Var& a, const Var& b)
{
    require(a, "add");
    require(b, "add");
    const bool same = a.rows() == b.rows() && a.cols() == b.cols();
    const bool row_broadcast = b.rows() == 1 && b.cols() == a.cols();
    if (!same && !row_broadcast) {
        shape_error("add", a.value(), b.value());
    }
    Matrix out = a.value();
    if (same) {
        out += b.value();
    } else {
        out.rowwise() += b.value().row(0);
    }
    auto n = make_node("add", std::move(out), {a.node(), b.node()});
    return finish(std::move(n), [same](Node& self) {
        accumulate(*self.inputs[0], self.grad);
        if (same) {
            accumulate(*self.inputs[1], self.grad);
        } else {
            accumulate(*self.inputs[1], self.grad.colwise().sum());
        }
    });
}

Var sub(const Var& a, const Var& b)
{
    require(a, "sub");
    require(b, "sub");
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        shape_error("sub", a.value(), b.value());
    }
    Matrix out = a.value() - b.value();
    auto n = make_node("sub", std::move(out), {a.node(), b.node()});
    return finish(std::move(n), [](Node& self) {
        accumulate(*self.inputs[0], self.grad);
        accumulate(*self.inputs[1], (-self.grad).eval());
    });
}

Var mul(const Var& a, const Var& b)
{
    require(a, "mul");
    require(b, "mul");
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        shape_error("mul", a.value(), b.value());
    }
    Matrix out = a.value().cwiseProduct(b.value());
    auto n = make_node("mul", std::move(out), {a.node(), b.node()});
    return finish(std::move(n), [](Node& self) {
        Node& x = *self.inputs[0];
        Node& y = *self.inputs[1];
        accumulate(x, self.grad.cwiseProduct(y.value));
        accumulate(y, self.grad.cwiseProduct(x.value));
    });
}

Var scale(const Var& a, double factor)
{
    require(a, "scale");
    Matrix out = a.value() * factor;
    auto n = make_node("scale", std::move(out), {a.node()});
    return finish(std::move(n), [factor](Node& self) { accumulate(*self.inputs[0], self.grad * factor); });
}

Var silu(const Var& a)
{
    return unary(
        "silu", a, [](double x) { return x / (1.0 + std::exp(-x)); },
        [](double x) {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        });
}

Var tanh(const Var& a)
{
    return unary(
        "tanh", a, [](double x) { return std::tanh(x); },
        [](double x) {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        });
}

Var square(const Var& a)
{
    return unary(
        "square", a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var concat_cols(const std::vector<Var>& parts)
{
    if (parts.empty()) {
        throw DimensionError("concat: no operands");
    }
    Eigen::Index rows = -1;
    Eigen::Index cols = 0;
    std::vector<NodePtr> inputs;
    for (const auto& p : parts) {
        require(p, "concat");
        if (rows >= 0 && p.rows() != rows) {
            shape_error("concat", parts.front().value(), p.value());
        }
        rows = p.rows();
        cols += p.cols();
        inputs.push_back(p.node());
    }
    Matrix out(rows, cols);
    std::vector<Eigen::Index> offsets;
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        offsets.push_back(at);
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    auto n = make_node("concat", std::move(out), std::move(inputs));
    return finish(std::move(n), [offsets = std::move(offsets)](Node& self) {
        for (std::size_t i = 0; i < self.inputs.size(); ++i) {
            Node& x = *self.inputs[i];
            if (x.requires_grad) {
                accumulate(x, Matrix(self.grad.middleCols(offsets[i], x.value.cols())));
            }
        }
    });
}

Var concat_cols(const Var& a, const Var& b)
{
    return concat_cols(std::vector<Var>{a, b});
}

Var mean(const Var& a)
{
    require(a, "mean");
    if (a.value().size() == 0) {
        throw DimensionError("mean: empty operand");
    }
    Matrix out(1, 1);
    out(0, 0) = a.value().mean();
    auto n = make_node("mean", std::move(out), {a.node()});
    return finish(std::move(n), [](Node& self) {
        Node& x = *self.inputs[0];
        const double g = self.grad(0, 0) / static_cast<double>(x.value.size());
        accumulate(x, Matrix::Constant(x.value.rows(), x.value.cols(), g));
    });
}

Var mse(const Var& prediction, const Var& target)
{
    require(prediction, "squared_error");
    require(target, "squared_error");
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
        shape_error("squared_error", prediction.value(), target.value());
    }
    if (prediction.value().size() == 0) {
        throw DimensionError("squared_error: empty operands");
    }
    Matrix diff = prediction.value() - target.value();
    Matrix out(1, 1);
    out(0, 0) = diff.squaredNorm() / static_cast<double>(diff.size());
    auto n = make_node("squared_error", std::move(out), {prediction.node(), target.node()});
    return finish(std::move(n), [diff = std::move(diff)](Node& self) {
        const double k = 2.0 * self.grad(0, 0) / static_cast<double>(diff.size());
        accumulate(*self.inputs[0], diff * k);
        accumulate(*self.inputs[1], diff * -k);
    });
}

Var weighted_mse(const Var& prediction, const Var& target, const Eigen::RowVectorXd& weights)
{
    require(prediction, "weighted_squared_error");
    require(target, "weighted_squared_error");
    if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
        shape_error("weighted_squared_error", prediction.value(), target.value());
    }
    if (weights.size() != prediction.cols()) {
        throw DimensionError("weighted_squared_error: " + std::to_string(weights.size()) + " weights for " +
                             std::to_string(prediction.cols()) + " channels");
    }
    if (prediction.rows() == 0) {
        throw DimensionError("weighted_squared_error: empty operands");
    }
    Matrix diff = prediction.value() - target.value();
    const auto rows = static_cast<double>(diff.rows());
    Matrix out(1, 1);
    out(0, 0) = (diff.array().square().rowwise() * weights.array()).sum() / rows;
    auto n = make_node("weighted_squared_error", std::move(out), {prediction.node(), target.node()});
    return finish(std::move(n), [diff = std::move(diff), weights, rows](Node& self) {
        Matrix g = (diff.array().rowwise() * weights.array()).matrix() * (2.0 * self.grad(0, 0) / rows);
        accumulate(*self.inputs[1], (-g).eval());
        accumulate(*self.inputs[0], g);
    });
}

void backward(const Var& output)
{
    if (!output) {
        throw std::invalid_argument("backward: empty output");
    }
    const auto& root = output.node();
    if (root->value.size() != 1) {
        throw DimensionError("backward: output must be scalar, got " + dims(root->value));
    }
    if (root->released) {
        throw std::logic_error("backward: tape already released");
    }

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    if (root->requires_grad) {
        root->grad = Matrix::Ones(1, 1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node& n = **it;
            if (n.backprop && n.grad.size() != 0) {
                n.backprop(n);
            }
        }
    }

    for (Node* n : order) {
        n->inputs.clear();
        n->backprop = nullptr;
        n->grad.resize(0, 0);
        n->released = true;
    }
}

} // namespace geoprox::nd
