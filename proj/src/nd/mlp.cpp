// SPDX-License-Identifier: Apache-2.0
#include "geoprox/nd/mlp.hpp"

#include "geoprox/errors.hpp"

#include <cmath>

namespace geoprox::nd {

Mlp::Mlp(std::string group_name, int in_dim, std::vector<int> hidden, int out_dim, std::mt19937_64& rng,
         Activation act)
    : in_dim_(in_dim), out_dim_(out_dim), act_(act)
{
    if (in_dim <= 0 || out_dim <= 0) {
        throw ConfigError("mlp '" + group_name + "': dimensions must be positive");
    }
    group_.name = std::move(group_name);
    std::vector<int> widths{in_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(out_dim);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        if (fan_out <= 0) {
            throw ConfigError("mlp '" + group_.name + "': hidden widths must be positive");
        }
        // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        Matrix w(fan_in, fan_out);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w.data()[i] = u(rng);
        }
        Matrix b(1, fan_out);
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            b.data()[i] = u(rng);
        }
        const auto tag = "layer" + std::to_string(l);
        group_.params.emplace_back(tag + ".weight", Tensor::from_matrix(std::move(w)));
        group_.params.emplace_back(tag + ".bias",
                                   Tensor({static_cast<std::size_t>(fan_out)}, std::move(b)));
    }
}

Var Mlp::forward(const Var& x)
{
    if (x.cols() != in_dim_) {
        throw DimensionError("mlp '" + group_.name + "': expected " + std::to_string(in_dim_) + " input columns, got " +
                             std::to_string(x.cols()));
    }
    Var h = x;
    const std::size_t layers = layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        auto w = leaf(group_.params[2 * l], group_.trainable);
        auto b = leaf(group_.params[2 * l + 1], group_.trainable);
        h = add(matmul(h, w), b);
        if (l + 1 < layers) {
            h = act_ == Activation::silu ? silu(h) : nd::tanh(h);
        }
    }
    return h;
}

Matrix Mlp::evaluate(const Matrix& x) const
{
    if (x.cols() != in_dim_) {
        throw DimensionError("mlp '" + group_.name + "': expected " + std::to_string(in_dim_) + " input columns, got " +
                             std::to_string(x.cols()));
    }
    Matrix h = x;
    const std::size_t layers = layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix next(h.rows(), group_.params[2 * l].value.matrix().cols());
        next.noalias() = h * group_.params[2 * l].value.matrix();
        next.rowwise() += group_.params[2 * l + 1].value.matrix().row(0);
        if (l + 1 < layers) {
            if (act_ == Activation::silu) {
                next = next.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
            } else {
                next = next.array().tanh().matrix();
            }
        }
        h = std::move(next);
    }
    return h;
}

void Mlp::load(const ParameterGroup& source)
{
    if (source.params.size() != group_.params.size()) {
        throw DataError("mlp '" + group_.name + "': parameter count mismatch on load");
    }
    for (std::size_t i = 0; i < source.params.size(); ++i) {
        if (source.params[i].value.shape() != group_.params[i].value.shape()) {
            throw DataError("mlp '" + group_.name + "': shape mismatch for " + group_.params[i].name);
        }
        group_.params[i].value = source.params[i].value;
        group_.params[i].zero_grad();
    }
}

} // namespace geoprox::nd
