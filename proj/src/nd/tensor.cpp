// SPDX-License-Identifier: Apache-2.0
#include "geoprox/nd/tensor.hpp"

#include "geoprox/errors.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

namespace geoprox::nd {
namespace {

std::pair<Eigen::Index, Eigen::Index> storage_dims(const std::vector<std::size_t>& shape)
{
    switch (shape.size()) {
    case 0: return {1, 1};
    case 1: return {1, static_cast<Eigen::Index>(shape[0])};
    case 2: return {static_cast<Eigen::Index>(shape[0]), static_cast<Eigen::Index>(shape[1])};
    default: throw DimensionError("tensor: rank " + std::to_string(shape.size()) + " is not supported (max 2)");
    }
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape))
{
    auto [r, c] = storage_dims(shape_);
    values_ = Matrix::Zero(r, c);
}

Tensor::Tensor(std::vector<std::size_t> shape, Matrix values) : shape_(std::move(shape)), values_(std::move(values))
{
    auto [r, c] = storage_dims(shape_);
    if (values_.rows() != r || values_.cols() != c) {
        throw DimensionError("tensor: values of size " + std::to_string(values_.rows()) + "x" +
                             std::to_string(values_.cols()) + " do not match shape " + shape_string());
    }
}

Tensor Tensor::from_matrix(Matrix values)
{
    std::vector<std::size_t> shape{static_cast<std::size_t>(values.rows()), static_cast<std::size_t>(values.cols())};
    return Tensor(std::move(shape), std::move(values));
}

std::string Tensor::shape_string() const
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        os << (i ? "," : "") << shape_[i];
    }
    os << ']';
    return os.str();
}

Parameter::Parameter(std::string name, Tensor value) : name(std::move(name)), value(std::move(value))
{
    zero_grad();
}

void Parameter::zero_grad()
{
    grad = Matrix::Zero(value.matrix().rows(), value.matrix().cols());
    touched = false;
}

bool ParameterGroup::any_touched() const noexcept
{
    return std::any_of(params.begin(), params.end(), [](const Parameter& p) { return p.touched; });
}

std::size_t ParameterGroup::parameter_count() const noexcept
{
    return std::accumulate(params.begin(), params.end(), std::size_t{0},
                           [](std::size_t n, const Parameter& p) { return n + p.value.size(); });
}

void ParameterGroup::zero_grad()
{
    for (auto& p : params) {
        p.zero_grad();
    }
}

bool bit_equal(const ParameterGroup& a, const ParameterGroup& b) noexcept
{
    if (a.name != b.name || a.params.size() != b.params.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        const auto& x = a.params[i].value;
        const auto& y = b.params[i].value;
        if (x.shape() != y.shape() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

} // namespace geoprox::nd
