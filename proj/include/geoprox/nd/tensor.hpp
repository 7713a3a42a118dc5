// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace geoprox::nd {

/// Dense row-major storage shared by every tensor in the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A dense tensor of rank 0, 1 or 2 with 64-bit values.
///
/// Rank-0 and rank-1 tensors are stored as a single row, so `matrix()` is
/// always a valid 2-D view whose size equals the product of `shape()`.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, Matrix values);

    static Tensor from_matrix(Matrix values);

    [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

    [[nodiscard]] const Matrix& matrix() const noexcept { return values_; }
    [[nodiscard]] Matrix& matrix() noexcept { return values_; }

    [[nodiscard]] const double* data() const noexcept { return values_.data(); }
    [[nodiscard]] double* data() noexcept { return values_.data(); }

    [[nodiscard]] std::string shape_string() const;

private:
    std::vector<std::size_t> shape_;
    Matrix values_;
};

/// A learnable tensor together with its gradient buffer.
///
/// `touched` is cleared by `zero_grad()` and set only when a backward pass
/// actually reaches this parameter; untouched parameters keep a zero gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Matrix grad;
    bool touched = false;

    Parameter() = default;
    Parameter(std::string name, Tensor value);

    void zero_grad();
};

/// Named set of parameters; the unit of trainability and gradient routing.
struct ParameterGroup {
    std::string name;
    std::vector<Parameter> params;
    bool trainable = true;

    [[nodiscard]] bool any_touched() const noexcept;
    [[nodiscard]] std::size_t parameter_count() const noexcept;
    void zero_grad();
};

[[nodiscard]] bool bit_equal(const ParameterGroup& a, const ParameterGroup& b) noexcept;

} // namespace geoprox::nd
