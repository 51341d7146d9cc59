#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common/error.hpp"

namespace vfn::num {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of 64-bit floats.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> v, bool rg = false);

  static Tensor zeros(Shape s);
  static Tensor full(Shape s, double value);
  static Tensor scalar(double value);

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape.size()); }
  std::int64_t dim(std::int64_t axis) const { return shape[static_cast<std::size_t>(axis)]; }

  double& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }

  /// 2-D accessor; valid only for rank-2 tensors.
  double& at(std::int64_t r, std::int64_t c) { return values[static_cast<std::size_t>(r * shape[1] + c)]; }
  double at(std::int64_t r, std::int64_t c) const { return values[static_cast<std::size_t>(r * shape[1] + c)]; }

  bool all_finite() const;
};

}  // namespace vfn::num
