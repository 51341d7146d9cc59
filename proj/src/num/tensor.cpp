#include "num/tensor.hpp"

#include <cmath>
#include <sstream>

namespace vfn::num {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) raise(ErrorCode::shape_mismatch, "negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> v, bool rg) : shape(std::move(s)), values(std::move(v)), requires_grad(rg) {
  if (numel(shape) != static_cast<std::int64_t>(values.size())) {
    raise(ErrorCode::shape_mismatch,
          "tensor value count " + std::to_string(values.size()) + " does not match shape " + shape_str(shape));
  }
}

Tensor Tensor::zeros(Shape s) {
  auto n = numel(s);
  return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(Shape s, double value) {
  auto n = numel(s);
  return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace vfn::num
