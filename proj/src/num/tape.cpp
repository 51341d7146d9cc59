#include "num/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <utility>

#include "common/error.hpp"

namespace vfn::num {

namespace {

using ConstMat = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using Mat = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Below this work bound the plain loop is as fast as a blocked kernel and
// keeps a deterministic ascending-index accumulation order.
constexpr std::int64_t kNaiveGemmWork = 32768;

struct AxisSpan {
  std::int64_t outer = 1;
  std::int64_t adim = 1;
  std::int64_t inner = 1;
};

AxisSpan axis_span(const Shape& shape, std::int64_t axis) {
  AxisSpan s;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(shape.size()); ++i) {
    if (i < axis) {
      s.outer *= shape[i];
    } else if (i == axis) {
      s.adim = shape[i];
    } else {
      s.inner *= shape[i];
    }
  }
  return s;
}

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_slope(double x) {
  constexpr double inv_sqrt_2pi = 0.3989422804014326779;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::multiply: return "multiply";
    case OpKind::scalar_scale: return "scalar_scale";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::reshape: return "reshape";
    case OpKind::sum_axis: return "sum_axis";
    case OpKind::relu: return "relu";
    case OpKind::gelu: return "gelu";
    case OpKind::softmax_axis: return "softmax_axis";
    case OpKind::layer_norm: return "layer_norm";
    case OpKind::sqrt_op: return "sqrt";
    case OpKind::divide: return "divide";
    case OpKind::cross_entropy_logits: return "cross_entropy_logits";
    case OpKind::gather_rows: return "gather_rows";
  }
  return "unknown";
}

void gemm(const double* a, const double* b, double* c, std::int64_t m, std::int64_t k, std::int64_t n,
          bool accumulate) {
  if (m * k * n <= kNaiveGemmWork) {
    for (std::int64_t i = 0; i < m; ++i) {
      double* ci = c + i * n;
      if (!accumulate) std::fill(ci, ci + n, 0.0);
      const double* ai = a + i * k;
      for (std::int64_t l = 0; l < k; ++l) {
        const double av = ai[l];
        const double* bl = b + l * n;
        for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bl[j];
      }
    }
    return;
  }
  Mat cm(c, m, n);
  if (accumulate) {
    cm.noalias() += ConstMat(a, m, k) * ConstMat(b, k, n);
  } else {
    cm.noalias() = ConstMat(a, m, k) * ConstMat(b, k, n);
  }
}

Value Tape::leaf(Tensor t, std::string name) {
  Node n;
  n.kind = OpKind::leaf;
  n.needs_grad = t.requires_grad;
  n.value = std::move(t);
  n.name = std::move(name);
  return push(std::move(n));
}

Value Tape::constant(Tensor t) {
  t.requires_grad = false;
  return leaf(std::move(t));
}

Value Tape::push(Node n) {
  if (n.kind != OpKind::leaf && !n.value.all_finite()) {
    raise(ErrorCode::numeric, std::string(op_name(n.kind)) + " produced a non-finite value");
  }
  if (nodes_.size() >= static_cast<std::size_t>(INT32_MAX)) {
    raise(ErrorCode::internal, "tape overflow");
  }
  nodes_.push_back(std::move(n));
  return Value{static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::check(Value v) const {
  if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size()) {
    raise(ErrorCode::invalid_argument, "value handle does not belong to this tape");
  }
}

Tape::Node& Tape::node(Value v) {
  check(v);
  return nodes_[static_cast<std::size_t>(v.idx)];
}

const Tape::Node& Tape::node(Value v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.idx)];
}

const Tensor& Tape::value(Value v) const { return node(v).value; }

bool Tape::needs_grad(Value v) const { return node(v).needs_grad; }

const std::string& Tape::name(Value v) const { return node(v).name; }

Tensor Tape::grad(Value v) const {
  const Node& n = node(v);
  Tensor g = Tensor::zeros(n.value.shape);
  if (!n.grad.empty()) g.values = n.grad;
  return g;
}

void Tape::clear() { nodes_.clear(); }

std::vector<double>& Tape::grad_buffer(std::int32_t idx) {
  Node& n = nodes_[static_cast<std::size_t>(idx)];
  if (n.grad.empty()) n.grad.assign(static_cast<std::size_t>(n.value.size()), 0.0);
  return n.grad;
}

Value Tape::matmul(Value a, Value b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.value.rank() != 2 || nb.value.rank() != 2 || na.value.dim(1) != nb.value.dim(0)) {
    raise(ErrorCode::shape_mismatch,
          "matmul: incompatible shapes " + shape_str(na.value.shape) + " and " + shape_str(nb.value.shape));
  }
  const std::int64_t m = na.value.dim(0), k = na.value.dim(1), cols = nb.value.dim(1);
  Node out;
  out.kind = OpKind::matmul;
  out.inputs = {a.idx, b.idx};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor::zeros({m, cols});
  gemm(na.value.values.data(), nb.value.values.data(), out.value.values.data(), m, k, cols, false);
  return push(std::move(out));
}

Value Tape::add(Value a, Value b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.value.shape != nb.value.shape) {
    raise(ErrorCode::shape_mismatch,
          "add: mismatched shapes " + shape_str(na.value.shape) + " and " + shape_str(nb.value.shape));
  }
  Node out;
  out.kind = OpKind::add;
  out.inputs = {a.idx, b.idx};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor::zeros(na.value.shape);
  for (std::int64_t i = 0; i < out.value.size(); ++i) out.value[i] = na.value[i] + nb.value[i];
  return push(std::move(out));
}

Value Tape::multiply(Value a, Value b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.value.shape != nb.value.shape) {
    raise(ErrorCode::shape_mismatch,
          "multiply: mismatched shapes " + shape_str(na.value.shape) + " and " + shape_str(nb.value.shape));
  }
  Node out;
  out.kind = OpKind::multiply;
  out.inputs = {a.idx, b.idx};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor::zeros(na.value.shape);
  for (std::int64_t i = 0; i < out.value.size(); ++i) out.value[i] = na.value[i] * nb.value[i];
  return push(std::move(out));
}

Value Tape::scalar_scale(Value a, double s) {
  const Node& na = node(a);
  Node out;
  out.kind = OpKind::scalar_scale;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.scalar = s;
  out.value = Tensor::zeros(na.value.shape);
  for (std::int64_t i = 0; i < out.value.size(); ++i) out.value[i] = s * na.value[i];
  return push(std::move(out));
}

Value Tape::concat(std::span<const Value> parts, std::int64_t axis) {
  if (parts.empty()) raise(ErrorCode::invalid_argument, "concat: no inputs");
  const Node& first = node(parts[0]);
  const std::int64_t rank = first.value.rank();
  if (axis < 0 || axis >= rank) {
    raise(ErrorCode::invalid_argument, "concat: axis " + std::to_string(axis) + " out of range for rank " +
                                           std::to_string(rank));
  }
  Shape out_shape = first.value.shape;
  out_shape[static_cast<std::size_t>(axis)] = 0;
  Node out;
  out.kind = OpKind::concat;
  out.axis = axis;
  for (Value p : parts) {
    const Node& np = node(p);
    if (np.value.rank() != rank) {
      raise(ErrorCode::shape_mismatch, "concat: mixed ranks " + shape_str(first.value.shape) + " and " +
                                           shape_str(np.value.shape));
    }
    for (std::int64_t d = 0; d < rank; ++d) {
      if (d != axis && np.value.dim(d) != first.value.dim(d)) {
        raise(ErrorCode::shape_mismatch, "concat: mismatched shapes " + shape_str(first.value.shape) +
                                             " and " + shape_str(np.value.shape));
      }
    }
    out_shape[static_cast<std::size_t>(axis)] += np.value.dim(axis);
    out.inputs.push_back(p.idx);
    out.needs_grad = out.needs_grad || np.needs_grad;
  }
  out.value = Tensor::zeros(out_shape);
  const AxisSpan span = axis_span(out_shape, axis);
  std::int64_t offset = 0;
  for (Value p : parts) {
    const Node& np = node(p);
    const std::int64_t pdim = np.value.dim(axis);
    const std::int64_t pblock = pdim * span.inner;
    for (std::int64_t o = 0; o < span.outer; ++o) {
      const double* src = np.value.values.data() + o * pblock;
      double* dst = out.value.values.data() + o * span.adim * span.inner + offset * span.inner;
      std::copy(src, src + pblock, dst);
    }
    offset += pdim;
  }
  return push(std::move(out));
}

Value Tape::slice(Value a, std::int64_t axis, std::int64_t start, std::int64_t len) {
  const Node& na = node(a);
  const std::int64_t rank = na.value.rank();
  if (axis < 0 || axis >= rank) {
    raise(ErrorCode::invalid_argument,
          "slice: axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  }
  if (len <= 0 || start < 0 || start + len > na.value.dim(axis)) {
    raise(ErrorCode::invalid_argument, "slice: range [" + std::to_string(start) + "," +
                                           std::to_string(start + len) + ") out of bounds for " +
                                           shape_str(na.value.shape) + " axis " + std::to_string(axis));
  }
  Shape out_shape = na.value.shape;
  out_shape[static_cast<std::size_t>(axis)] = len;
  Node out;
  out.kind = OpKind::slice;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.axis = axis;
  out.start = start;
  out.len = len;
  out.value = Tensor::zeros(out_shape);
  const AxisSpan span = axis_span(na.value.shape, axis);
  for (std::int64_t o = 0; o < span.outer; ++o) {
    const double* src = na.value.values.data() + (o * span.adim + start) * span.inner;
    double* dst = out.value.values.data() + o * len * span.inner;
    std::copy(src, src + len * span.inner, dst);
  }
  return push(std::move(out));
}

Value Tape::reshape(Value a, Shape shape) {
  const Node& na = node(a);
  if (numel(shape) != na.value.size()) {
    raise(ErrorCode::shape_mismatch,
          "reshape: cannot view " + shape_str(na.value.shape) + " as " + shape_str(shape));
  }
  Node out;
  out.kind = OpKind::reshape;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.value = Tensor(std::move(shape), na.value.values);
  return push(std::move(out));
}

Value Tape::sum_axis(Value a, std::int64_t axis) {
  const Node& na = node(a);
  const std::int64_t rank = na.value.rank();
  if (axis < 0 || axis >= rank) {
    raise(ErrorCode::invalid_argument,
          "sum_axis: axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  }
  Shape out_shape = na.value.shape;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape = {1};
  Node out;
  out.kind = OpKind::sum_axis;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.axis = axis;
  out.value = Tensor::zeros(out_shape);
  const AxisSpan span = axis_span(na.value.shape, axis);
  for (std::int64_t o = 0; o < span.outer; ++o) {
    for (std::int64_t j = 0; j < span.adim; ++j) {
      const double* src = na.value.values.data() + (o * span.adim + j) * span.inner;
      double* dst = out.value.values.data() + o * span.inner;
      for (std::int64_t i = 0; i < span.inner; ++i) dst[i] += src[i];
    }
  }
  return push(std::move(out));
}

Value Tape::relu(Value a) {
  const Node& na = node(a);
  Node out;
  out.kind = OpKind::relu;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.value = Tensor::zeros(na.value.shape);
  for (std::int64_t i = 0; i < out.value.size(); ++i) out.value[i] = na.value[i] > 0.0 ? na.value[i] : 0.0;
  return push(std::move(out));
}

Value Tape::gelu(Value a) {
  const Node& na = node(a);
  Node out;
  out.kind = OpKind::gelu;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.value = Tensor::zeros(na.value.shape);
  for (std::int64_t i = 0; i < out.value.size(); ++i) out.value[i] = gelu_value(na.value[i]);
  return push(std::move(out));
}

Value Tape::softmax_axis(Value a, std::int64_t axis) {
  const Node& na = node(a);
  const std::int64_t rank = na.value.rank();
  if (axis < 0 || axis >= rank) {
    raise(ErrorCode::invalid_argument,
          "softmax_axis: axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  }
  Node out;
  out.kind = OpKind::softmax_axis;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.axis = axis;
  out.value = Tensor::zeros(na.value.shape);
  const AxisSpan span = axis_span(na.value.shape, axis);
  for (std::int64_t o = 0; o < span.outer; ++o) {
    for (std::int64_t i = 0; i < span.inner; ++i) {
      const std::int64_t base = o * span.adim * span.inner + i;
      double hi = -HUGE_VAL;
      for (std::int64_t j = 0; j < span.adim; ++j) hi = std::max(hi, na.value[base + j * span.inner]);
      double total = 0.0;
      for (std::int64_t j = 0; j < span.adim; ++j) {
        const double e = std::exp(na.value[base + j * span.inner] - hi);
        out.value[base + j * span.inner] = e;
        total += e;
      }
      for (std::int64_t j = 0; j < span.adim; ++j) out.value[base + j * span.inner] /= total;
    }
  }
  return push(std::move(out));
}

Value Tape::layer_norm(Value a) {
  const Node& na = node(a);
  if (na.value.rank() < 1) raise(ErrorCode::invalid_argument, "layer_norm: rank-0 input");
  constexpr double eps = 1e-8;
  const std::int64_t width = na.value.dim(na.value.rank() - 1);
  const std::int64_t lanes = na.value.size() / width;
  Node out;
  out.kind = OpKind::layer_norm;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.value = Tensor::zeros(na.value.shape);
  for (std::int64_t l = 0; l < lanes; ++l) {
    const double* x = na.value.values.data() + l * width;
    double* y = out.value.values.data() + l * width;
    double mean = 0.0;
    for (std::int64_t i = 0; i < width; ++i) mean += x[i];
    mean /= static_cast<double>(width);
    double var = 0.0;
    for (std::int64_t i = 0; i < width; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= static_cast<double>(width);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::int64_t i = 0; i < width; ++i) y[i] = (x[i] - mean) * inv;
  }
  return push(std::move(out));
}

Value Tape::sqrt(Value a) {
  const Node& na = node(a);
  Node out;
  out.kind = OpKind::sqrt_op;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.value = Tensor::zeros(na.value.shape);
  for (std::int64_t i = 0; i < out.value.size(); ++i) out.value[i] = std::sqrt(na.value[i]);
  return push(std::move(out));
}

Value Tape::divide(Value a, Value b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.value.shape != nb.value.shape) {
    raise(ErrorCode::shape_mismatch,
          "divide: mismatched shapes " + shape_str(na.value.shape) + " and " + shape_str(nb.value.shape));
  }
  Node out;
  out.kind = OpKind::divide;
  out.inputs = {a.idx, b.idx};
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor::zeros(na.value.shape);
  for (std::int64_t i = 0; i < out.value.size(); ++i) out.value[i] = na.value[i] / nb.value[i];
  return push(std::move(out));
}

Value Tape::cross_entropy_logits(Value logits, std::span<const int> labels) {
  const Node& nl = node(logits);
  if (nl.value.rank() != 2) {
    raise(ErrorCode::shape_mismatch, "cross_entropy_logits: logits must be rank 2, got " +
                                         shape_str(nl.value.shape));
  }
  const std::int64_t rows = nl.value.dim(0), classes = nl.value.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != rows) {
    raise(ErrorCode::shape_mismatch, "cross_entropy_logits: " + std::to_string(labels.size()) +
                                         " labels for " + std::to_string(rows) + " rows");
  }
  std::int64_t count = 0;
  for (int lbl : labels) {
    if (lbl < -1 || lbl >= classes) {
      raise(ErrorCode::invalid_argument,
            "cross_entropy_logits: label " + std::to_string(lbl) + " outside [-1," +
                std::to_string(classes) + ")");
    }
    if (lbl >= 0) ++count;
  }
  if (count == 0) raise(ErrorCode::invalid_argument, "cross_entropy_logits: every row is masked");
  Node out;
  out.kind = OpKind::cross_entropy_logits;
  out.inputs = {logits.idx};
  out.needs_grad = nl.needs_grad;
  out.labels.assign(labels.begin(), labels.end());
  double total = 0.0;
  for (std::int64_t r = 0; r < rows; ++r) {
    if (labels[static_cast<std::size_t>(r)] < 0) continue;
    const double* x = nl.value.values.data() + r * classes;
    double hi = -HUGE_VAL;
    for (std::int64_t c = 0; c < classes; ++c) hi = std::max(hi, x[c]);
    double s = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) s += std::exp(x[c] - hi);
    total += hi + std::log(s) - x[labels[static_cast<std::size_t>(r)]];
  }
  out.value = Tensor::scalar(total / static_cast<double>(count));
  return push(std::move(out));
}

Value Tape::gather_rows(Value a, std::vector<std::int64_t> indices) {
  const Node& na = node(a);
  if (na.value.rank() < 1) raise(ErrorCode::invalid_argument, "gather_rows: rank-0 input");
  const std::int64_t rows = na.value.dim(0);
  const std::int64_t width = na.value.size() / std::max<std::int64_t>(rows, 1);
  for (std::int64_t idx : indices) {
    if (idx < 0 || idx >= rows) {
      raise(ErrorCode::invalid_argument, "gather_rows: index " + std::to_string(idx) + " outside [0," +
                                             std::to_string(rows) + ")");
    }
  }
  Shape out_shape = na.value.shape;
  out_shape[0] = static_cast<std::int64_t>(indices.size());
  Node out;
  out.kind = OpKind::gather_rows;
  out.inputs = {a.idx};
  out.needs_grad = na.needs_grad;
  out.value = Tensor::zeros(out_shape);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double* src = na.value.values.data() + indices[r] * width;
    std::copy(src, src + width, out.value.values.data() + static_cast<std::int64_t>(r) * width);
  }
  out.indices = std::move(indices);
  return push(std::move(out));
}

void Tape::backward(Value loss) {
  const Node& ln = node(loss);
  if (ln.value.size() != 1) {
    raise(ErrorCode::shape_mismatch, "backward: loss must be a scalar, got " + shape_str(ln.value.shape));
  }
  for (Node& n : nodes_) n.grad.clear();
  grad_buffer(loss.idx)[0] = 1.0;
  for (std::int32_t i = loss.idx; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.kind == OpKind::leaf || !n.needs_grad || n.grad.empty()) continue;
    backward_node(i);
  }
}

void Tape::backward_node(std::int32_t idx) {
  Node& n = nodes_[static_cast<std::size_t>(idx)];
  const std::vector<double>& g = n.grad;
  auto in = [&](std::size_t slot) -> Node& { return nodes_[static_cast<std::size_t>(n.inputs[slot])]; };
  auto wants = [&](std::size_t slot) { return in(slot).needs_grad; };
  auto buf = [&](std::size_t slot) -> std::vector<double>& { return grad_buffer(n.inputs[slot]); };

  switch (n.kind) {
    case OpKind::leaf:
      break;
    case OpKind::matmul: {
      const Node& a = in(0);
      const Node& b = in(1);
      const std::int64_t m = a.value.dim(0), k = a.value.dim(1), cols = b.value.dim(1);
      if (wants(0)) {
        Mat da(buf(0).data(), m, k);
        da.noalias() += ConstMat(g.data(), m, cols) * ConstMat(b.value.values.data(), k, cols).transpose();
      }
      if (wants(1)) {
        Mat db(buf(1).data(), k, cols);
        db.noalias() += ConstMat(a.value.values.data(), m, k).transpose() * ConstMat(g.data(), m, cols);
      }
      break;
    }
    case OpKind::add: {
      for (std::size_t s = 0; s < 2; ++s) {
        if (!wants(s)) continue;
        std::vector<double>& d = buf(s);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      }
      break;
    }
    case OpKind::multiply: {
      if (wants(0)) {
        std::vector<double>& d = buf(0);
        const Tensor& b = in(1).value;
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * b.values[i];
      }
      if (wants(1)) {
        std::vector<double>& d = buf(1);
        const Tensor& a = in(0).value;
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * a.values[i];
      }
      break;
    }
    case OpKind::scalar_scale: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += n.scalar * g[i];
      break;
    }
    case OpKind::concat: {
      const AxisSpan span = axis_span(n.value.shape, n.axis);
      std::int64_t offset = 0;
      for (std::size_t s = 0; s < n.inputs.size(); ++s) {
        const std::int64_t pdim = in(s).value.dim(n.axis);
        if (wants(s)) {
          std::vector<double>& d = buf(s);
          const std::int64_t pblock = pdim * span.inner;
          for (std::int64_t o = 0; o < span.outer; ++o) {
            const double* src = g.data() + o * span.adim * span.inner + offset * span.inner;
            double* dst = d.data() + o * pblock;
            for (std::int64_t i = 0; i < pblock; ++i) dst[i] += src[i];
          }
        }
        offset += pdim;
      }
      break;
    }
    case OpKind::slice: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      const AxisSpan span = axis_span(in(0).value.shape, n.axis);
      for (std::int64_t o = 0; o < span.outer; ++o) {
        const double* src = g.data() + o * n.len * span.inner;
        double* dst = d.data() + (o * span.adim + n.start) * span.inner;
        for (std::int64_t i = 0; i < n.len * span.inner; ++i) dst[i] += src[i];
      }
      break;
    }
    case OpKind::reshape: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
      break;
    }
    case OpKind::sum_axis: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      const AxisSpan span = axis_span(in(0).value.shape, n.axis);
      for (std::int64_t o = 0; o < span.outer; ++o) {
        const double* src = g.data() + o * span.inner;
        for (std::int64_t j = 0; j < span.adim; ++j) {
          double* dst = d.data() + (o * span.adim + j) * span.inner;
          for (std::int64_t i = 0; i < span.inner; ++i) dst[i] += src[i];
        }
      }
      break;
    }
    case OpKind::relu: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      const Tensor& x = in(0).value;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x.values[i] > 0.0) d[i] += g[i];
      }
      break;
    }
    case OpKind::gelu: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      const Tensor& x = in(0).value;
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * gelu_slope(x.values[i]);
      break;
    }
    case OpKind::softmax_axis: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      const AxisSpan span = axis_span(n.value.shape, n.axis);
      for (std::int64_t o = 0; o < span.outer; ++o) {
        for (std::int64_t i = 0; i < span.inner; ++i) {
          const std::int64_t base = o * span.adim * span.inner + i;
          double dot = 0.0;
          for (std::int64_t j = 0; j < span.adim; ++j) {
            const std::int64_t e = base + j * span.inner;
            dot += g[static_cast<std::size_t>(e)] * n.value[e];
          }
          for (std::int64_t j = 0; j < span.adim; ++j) {
            const std::int64_t e = base + j * span.inner;
            d[static_cast<std::size_t>(e)] += n.value[e] * (g[static_cast<std::size_t>(e)] - dot);
          }
        }
      }
      break;
    }
    case OpKind::layer_norm: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      constexpr double eps = 1e-8;
      const Tensor& x = in(0).value;
      const std::int64_t width = x.dim(x.rank() - 1);
      const std::int64_t lanes = x.size() / width;
      for (std::int64_t l = 0; l < lanes; ++l) {
        const double* xp = x.values.data() + l * width;
        const double* yp = n.value.values.data() + l * width;
        const double* gp = g.data() + l * width;
        double mean = 0.0;
        for (std::int64_t i = 0; i < width; ++i) mean += xp[i];
        mean /= static_cast<double>(width);
        double var = 0.0;
        for (std::int64_t i = 0; i < width; ++i) var += (xp[i] - mean) * (xp[i] - mean);
        var /= static_cast<double>(width);
        const double inv = 1.0 / std::sqrt(var + eps);
        double gmean = 0.0, gymean = 0.0;
        for (std::int64_t i = 0; i < width; ++i) {
          gmean += gp[i];
          gymean += gp[i] * yp[i];
        }
        gmean /= static_cast<double>(width);
        gymean /= static_cast<double>(width);
        double* dp = d.data() + l * width;
        for (std::int64_t i = 0; i < width; ++i) dp[i] += inv * (gp[i] - gmean - yp[i] * gymean);
      }
      break;
    }
    case OpKind::sqrt_op: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * 0.5 / n.value.values[i];
      break;
    }
    case OpKind::divide: {
      const Tensor& a = in(0).value;
      const Tensor& b = in(1).value;
      if (wants(0)) {
        std::vector<double>& d = buf(0);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] / b.values[i];
      }
      if (wants(1)) {
        std::vector<double>& d = buf(1);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i] * a.values[i] / (b.values[i] * b.values[i]);
      }
      break;
    }
    case OpKind::cross_entropy_logits: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      const Tensor& x = in(0).value;
      const std::int64_t rows = x.dim(0), classes = x.dim(1);
      std::int64_t count = 0;
      for (int lbl : n.labels) {
        if (lbl >= 0) ++count;
      }
      const double scale = g[0] / static_cast<double>(count);
      for (std::int64_t r = 0; r < rows; ++r) {
        const int lbl = n.labels[static_cast<std::size_t>(r)];
        if (lbl < 0) continue;
        const double* xp = x.values.data() + r * classes;
        double hi = -HUGE_VAL;
        for (std::int64_t c = 0; c < classes; ++c) hi = std::max(hi, xp[c]);
        double s = 0.0;
        for (std::int64_t c = 0; c < classes; ++c) s += std::exp(xp[c] - hi);
        double* dp = d.data() + r * classes;
        for (std::int64_t c = 0; c < classes; ++c) {
          double p = std::exp(xp[c] - hi) / s;
          if (c == lbl) p -= 1.0;
          dp[c] += scale * p;
        }
      }
      break;
    }
    case OpKind::gather_rows: {
      if (!wants(0)) break;
      std::vector<double>& d = buf(0);
      const std::int64_t rows = in(0).value.dim(0);
      const std::int64_t width = in(0).value.size() / std::max<std::int64_t>(rows, 1);
      for (std::size_t r = 0; r < n.indices.size(); ++r) {
        const double* src = g.data() + static_cast<std::int64_t>(r) * width;
        double* dst = d.data() + n.indices[r] * width;
        for (std::int64_t i = 0; i < width; ++i) dst[i] += src[i];
      }
      break;
    }
  }
}

}  // namespace vfn::num
