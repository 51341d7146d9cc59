#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "num/tensor.hpp"

namespace vfn::num {

/// Closed set of recordable operations. Every kind has a hand-written
/// adjoint rule; anything else is a composition in caller code.
enum class OpKind {
  leaf,
  matmul,
  add,
  multiply,
  scalar_scale,
  concat,
  slice,
  reshape,
  sum_axis,
  relu,
  gelu,
  softmax_axis,
  layer_norm,
  sqrt_op,
  divide,
  cross_entropy_logits,
  gather_rows,
};

const char* op_name(OpKind kind);

/// Handle to a node on a Tape.
struct Value {
  std::int32_t idx = -1;
  bool valid() const { return idx >= 0; }
};

/// Reverse-mode differentiation tape. Nodes are recorded in topological
/// order by construction; backward() sweeps them once in reverse.
/// Single-writer: one tape per forward pass, never shared across threads.
class Tape {
 public:
  Value leaf(Tensor t, std::string name = {});
  Value constant(Tensor t);

  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value multiply(Value a, Value b);
  Value scalar_scale(Value a, double s);
  Value concat(std::span<const Value> parts, std::int64_t axis);
  Value slice(Value a, std::int64_t axis, std::int64_t start, std::int64_t len);
  Value reshape(Value a, Shape shape);
  Value sum_axis(Value a, std::int64_t axis);
  Value relu(Value a);
  Value gelu(Value a);
  Value softmax_axis(Value a, std::int64_t axis);
  Value layer_norm(Value a);
  Value sqrt(Value a);
  Value divide(Value a, Value b);
  /// Mean cross-entropy over rows whose label is >= 0; label -1 marks a
  /// masked row. Labels outside [-1, n_classes) are rejected.
  Value cross_entropy_logits(Value logits, std::span<const int> labels);
  Value gather_rows(Value a, std::vector<std::int64_t> indices);

  /// Seeds the scalar loss with 1 and accumulates adjoints into every
  /// node reachable from it. Adjoints from shared subexpressions sum.
  void backward(Value loss);

  const Tensor& value(Value v) const;
  /// Adjoint of a node after backward(); zeros if the node never
  /// received a contribution.
  Tensor grad(Value v) const;
  bool needs_grad(Value v) const;
  const std::string& name(Value v) const;

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    OpKind kind = OpKind::leaf;
    std::vector<std::int32_t> inputs;
    Tensor value;
    std::vector<double> grad;  // empty until touched by backward
    bool needs_grad = false;
    std::string name;
    // op-specific arguments
    std::int64_t axis = 0;
    std::int64_t start = 0;
    std::int64_t len = 0;
    double scalar = 0.0;
    std::vector<std::int64_t> indices;
    std::vector<int> labels;
  };

  Value push(Node node);
  Node& node(Value v);
  const Node& node(Value v) const;
  void check(Value v) const;
  std::vector<double>& grad_buffer(std::int32_t idx);
  void backward_node(std::int32_t idx);

  std::vector<Node> nodes_;
};

/// Blocked matrix product helper, exposed for reference oracles and the
/// optimizer. c (m x n) = a (m x k) * b (k x n); accumulates when
/// `accumulate` is set. Small products use a plain loop whose inner
/// accumulation runs in ascending-index order.
void gemm(const double* a, const double* b, double* c, std::int64_t m, std::int64_t k, std::int64_t n,
          bool accumulate);

}  // namespace vfn::num
