#pragma once

#include <map>
#include <string>
#include <vector>

#include "model/config.hpp"
#include "net/graph.hpp"
#include "net/ops.hpp"
#include "num/optim.hpp"
#include "num/rng.hpp"

namespace vfn::net {

/// Tape handles for named parameters, one entry per ParamStore name.
using LeafMap = std::map<std::string, num::Value>;

/// Registers one layer's parameters under `prefix` (e.g. "layer3.").
/// MLP weights draw from N(0, 1/sqrt(fan_in)) with zero biases; the
/// field and perceptron mixers from N(0, 1/sqrt(d_q)); gate directions
/// are unit-normalized normals.
void add_layer_params(num::ParamStore& params, const std::string& prefix,
                      const model::ModelConfig& cfg, num::Rng& rng);

/// Registers `<prefix>.w1/.b1/.w2/.b2` for a two-layer perceptron.
void add_mlp2_params(num::ParamStore& params, const std::string& prefix, std::int64_t in,
                     std::int64_t hidden, std::int64_t out, num::Rng& rng);

/// One differentiable leaf per stored parameter, in store order.
LeafMap leaf_params(num::Tape& tape, const num::ParamStore& params);
/// Same map but recorded as constants: forward-only passes skip all
/// gradient bookkeeping and allow per-layer tape truncation.
LeafMap constant_params(num::Tape& tape, const num::ParamStore& params);

num::Value activate(num::Tape& tape, num::Value x, model::Activation a);

/// Two-layer perceptron act(x·w1 + b1)·w2 + b2.
num::Value mlp2(num::Tape& tape, num::Value x, num::Value w1, num::Value b1, num::Value w2,
                num::Value b2, model::Activation a);

/// Per-graph state threaded through the layer stack. Virtual atoms ride
/// in coordinate-major layout: q is [3n, d_q] and row 3i+c holds
/// component c of every atom of node i, so frame algebra becomes row
/// arithmetic and atom mixing becomes a plain matmul from the right.
struct LayerState {
  num::Value s;  // [n, d_v]
  num::Value e;  // [n*L, d_e]
  num::Value q;  // [3n, d_q]
};

/// Intermediates exposed for inspection and tests.
struct LayerTrace {
  num::Value g;          // [E, d_g]
  num::Value attention;  // [n, L, heads], rows sum to 1 over axis 1 per head
};

/// One full layer: vector field + featurization on every directed edge,
/// multi-head node attention with residual output MLP, residual edge
/// update from post-update node features, then the configured atom
/// refresh. Raises `numeric` if any new coordinate exceeds 1e4.
LayerState run_layer(num::Tape& tape, const GraphTopology& topo, const model::ModelConfig& cfg,
                     const LeafMap& leaves, const std::string& prefix, LayerState in,
                     LayerTrace* trace = nullptr);

/// n tensors of shape [d_q, 3] (atom rows) into one [3n, d_q]
/// coordinate-major block, and back out for a single node.
num::Tensor atoms_to_coord_rows(const std::vector<num::Tensor>& per_node_atoms);
num::Tensor coord_rows_to_atoms(const num::Tensor& q, std::int64_t node);

}  // namespace vfn::net
