#pragma once

#include <string>
#include <vector>

#include "model/config.hpp"
#include "net/graph.hpp"
#include "net/rbf.hpp"
#include "num/optim.hpp"
#include "num/tensor.hpp"

namespace vfn::verify {

/// Plain-loop reference implementations, deliberately independent of
/// the tape: every formula is spelled out with scalar arithmetic so the
/// batched differentiable path has something untangled to agree with.

num::Tensor ref_vector_field(const num::Tensor& wa, const num::Tensor& wb, const num::Tensor& qi,
                             const num::Tensor& kj);

num::Tensor ref_v_mlp(const num::Tensor& wc, const num::Tensor& wd, const num::Tensor& we,
                      const num::Tensor& gate, const num::Tensor& qi, const num::Tensor& qo);

num::Tensor ref_featurize(const num::Tensor& h, const net::RbfBank& bank);

struct DenseLayerResult {
  num::Tensor s;                   // [n, d_v]
  num::Tensor e;                   // [E, d_e]
  std::vector<num::Tensor> atoms;  // n tensors [d_q, 3]
  num::Tensor attention;           // [n, L, heads]
  num::Tensor g;                   // [E, d_g]
};

/// Full layer as nested per-edge / per-node loops over scalar math.
DenseLayerResult ref_dense_layer(const net::GraphTopology& topo, const model::ModelConfig& cfg,
                                 const num::ParamStore& params, const std::string& prefix,
                                 const num::Tensor& s, const num::Tensor& e,
                                 const std::vector<num::Tensor>& atoms);

}  // namespace vfn::verify
