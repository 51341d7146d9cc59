#pragma once

#include <string>
#include <vector>

#include "data/structure.hpp"
#include "model/config.hpp"
#include "net/graph.hpp"
#include "num/tensor.hpp"

namespace vfn::model {

/// Tape-independent per-protein inputs: the residue graph plus the
/// constant tensors every forward pass starts from.
struct GraphInputs {
  net::GraphTopology topo;
  num::Tensor backbone_local;  // [3n, 4]: N/CA/C/O in each residue's frame, coordinate-major
  num::Tensor edge_init;       // [E, d_e]: zeros, or leading RBF(CA distance) channels
  std::vector<int> labels;     // amino-acid index, -1 where the identity is masked
  std::string name;
};

/// Frames from N/CA/C, k-NN topology over CA positions, local backbone
/// coordinates and the initial edge features. Requires >= 2 residues.
GraphInputs prepare_inputs(const data::BackboneStructure& s, const ModelConfig& cfg);

}  // namespace vfn::model
