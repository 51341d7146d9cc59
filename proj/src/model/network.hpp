#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data/structure.hpp"
#include "model/config.hpp"
#include "model/inputs.hpp"
#include "net/layer.hpp"
#include "num/optim.hpp"
#include "num/tape.hpp"

namespace vfn::model {

/// Configuration plus the named parameter tensors; everything a forward
/// pass needs besides the protein itself.
struct Model {
  ModelConfig cfg;
  num::ParamStore params;
};

/// Fresh initialization. The classification head starts at zero so an
/// untrained model emits exactly uniform logits (perplexity 20).
Model init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Initial virtual atoms on the tape: columns 0-3 are the local-frame
/// backbone atoms (constant), the rest broadcast the learned free atoms.
num::Value initial_atoms(num::Tape& tape, num::Value free_atoms, const GraphInputs& in,
                         const ModelConfig& cfg);

/// PiFold-style gating: every node feature row is scaled by
/// sigmoid(MLP(mean node feature)), one shared gate per graph.
num::Value global_context(num::Tape& tape, const net::LeafMap& leaves, const std::string& prefix,
                          num::Value s, const ModelConfig& cfg);

/// Differentiable forward pass; returns [n, 20] logits on the tape.
num::Value forward_logits(num::Tape& tape, const net::LeafMap& leaves, const ModelConfig& cfg,
                          const GraphInputs& in);

/// Forward-only pass with per-layer tape truncation: peak memory stays
/// bounded by a single layer's graph.
num::Tensor forward_logits(const Model& m, const GraphInputs& in);

struct Prediction {
  num::Tensor logits;          // [n, 20]
  std::vector<int> predicted;  // argmax per residue
};

Prediction predict(const Model& m, const data::BackboneStructure& s);

/// Mean cross-entropy over labeled residues (-1 entries are skipped).
num::Value sequence_loss(num::Tape& tape, num::Value logits, const std::vector<int>& labels);

struct Metrics {
  double perplexity = 0.0;
  double recovery_percent = 0.0;
  std::int64_t labeled = 0;
  std::int64_t matched = 0;
};

Metrics compute_metrics(const num::Tensor& logits, const std::vector<int>& labels);

}  // namespace vfn::model
