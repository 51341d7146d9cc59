#include "model/config.hpp"

#include "common/error.hpp"

namespace vfn::model {

Activation activation_from_string(const std::string& s) {
  if (s == "gelu") return Activation::gelu;
  if (s == "relu") return Activation::relu;
  raise(ErrorCode::invalid_argument, "unknown activation '" + s + "' (expected gelu or relu)");
}

AtomUpdateMode atom_update_mode_from_string(const std::string& s) {
  if (s == "linear") return AtomUpdateMode::linear;
  if (s == "aggregate") return AtomUpdateMode::aggregate;
  raise(ErrorCode::invalid_argument,
        "unknown atom_update_mode '" + s + "' (expected linear or aggregate)");
}

std::string to_string(Activation a) { return a == Activation::gelu ? "gelu" : "relu"; }

std::string to_string(AtomUpdateMode m) {
  return m == AtomUpdateMode::linear ? "linear" : "aggregate";
}

void ModelConfig::validate() const {
  const auto bad = [](const std::string& why) { raise(ErrorCode::invalid_argument, "config: " + why); };
  if (n_layers < 1) bad("n_layers must be >= 1");
  if (d_q < 5) bad("d_q must be >= 5 (four backbone atoms plus at least one free atom)");
  if (d_v < 1 || d_e < 1) bad("d_v and d_e must be positive");
  if (heads < 1) bad("heads must be >= 1");
  if (d_v % heads != 0) bad("d_v must be divisible by heads");
  if (knn_k < 1) bad("knn_k must be >= 1");
  if (n_rbf < 2) bad("n_rbf must be >= 2");
  if (use_edge_featurizer && d_e < n_rbf) bad("d_e must be >= n_rbf when use_edge_featurizer is set");
}

}  // namespace vfn::model
