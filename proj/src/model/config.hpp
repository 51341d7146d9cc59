#pragma once

#include <cstdint>
#include <string>

namespace vfn::model {

enum class Activation { gelu, relu };
enum class AtomUpdateMode { linear, aggregate };

Activation activation_from_string(const std::string& s);
AtomUpdateMode atom_update_mode_from_string(const std::string& s);
std::string to_string(Activation a);
std::string to_string(AtomUpdateMode m);

struct ModelConfig {
  int n_layers = 15;
  int d_q = 32;
  int d_v = 128;
  int d_e = 128;
  int knn_k = 30;
  int n_rbf = 16;
  int heads = 4;
  AtomUpdateMode atom_update_mode = AtomUpdateMode::linear;
  bool use_edge_featurizer = false;
  Activation activation = Activation::gelu;

  /// Width of the per-edge geometric feature vector.
  int d_g() const { return d_q * (3 + n_rbf); }
  int head_width() const { return d_v / heads; }

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

}  // namespace vfn::model
