#include "model/config_io.hpp"

#include <string>

#include "common/error.hpp"

namespace vfn::model {

using nlohmann::json;

json config_to_json(const ModelConfig& cfg) {
  return json{{"n_layers", cfg.n_layers},
              {"d_q", cfg.d_q},
              {"d_v", cfg.d_v},
              {"d_e", cfg.d_e},
              {"knn_k", cfg.knn_k},
              {"n_rbf", cfg.n_rbf},
              {"heads", cfg.heads},
              {"atom_update_mode", to_string(cfg.atom_update_mode)},
              {"use_edge_featurizer", cfg.use_edge_featurizer},
              {"activation", to_string(cfg.activation)}};
}

namespace {

int take_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    raise(ErrorCode::parse_error, std::string("model config key '") + key + "' must be an integer");
  }
  return j[key].get<int>();
}

}  // namespace

ModelConfig config_from_json(const json& j) {
  if (!j.is_object()) raise(ErrorCode::parse_error, "model config must be a JSON object");
  static const char* known[] = {"n_layers", "d_q",   "d_v",
                                "d_e",      "knn_k", "n_rbf",
                                "heads",    "atom_update_mode", "use_edge_featurizer",
                                "activation"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) raise(ErrorCode::parse_error, "unknown model config key '" + key + "'");
  }
  ModelConfig cfg;
  cfg.n_layers = take_int(j, "n_layers", cfg.n_layers);
  cfg.d_q = take_int(j, "d_q", cfg.d_q);
  cfg.d_v = take_int(j, "d_v", cfg.d_v);
  cfg.d_e = take_int(j, "d_e", cfg.d_e);
  cfg.knn_k = take_int(j, "knn_k", cfg.knn_k);
  cfg.n_rbf = take_int(j, "n_rbf", cfg.n_rbf);
  cfg.heads = take_int(j, "heads", cfg.heads);
  if (j.contains("atom_update_mode")) {
    cfg.atom_update_mode = atom_update_mode_from_string(j["atom_update_mode"].get<std::string>());
  }
  if (j.contains("use_edge_featurizer")) {
    if (!j["use_edge_featurizer"].is_boolean()) {
      raise(ErrorCode::parse_error, "model config key 'use_edge_featurizer' must be a boolean");
    }
    cfg.use_edge_featurizer = j["use_edge_featurizer"].get<bool>();
  }
  if (j.contains("activation")) {
    cfg.activation = activation_from_string(j["activation"].get<std::string>());
  }
  cfg.validate();
  return cfg;
}

}  // namespace vfn::model
