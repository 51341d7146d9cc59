#pragma once

#include <json.hpp>

#include "model/config.hpp"

namespace vfn::model {

nlohmann::json config_to_json(const ModelConfig& cfg);

/// Parses a {"n_layers": ..., ...} object. Unknown keys are rejected so
/// config typos fail loudly instead of silently using defaults.
ModelConfig config_from_json(const nlohmann::json& j);

}  // namespace vfn::model
