#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "model/network.hpp"
#include "num/optim.hpp"

namespace vfn::model {

/// On-disk layout: magic "VFNCKPT1", an 8-byte little-endian header
/// length, a UTF-8 JSON header {config, model, step, manifest:
/// [{name, shape, offset}]}, then the raw little-endian float64 payload.
/// Optimizer moments ride in the same manifest under "opt.m:"/"opt.v:"
/// prefixes so a resumed run continues exactly where it stopped.
struct Checkpoint {
  nlohmann::json config;  // run-config echo, opaque at this layer
  ModelConfig model_cfg;
  std::int64_t step = 0;
  num::ParamStore params;
  std::unordered_map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds a Model, verifying every expected parameter exists with the
/// right shape; mismatches raise with the offending name and both shapes.
Model model_from_checkpoint(const Checkpoint& ck);

/// Assembles a checkpoint from a live model (+ optional optimizer).
Checkpoint make_checkpoint(const Model& m, nlohmann::json config_echo, std::int64_t step,
                           const num::AdamW* opt = nullptr);

}  // namespace vfn::model
