#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>

#include "model/config.hpp"

namespace vfn::cli {

struct TrainSection {
  int batch_size = 8;
  std::int64_t max_steps = 1000;
  double peak_lr = 1e-3;
  double weight_decay = 0.1;
  double warmup_frac = 0.3;
  std::uint64_t seed = 0;
  std::int64_t eval_interval = 50;
  bool operator==(const TrainSection&) const = default;
};

struct DataSection {
  std::string train_path;
  std::string split_manifest;
  std::string format = "auto";  // auto | jsonl | pdb
  bool operator==(const DataSection&) const = default;
};

struct OutputSection {
  std::string checkpoint_dir;
  std::string log_path;
  bool operator==(const OutputSection&) const = default;
};

/// Whole-run declaration: model dimensions plus training, data and
/// output settings. JSON round-trips losslessly; every unknown key is
/// rejected at parse time.
struct RunConfig {
  model::ModelConfig model;
  TrainSection train;
  DataSection data;
  OutputSection output;
  bool operator==(const RunConfig&) const = default;
};

RunConfig runconfig_from_json(const nlohmann::json& j);
nlohmann::json runconfig_to_json(const RunConfig& rc);

/// Layered precedence: defaults, then the config file, then explicit
/// overrides (nested partial object, e.g. {"train":{"seed":7}}).
RunConfig resolve_runconfig(const nlohmann::json& file, const nlohmann::json& overrides);

}  // namespace vfn::cli
