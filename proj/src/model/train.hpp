#pragma once

#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "model/checkpoint.hpp"
#include "model/network.hpp"

namespace vfn::model {

struct TrainOptions {
  int batch_size = 8;
  std::int64_t max_steps = 1000;
  double peak_lr = 1e-3;
  double weight_decay = 0.1;
  double warmup_frac = 0.3;
  std::uint64_t seed = 0;
  std::int64_t eval_interval = 50;
  std::string checkpoint_dir;       // non-empty: "last.ckpt" written at every eval point
  std::string log_path;             // non-empty: line-delimited JSON metric log
  nlohmann::json config_echo;       // echoed into checkpoints
};

struct EvalPoint {
  std::int64_t step = 0;
  double loss = 0.0;
  double perplexity = 0.0;
  double recovery = 0.0;
};

/// Invoked at every eval point; returning false stops training early
/// (a final checkpoint is still written).
using EvalCallback = std::function<bool(const EvalPoint&)>;

struct TrainResult {
  std::vector<EvalPoint> log;
  std::int64_t final_step = 0;
};

/// Batched gradient descent: per step, gradients from `batch_size`
/// proteins are summed and applied through AdamW under a one-cycle
/// schedule. Metrics are computed on each logging batch. A non-finite
/// loss halts with the offending protein's name. Passing `resume`
/// restores optimizer moments and continues the step numbering.
TrainResult train(Model& m, const std::vector<data::BackboneStructure>& train_set,
                  const TrainOptions& opts, const EvalCallback& on_eval = {},
                  const Checkpoint* resume = nullptr);

}  // namespace vfn::model
