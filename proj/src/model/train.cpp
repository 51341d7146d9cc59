#include "model/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <utility>

#include "common/error.hpp"
#include "net/layer.hpp"
#include "num/rng.hpp"

namespace vfn::model {
namespace {

void accumulate(num::GradMap& into, const std::string& name, const num::Tensor& g) {
  auto it = into.find(name);
  if (it == into.end()) {
    into.emplace(name, g);
    return;
  }
  for (std::size_t i = 0; i < g.values.size(); ++i) it->second.values[i] += g.values[i];
}

void append_log_line(const std::string& path, const EvalPoint& p) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  if (!out) raise(ErrorCode::io_error, "cannot open metric log for writing: " + path);
  nlohmann::json line{
      {"step", p.step}, {"loss", p.loss}, {"perplexity", p.perplexity}, {"recovery", p.recovery}};
  out << line.dump() << "\n";
}

void write_last_checkpoint(const Model& m, const TrainOptions& opts, std::int64_t step,
                           const num::AdamW& opt) {
  if (opts.checkpoint_dir.empty()) return;
  std::filesystem::create_directories(opts.checkpoint_dir);
  Checkpoint ck = make_checkpoint(m, opts.config_echo, step, &opt);
  save_checkpoint(opts.checkpoint_dir + "/last.ckpt", ck);
}

}  // namespace

TrainResult train(Model& m, const std::vector<data::BackboneStructure>& train_set,
                  const TrainOptions& opts, const EvalCallback& on_eval,
                  const Checkpoint* resume) {
  if (train_set.empty()) raise(ErrorCode::invalid_argument, "training set is empty");
  if (opts.batch_size < 1) raise(ErrorCode::invalid_argument, "batch_size must be >= 1");
  if (opts.max_steps < 1) raise(ErrorCode::invalid_argument, "max_steps must be >= 1");
  if (opts.eval_interval < 1) raise(ErrorCode::invalid_argument, "eval_interval must be >= 1");

  std::vector<GraphInputs> inputs;
  inputs.reserve(train_set.size());
  for (const auto& s : train_set) {
    inputs.push_back(prepare_inputs(s, m.cfg));
    const auto& labels = inputs.back().labels;
    bool any = false;
    for (int l : labels) any = any || l >= 0;
    if (!any)
      raise(ErrorCode::invalid_argument, "protein has no labeled residues: " + inputs.back().name);
  }

  num::AdamWConfig adamw_cfg;
  adamw_cfg.weight_decay = opts.weight_decay;
  num::AdamW opt(m.params, adamw_cfg);

  std::int64_t start = 0;
  if (resume != nullptr) {
    start = resume->step;
    if (start >= opts.max_steps)
      raise(ErrorCode::invalid_argument, "checkpoint is already at or beyond max_steps");
    for (const auto& [name, mm] : resume->moments)
      opt.restore(resume->step, name, mm.first, mm.second);
  } else if (!opts.log_path.empty()) {
    std::ofstream truncate(opts.log_path, std::ios::trunc);
    if (!truncate) raise(ErrorCode::io_error, "cannot open metric log for writing: " + opts.log_path);
  }

  num::OneCycleSchedule schedule(opts.peak_lr, opts.max_steps, opts.warmup_frac);
  num::Rng rng(opts.seed);
  std::vector<std::size_t> deck(inputs.size());
  std::iota(deck.begin(), deck.end(), std::size_t{0});
  rng.shuffle(deck);
  std::size_t deck_pos = 0;

  TrainResult result;
  result.final_step = start;
  bool stop = false;

  for (std::int64_t step = start; step < opts.max_steps && !stop; ++step) {
    num::GradMap grads;
    double ce_sum = 0.0;
    std::int64_t labeled = 0;
    std::int64_t matched = 0;

    int batch = std::min<std::int64_t>(opts.batch_size, static_cast<std::int64_t>(inputs.size()));
    for (int b = 0; b < batch; ++b) {
      if (deck_pos == deck.size()) {
        rng.shuffle(deck);
        deck_pos = 0;
      }
      const GraphInputs& in = inputs[deck[deck_pos++]];

      num::Tape tape;
      net::LeafMap leaves = net::leaf_params(tape, m.params);
      num::Value logits = forward_logits(tape, leaves, m.cfg, in);
      num::Value loss = sequence_loss(tape, logits, in.labels);
      double loss_val = tape.value(loss)[0];
      if (!std::isfinite(loss_val))
        raise(ErrorCode::numeric, "non-finite loss on protein '" + in.name + "' at step " +
                                      std::to_string(step + 1));
      tape.backward(loss);
      for (const auto& [name, v] : leaves) accumulate(grads, name, tape.grad(v));

      Metrics pm = compute_metrics(tape.value(logits), in.labels);
      ce_sum += loss_val * static_cast<double>(pm.labeled);
      labeled += pm.labeled;
      matched += pm.matched;
    }

    opt.step(grads, schedule.lr(step));
    result.final_step = step + 1;

    if (result.final_step % opts.eval_interval == 0 || result.final_step == opts.max_steps) {
      EvalPoint p;
      p.step = result.final_step;
      p.loss = ce_sum / static_cast<double>(labeled);
      p.perplexity = std::exp(p.loss);
      p.recovery = 100.0 * static_cast<double>(matched) / static_cast<double>(labeled);
      result.log.push_back(p);
      append_log_line(opts.log_path, p);
      write_last_checkpoint(m, opts, result.final_step, opt);
      if (on_eval && !on_eval(p)) stop = true;
    }
  }

  write_last_checkpoint(m, opts, result.final_step, opt);
  return result;
}

}  // namespace vfn::model
