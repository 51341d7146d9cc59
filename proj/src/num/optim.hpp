#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "num/tensor.hpp"

namespace vfn::num {

/// Named trainable tensors in stable insertion order.
class ParamStore {
 public:
  Tensor& add(std::string name, Tensor init);
  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t count() const { return names_.size(); }
  std::int64_t total_elements() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, Tensor> tensors_;
};

/// Gradients keyed by parameter name; ordered for deterministic sweeps.
using GradMap = std::map<std::string, Tensor>;

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.1;
};

/// AdamW with decoupled weight decay: the decay multiplies parameters
/// directly by (1 - lr * wd) before the moment update is applied.
class AdamW {
 public:
  AdamW(ParamStore& params, AdamWConfig cfg);

  /// One update over every parameter. Names absent from `grads` are
  /// treated as zero-gradient. A non-finite gradient aborts the step,
  /// naming the parameter.
  void step(const GradMap& grads, double lr);

  std::int64_t steps_taken() const { return t_; }

  // Checkpoint plumbing: moment buffers in parameter order.
  const std::vector<double>& moment1(const std::string& name) const;
  const std::vector<double>& moment2(const std::string& name) const;
  void restore(std::int64_t t, const std::string& name, std::vector<double> m1, std::vector<double> m2);

 private:
  ParamStore& params_;
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
  std::unordered_map<std::string, std::vector<double>> m_;
  std::unordered_map<std::string, std::vector<double>> v_;
};

/// Warmup-then-cosine learning-rate curve: linear ramp from peak/25 to
/// peak over the warmup fraction, cosine decay to 1e-5 * peak after.
class OneCycleSchedule {
 public:
  OneCycleSchedule(double peak_lr, std::int64_t total_steps, double warmup_frac = 0.3);
  double lr(std::int64_t step) const;
  std::int64_t total_steps() const { return total_; }

 private:
  double peak_;
  std::int64_t total_;
  std::int64_t warmup_;
};

struct FdReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  double worst_analytic = 0.0;  // analytic gradient at the worst entry
  double worst_numeric = 0.0;   // central difference at the worst entry
};

/// Central-difference check of `analytic` against the objective `f`
/// evaluated under elementwise perturbations of every parameter.
/// Relative error is |analytic - numeric| / (|numeric| + 1e-4); the
/// additive guard turns the comparison absolute for entries below the
/// noise floor of the central difference itself.
/// `f` is evaluated twice up front; a mismatch means it is not
/// deterministic and the check refuses to run.
FdReport fd_check(ParamStore& params, const GradMap& analytic, const std::function<double()>& f,
                  double eps);

}  // namespace vfn::num
