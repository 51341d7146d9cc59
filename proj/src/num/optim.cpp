#include "num/optim.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace vfn::num {

Tensor& ParamStore::add(std::string name, Tensor init) {
  if (tensors_.count(name)) {
    raise(ErrorCode::invalid_argument, "duplicate parameter name: " + name);
  }
  init.requires_grad = true;
  names_.push_back(name);
  return tensors_.emplace(std::move(name), std::move(init)).first->second;
}

bool ParamStore::contains(const std::string& name) const { return tensors_.count(name) != 0; }

Tensor& ParamStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) raise(ErrorCode::invalid_argument, "unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) raise(ErrorCode::invalid_argument, "unknown parameter: " + name);
  return it->second;
}

std::int64_t ParamStore::total_elements() const {
  std::int64_t total = 0;
  for (const auto& [name, t] : tensors_) total += t.size();
  return total;
}

AdamW::AdamW(ParamStore& params, AdamWConfig cfg) : params_(params), cfg_(cfg) {
  for (const std::string& name : params_.names()) {
    const std::size_t n = static_cast<std::size_t>(params_.at(name).size());
    m_[name].assign(n, 0.0);
    v_[name].assign(n, 0.0);
  }
}

void AdamW::step(const GradMap& grads, double lr) {
  for (const auto& [name, g] : grads) {
    if (!params_.contains(name)) raise(ErrorCode::invalid_argument, "gradient for unknown parameter: " + name);
    if (g.shape != params_.at(name).shape) {
      raise(ErrorCode::shape_mismatch, "gradient shape " + shape_str(g.shape) + " for parameter " + name +
                                           " of shape " + shape_str(params_.at(name).shape));
    }
    if (!g.all_finite()) {
      raise(ErrorCode::numeric, "non-finite gradient for parameter " + name + "; step aborted");
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  static const Tensor kEmpty;
  for (const std::string& name : params_.names()) {
    Tensor& p = params_.at(name);
    auto it = grads.find(name);
    const Tensor& g = it == grads.end() ? kEmpty : it->second;
    std::vector<double>& m = m_[name];
    std::vector<double>& v = v_[name];
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const double gi = g.values.empty() ? 0.0 : g[i];
      p[i] *= 1.0 - lr * cfg_.weight_decay;
      m[static_cast<std::size_t>(i)] = cfg_.beta1 * m[static_cast<std::size_t>(i)] + (1.0 - cfg_.beta1) * gi;
      v[static_cast<std::size_t>(i)] =
          cfg_.beta2 * v[static_cast<std::size_t>(i)] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m[static_cast<std::size_t>(i)] / bc1;
      const double vhat = v[static_cast<std::size_t>(i)] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

const std::vector<double>& AdamW::moment1(const std::string& name) const {
  auto it = m_.find(name);
  if (it == m_.end()) raise(ErrorCode::invalid_argument, "no optimizer state for: " + name);
  return it->second;
}

const std::vector<double>& AdamW::moment2(const std::string& name) const {
  auto it = v_.find(name);
  if (it == v_.end()) raise(ErrorCode::invalid_argument, "no optimizer state for: " + name);
  return it->second;
}

void AdamW::restore(std::int64_t t, const std::string& name, std::vector<double> m1, std::vector<double> m2) {
  const std::size_t n = static_cast<std::size_t>(params_.at(name).size());
  if (m1.size() != n || m2.size() != n) {
    raise(ErrorCode::shape_mismatch, "optimizer state size mismatch for: " + name);
  }
  t_ = t;
  m_[name] = std::move(m1);
  v_[name] = std::move(m2);
}

OneCycleSchedule::OneCycleSchedule(double peak_lr, std::int64_t total_steps, double warmup_frac)
    : peak_(peak_lr), total_(total_steps) {
  if (total_steps <= 0) raise(ErrorCode::invalid_argument, "schedule needs at least one step");
  if (warmup_frac < 0.0 || warmup_frac >= 1.0) {
    raise(ErrorCode::invalid_argument, "warmup fraction must lie in [0, 1)");
  }
  warmup_ = static_cast<std::int64_t>(std::llround(warmup_frac * static_cast<double>(total_steps)));
  warmup_ = std::clamp<std::int64_t>(warmup_, 0, total_steps - 1);
}

double OneCycleSchedule::lr(std::int64_t step) const {
  step = std::clamp<std::int64_t>(step, 0, total_ - 1);
  const double init = peak_ / 25.0;
  const double floor = peak_ * 1e-5;
  if (step < warmup_) {
    const double t = static_cast<double>(step + 1) / static_cast<double>(warmup_);
    return init + (peak_ - init) * t;
  }
  const std::int64_t decay_steps = total_ - warmup_;
  if (decay_steps <= 1) return peak_;
  const double t = static_cast<double>(step - warmup_) / static_cast<double>(decay_steps - 1);
  return floor + (peak_ - floor) * 0.5 * (1.0 + std::cos(M_PI * t));
}

FdReport fd_check(ParamStore& params, const GradMap& analytic, const std::function<double()>& f,
                  double eps) {
  if (eps < 1e-7 || eps > 1e-3) {
    raise(ErrorCode::invalid_argument, "fd_check eps must lie in [1e-7, 1e-3]");
  }
  const double base1 = f();
  const double base2 = f();
  if (base1 != base2) {
    raise(ErrorCode::numeric, "fd_check objective is not deterministic under repeated evaluation");
  }
  FdReport report;
  for (const std::string& name : params.names()) {
    Tensor& p = params.at(name);
    auto it = analytic.find(name);
    for (std::int64_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double up = f();
      p[i] = saved - eps;
      const double down = f();
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      // The guard keeps the ratio meaningful where the central
      // difference itself is pure roundoff: |f|*2^-52/eps is ~1e-11
      // here, so entries below ~1e-8 compare absolutely, not
      // relatively. Real backward bugs move gradients at their own
      // scale and still trip the bound.
      const double rel = std::abs(a - numeric) / (std::abs(numeric) + 1e-4);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace vfn::num
