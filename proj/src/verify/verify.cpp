#include "verify/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "common/error.hpp"
#include "data/synthetic.hpp"
#include "model/inputs.hpp"
#include "model/network.hpp"
#include "net/layer.hpp"
#include "net/ops.hpp"
#include "num/composites.hpp"
#include "num/rng.hpp"
#include "verify/reference.hpp"

namespace vfn::verify {

using model::ModelConfig;
using num::Rng;
using num::Shape;
using num::Tape;
using num::Tensor;
using num::Value;

namespace {

Tensor rand_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

Tensor transposed(const Tensor& a) {
  Tensor out = Tensor::zeros({a.dim(1), a.dim(0)});
  for (std::int64_t r = 0; r < a.dim(0); ++r) {
    for (std::int64_t c = 0; c < a.dim(1); ++c) out.at(c, r) = a.at(r, c);
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return HUGE_VAL;
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_rel_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return HUGE_VAL;
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]) / (std::abs(b[i]) + 1e-12));
  }
  return m;
}

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << x;
  return ss.str();
}

PropertyResult bounded(std::string name, double worst, double bound) {
  PropertyResult r;
  r.name = std::move(name);
  r.passed = worst <= bound;
  r.detail = "max deviation " + fmt(worst) + " (bound " + fmt(bound) + ")";
  return r;
}

ModelConfig small_cfg() {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_q = 5;
  cfg.d_v = 8;
  cfg.d_e = 6;
  cfg.heads = 2;
  cfg.n_rbf = 3;
  cfg.knn_k = 3;
  return cfg;
}

net::GraphTopology random_topo(Rng& rng, std::int64_t n, int k) {
  std::vector<geom::RigidTransform> frames;
  std::vector<geom::Point3> ca;
  for (std::int64_t i = 0; i < n; ++i) {
    frames.push_back(geom::random_rigid(rng));
    ca.push_back(frames.back().t);
  }
  return net::build_topology(std::move(frames), std::move(ca), k);
}

PropertyResult check_vector_field_oracle(const FaultInjection& faults) {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::int64_t d_q = 1 + static_cast<std::int64_t>(rng.index(16));
    Tensor wa = rand_tensor(rng, {d_q, d_q});
    Tensor wb = rand_tensor(rng, {d_q, d_q});
    Tensor qi = rand_tensor(rng, {d_q, 3}, -5.0, 5.0);
    Tensor kj = rand_tensor(rng, {d_q, 3}, -5.0, 5.0);
    Tensor wb_used = faults.transpose_wb ? transposed(wb) : wb;
    Tensor got = net::vector_field(wa, wb_used, qi, kj);
    Tensor want = ref_vector_field(wa, wb, qi, kj);
    worst = std::max(worst, max_abs_diff(got, want));
  }
  return bounded("vector_field matches the dense double loop (1000 cases)", worst, 1e-12);
}

PropertyResult check_selector_displacements() {
  Rng rng(102);
  const std::int64_t d_q = 6;
  Tensor qi = rand_tensor(rng, {d_q, 3}, -8.0, 8.0);
  Tensor kj = rand_tensor(rng, {d_q, 3}, -8.0, 8.0);
  const std::vector<std::pair<std::int64_t, std::int64_t>> picks{{0, 2}, {3, 3}, {5, 0}, {2, 4}};

  Tensor wa = Tensor::zeros({d_q, d_q});
  Tensor wb = Tensor::zeros({d_q, d_q});
  for (std::size_t k = 0; k < picks.size(); ++k) {
    wa.at(static_cast<std::int64_t>(k), picks[k].first) = -1.0;
    wb.at(static_cast<std::int64_t>(k), picks[k].second) = 1.0;
  }
  Tensor h = net::vector_field(wa, wb, qi, kj);

  PropertyResult r;
  r.name = "selector mixers reproduce pairwise atom displacements bitwise";
  r.passed = true;
  for (std::size_t k = 0; k < picks.size(); ++k) {
    for (std::int64_t c = 0; c < 3; ++c) {
      const double want = kj.at(picks[k].second, c) - qi.at(picks[k].first, c);
      if (h.at(static_cast<std::int64_t>(k), c) != want) {
        r.passed = false;
        r.detail = "row " + std::to_string(k) + " differs from the displacement";
      }
    }
  }
  if (r.passed) r.detail = std::to_string(picks.size()) + " selector rows bit-identical";
  return r;
}

PropertyResult check_v_mlp_gating() {
  Rng rng(103);
  const std::int64_t d_q = 4;
  Tensor eye = Tensor::zeros({d_q, d_q});
  for (std::int64_t i = 0; i < d_q; ++i) eye.at(i, i) = 1.0;
  Tensor zero_mix = Tensor::zeros({d_q, d_q});
  Tensor qi = rand_tensor(rng, {d_q, 3}, -2.0, 2.0);
  Tensor qo = Tensor::zeros({d_q, 3});

  double worst = 0.0;
  // Gate parallel to each row: cosine 1, the row passes through.
  Tensor out = net::v_mlp(eye, zero_mix, eye, qi, qi, qo);
  worst = std::max(worst, max_abs_diff(out, qi));
  // Anti-parallel gate: cosine -1, the row flips.
  Tensor neg = qi;
  for (std::int64_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
  out = net::v_mlp(eye, zero_mix, eye, neg, qi, qo);
  worst = std::max(worst, max_abs_diff(out, neg));
  // Zero gate: the mask forces an exact zero.
  out = net::v_mlp(eye, zero_mix, eye, Tensor::zeros({d_q, 3}), qi, qo);
  for (std::int64_t i = 0; i < out.size(); ++i) worst = std::max(worst, std::abs(out[i]));
  return bounded("v_mlp cosine gate: parallel, anti-parallel and zero extremes", worst, 1e-12);
}

PropertyResult check_featurize() {
  Rng rng(104);
  const net::RbfBank bank{4, 0.0, 50.0};
  const std::int64_t d_q = 5;
  Tensor h = rand_tensor(rng, {d_q, 3}, -4.0, 4.0);
  h.at(0, 0) = 3.0;
  h.at(0, 1) = 0.0;
  h.at(0, 2) = 0.0;
  for (std::int64_t c = 0; c < 3; ++c) h.at(1, c) = 0.0;

  Tensor g = net::featurize(h, bank);
  double worst = max_abs_diff(g, ref_featurize(h, bank));

  // Each atom owns one block: 3 direction slots, then its RBF image.
  const std::int64_t block = 3 + bank.n;

  // Axis-aligned row: exact unit direction. Zero row: sentinel zeros
  // plus the RBF image of distance 0.
  worst = std::max(worst, std::abs(g.at(0, 0) - 1.0));
  worst = std::max(worst, std::abs(g.at(0, 1)));
  worst = std::max(worst, std::abs(g.at(0, 2)));
  const auto at_zero = net::rbf_values(bank, 0.0);
  for (std::int64_t c = 0; c < 3; ++c) worst = std::max(worst, std::abs(g.at(0, block + c)));
  for (int m = 0; m < bank.n; ++m) {
    worst = std::max(worst,
                     std::abs(g.at(0, block + 3 + m) - at_zero[static_cast<std::size_t>(m)]));
  }

  // Directions are unit or zero; RBF responses live in (0, 1].
  for (std::int64_t a = 0; a < d_q; ++a) {
    double len = 0.0;
    for (std::int64_t c = 0; c < 3; ++c) len += g.at(0, a * block + c) * g.at(0, a * block + c);
    len = std::sqrt(len);
    worst = std::max(worst, std::min(std::abs(len - 1.0), len));
    for (int m = 0; m < bank.n; ++m) {
      const double v = g.at(0, a * block + 3 + m);
      if (v <= 0.0 || v > 1.0) worst = std::max(worst, 1.0);
    }
  }
  return bounded("featurize: unit directions, zero sentinel, bounded RBF", worst, 1e-12);
}

struct DenseComparison {
  double node = HUGE_VAL;
  double edge = HUGE_VAL;
  double atoms_linear = HUGE_VAL;
  double atoms_aggregate = HUGE_VAL;
  double attention_rows = HUGE_VAL;
};

DenseComparison compare_dense(std::uint64_t seed, const ModelConfig& base) {
  Rng rng(seed);
  DenseComparison out;
  const std::int64_t n = 4;
  net::GraphTopology topo = random_topo(rng, n, 2);

  for (auto mode : {model::AtomUpdateMode::linear, model::AtomUpdateMode::aggregate}) {
    ModelConfig cfg = base;
    cfg.atom_update_mode = mode;
    num::ParamStore params;
    net::add_layer_params(params, "p.", cfg, rng);

    Tensor s = rand_tensor(rng, {n, cfg.d_v});
    Tensor e = rand_tensor(rng, {topo.edges(), cfg.d_e});
    std::vector<Tensor> atoms;
    for (std::int64_t i = 0; i < n; ++i) atoms.push_back(rand_tensor(rng, {cfg.d_q, 3}, -2.0, 2.0));

    Tape tape;
    net::LeafMap leaves = net::constant_params(tape, params);
    net::LayerState in{tape.constant(s), tape.constant(e),
                       tape.constant(net::atoms_to_coord_rows(atoms))};
    net::LayerTrace trace;
    net::LayerState got = net::run_layer(tape, topo, cfg, leaves, "p.", in, &trace);

    DenseLayerResult want = ref_dense_layer(topo, cfg, params, "p.", s, e, atoms);

    double atom_diff = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      atom_diff = std::max(
          atom_diff, max_abs_diff(net::coord_rows_to_atoms(tape.value(got.q), i),
                                  want.atoms[static_cast<std::size_t>(i)]));
    }
    if (mode == model::AtomUpdateMode::linear) {
      out.node = max_abs_diff(tape.value(got.s), want.s);
      out.edge = max_abs_diff(tape.value(got.e), want.e);
      out.atoms_linear = atom_diff;

      const Tensor& att = tape.value(trace.attention);
      double row_worst = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        for (int hh = 0; hh < cfg.heads; ++hh) {
          double sum = 0.0;
          for (std::int64_t l = 0; l < topo.list_len; ++l) {
            const double a = att.values[static_cast<std::size_t>((i * topo.list_len + l) * cfg.heads + hh)];
            if (a < 0.0) row_worst = std::max(row_worst, -a);
            sum += a;
          }
          row_worst = std::max(row_worst, std::abs(sum - 1.0));
        }
      }
      out.attention_rows = row_worst;
    } else {
      out.atoms_aggregate = atom_diff;
    }
  }
  return out;
}

PropertyResult check_small_graph_invariance(const ModelConfig& base) {
  double worst = 0.0;
  for (auto mode : {model::AtomUpdateMode::linear, model::AtomUpdateMode::aggregate}) {
    ModelConfig cfg = base;
    cfg.atom_update_mode = mode;
    model::Model m = model::init_model(cfg, 31);
    // The head initializes to zero; seed it so the compared logits are
    // not trivially zero.
    Rng head_rng(30);
    Tensor& head = m.params.at("head.w");
    for (std::int64_t i = 0; i < head.size(); ++i) head[i] = head_rng.uniform(-0.5, 0.5);
    auto s = data::random_backbone(32, 10);
    Tensor base = model::forward_logits(m, model::prepare_inputs(s, cfg));

    Rng rng(33);
    for (int trial = 0; trial < 3; ++trial) {
      const geom::RigidTransform g = geom::random_rigid(rng);
      data::BackboneStructure moved = s;
      for (auto& residue : moved.coords) {
        for (auto& atom : residue) atom = geom::apply(g, atom);
      }
      Tensor logits = model::forward_logits(m, model::prepare_inputs(moved, cfg));
      worst = std::max(worst, max_rel_diff(logits, base));
    }
  }
  return bounded("small-graph forward pass is invariant to rigid motion", worst, 1e-6);
}

PropertyResult check_neighbor_oracle() {
  Rng rng(105);
  const std::int64_t n = 20;
  const int k = 6;
  net::GraphTopology topo = random_topo(rng, n, k);

  PropertyResult r;
  r.name = "neighbor lists match the brute-force distance sort";
  r.passed = true;
  for (std::int64_t i = 0; i < n && r.passed; ++i) {
    std::vector<std::pair<double, std::int64_t>> order;
    for (std::int64_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const geom::Point3 d = topo.ca[static_cast<std::size_t>(j)] - topo.ca[static_cast<std::size_t>(i)];
      order.emplace_back(geom::dot(d, d), j);
    }
    std::sort(order.begin(), order.end());
    if (topo.neighbors[static_cast<std::size_t>(i * topo.list_len)] != i) r.passed = false;
    for (int l = 0; l < k && r.passed; ++l) {
      if (topo.neighbors[static_cast<std::size_t>(i * topo.list_len + 1 + l)] !=
          order[static_cast<std::size_t>(l)].second) {
        r.passed = false;
        r.detail = "node " + std::to_string(i) + ", slot " + std::to_string(l + 1);
      }
    }
  }
  if (r.passed) r.detail = "20 nodes, k=6, all lists identical";
  return r;
}

PropertyResult check_v_mlp_transcription() {
  Rng rng(106);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::int64_t d_q = 1 + static_cast<std::int64_t>(rng.index(12));
    Tensor wc = rand_tensor(rng, {d_q, d_q});
    Tensor wd = rand_tensor(rng, {d_q, d_q});
    Tensor we = rand_tensor(rng, {d_q, d_q});
    Tensor gate = rand_tensor(rng, {d_q, 3});
    Tensor qi = rand_tensor(rng, {d_q, 3}, -3.0, 3.0);
    Tensor qo = rand_tensor(rng, {d_q, 3}, -3.0, 3.0);
    worst = std::max(worst, max_abs_diff(net::v_mlp(wc, wd, we, gate, qi, qo),
                                         ref_v_mlp(wc, wd, we, gate, qi, qo)));
  }
  return bounded("v_mlp matches the per-step transcription (1000 cases)", worst, 1e-12);
}

PropertyResult check_tiny_model_gradients() {
  ModelConfig cfg = small_cfg();
  model::Model m = model::init_model(cfg, 41);
  // A zero head would zero every upstream gradient and make the finite
  // difference comparison vacuous; seed it so gradients flow end to end.
  Rng head_rng(43);
  Tensor& head = m.params.at("head.w");
  for (std::int64_t i = 0; i < head.size(); ++i) head[i] = head_rng.uniform(-0.5, 0.5);
  auto s = data::random_backbone(42, 4);
  model::GraphInputs in = model::prepare_inputs(s, cfg);

  num::GradMap analytic;
  {
    Tape tape;
    net::LeafMap leaves = net::leaf_params(tape, m.params);
    Value loss =
        model::sequence_loss(tape, model::forward_logits(tape, leaves, cfg, in), in.labels);
    tape.backward(loss);
    for (const auto& [name, v] : leaves) analytic.emplace(name, tape.grad(v));
  }
  auto objective = [&]() {
    Tape tape;
    net::LeafMap leaves = net::constant_params(tape, m.params);
    Value loss =
        model::sequence_loss(tape, model::forward_logits(tape, leaves, cfg, in), in.labels);
    return tape.value(loss)[0];
  };
  num::FdReport report = num::fd_check(m.params, analytic, objective, 1e-5);
  PropertyResult r = bounded("tiny-model gradients match central finite differences",
                             report.max_rel_error, 1e-4);
  if (!report.worst_param.empty()) r.detail += ", worst at " + report.worst_param;
  return r;
}

}  // namespace

Level level_from_string(const std::string& s) {
  if (s == "fast") return Level::fast;
  if (s == "full") return Level::full;
  raise(ErrorCode::invalid_argument, "unknown verify level: '" + s + "' (expected fast or full)");
}

std::vector<PropertyResult> run_properties(Level level, const FaultInjection& faults,
                                           const std::optional<ModelConfig>& base) {
  const ModelConfig model_cfg = base.value_or(small_cfg());
  model_cfg.validate();

  std::vector<PropertyResult> out;
  out.push_back(check_vector_field_oracle(faults));
  out.push_back(check_selector_displacements());
  out.push_back(check_v_mlp_gating());
  out.push_back(check_featurize());

  DenseComparison dense = compare_dense(107, model_cfg);
  out.push_back(bounded("node interaction matches the dense per-edge reference", dense.node, 1e-10));
  out.push_back(bounded("edge update matches the dense per-edge reference", dense.edge, 1e-10));
  out.push_back(bounded("atom updates match the dense reference (both modes)",
                        std::max(dense.atoms_linear, dense.atoms_aggregate), 1e-10));
  out.push_back(
      bounded("attention rows are per-head probability distributions", dense.attention_rows, 1e-9));
  out.push_back(check_small_graph_invariance(model_cfg));
  out.push_back(check_neighbor_oracle());

  if (level == Level::full) {
    out.push_back(check_v_mlp_transcription());
    out.push_back(check_tiny_model_gradients());
  }
  return out;
}

bool report(std::ostream& out, const std::vector<PropertyResult>& results) {
  std::size_t passed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) out << ": " << r.detail;
    out << "\n";
    if (r.passed) ++passed;
  }
  out << passed << "/" << results.size() << " properties passed\n";
  if (passed != results.size()) {
    out << "failed:";
    for (const auto& r : results) {
      if (!r.passed) out << " [" << r.name << "]";
    }
    out << "\n";
  }
  return passed == results.size();
}

}  // namespace vfn::verify
