#include "model/network.hpp"

#include <array>
#include <cmath>
#include <span>
#include <utility>

#include "common/error.hpp"
#include "num/composites.hpp"

namespace vfn::model {

using net::LeafMap;
using num::Tape;
using num::Tensor;
using num::Value;

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m{cfg, {}};
  num::Rng rng(seed);

  Tensor embed = Tensor::zeros({1, cfg.d_v});
  for (std::int64_t i = 0; i < embed.size(); ++i) embed[i] = rng.normal(0.0, 0.1);
  m.params.add("embed", std::move(embed));

  Tensor free_atoms = Tensor::zeros({cfg.d_q - 4, 3});
  for (std::int64_t i = 0; i < free_atoms.size(); ++i) free_atoms[i] = rng.normal(0.0, 1.0);
  m.params.add("free_atoms", std::move(free_atoms));

  for (int layer = 0; layer < cfg.n_layers; ++layer) {
    const std::string idx = std::to_string(layer);
    net::add_layer_params(m.params, "layer" + idx + ".", cfg, rng);
    net::add_mlp2_params(m.params, "gca" + idx, cfg.d_v, cfg.d_v, cfg.d_v, rng);
  }

  m.params.add("head.w", Tensor::zeros({cfg.d_v, data::kNumAminoAcids}));
  m.params.add("head.b", Tensor::zeros({1, data::kNumAminoAcids}));
  return m;
}

Value initial_atoms(Tape& tape, Value free_atoms, const GraphInputs& in, const ModelConfig& cfg) {
  const std::int64_t n = in.topo.n;
  const std::int64_t free = cfg.d_q - 4;
  std::vector<std::int64_t> broadcast(static_cast<std::size_t>(3 * n * free));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t c = 0; c < 3; ++c) {
      for (std::int64_t a = 0; a < free; ++a) {
        broadcast[static_cast<std::size_t>((3 * i + c) * free + a)] = a * 3 + c;
      }
    }
  }
  Value shared = net::permute_elements(tape, free_atoms, std::move(broadcast), {3 * n, free});
  const std::array<Value, 2> parts{tape.constant(in.backbone_local), shared};
  return tape.concat(std::span<const Value>(parts), 1);
}

Value global_context(Tape& tape, const LeafMap& leaves, const std::string& prefix, Value s,
                     const ModelConfig& cfg) {
  const std::int64_t n = tape.value(s).dim(0);
  Value c = num::mean_rows(tape, s);
  Value gate = num::sigmoid(
      tape, net::mlp2(tape, c, leaves.at(prefix + ".w1"), leaves.at(prefix + ".b1"),
                      leaves.at(prefix + ".w2"), leaves.at(prefix + ".b2"), cfg.activation));
  return tape.multiply(s, num::row_broadcast(tape, gate, n));
}

Value forward_logits(Tape& tape, const LeafMap& leaves, const ModelConfig& cfg,
                     const GraphInputs& in) {
  net::LayerState state;
  state.s = num::row_broadcast(tape, leaves.at("embed"), in.topo.n);
  state.e = tape.constant(in.edge_init);
  state.q = initial_atoms(tape, leaves.at("free_atoms"), in, cfg);
  for (int layer = 0; layer < cfg.n_layers; ++layer) {
    const std::string idx = std::to_string(layer);
    state = net::run_layer(tape, in.topo, cfg, leaves, "layer" + idx + ".", state);
    state.s = global_context(tape, leaves, "gca" + idx, state.s, cfg);
  }
  return num::linear(tape, state.s, leaves.at("head.w"), leaves.at("head.b"));
}

Tensor forward_logits(const Model& m, const GraphInputs& in) {
  Tape tape;
  LeafMap leaves = net::constant_params(tape, m.params);
  net::LayerState state;
  state.s = num::row_broadcast(tape, leaves.at("embed"), in.topo.n);
  state.e = tape.constant(in.edge_init);
  state.q = initial_atoms(tape, leaves.at("free_atoms"), in, m.cfg);
  for (int layer = 0; layer < m.cfg.n_layers; ++layer) {
    const std::string idx = std::to_string(layer);
    state = net::run_layer(tape, in.topo, m.cfg, leaves, "layer" + idx + ".", state);
    state.s = global_context(tape, leaves, "gca" + idx, state.s, m.cfg);

    // Truncate: carry the values across a fresh tape so memory stays
    // bounded by one layer's graph.
    Tensor s_val = tape.value(state.s);
    Tensor e_val = tape.value(state.e);
    Tensor q_val = tape.value(state.q);
    tape.clear();
    leaves = net::constant_params(tape, m.params);
    state.s = tape.constant(std::move(s_val));
    state.e = tape.constant(std::move(e_val));
    state.q = tape.constant(std::move(q_val));
  }
  Value logits = num::linear(tape, state.s, leaves.at("head.w"), leaves.at("head.b"));
  return tape.value(logits);
}

Prediction predict(const Model& m, const data::BackboneStructure& s) {
  GraphInputs in = prepare_inputs(s, m.cfg);
  Prediction p;
  p.logits = forward_logits(m, in);
  p.predicted.reserve(static_cast<std::size_t>(in.topo.n));
  for (std::int64_t i = 0; i < in.topo.n; ++i) {
    int best = 0;
    for (int c = 1; c < data::kNumAminoAcids; ++c) {
      if (p.logits.at(i, c) > p.logits.at(i, best)) best = c;
    }
    p.predicted.push_back(best);
  }
  return p;
}

Value sequence_loss(Tape& tape, Value logits, const std::vector<int>& labels) {
  if (tape.value(logits).dim(0) != static_cast<std::int64_t>(labels.size())) {
    raise(ErrorCode::shape_mismatch,
          "sequence_loss: " + std::to_string(labels.size()) + " labels for " +
              num::shape_str(tape.value(logits).shape) + " logits");
  }
  return tape.cross_entropy_logits(logits, labels);
}

Metrics compute_metrics(const Tensor& logits, const std::vector<int>& labels) {
  const std::int64_t n = logits.dim(0);
  if (n != static_cast<std::int64_t>(labels.size())) {
    raise(ErrorCode::shape_mismatch, "compute_metrics: label count does not match logits");
  }
  Metrics out;
  double ce_sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0) continue;
    if (label >= data::kNumAminoAcids) {
      raise(ErrorCode::invalid_argument,
            "compute_metrics: label " + std::to_string(label) + " outside [0,20)");
    }
    double mx = logits.at(i, 0);
    int best = 0;
    for (int c = 1; c < data::kNumAminoAcids; ++c) {
      if (logits.at(i, c) > mx) {
        mx = logits.at(i, c);
        best = c;
      }
    }
    double z = 0.0;
    for (int c = 0; c < data::kNumAminoAcids; ++c) z += std::exp(logits.at(i, c) - mx);
    ce_sum += std::log(z) - (logits.at(i, label) - mx);
    ++out.labeled;
    if (best == label) ++out.matched;
  }
  if (out.labeled == 0) {
    raise(ErrorCode::invalid_argument, "compute_metrics: no labeled residues");
  }
  out.perplexity = std::exp(ce_sum / static_cast<double>(out.labeled));
  out.recovery_percent =
      100.0 * static_cast<double>(out.matched) / static_cast<double>(out.labeled);
  return out;
}

}  // namespace vfn::model
