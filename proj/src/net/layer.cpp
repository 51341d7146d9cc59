#include "net/layer.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "common/error.hpp"
#include "num/composites.hpp"

namespace vfn::net {

using model::Activation;
using model::AtomUpdateMode;
using model::ModelConfig;
using num::ParamStore;
using num::Rng;
using num::Shape;
using num::Tape;
using num::Tensor;
using num::Value;

namespace {

constexpr double kMinNorm = 1e-8;
constexpr double kAtomGuard = 1e4;

Tensor normal_init(Rng& rng, Shape shape, double stddev) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
  return t;
}

Value need(const LeafMap& leaves, const std::string& name) {
  auto it = leaves.find(name);
  if (it == leaves.end()) raise(ErrorCode::internal, "missing parameter leaf: " + name);
  return it->second;
}

Value run_mlp2(Tape& tape, const LeafMap& leaves, const std::string& prefix, Value x, Activation a) {
  return mlp2(tape, x, need(leaves, prefix + ".w1"), need(leaves, prefix + ".b1"),
              need(leaves, prefix + ".w2"), need(leaves, prefix + ".b2"), a);
}

}  // namespace

void add_mlp2_params(ParamStore& params, const std::string& prefix, std::int64_t in,
                     std::int64_t hidden, std::int64_t out, Rng& rng) {
  params.add(prefix + ".w1", normal_init(rng, {in, hidden}, 1.0 / std::sqrt(static_cast<double>(in))));
  params.add(prefix + ".b1", Tensor::zeros({1, hidden}));
  params.add(prefix + ".w2",
             normal_init(rng, {hidden, out}, 1.0 / std::sqrt(static_cast<double>(hidden))));
  params.add(prefix + ".b2", Tensor::zeros({1, out}));
}

void add_layer_params(ParamStore& params, const std::string& prefix, const ModelConfig& cfg,
                      Rng& rng) {
  const std::int64_t dq = cfg.d_q, dv = cfg.d_v, de = cfg.d_e, dg = cfg.d_g();
  const double field_std = 1.0 / std::sqrt(static_cast<double>(dq));

  params.add(prefix + "vf.wa", normal_init(rng, {dq, dq}, field_std));
  params.add(prefix + "vf.wb", normal_init(rng, {dq, dq}, field_std));
  add_mlp2_params(params, prefix + "attn", 2 * dv + dg + de, dv, cfg.heads, rng);
  add_mlp2_params(params, prefix + "val", dv + dg + de, dv, dv, rng);
  add_mlp2_params(params, prefix + "out", dv, dv, dv, rng);
  add_mlp2_params(params, prefix + "edge", 2 * dv + dg + de, dv, de, rng);
  if (cfg.atom_update_mode == AtomUpdateMode::linear) {
    params.add(prefix + "atom.w",
               normal_init(rng, {dv, 3 * dq}, 1.0 / std::sqrt(static_cast<double>(dv))));
    params.add(prefix + "atom.b", Tensor::zeros({1, 3 * dq}));
  } else {
    params.add(prefix + "vmlp.wc", normal_init(rng, {dq, dq}, field_std));
    params.add(prefix + "vmlp.wd", normal_init(rng, {dq, dq}, field_std));
    params.add(prefix + "vmlp.we", normal_init(rng, {dq, dq}, field_std));
    Tensor gate = normal_init(rng, {dq, 3}, 1.0);
    for (std::int64_t k = 0; k < dq; ++k) {
      const double len = std::sqrt(gate.at(k, 0) * gate.at(k, 0) + gate.at(k, 1) * gate.at(k, 1) +
                                   gate.at(k, 2) * gate.at(k, 2));
      for (std::int64_t c = 0; c < 3; ++c) gate.at(k, c) /= len;
    }
    params.add(prefix + "vmlp.gate", std::move(gate));
  }
}

LeafMap leaf_params(Tape& tape, const ParamStore& params) {
  LeafMap leaves;
  for (const auto& name : params.names()) leaves.emplace(name, tape.leaf(params.at(name), name));
  return leaves;
}

LeafMap constant_params(Tape& tape, const ParamStore& params) {
  LeafMap leaves;
  for (const auto& name : params.names()) leaves.emplace(name, tape.constant(params.at(name)));
  return leaves;
}

Value activate(Tape& tape, Value x, Activation a) {
  return a == Activation::gelu ? tape.gelu(x) : tape.relu(x);
}

Value mlp2(Tape& tape, Value x, Value w1, Value b1, Value w2, Value b2, Activation a) {
  return num::linear(tape, activate(tape, num::linear(tape, x, w1, b1), a), w2, b2);
}

LayerState run_layer(Tape& tape, const GraphTopology& topo, const ModelConfig& cfg,
                     const LeafMap& leaves, const std::string& prefix, LayerState in,
                     LayerTrace* trace) {
  const std::int64_t n = topo.n, L = topo.list_len, E = topo.edges();
  const std::int64_t dq = cfg.d_q, dv = cfg.d_v, nrbf = cfg.n_rbf, dg = cfg.d_g();
  const std::int64_t heads = cfg.heads, dh = cfg.head_width();
  const Activation act = cfg.activation;

  // Edge-indexed gather tables.
  std::vector<std::int64_t> src_rows(static_cast<std::size_t>(E));
  std::vector<std::int64_t> dst_rows(static_cast<std::size_t>(E));
  std::vector<std::int64_t> src3(static_cast<std::size_t>(3 * E));
  std::vector<std::int64_t> interleave(static_cast<std::size_t>(3 * E));
  std::vector<std::int64_t> edge_of_row3(static_cast<std::size_t>(3 * E));
  std::array<std::vector<std::int64_t>, 3> dst3;
  for (auto& v : dst3) v.resize(static_cast<std::size_t>(E));
  for (std::int64_t e = 0; e < E; ++e) {
    const std::int64_t i = topo.src(e), j = topo.dst(e);
    src_rows[static_cast<std::size_t>(e)] = i;
    dst_rows[static_cast<std::size_t>(e)] = j;
    for (std::int64_t c = 0; c < 3; ++c) {
      src3[static_cast<std::size_t>(3 * e + c)] = 3 * i + c;
      interleave[static_cast<std::size_t>(3 * e + c)] = c * E + e;
      edge_of_row3[static_cast<std::size_t>(3 * e + c)] = e;
      dst3[static_cast<std::size_t>(c)][static_cast<std::size_t>(e)] = 3 * j + c;
    }
  }

  // K_j = T_{i<-j} ∘ Q_j, batched: the 3x3 rotation entries and the
  // translation are per-edge constants of the topology.
  std::array<Value, 3> qj;
  for (std::int64_t c = 0; c < 3; ++c) {
    qj[static_cast<std::size_t>(c)] = tape.gather_rows(in.q, dst3[static_cast<std::size_t>(c)]);
  }
  std::array<Value, 3> k_rows;
  for (std::int64_t c = 0; c < 3; ++c) {
    std::array<Tensor, 3> rot{Tensor::zeros({E, dq}), Tensor::zeros({E, dq}), Tensor::zeros({E, dq})};
    Tensor trans = Tensor::zeros({E, dq});
    for (std::int64_t e = 0; e < E; ++e) {
      const auto& rel = topo.rel[static_cast<std::size_t>(e)];
      const double tc = c == 0 ? rel.t.x : (c == 1 ? rel.t.y : rel.t.z);
      for (std::int64_t cp = 0; cp < 3; ++cp) {
        const double r = rel.r[static_cast<std::size_t>(3 * c + cp)];
        for (std::int64_t a = 0; a < dq; ++a) rot[static_cast<std::size_t>(cp)].at(e, a) = r;
      }
      for (std::int64_t a = 0; a < dq; ++a) trans.at(e, a) = tc;
    }
    Value acc = tape.constant(std::move(trans));
    for (std::int64_t cp = 0; cp < 3; ++cp) {
      acc = tape.add(acc, tape.multiply(tape.constant(std::move(rot[static_cast<std::size_t>(cp)])),
                                        qj[static_cast<std::size_t>(cp)]));
    }
    k_rows[static_cast<std::size_t>(c)] = acc;
  }
  Value k_stack = tape.gather_rows(tape.concat(std::span<const Value>(k_rows), 0), interleave);
  Value qi_stack = tape.gather_rows(in.q, src3);

  // H = Qi·waᵀ + K·wbᵀ, coordinate-major form of wa·qi + wb·kj.
  Value h = tape.add(tape.matmul(qi_stack, transpose2d(tape, need(leaves, prefix + "vf.wa"))),
                     tape.matmul(k_stack, transpose2d(tape, need(leaves, prefix + "vf.wb"))));

  // Featurization: per (edge, atom) unit direction + RBF of the length.
  Value sq = tape.sum_axis(tape.reshape(tape.multiply(h, h), {E, 3, dq}), 1);
  MaskedNorms mn = masked_sqrt(tape, sq, kMinNorm);
  Value norms3 = tape.gather_rows(mn.norms, edge_of_row3);
  Tensor mask3 = Tensor::zeros({3 * E, dq});
  for (std::int64_t e = 0; e < E; ++e) {
    for (std::int64_t c = 0; c < 3; ++c) {
      for (std::int64_t a = 0; a < dq; ++a) mask3.at(3 * e + c, a) = mn.mask.at(e, a);
    }
  }
  Value dirs = tape.multiply(tape.divide(h, norms3), tape.constant(std::move(mask3)));

  const RbfBank bank{static_cast<int>(nrbf), 0.0, 50.0};
  const std::int64_t lanes = E * dq;
  std::vector<std::int64_t> bcast(static_cast<std::size_t>(lanes * nrbf));
  Tensor neg_centers = Tensor::zeros({lanes, nrbf});
  for (std::int64_t r = 0; r < lanes; ++r) {
    for (std::int64_t m = 0; m < nrbf; ++m) {
      bcast[static_cast<std::size_t>(r * nrbf + m)] = r;
      neg_centers.at(r, m) = -bank.center(static_cast<int>(m));
    }
  }
  Value lengths = permute_elements(tape, mn.masked_norms, std::move(bcast), {lanes, nrbf});
  Value z = tape.add(lengths, tape.constant(std::move(neg_centers)));
  Value rbf = num::exp_nonpos(
      tape, tape.scalar_scale(tape.multiply(z, z), -1.0 / (2.0 * bank.sigma() * bank.sigma())));

  const std::int64_t block = 3 + nrbf;
  std::vector<std::int64_t> g_idx(static_cast<std::size_t>(E * dg));
  for (std::int64_t e = 0; e < E; ++e) {
    for (std::int64_t a = 0; a < dq; ++a) {
      for (std::int64_t t = 0; t < block; ++t) {
        const std::int64_t pos = e * dg + a * block + t;
        g_idx[static_cast<std::size_t>(pos)] =
            t < 3 ? (3 * e + t) * dq + a : 3 * E * dq + (e * dq + a) * nrbf + (t - 3);
      }
    }
  }
  Value dirs_flat = tape.reshape(dirs, {3 * E * dq, 1});
  Value rbf_flat = tape.reshape(rbf, {lanes * nrbf, 1});
  const std::array<Value, 2> feature_parts{dirs_flat, rbf_flat};
  Value g = permute_elements(tape, tape.concat(std::span<const Value>(feature_parts), 0),
                             std::move(g_idx), {E, dg});

  // Node attention: logits per head, softmax over each node's list.
  Value s_i = tape.gather_rows(in.s, src_rows);
  Value s_j = tape.gather_rows(in.s, dst_rows);
  const std::array<Value, 4> attn_parts{s_i, s_j, g, in.e};
  Value logits = run_mlp2(tape, leaves, prefix + "attn",
                          tape.concat(std::span<const Value>(attn_parts), 1), act);
  Value attention = tape.softmax_axis(tape.reshape(logits, {n, L, heads}), 1);

  const std::array<Value, 3> val_parts{s_j, g, in.e};
  Value values =
      run_mlp2(tape, leaves, prefix + "val", tape.concat(std::span<const Value>(val_parts), 1), act);
  std::vector<std::int64_t> head_expand(static_cast<std::size_t>(E * dv));
  for (std::int64_t e = 0; e < E; ++e) {
    for (std::int64_t col = 0; col < dv; ++col) {
      head_expand[static_cast<std::size_t>(e * dv + col)] = e * heads + col / dh;
    }
  }
  Value weighted = tape.multiply(values, permute_elements(tape, attention, std::move(head_expand),
                                                          {E, dv}));
  Value message = tape.sum_axis(tape.reshape(weighted, {n, L, dv}), 1);
  Value s_new = tape.add(in.s, run_mlp2(tape, leaves, prefix + "out", message, act));

  // Edge update reads the refreshed node features.
  Value s_i2 = tape.gather_rows(s_new, src_rows);
  Value s_j2 = tape.gather_rows(s_new, dst_rows);
  const std::array<Value, 4> edge_parts{s_i2, s_j2, g, in.e};
  Value e_new = tape.add(in.e, run_mlp2(tape, leaves, prefix + "edge",
                                        tape.concat(std::span<const Value>(edge_parts), 1), act));

  Value q_new;
  if (cfg.atom_update_mode == AtomUpdateMode::linear) {
    Value lin = num::linear(tape, s_new, need(leaves, prefix + "atom.w"),
                            need(leaves, prefix + "atom.b"));
    std::vector<std::int64_t> to_rows(static_cast<std::size_t>(3 * n * dq));
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t c = 0; c < 3; ++c) {
        for (std::int64_t a = 0; a < dq; ++a) {
          to_rows[static_cast<std::size_t>((3 * i + c) * dq + a)] = i * 3 * dq + a * 3 + c;
        }
      }
    }
    q_new = permute_elements(tape, lin, std::move(to_rows), {3 * n, dq});
  } else {
    // Head-averaged attention aggregates the transformed atoms, then the
    // vector perceptron replaces the coordinates.
    Value abar = tape.scalar_scale(tape.sum_axis(attention, 2), 1.0 / static_cast<double>(heads));
    std::vector<std::int64_t> abar_expand(static_cast<std::size_t>(3 * E * dq));
    for (std::int64_t e = 0; e < E; ++e) {
      for (std::int64_t c = 0; c < 3; ++c) {
        for (std::int64_t a = 0; a < dq; ++a) {
          abar_expand[static_cast<std::size_t>((3 * e + c) * dq + a)] = e;
        }
      }
    }
    Value k_weighted =
        tape.multiply(k_stack, permute_elements(tape, abar, std::move(abar_expand), {3 * E, dq}));
    Value q_o = tape.reshape(tape.sum_axis(tape.reshape(k_weighted, {n, L, 3 * dq}), 1), {3 * n, dq});

    Value v = tape.add(tape.matmul(in.q, transpose2d(tape, need(leaves, prefix + "vmlp.wc"))),
                       tape.matmul(q_o, transpose2d(tape, need(leaves, prefix + "vmlp.wd"))));
    Value gate = need(leaves, prefix + "vmlp.gate");
    std::vector<std::int64_t> gate_expand(static_cast<std::size_t>(3 * n * dq));
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t c = 0; c < 3; ++c) {
        for (std::int64_t a = 0; a < dq; ++a) {
          gate_expand[static_cast<std::size_t>((3 * i + c) * dq + a)] = a * 3 + c;
        }
      }
    }
    Value gate3 = permute_elements(tape, gate, std::move(gate_expand), {3 * n, dq});
    Value dots = tape.sum_axis(tape.reshape(tape.multiply(v, gate3), {n, 3, dq}), 1);
    MaskedNorms vn =
        masked_sqrt(tape, tape.sum_axis(tape.reshape(tape.multiply(v, v), {n, 3, dq}), 1), kMinNorm);
    MaskedNorms wn = masked_sqrt(tape, tape.sum_axis(tape.multiply(gate, gate), 1), kMinNorm);
    std::vector<std::int64_t> wn_expand(static_cast<std::size_t>(n * dq));
    Tensor joint = Tensor::zeros({n, dq});
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t a = 0; a < dq; ++a) {
        wn_expand[static_cast<std::size_t>(i * dq + a)] = a;
        joint.at(i, a) = vn.mask.at(i, a) * wn.mask[a];
      }
    }
    Value wn_b = permute_elements(tape, wn.norms, std::move(wn_expand), {n, dq});
    Value cos = tape.multiply(tape.divide(dots, tape.multiply(vn.norms, wn_b)),
                              tape.constant(std::move(joint)));
    std::vector<std::int64_t> cos_rows(static_cast<std::size_t>(3 * n));
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t c = 0; c < 3; ++c) cos_rows[static_cast<std::size_t>(3 * i + c)] = i;
    }
    Value u = tape.multiply(v, tape.gather_rows(cos, std::move(cos_rows)));
    q_new = tape.matmul(u, transpose2d(tape, need(leaves, prefix + "vmlp.we")));
  }

  const Tensor& q_vals = tape.value(q_new);
  for (std::int64_t i = 0; i < q_vals.size(); ++i) {
    if (std::abs(q_vals[i]) > kAtomGuard) {
      raise(ErrorCode::numeric, "virtual atom coordinate exceeds 1e4: layer " + prefix);
    }
  }

  if (trace != nullptr) {
    trace->g = g;
    trace->attention = attention;
  }
  return LayerState{s_new, e_new, q_new};
}

Tensor atoms_to_coord_rows(const std::vector<Tensor>& per_node_atoms) {
  const auto n = static_cast<std::int64_t>(per_node_atoms.size());
  if (n == 0) raise(ErrorCode::invalid_argument, "atoms_to_coord_rows: no nodes");
  const std::int64_t dq = per_node_atoms[0].dim(0);
  Tensor out = Tensor::zeros({3 * n, dq});
  for (std::int64_t i = 0; i < n; ++i) {
    const Tensor& atoms = per_node_atoms[static_cast<std::size_t>(i)];
    if (atoms.rank() != 2 || atoms.dim(0) != dq || atoms.dim(1) != 3) {
      raise(ErrorCode::shape_mismatch,
            "atoms_to_coord_rows: expected [d_q,3], got " + num::shape_str(atoms.shape));
    }
    for (std::int64_t a = 0; a < dq; ++a) {
      for (std::int64_t c = 0; c < 3; ++c) out.at(3 * i + c, a) = atoms.at(a, c);
    }
  }
  return out;
}

Tensor coord_rows_to_atoms(const Tensor& q, std::int64_t node) {
  const std::int64_t dq = q.dim(1);
  Tensor out = Tensor::zeros({dq, 3});
  for (std::int64_t a = 0; a < dq; ++a) {
    for (std::int64_t c = 0; c < 3; ++c) out.at(a, c) = q.at(3 * node + c, a);
  }
  return out;
}

}  // namespace vfn::net
