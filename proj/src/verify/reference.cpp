#include "verify/reference.hpp"

#include <cmath>

#include "common/error.hpp"

namespace vfn::verify {

using model::Activation;
using model::AtomUpdateMode;
using model::ModelConfig;
using num::ParamStore;
using num::Tensor;

namespace {

double ref_act(double x, Activation a) {
  if (a == Activation::relu) return x > 0.0 ? x : 0.0;
  return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

/// y = act(x·w1 + b1)·w2 + b2 over a single row vector x.
std::vector<double> ref_mlp2(const std::vector<double>& x, const Tensor& w1, const Tensor& b1,
                             const Tensor& w2, const Tensor& b2, Activation a) {
  const std::int64_t hidden = w1.dim(1), out = w2.dim(1);
  std::vector<double> h(static_cast<std::size_t>(hidden), 0.0);
  for (std::int64_t j = 0; j < hidden; ++j) {
    double acc = b1.at(0, j);
    for (std::int64_t i = 0; i < w1.dim(0); ++i) acc += x[static_cast<std::size_t>(i)] * w1.at(i, j);
    h[static_cast<std::size_t>(j)] = ref_act(acc, a);
  }
  std::vector<double> y(static_cast<std::size_t>(out), 0.0);
  for (std::int64_t j = 0; j < out; ++j) {
    double acc = b2.at(0, j);
    for (std::int64_t i = 0; i < hidden; ++i) acc += h[static_cast<std::size_t>(i)] * w2.at(i, j);
    y[static_cast<std::size_t>(j)] = acc;
  }
  return y;
}

std::vector<double> concat_rows(std::initializer_list<std::vector<double>> parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<double> tensor_row(const Tensor& t, std::int64_t r) {
  std::vector<double> out(static_cast<std::size_t>(t.dim(1)));
  for (std::int64_t c = 0; c < t.dim(1); ++c) out[static_cast<std::size_t>(c)] = t.at(r, c);
  return out;
}

}  // namespace

Tensor ref_vector_field(const Tensor& wa, const Tensor& wb, const Tensor& qi, const Tensor& kj) {
  const std::int64_t dq = qi.dim(0);
  Tensor h = Tensor::zeros({dq, 3});
  for (std::int64_t k = 0; k < dq; ++k) {
    for (std::int64_t c = 0; c < 3; ++c) {
      double from_qi = 0.0;
      for (std::int64_t l = 0; l < dq; ++l) from_qi += wa.at(k, l) * qi.at(l, c);
      double from_kj = 0.0;
      for (std::int64_t l = 0; l < dq; ++l) from_kj += wb.at(k, l) * kj.at(l, c);
      h.at(k, c) = from_qi + from_kj;
    }
  }
  return h;
}

Tensor ref_v_mlp(const Tensor& wc, const Tensor& wd, const Tensor& we, const Tensor& gate,
                 const Tensor& qi, const Tensor& qo) {
  const std::int64_t dq = qi.dim(0);
  Tensor v = Tensor::zeros({dq, 3});
  for (std::int64_t k = 0; k < dq; ++k) {
    for (std::int64_t c = 0; c < 3; ++c) {
      double from_qi = 0.0;
      for (std::int64_t l = 0; l < dq; ++l) from_qi += wc.at(k, l) * qi.at(l, c);
      double from_qo = 0.0;
      for (std::int64_t l = 0; l < dq; ++l) from_qo += wd.at(k, l) * qo.at(l, c);
      v.at(k, c) = from_qi + from_qo;
    }
  }
  Tensor u = Tensor::zeros({dq, 3});
  for (std::int64_t k = 0; k < dq; ++k) {
    const double wn = std::sqrt(gate.at(k, 0) * gate.at(k, 0) + gate.at(k, 1) * gate.at(k, 1) +
                                gate.at(k, 2) * gate.at(k, 2));
    const double vn =
        std::sqrt(v.at(k, 0) * v.at(k, 0) + v.at(k, 1) * v.at(k, 1) + v.at(k, 2) * v.at(k, 2));
    double cos = 0.0;
    if (wn > 1e-8 && vn > 1e-8) {
      const double dot =
          gate.at(k, 0) * v.at(k, 0) + gate.at(k, 1) * v.at(k, 1) + gate.at(k, 2) * v.at(k, 2);
      cos = dot / (wn * vn);
    }
    for (std::int64_t c = 0; c < 3; ++c) u.at(k, c) = cos * v.at(k, c);
  }
  Tensor out = Tensor::zeros({dq, 3});
  for (std::int64_t m = 0; m < dq; ++m) {
    for (std::int64_t c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < dq; ++k) acc += we.at(m, k) * u.at(k, c);
      out.at(m, c) = acc;
    }
  }
  return out;
}

Tensor ref_featurize(const Tensor& h, const net::RbfBank& bank) {
  const std::int64_t dq = h.dim(0);
  Tensor g = Tensor::zeros({1, dq * (3 + bank.n)});
  std::int64_t cursor = 0;
  for (std::int64_t k = 0; k < dq; ++k) {
    const double x = h.at(k, 0), y = h.at(k, 1), z = h.at(k, 2);
    const double len = std::sqrt(x * x + y * y + z * z);
    if (len > 1e-8) {
      g[cursor] = x / len;
      g[cursor + 1] = y / len;
      g[cursor + 2] = z / len;
    }
    cursor += 3;
    const double d = len > 1e-8 ? len : 0.0;
    for (int m = 0; m < bank.n; ++m) {
      const double zd = d - bank.center(m);
      g[cursor++] = std::exp(-zd * zd / (2.0 * bank.sigma() * bank.sigma()));
    }
  }
  return g;
}

DenseLayerResult ref_dense_layer(const net::GraphTopology& topo, const ModelConfig& cfg,
                                 const ParamStore& params, const std::string& prefix,
                                 const Tensor& s, const Tensor& e,
                                 const std::vector<Tensor>& atoms) {
  const std::int64_t n = topo.n, L = topo.list_len, E = topo.edges();
  const std::int64_t dq = cfg.d_q, dv = cfg.d_v, dg = cfg.d_g();
  const std::int64_t heads = cfg.heads, dh = cfg.head_width();
  const net::RbfBank bank{cfg.n_rbf, 0.0, 50.0};
  const auto p = [&](const char* name) -> const Tensor& { return params.at(prefix + name); };

  DenseLayerResult out;
  out.g = Tensor::zeros({E, dg});
  out.attention = Tensor::zeros({n, L, heads});

  std::vector<Tensor> k_atoms;
  k_atoms.reserve(static_cast<std::size_t>(E));
  for (std::int64_t edge = 0; edge < E; ++edge) {
    const std::int64_t i = topo.src(edge), j = topo.dst(edge);
    const geom::RigidTransform rel =
        geom::relative_transform(topo.frames[static_cast<std::size_t>(i)],
                                 topo.frames[static_cast<std::size_t>(j)]);
    const Tensor& qj = atoms[static_cast<std::size_t>(j)];
    Tensor k = Tensor::zeros({dq, 3});
    for (std::int64_t a = 0; a < dq; ++a) {
      const geom::Point3 mapped = geom::apply(rel, {qj.at(a, 0), qj.at(a, 1), qj.at(a, 2)});
      k.at(a, 0) = mapped.x;
      k.at(a, 1) = mapped.y;
      k.at(a, 2) = mapped.z;
    }
    Tensor h = ref_vector_field(p("vf.wa"), p("vf.wb"), atoms[static_cast<std::size_t>(i)], k);
    Tensor g_edge = ref_featurize(h, bank);
    for (std::int64_t c = 0; c < dg; ++c) out.g.at(edge, c) = g_edge[c];
    k_atoms.push_back(std::move(k));
  }

  // Attention logits and per-head softmax over each node's list.
  Tensor values = Tensor::zeros({E, dv});
  for (std::int64_t i = 0; i < n; ++i) {
    Tensor logits = Tensor::zeros({L, heads});
    for (std::int64_t l = 0; l < L; ++l) {
      const std::int64_t edge = i * L + l;
      const std::int64_t j = topo.dst(edge);
      const auto attn_in = concat_rows(
          {tensor_row(s, i), tensor_row(s, j), tensor_row(out.g, edge), tensor_row(e, edge)});
      const auto row =
          ref_mlp2(attn_in, p("attn.w1"), p("attn.b1"), p("attn.w2"), p("attn.b2"), cfg.activation);
      for (std::int64_t hh = 0; hh < heads; ++hh) logits.at(l, hh) = row[static_cast<std::size_t>(hh)];
      const auto val_in =
          concat_rows({tensor_row(s, j), tensor_row(out.g, edge), tensor_row(e, edge)});
      const auto val =
          ref_mlp2(val_in, p("val.w1"), p("val.b1"), p("val.w2"), p("val.b2"), cfg.activation);
      for (std::int64_t c = 0; c < dv; ++c) values.at(edge, c) = val[static_cast<std::size_t>(c)];
    }
    for (std::int64_t hh = 0; hh < heads; ++hh) {
      double mx = logits.at(0, hh);
      for (std::int64_t l = 1; l < L; ++l) mx = std::max(mx, logits.at(l, hh));
      double z = 0.0;
      for (std::int64_t l = 0; l < L; ++l) z += std::exp(logits.at(l, hh) - mx);
      for (std::int64_t l = 0; l < L; ++l) {
        out.attention.values[static_cast<std::size_t>((i * L + l) * heads + hh)] =
            std::exp(logits.at(l, hh) - mx) / z;
      }
    }
  }

  out.s = Tensor::zeros({n, dv});
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<double> o(static_cast<std::size_t>(dv), 0.0);
    for (std::int64_t l = 0; l < L; ++l) {
      const std::int64_t edge = i * L + l;
      for (std::int64_t hh = 0; hh < heads; ++hh) {
        const double a = out.attention.values[static_cast<std::size_t>(edge * heads + hh)];
        for (std::int64_t u = 0; u < dh; ++u) {
          o[static_cast<std::size_t>(hh * dh + u)] += a * values.at(edge, hh * dh + u);
        }
      }
    }
    const auto upd = ref_mlp2(o, p("out.w1"), p("out.b1"), p("out.w2"), p("out.b2"), cfg.activation);
    for (std::int64_t c = 0; c < dv; ++c) out.s.at(i, c) = s.at(i, c) + upd[static_cast<std::size_t>(c)];
  }

  out.e = Tensor::zeros({E, cfg.d_e});
  for (std::int64_t edge = 0; edge < E; ++edge) {
    const std::int64_t i = topo.src(edge), j = topo.dst(edge);
    const auto edge_in = concat_rows(
        {tensor_row(out.s, i), tensor_row(out.s, j), tensor_row(out.g, edge), tensor_row(e, edge)});
    const auto upd =
        ref_mlp2(edge_in, p("edge.w1"), p("edge.b1"), p("edge.w2"), p("edge.b2"), cfg.activation);
    for (std::int64_t c = 0; c < cfg.d_e; ++c) {
      out.e.at(edge, c) = e.at(edge, c) + upd[static_cast<std::size_t>(c)];
    }
  }

  out.atoms.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    Tensor q = Tensor::zeros({dq, 3});
    if (cfg.atom_update_mode == AtomUpdateMode::linear) {
      const Tensor& w = p("atom.w");
      const Tensor& b = p("atom.b");
      for (std::int64_t a = 0; a < dq; ++a) {
        for (std::int64_t c = 0; c < 3; ++c) {
          double acc = b.at(0, a * 3 + c);
          for (std::int64_t u = 0; u < dv; ++u) acc += out.s.at(i, u) * w.at(u, a * 3 + c);
          q.at(a, c) = acc;
        }
      }
    } else {
      Tensor q_o = Tensor::zeros({dq, 3});
      for (std::int64_t l = 0; l < L; ++l) {
        const std::int64_t edge = i * L + l;
        double abar = 0.0;
        for (std::int64_t hh = 0; hh < heads; ++hh) {
          abar += out.attention.values[static_cast<std::size_t>(edge * heads + hh)];
        }
        abar /= static_cast<double>(heads);
        const Tensor& k = k_atoms[static_cast<std::size_t>(edge)];
        for (std::int64_t a = 0; a < dq; ++a) {
          for (std::int64_t c = 0; c < 3; ++c) q_o.at(a, c) += abar * k.at(a, c);
        }
      }
      q = ref_v_mlp(p("vmlp.wc"), p("vmlp.wd"), p("vmlp.we"), p("vmlp.gate"),
                    atoms[static_cast<std::size_t>(i)], q_o);
    }
    out.atoms.push_back(std::move(q));
  }
  return out;
}

}  // namespace vfn::verify
