#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "common/error.hpp"
#include "data/synthetic.hpp"
#include "model/checkpoint.hpp"
#include "model/config_io.hpp"
#include "model/inputs.hpp"
#include "model/network.hpp"
#include "model/train.hpp"
#include "net/layer.hpp"
#include "net/rbf.hpp"
#include "num/composites.hpp"
#include "num/optim.hpp"
#include "num/rng.hpp"

using namespace vfn;
using model::GraphInputs;
using model::Model;
using model::ModelConfig;
using num::Rng;
using num::Tape;
using num::Tensor;
using num::Value;

namespace {

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_q = 6;
  cfg.d_v = 16;
  cfg.d_e = 8;
  cfg.heads = 2;
  cfg.n_rbf = 4;
  cfg.knn_k = 3;
  return cfg;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape == b.shape);
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_rel_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape == b.shape);
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]) / (std::abs(b[i]) + 1e-12));
  }
  return m;
}

data::BackboneStructure transformed(const data::BackboneStructure& s,
                                    const geom::RigidTransform& g) {
  data::BackboneStructure out = s;
  for (auto& residue : out.coords) {
    for (auto& atom : residue) atom = geom::apply(g, atom);
  }
  return out;
}

data::BackboneStructure permuted(const data::BackboneStructure& s,
                                 const std::vector<std::size_t>& perm) {
  data::BackboneStructure out = s;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.sequence[i] = s.sequence[perm[i]];
    out.coords[i] = s.coords[perm[i]];
    out.flags[i] = s.flags[perm[i]];
  }
  return out;
}

std::filesystem::path fresh_dir(const std::string& leaf) {
  auto dir = std::filesystem::temp_directory_path() / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("input preparation expresses the backbone in residue frames") {
  auto s = data::random_backbone(11, 6);
  ModelConfig cfg = tiny_cfg();
  GraphInputs in = model::prepare_inputs(s, cfg);

  REQUIRE(in.backbone_local.shape == num::Shape{18, 4});
  REQUIRE(in.topo.n == 6);
  for (std::int64_t i = 0; i < 6; ++i) {
    // CA maps to the exact origin, C to the +x axis, N into the xy plane.
    for (std::int64_t c = 0; c < 3; ++c) CHECK(in.backbone_local.at(3 * i + c, data::kCA) == 0.0);
    CHECK(in.backbone_local.at(3 * i + 0, data::kC) > 0.0);
    CHECK(std::abs(in.backbone_local.at(3 * i + 1, data::kC)) <= 1e-9);
    CHECK(std::abs(in.backbone_local.at(3 * i + 2, data::kC)) <= 1e-9);
    CHECK(in.backbone_local.at(3 * i + 1, data::kN) > 0.0);
    CHECK(std::abs(in.backbone_local.at(3 * i + 2, data::kN)) <= 1e-9);

    // Mapping local coordinates back through the frame recovers the input.
    const auto& frame = in.topo.frames[static_cast<std::size_t>(i)];
    for (int a = 0; a < 4; ++a) {
      geom::Point3 local{in.backbone_local.at(3 * i + 0, a), in.backbone_local.at(3 * i + 1, a),
                         in.backbone_local.at(3 * i + 2, a)};
      geom::Point3 back = geom::apply(frame, local);
      geom::Point3 want = s.coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
      CHECK(geom::norm(back - want) <= 1e-9);
    }
  }
}

TEST_CASE("input preparation: edge features and masked labels") {
  auto s = data::random_backbone(12, 7);
  s.sequence[2] = data::kMaskToken;
  ModelConfig cfg = tiny_cfg();

  GraphInputs plain = model::prepare_inputs(s, cfg);
  CHECK(plain.edge_init.shape == num::Shape{plain.topo.edges(), cfg.d_e});
  double mx = 0.0;
  for (std::int64_t i = 0; i < plain.edge_init.size(); ++i)
    mx = std::max(mx, std::abs(plain.edge_init[i]));
  CHECK(mx == 0.0);

  CHECK(plain.labels[2] == -1);
  for (std::size_t i = 0; i < plain.labels.size(); ++i) {
    if (i != 2) CHECK(plain.labels[i] == s.sequence[i]);
  }

  cfg.use_edge_featurizer = true;
  GraphInputs feat = model::prepare_inputs(s, cfg);
  const net::RbfBank bank{cfg.n_rbf, 0.0, 50.0};
  for (std::int64_t e = 0; e < feat.topo.edges(); ++e) {
    geom::Point3 d = feat.topo.ca[static_cast<std::size_t>(feat.topo.dst(e))] -
                     feat.topo.ca[static_cast<std::size_t>(feat.topo.src(e))];
    auto want = net::rbf_values(bank, geom::norm(d));
    for (int m = 0; m < cfg.n_rbf; ++m) CHECK(feat.edge_init.at(e, m) == want[static_cast<std::size_t>(m)]);
    for (std::int64_t m = cfg.n_rbf; m < cfg.d_e; ++m) CHECK(feat.edge_init.at(e, m) == 0.0);
  }

  data::BackboneStructure lone;
  lone.name = "lone";
  lone.sequence = {3};
  lone.coords = {{geom::Point3{-1.45, 0.9, 0.0}, geom::Point3{0.0, 0.0, 0.0},
                  geom::Point3{1.52, 0.0, 0.0}, geom::Point3{2.1, 1.0, 0.0}}};
  lone.flags.resize(1);
  CHECK_THROWS_WITH_AS(model::prepare_inputs(lone, tiny_cfg()), doctest::Contains("lone"), Error);
}

TEST_CASE("virtual atoms start from the backbone plus shared free atoms") {
  ModelConfig cfg = tiny_cfg();
  cfg.d_q = 7;
  auto s = data::random_backbone(4, 5);
  GraphInputs in = model::prepare_inputs(s, cfg);
  Model m = model::init_model(cfg, 9);

  Tape tape;
  net::LeafMap leaves = net::constant_params(tape, m.params);
  Value atoms = model::initial_atoms(tape, leaves.at("free_atoms"), in, cfg);
  const Tensor& q = tape.value(atoms);
  REQUIRE(q.shape == num::Shape{15, 7});

  const Tensor& free_atoms = m.params.at("free_atoms");
  REQUIRE(free_atoms.shape == num::Shape{3, 3});
  for (std::int64_t i = 0; i < 5; ++i) {
    for (std::int64_t c = 0; c < 3; ++c) {
      CHECK(q.at(3 * i + c, data::kCA) == 0.0);
      for (int a = 0; a < 4; ++a) CHECK(q.at(3 * i + c, a) == in.backbone_local.at(3 * i + c, a));
      // Free atoms are one learned set shared by every residue.
      for (std::int64_t a = 0; a < 3; ++a) CHECK(q.at(3 * i + c, 4 + a) == free_atoms.at(a, c));
    }
  }
}

TEST_CASE("global context gate saturates, handles one node, commutes with permutation") {
  ModelConfig cfg = tiny_cfg();
  const std::int64_t d = cfg.d_v;
  Rng rng(21);

  auto make_leaves = [&](Tape& tape, double b2_fill) {
    net::LeafMap leaves;
    Tensor w1 = Tensor::zeros({d, d});
    for (std::int64_t i = 0; i < w1.size(); ++i) w1[i] = rng.uniform(-0.5, 0.5);
    Tensor w2 = Tensor::zeros({d, d});
    for (std::int64_t i = 0; i < w2.size(); ++i) w2[i] = rng.uniform(-0.5, 0.5);
    leaves.emplace("g.w1", tape.constant(std::move(w1)));
    leaves.emplace("g.b1", tape.constant(Tensor::zeros({1, d})));
    leaves.emplace("g.w2", tape.constant(std::move(w2)));
    leaves.emplace("g.b2", tape.constant(Tensor::full({1, d}, b2_fill)));
    return leaves;
  };

  SUBCASE("a strongly positive gate input leaves features untouched") {
    Tape tape;
    Tensor w2_zero = Tensor::zeros({d, d});
    net::LeafMap leaves;
    leaves.emplace("g.w1", tape.constant(Tensor::zeros({d, d})));
    leaves.emplace("g.b1", tape.constant(Tensor::zeros({1, d})));
    leaves.emplace("g.w2", tape.constant(std::move(w2_zero)));
    leaves.emplace("g.b2", tape.constant(Tensor::full({1, d}, 25.0)));
    Tensor s = Tensor::zeros({4, d});
    for (std::int64_t i = 0; i < s.size(); ++i) s[i] = rng.uniform(-2.0, 2.0);
    Value out = model::global_context(tape, leaves, "g", tape.constant(s), cfg);
    CHECK(max_abs_diff(tape.value(out), s) <= 1e-8);
  }

  SUBCASE("a single node gates itself; duplicated rows gate identically") {
    Tape tape;
    auto leaves = make_leaves(tape, 0.0);
    Tensor s = Tensor::zeros({1, d});
    for (std::int64_t i = 0; i < s.size(); ++i) s[i] = rng.uniform(-1.0, 1.0);
    Tensor one = tape.value(model::global_context(tape, leaves, "g", tape.constant(s), cfg));
    REQUIRE(one.shape == num::Shape{1, d});

    // Two identical rows share the mean, so each row matches the
    // single-node result.
    Tensor twice = Tensor::zeros({2, d});
    for (std::int64_t c = 0; c < d; ++c) twice.at(0, c) = twice.at(1, c) = s.at(0, c);
    Tensor two = tape.value(model::global_context(tape, leaves, "g", tape.constant(twice), cfg));
    for (std::int64_t r = 0; r < 2; ++r) {
      for (std::int64_t c = 0; c < d; ++c) {
        CHECK(two.at(r, c) == doctest::Approx(one.at(0, c)).epsilon(1e-12));
      }
    }
  }

  SUBCASE("permuting rows permutes the output identically") {
    Tape tape;
    auto leaves = make_leaves(tape, 0.1);
    Tensor s = Tensor::zeros({5, d});
    for (std::int64_t i = 0; i < s.size(); ++i) s[i] = rng.uniform(-1.0, 1.0);
    std::vector<std::int64_t> perm{3, 0, 4, 1, 2};
    Tensor sp = Tensor::zeros({5, d});
    for (std::int64_t r = 0; r < 5; ++r) {
      for (std::int64_t c = 0; c < d; ++c) sp.at(r, c) = s.at(perm[static_cast<std::size_t>(r)], c);
    }
    Tensor out = tape.value(model::global_context(tape, leaves, "g", tape.constant(s), cfg));
    Tensor outp = tape.value(model::global_context(tape, leaves, "g", tape.constant(sp), cfg));
    for (std::int64_t r = 0; r < 5; ++r) {
      for (std::int64_t c = 0; c < d; ++c) {
        CHECK(outp.at(r, c) ==
              doctest::Approx(out.at(perm[static_cast<std::size_t>(r)], c)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("forward pass emits one logit row per residue, tape and no-grad agree") {
  ModelConfig cfg = tiny_cfg();
  Model m = model::init_model(cfg, 3);
  // Seed the zero-initialized head so the compared logits are nonzero.
  Rng rng(7);
  Tensor& head = m.params.at("head.w");
  for (std::int64_t i = 0; i < head.size(); ++i) head[i] = rng.uniform(-0.5, 0.5);
  for (std::int64_t n : {2, 5}) {
    auto s = data::random_backbone(40 + static_cast<std::uint64_t>(n), n);
    GraphInputs in = model::prepare_inputs(s, cfg);

    Tape tape;
    net::LeafMap leaves = net::leaf_params(tape, m.params);
    Value logits = model::forward_logits(tape, leaves, cfg, in);
    REQUIRE(tape.value(logits).shape == num::Shape{n, 20});

    // The layer-truncating forward is the same arithmetic, so it must
    // agree bit for bit.
    Tensor truncated = model::forward_logits(m, in);
    CHECK(max_abs_diff(tape.value(logits), truncated) == 0.0);
  }
}

TEST_CASE("forward pass is invariant to global rigid motion") {
  for (auto mode : {model::AtomUpdateMode::linear, model::AtomUpdateMode::aggregate}) {
    ModelConfig cfg = tiny_cfg();
    cfg.atom_update_mode = mode;
    Model m = model::init_model(cfg, 5);
    Rng head_rng(6);
    Tensor& head = m.params.at("head.w");
    for (std::int64_t i = 0; i < head.size(); ++i) head[i] = head_rng.uniform(-0.5, 0.5);
    auto s = data::random_backbone(17, 8);
    Tensor base = model::forward_logits(m, model::prepare_inputs(s, cfg));

    Rng rng(71);
    for (int trial = 0; trial < 5; ++trial) {
      auto g = geom::random_rigid(rng);
      Tensor moved = model::forward_logits(m, model::prepare_inputs(transformed(s, g), cfg));
      CHECK(max_rel_diff(moved, base) < 1e-6);
    }
  }
}

TEST_CASE("zero-initialized head yields uniform logits and perplexity 20") {
  ModelConfig cfg = tiny_cfg();
  Model m = model::init_model(cfg, 12);
  auto s = data::random_backbone(13, 6);
  model::Prediction p = model::predict(m, s);

  double mx = 0.0;
  for (std::int64_t i = 0; i < p.logits.size(); ++i) mx = std::max(mx, std::abs(p.logits[i]));
  CHECK(mx == 0.0);

  model::Metrics metrics = model::compute_metrics(p.logits, model::prepare_inputs(s, cfg).labels);
  CHECK(metrics.perplexity == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(metrics.perplexity >= 18.0);
  CHECK(metrics.perplexity <= 22.0);
}

TEST_CASE("sequence loss matches hand-computed cross-entropy") {
  SUBCASE("uniform logits cost ln 20") {
    Tape tape;
    Value logits = tape.constant(Tensor::full({3, 20}, 0.7));
    std::vector<int> labels{4, 0, 19};
    double loss = tape.value(model::sequence_loss(tape, logits, labels))[0];
    CHECK(loss == doctest::Approx(std::log(20.0)).epsilon(1e-12));
  }

  SUBCASE("a growing correct-class margin drives the loss to zero") {
    double prev = 1e300;
    for (double margin : {5.0, 20.0, 40.0}) {
      Tape tape;
      Tensor t = Tensor::zeros({2, 20});
      t.at(0, 7) = margin;
      t.at(1, 2) = margin;
      double loss = tape.value(model::sequence_loss(tape, tape.constant(t), {7, 2}))[0];
      CHECK(loss < prev);
      prev = loss;
    }
    CHECK(prev < 1e-12);
  }

  SUBCASE("random case equals the hand sum and ignores masked rows") {
    Rng rng(33);
    Tensor t = Tensor::zeros({6, 20});
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-3.0, 3.0);
    std::vector<int> labels{3, -1, 11, 0, 19, 5};

    double want = 0.0;
    int counted = 0;
    for (std::int64_t r = 0; r < 6; ++r) {
      if (labels[static_cast<std::size_t>(r)] < 0) continue;
      double hi = t.at(r, 0);
      for (int c = 1; c < 20; ++c) hi = std::max(hi, t.at(r, c));
      double z = 0.0;
      for (int c = 0; c < 20; ++c) z += std::exp(t.at(r, c) - hi);
      want += hi + std::log(z) - t.at(r, labels[static_cast<std::size_t>(r)]);
      ++counted;
    }
    want /= counted;

    Tape tape;
    double loss = tape.value(model::sequence_loss(tape, tape.constant(t), labels))[0];
    CHECK(loss == doctest::Approx(want).epsilon(1e-12));

    model::Metrics metrics = model::compute_metrics(t, labels);
    CHECK(metrics.perplexity == doctest::Approx(std::exp(want)).epsilon(1e-12));
    CHECK(metrics.labeled == 5);
  }

  SUBCASE("label outside the class range is rejected") {
    Tape tape;
    Value logits = tape.constant(Tensor::zeros({2, 20}));
    CHECK_THROWS_AS((void)model::sequence_loss(tape, logits, {3, 20}), Error);
    CHECK_THROWS_AS((void)model::sequence_loss(tape, logits, {3}), Error);
  }
}

TEST_CASE("metrics count argmax matches over labeled residues") {
  Tensor t = Tensor::zeros({4, 20});
  t.at(0, 3) = 2.0;
  t.at(1, 8) = 2.0;
  t.at(2, 0) = 2.0;
  t.at(3, 15) = 2.0;

  SUBCASE("all argmax rows correct: recovery 100") {
    model::Metrics m = model::compute_metrics(t, {3, 8, 0, 15});
    CHECK(m.recovery_percent == 100.0);
    CHECK(m.matched == 4);
  }

  SUBCASE("three of four match: recovery 75") {
    model::Metrics m = model::compute_metrics(t, {3, 8, 0, 14});
    CHECK(m.recovery_percent == 75.0);
    CHECK(m.matched == 3);
    CHECK(m.labeled == 4);
  }

  SUBCASE("no labeled residues is an error") {
    CHECK_THROWS_AS((void)model::compute_metrics(t, {-1, -1, -1, -1}), Error);
  }

  SUBCASE("out-of-range label is an error") {
    CHECK_THROWS_AS((void)model::compute_metrics(t, {3, 8, 0, 25}), Error);
  }
}

TEST_CASE("full-model gradients match finite differences on a small protein") {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_q = 5;
  cfg.d_v = 8;
  cfg.d_e = 6;
  cfg.heads = 2;
  cfg.n_rbf = 3;
  cfg.knn_k = 3;
  Model m = model::init_model(cfg, 6);
  // With the head at its zero initialization no gradient reaches the
  // layers below, so seed it before differentiating.
  num::Rng head_rng(9);
  Tensor& head = m.params.at("head.w");
  for (std::int64_t i = 0; i < head.size(); ++i) head[i] = head_rng.uniform(-0.5, 0.5);
  auto s = data::random_backbone(8, 4);
  GraphInputs in = model::prepare_inputs(s, cfg);

  num::GradMap analytic;
  {
    Tape tape;
    net::LeafMap leaves = net::leaf_params(tape, m.params);
    Value loss = model::sequence_loss(tape, model::forward_logits(tape, leaves, cfg, in), in.labels);
    tape.backward(loss);
    for (const auto& [name, v] : leaves) analytic.emplace(name, tape.grad(v));
  }

  auto objective = [&]() {
    Tape tape;
    net::LeafMap leaves = net::constant_params(tape, m.params);
    Value loss = model::sequence_loss(tape, model::forward_logits(tape, leaves, cfg, in), in.labels);
    return tape.value(loss)[0];
  };
  num::FdReport report = num::fd_check(m.params, analytic, objective, 1e-5);
  INFO("worst parameter: ", report.worst_param, " analytic ", report.worst_analytic, " numeric ",
       report.worst_numeric);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("training memorizes one protein and halts on demand") {
  ModelConfig cfg = tiny_cfg();
  cfg.d_v = 32;
  Model m = model::init_model(cfg, 1);
  auto s = data::random_backbone(22, 8, "memorize_me");

  model::TrainOptions opts;
  opts.batch_size = 1;
  opts.max_steps = 200;
  opts.peak_lr = 1e-3;
  opts.seed = 4;
  opts.eval_interval = 5;
  std::int64_t reached = -1;
  auto result = model::train(m, {s}, opts, [&](const model::EvalPoint& p) {
    if (p.recovery == 100.0 && reached < 0) reached = p.step;
    return reached < 0;
  });

  REQUIRE(reached > 0);
  CHECK(result.final_step == reached);
  CHECK(result.log.back().recovery == 100.0);
  CHECK(result.log.back().loss < result.log.front().loss);

  // The trained model reproduces the sequence when asked directly.
  model::Prediction p = model::predict(m, s);
  model::Metrics metrics =
      model::compute_metrics(p.logits, model::prepare_inputs(s, cfg).labels);
  CHECK(metrics.recovery_percent == 100.0);
}

TEST_CASE("loss descends strictly over the first ten steps on a fixed batch") {
  ModelConfig cfg = tiny_cfg();
  Model m = model::init_model(cfg, 2);
  std::vector<data::BackboneStructure> set{data::random_backbone(31, 6),
                                           data::random_backbone(32, 7)};

  model::TrainOptions opts;
  opts.batch_size = 2;  // the whole set: every step sees the same batch
  opts.max_steps = 10;
  opts.peak_lr = 1e-3;
  opts.seed = 8;
  opts.eval_interval = 1;
  auto result = model::train(m, set, opts);

  REQUIRE(result.log.size() == 10);
  for (std::size_t i = 1; i < result.log.size(); ++i) {
    CHECK(result.log[i].loss < result.log[i - 1].loss);
  }
}

TEST_CASE("identical seeds produce identical metric logs") {
  ModelConfig cfg = tiny_cfg();
  std::vector<data::BackboneStructure> set{data::random_backbone(51, 5),
                                           data::random_backbone(52, 6),
                                           data::random_backbone(53, 7)};
  auto dir = fresh_dir("vfn_model_determinism");

  auto run = [&](const std::string& tag) {
    Model m = model::init_model(cfg, 14);
    model::TrainOptions opts;
    opts.batch_size = 2;
    opts.max_steps = 6;
    opts.peak_lr = 1e-3;
    opts.seed = 77;
    opts.eval_interval = 2;
    opts.log_path = (dir / (tag + ".jsonl")).string();
    return model::train(m, set, opts);
  };
  auto a = run("a");
  auto b = run("b");

  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].step == b.log[i].step);
    CHECK(a.log[i].loss == b.log[i].loss);
    CHECK(a.log[i].perplexity == b.log[i].perplexity);
    CHECK(a.log[i].recovery == b.log[i].recovery);
  }

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  std::string log_a = slurp(dir / "a.jsonl");
  CHECK(log_a == slurp(dir / "b.jsonl"));
  CHECK(std::count(log_a.begin(), log_a.end(), '\n') == 3);
}

TEST_CASE("five layers memorize no slower than two") {
  auto s = data::random_backbone(61, 8);
  auto steps_to_memorize = [&](int n_layers) {
    ModelConfig cfg = tiny_cfg();
    cfg.n_layers = n_layers;
    cfg.d_v = 32;
    Model m = model::init_model(cfg, 10);
    model::TrainOptions opts;
    opts.batch_size = 1;
    opts.max_steps = 300;
    opts.peak_lr = 1e-3;
    opts.seed = 10;
    opts.eval_interval = 1;
    std::int64_t reached = -1;
    model::train(m, {s}, opts, [&](const model::EvalPoint& p) {
      if (p.recovery == 100.0 && reached < 0) reached = p.step;
      return reached < 0;
    });
    REQUIRE(reached > 0);
    return reached;
  };

  const std::int64_t two = steps_to_memorize(2);
  const std::int64_t five = steps_to_memorize(5);
  INFO("steps to memorize: two layers ", two, ", five layers ", five);
  CHECK(static_cast<double>(five) <= 1.2 * static_cast<double>(two));
}

TEST_CASE("checkpoints round-trip through disk") {
  auto dir = fresh_dir("vfn_model_ckpt");
  ModelConfig cfg = tiny_cfg();
  Model m = model::init_model(cfg, 19);
  auto s = data::random_backbone(71, 5);

  model::TrainOptions opts;
  opts.batch_size = 1;
  opts.max_steps = 3;
  opts.peak_lr = 1e-3;
  opts.seed = 6;
  opts.eval_interval = 10;
  opts.checkpoint_dir = dir.string();
  opts.config_echo = nlohmann::json{{"note", "round-trip"}};
  model::train(m, {s}, opts);

  const std::string path = (dir / "last.ckpt").string();
  model::Checkpoint ck = model::load_checkpoint(path);
  CHECK(ck.step == 3);
  CHECK(ck.config.at("note") == "round-trip");
  CHECK(ck.model_cfg.n_layers == cfg.n_layers);
  CHECK(ck.model_cfg.d_v == cfg.d_v);

  REQUIRE(ck.params.names() == m.params.names());
  for (const auto& name : m.params.names()) {
    CHECK(max_abs_diff(ck.params.at(name), m.params.at(name)) == 0.0);
    REQUIRE(ck.moments.count(name) == 1);
    CHECK(ck.moments.at(name).first.size() ==
          static_cast<std::size_t>(m.params.at(name).size()));
  }

  Model restored = model::model_from_checkpoint(ck);
  for (const auto& name : m.params.names()) {
    CHECK(max_abs_diff(restored.params.at(name), m.params.at(name)) == 0.0);
  }

  SUBCASE("wrong magic is rejected") {
    const std::string bad = (dir / "bad.ckpt").string();
    std::ofstream out(bad, std::ios::binary);
    out << "NOTACKPTxxxxxxxxxxxxxxxx";
    out.close();
    CHECK_THROWS_WITH_AS(model::load_checkpoint(bad), doctest::Contains("not a checkpoint"), Error);
  }

  SUBCASE("truncated payload is rejected") {
    std::ifstream full(path, std::ios::binary);
    std::stringstream ss;
    ss << full.rdbuf();
    std::string bytes = ss.str();
    const std::string cut = (dir / "cut.ckpt").string();
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 64));
    out.close();
    CHECK_THROWS_AS(model::load_checkpoint(cut), Error);
  }

  SUBCASE("config/parameter mismatches are named") {
    model::Checkpoint wrong = model::load_checkpoint(path);
    wrong.model_cfg.d_v = 64;
    CHECK_THROWS_AS(model::model_from_checkpoint(wrong), Error);

    model::Checkpoint missing = model::load_checkpoint(path);
    missing.model_cfg.n_layers = 3;
    CHECK_THROWS_WITH_AS(model::model_from_checkpoint(missing), doctest::Contains("layer2"),
                         Error);
  }
}

TEST_CASE("training resumes from a checkpoint with continued step numbering") {
  auto dir = fresh_dir("vfn_model_resume");
  ModelConfig cfg = tiny_cfg();
  std::vector<data::BackboneStructure> set{data::random_backbone(81, 5),
                                           data::random_backbone(82, 6)};

  model::TrainOptions opts;
  opts.batch_size = 2;
  opts.max_steps = 4;
  opts.peak_lr = 1e-3;
  opts.seed = 12;
  opts.eval_interval = 2;
  opts.checkpoint_dir = dir.string();
  Model m = model::init_model(cfg, 23);
  model::train(m, set, opts);

  model::Checkpoint ck = model::load_checkpoint((dir / "last.ckpt").string());
  REQUIRE(ck.step == 4);

  Model resumed = model::model_from_checkpoint(ck);
  model::TrainOptions more = opts;
  more.max_steps = 8;
  auto result = model::train(resumed, set, more, {}, &ck);
  CHECK(result.final_step == 8);
  REQUIRE(!result.log.empty());
  CHECK(result.log.front().step == 6);
  CHECK(result.log.back().step == 8);

  model::Checkpoint after = model::load_checkpoint((dir / "last.ckpt").string());
  CHECK(after.step == 8);

  // Resuming a finished run is refused.
  CHECK_THROWS_AS(model::train(resumed, set, more, {}, &after), Error);
}

TEST_CASE("relabeling residues permutes the logits rows") {
  ModelConfig cfg = tiny_cfg();
  Model m = model::init_model(cfg, 29);
  // Head at zero gives identical rows everywhere; perturb it so rows differ.
  Rng rng(91);
  Tensor& head = m.params.at("head.w");
  for (std::int64_t i = 0; i < head.size(); ++i) head[i] = rng.uniform(-0.5, 0.5);

  auto s = data::random_backbone(92, 7);
  Tensor base = model::forward_logits(m, model::prepare_inputs(s, cfg));

  std::vector<std::size_t> perm{4, 2, 6, 0, 3, 1, 5};
  Tensor moved = model::forward_logits(m, model::prepare_inputs(permuted(s, perm), cfg));

  REQUIRE(moved.shape == base.shape);
  for (std::int64_t r = 0; r < moved.dim(0); ++r) {
    for (std::int64_t c = 0; c < moved.dim(1); ++c) {
      double want = base.at(static_cast<std::int64_t>(perm[static_cast<std::size_t>(r)]), c);
      CHECK(moved.at(r, c) == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("model config round-trips through JSON and rejects bad input") {
  ModelConfig cfg = tiny_cfg();
  cfg.atom_update_mode = model::AtomUpdateMode::aggregate;
  cfg.use_edge_featurizer = true;
  cfg.activation = model::Activation::relu;

  nlohmann::json j = model::config_to_json(cfg);
  ModelConfig back = model::config_from_json(j);
  CHECK(back.n_layers == cfg.n_layers);
  CHECK(back.d_q == cfg.d_q);
  CHECK(back.d_v == cfg.d_v);
  CHECK(back.d_e == cfg.d_e);
  CHECK(back.knn_k == cfg.knn_k);
  CHECK(back.n_rbf == cfg.n_rbf);
  CHECK(back.heads == cfg.heads);
  CHECK(back.atom_update_mode == cfg.atom_update_mode);
  CHECK(back.use_edge_featurizer == cfg.use_edge_featurizer);
  CHECK(back.activation == cfg.activation);

  CHECK_THROWS_WITH_AS(model::config_from_json({{"dv", 32}}), doctest::Contains("dv"), Error);
  CHECK_THROWS_AS(model::config_from_json({{"n_layers", "two"}}), Error);
  CHECK_THROWS_AS(model::config_from_json({{"atom_update_mode", "other"}}), Error);
  CHECK_THROWS_AS(model::config_from_json({{"d_q", 4}}), Error);
  CHECK_THROWS_AS(model::config_from_json({{"d_v", 13}, {"heads", 4}}), Error);
}
