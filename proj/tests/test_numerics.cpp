#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "common/error.hpp"
#include "num/composites.hpp"
#include "num/optim.hpp"
#include "num/rng.hpp"
#include "num/tape.hpp"
#include "num/tensor.hpp"

using namespace vfn;
using num::Rng;
using num::Shape;
using num::Tape;
using num::Tensor;
using num::Value;

namespace {

Tensor rand_tensor(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
  Tensor t = Tensor::zeros(shape);
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

using Builder = std::function<Value(Tape&, std::vector<Value>&)>;

// Rebuilds the graph from the parameter store, compares tape adjoints
// against central finite differences over every parameter element.
double fd_max_rel(num::ParamStore& ps, const Builder& build, double eps = 1e-5) {
  auto make = [&](Tape& tape, std::vector<Value>& leaves) {
    leaves.clear();
    for (const auto& name : ps.names()) leaves.push_back(tape.leaf(ps.at(name), name));
    return build(tape, leaves);
  };
  Tape tape;
  std::vector<Value> leaves;
  Value loss = make(tape, leaves);
  tape.backward(loss);
  num::GradMap grads;
  for (std::size_t i = 0; i < ps.names().size(); ++i) grads[ps.names()[i]] = tape.grad(leaves[i]);
  auto f = [&]() {
    Tape fresh;
    std::vector<Value> l2;
    return fresh.value(make(fresh, l2))[0];
  };
  return num::fd_check(ps, grads, f, eps).max_rel_error;
}

Value weighted_mean(Tape& tape, Value x, const Tensor& probe) {
  Value p = tape.constant(probe);
  return num::mean_all(tape, tape.multiply(x, p));
}

}  // namespace

TEST_CASE("matmul shapes and values") {
  Tape tape;
  Value a = tape.constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Value b = tape.constant(Tensor({3, 1}, {1, 1, 1}));
  Value c = tape.matmul(a, b);
  CHECK(tape.value(c).shape == Shape{2, 1});
  CHECK(tape.value(c)[0] == doctest::Approx(6.0));
  CHECK(tape.value(c)[1] == doctest::Approx(15.0));
}

TEST_CASE("matmul shape mismatch names the op and both shapes") {
  Tape tape;
  Value a = tape.constant(Tensor::zeros({2, 3}));
  Value b = tape.constant(Tensor::zeros({4, 1}));
  try {
    tape.matmul(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::shape_mismatch);
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,1]") != std::string::npos);
  }
}

TEST_CASE("matmul wide path agrees with an explicit triple loop") {
  Rng rng(11);
  const std::int64_t m = 37, k = 41, n = 43;  // above the plain-loop work bound
  Tensor a = rand_tensor(rng, {m, k});
  Tensor b = rand_tensor(rng, {k, n});
  Tape tape;
  Value c = tape.matmul(tape.constant(a), tape.constant(b));
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double ref = 0.0;
      for (std::int64_t l = 0; l < k; ++l) ref += a.at(i, l) * b.at(l, j);
      CHECK(std::abs(tape.value(c).at(i, j) - ref) < 1e-12);
    }
  }
}

TEST_CASE("softmax of a uniform row is uniform") {
  Tape tape;
  Value s = tape.softmax_axis(tape.constant(Tensor({1, 3}, {0, 0, 0})), 1);
  for (int i = 0; i < 3; ++i) CHECK(tape.value(s)[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax rows are probability vectors on any axis") {
  Rng rng(5);
  Tensor x = rand_tensor(rng, {4, 5, 6}, -30.0, 30.0);
  for (std::int64_t axis = 0; axis < 3; ++axis) {
    Tape tape;
    Value s = tape.softmax_axis(tape.constant(x), axis);
    const Tensor& out = tape.value(s);
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out[i] >= 0.0);
    // sum along the reduced axis for every lane
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t d = 0; d < 3; ++d) {
      if (d < axis) outer *= x.dim(d);
      if (d > axis) inner *= x.dim(d);
    }
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t in = 0; in < inner; ++in) {
        double total = 0.0;
        for (std::int64_t j = 0; j < x.dim(axis); ++j) {
          total += out[o * x.dim(axis) * inner + j * inner + in];
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("cross entropy of uniform logits over 20 classes is ln 20") {
  Tape tape;
  Value logits = tape.constant(Tensor::zeros({3, 20}));
  const std::vector<int> labels{0, 7, 19};
  Value loss = tape.cross_entropy_logits(logits, labels);
  CHECK(tape.value(loss)[0] == doctest::Approx(std::log(20.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy rejects bad labels and all-masked batches") {
  Tape tape;
  Value logits = tape.constant(Tensor::zeros({2, 4}));
  CHECK_THROWS_AS(tape.cross_entropy_logits(logits, std::vector<int>{0, 4}), Error);
  CHECK_THROWS_AS(tape.cross_entropy_logits(logits, std::vector<int>{-1, -1}), Error);
  CHECK_THROWS_AS(tape.cross_entropy_logits(logits, std::vector<int>{1}), Error);
}

TEST_CASE("layer norm lanes have zero mean and unit variance") {
  Rng rng(7);
  Tensor x = rand_tensor(rng, {8, 32}, -3.0, 5.0);
  Tape tape;
  Value y = tape.layer_norm(tape.constant(x));
  for (std::int64_t r = 0; r < 8; ++r) {
    double mean = 0.0;
    for (std::int64_t c = 0; c < 32; ++c) mean += tape.value(y).at(r, c);
    mean /= 32.0;
    CHECK(std::abs(mean) < 1e-7);
    double var = 0.0;
    for (std::int64_t c = 0; c < 32; ++c) {
      var += (tape.value(y).at(r, c) - mean) * (tape.value(y).at(r, c) - mean);
    }
    var /= 32.0;
    CHECK(std::abs(var - 1.0) < 1e-5);
  }
}

TEST_CASE("non-finite op output raises a numeric error naming the op") {
  Tape tape;
  Value a = tape.constant(Tensor({1, 1}, {1.0}));
  Value b = tape.constant(Tensor({1, 1}, {0.0}));
  try {
    tape.divide(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric);
    CHECK(std::string(e.what()).find("divide") != std::string::npos);
  }
}

TEST_CASE("backward of an elementwise product is the other factor") {
  Tape tape;
  Tensor w({2, 2}, {1, 2, 3, 4}, true);
  Tensor x({2, 2}, {5, 6, 7, 8});
  Value wv = tape.leaf(w, "w");
  Value prod = tape.multiply(wv, tape.constant(x));
  Value loss = tape.sum_axis(tape.reshape(prod, {4}), 0);
  tape.backward(loss);
  Tensor g = tape.grad(wv);
  for (std::int64_t i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(x[i]).epsilon(1e-15));
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Value v = tape.leaf(Tensor({2, 1}, {1, 2}, true));
  CHECK_THROWS_AS(tape.backward(v), Error);
}

TEST_CASE("softmax cross entropy gradient is probabilities minus one-hot") {
  Rng rng(3);
  Tensor logits = rand_tensor(rng, {1, 5});
  logits.requires_grad = true;
  Tape tape;
  Value lv = tape.leaf(logits, "logits");
  Value loss = tape.cross_entropy_logits(lv, std::vector<int>{3});
  tape.backward(loss);
  Tensor g = tape.grad(lv);
  Tape probe;
  const Tensor& p = probe.value(probe.softmax_axis(probe.constant(logits), 1));
  for (std::int64_t c = 0; c < 5; ++c) {
    const double expected = p[c] - (c == 3 ? 1.0 : 0.0);
    CHECK(std::abs(g[c] - expected) < 1e-12);
  }
  // and against central finite differences, step 1e-5
  num::ParamStore ps;
  ps.add("logits", logits);
  const double rel = fd_max_rel(
      ps,
      [](Tape& t, std::vector<Value>& leaves) {
        return t.cross_entropy_logits(leaves[0], std::vector<int>{3});
      },
      1e-5);
  CHECK(rel < 1e-6);
}

TEST_CASE("parameter unused by the loss gets a zero gradient") {
  Tape tape;
  Value used = tape.leaf(Tensor({1, 1}, {2.0}, true));
  Value unused = tape.leaf(Tensor({3, 1}, {1, 2, 3}, true));
  Value loss = tape.multiply(used, used);
  tape.backward(loss);
  Tensor g = tape.grad(unused);
  for (std::int64_t i = 0; i < 3; ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("shared subexpressions accumulate adjoints") {
  Rng rng(9);
  Tensor a = rand_tensor(rng, {3, 3});
  a.requires_grad = true;
  Tensor b = rand_tensor(rng, {3, 3});
  Tensor c = rand_tensor(rng, {3, 3});

  Tape shared;
  Value av = shared.leaf(a, "a");
  Value s1 = shared.multiply(av, shared.constant(b));
  Value s2 = shared.multiply(av, shared.constant(c));
  shared.backward(num::mean_all(shared, shared.add(s1, s2)));
  Tensor g_shared = shared.grad(av);

  // hand-expanded duplicate: two leaves holding the same values
  Tape dup;
  Value a1 = dup.leaf(a, "a1");
  Value a2 = dup.leaf(a, "a2");
  Value d1 = dup.multiply(a1, dup.constant(b));
  Value d2 = dup.multiply(a2, dup.constant(c));
  dup.backward(num::mean_all(dup, dup.add(d1, d2)));
  Tensor g1 = dup.grad(a1);
  Tensor g2 = dup.grad(a2);

  for (std::int64_t i = 0; i < 9; ++i) CHECK(g_shared[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-15));
}

TEST_CASE("every op kind matches central finite differences") {
  Rng rng(2024);
  const Tensor probe23 = rand_tensor(rng, {2, 3});
  const Tensor probe24 = rand_tensor(rng, {2, 4});
  const Tensor probe33 = rand_tensor(rng, {3, 3});
  const Tensor probe43 = rand_tensor(rng, {4, 3});
  const Tensor probe6 = rand_tensor(rng, {6});

  SUBCASE("matmul") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {2, 4}));
    ps.add("b", rand_tensor(rng, {4, 3}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, t.matmul(l[0], l[1]), probe23);
          }) < 1e-4);
  }
  SUBCASE("add and multiply") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {3, 3}));
    ps.add("b", rand_tensor(rng, {3, 3}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, t.multiply(t.add(l[0], l[1]), l[0]), probe33);
          }) < 1e-4);
  }
  SUBCASE("scalar scale") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {3, 3}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, t.scalar_scale(l[0], -1.7), probe33);
          }) < 1e-4);
  }
  SUBCASE("concat and slice") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {2, 1}));
    ps.add("b", rand_tensor(rng, {2, 3}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            const std::array<Value, 2> parts{l[0], l[1]};
            Value cat = t.concat(parts, 1);
            return weighted_mean(t, t.slice(cat, 1, 1, 3), probe23);
          }) < 1e-4);
  }
  SUBCASE("reshape and sum_axis") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {2, 3, 4}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            Value summed = t.sum_axis(l[0], 1);  // [2,4]
            return weighted_mean(t, t.reshape(summed, {2, 4}), probe24);
          }) < 1e-4);
  }
  SUBCASE("relu") {
    num::ParamStore ps;
    Tensor a = rand_tensor(rng, {3, 3});
    for (std::int64_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i]) < 0.05) a[i] = 0.5;  // keep away from the kink
    }
    ps.add("a", a);
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, t.relu(l[0]), probe33);
          }) < 1e-4);
  }
  SUBCASE("gelu") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {3, 3}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, t.gelu(l[0]), probe33);
          }) < 1e-4);
  }
  SUBCASE("softmax over both axes") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {4, 3}));
    for (std::int64_t axis = 0; axis < 2; ++axis) {
      CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
              return weighted_mean(t, t.softmax_axis(l[0], axis), probe43);
            }) < 1e-4);
    }
  }
  SUBCASE("layer norm") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {4, 3}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, t.layer_norm(l[0]), probe43);
          }) < 1e-4);
  }
  SUBCASE("sqrt") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {3, 3}, 0.3, 2.0));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, t.sqrt(l[0]), probe33);
          }) < 1e-4);
  }
  SUBCASE("divide") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {3, 3}));
    ps.add("b", rand_tensor(rng, {3, 3}, 0.5, 2.0));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, t.divide(l[0], l[1]), probe33);
          }) < 1e-4);
  }
  SUBCASE("cross entropy with a masked row") {
    num::ParamStore ps;
    ps.add("logits", rand_tensor(rng, {3, 5}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return t.cross_entropy_logits(l[0], std::vector<int>{4, -1, 0});
          }) < 1e-4);
  }
  SUBCASE("gather rows with repeats") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {3, 3}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            Value g = t.gather_rows(l[0], {2, 0, 0, 1});
            return weighted_mean(t, g, probe43);
          }) < 1e-4);
  }
  SUBCASE("sigmoid composite") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {3, 3}));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, num::sigmoid(t, l[0]), probe33);
          }) < 1e-4);
  }
  SUBCASE("exp composite on non-positive inputs") {
    num::ParamStore ps;
    ps.add("a", rand_tensor(rng, {3, 3}, -4.0, -0.1));
    CHECK(fd_max_rel(ps, [&](Tape& t, std::vector<Value>& l) {
            return weighted_mean(t, num::exp_nonpos(t, l[0]), probe33);
          }) < 1e-4);
  }
}

TEST_CASE("sigmoid and exp composites match closed forms") {
  Rng rng(17);
  Tape tape;
  Tensor x = rand_tensor(rng, {4, 4}, -30.0, 30.0);
  const Tensor& s = tape.value(num::sigmoid(tape, tape.constant(x)));
  for (std::int64_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(s[i] - 1.0 / (1.0 + std::exp(-x[i]))) < 1e-12);
  }
  Tensor neg = rand_tensor(rng, {4, 4}, -40.0, 0.0);
  const Tensor& e = tape.value(num::exp_nonpos(tape, tape.constant(neg)));
  for (std::int64_t i = 0; i < neg.size(); ++i) {
    CHECK(std::abs(e[i] - std::exp(neg[i])) <= 1e-12 * std::max(1.0, std::exp(neg[i])));
  }
}

TEST_CASE("fd_check basics") {
  SUBCASE("quadratic at w=3") {
    num::ParamStore ps;
    ps.add("w", Tensor({1}, {3.0}));
    num::GradMap grads;
    grads["w"] = Tensor({1}, {6.0});
    auto f = [&]() { return ps.at("w")[0] * ps.at("w")[0]; };
    CHECK(num::fd_check(ps, grads, f, 1e-5).max_rel_error < 1e-6);
  }
  SUBCASE("constant objective gives zero error") {
    num::ParamStore ps;
    ps.add("w", Tensor({2}, {1.0, -1.0}));
    num::GradMap grads;
    grads["w"] = Tensor::zeros({2});
    auto f = [&]() { return 42.0; };
    CHECK(num::fd_check(ps, grads, f, 1e-5).max_rel_error == 0.0);
  }
  SUBCASE("a wrong analytic gradient is flagged at its own scale") {
    num::ParamStore ps;
    ps.add("w", Tensor({1}, {3.0}));
    num::GradMap grads;
    grads["w"] = Tensor({1}, {5.0});  // true derivative is 6
    auto f = [&]() { return ps.at("w")[0] * ps.at("w")[0]; };
    num::FdReport report = num::fd_check(ps, grads, f, 1e-5);
    CHECK(report.max_rel_error > 0.16);
    CHECK(report.worst_param == "w");
    CHECK(report.worst_analytic == 5.0);
    CHECK(report.worst_numeric == doctest::Approx(6.0).epsilon(1e-8));
  }
  SUBCASE("entries below the noise floor compare absolutely") {
    num::ParamStore ps;
    ps.add("w", Tensor({1}, {1.0}));
    num::GradMap grads;
    grads["w"] = Tensor({1}, {1e-9});  // true derivative is 0
    auto f = [&]() { return 42.0; };
    CHECK(num::fd_check(ps, grads, f, 1e-5).max_rel_error < 1e-4);
  }
  SUBCASE("eps outside the sanctioned range is rejected") {
    num::ParamStore ps;
    ps.add("w", Tensor({1}, {1.0}));
    num::GradMap grads;
    auto f = [&]() { return 0.0; };
    CHECK_THROWS_AS(num::fd_check(ps, grads, f, 1e-2), Error);
    CHECK_THROWS_AS(num::fd_check(ps, grads, f, 1e-8), Error);
  }
  SUBCASE("non-deterministic objective is detected") {
    num::ParamStore ps;
    ps.add("w", Tensor({1}, {1.0}));
    num::GradMap grads;
    int calls = 0;
    auto f = [&]() { return static_cast<double>(calls++); };
    CHECK_THROWS_AS(num::fd_check(ps, grads, f, 1e-5), Error);
  }
}

TEST_CASE("adamw behavior") {
  SUBCASE("zero gradient and zero decay leave parameters unchanged") {
    num::ParamStore ps;
    ps.add("w", Tensor({3}, {1.0, -2.0, 0.5}));
    num::AdamW opt(ps, {.weight_decay = 0.0});
    num::GradMap grads;
    grads["w"] = Tensor::zeros({3});
    for (int i = 0; i < 5; ++i) opt.step(grads, 1e-3);
    CHECK(ps.at("w")[0] == 1.0);
    CHECK(ps.at("w")[1] == -2.0);
    CHECK(ps.at("w")[2] == 0.5);
  }
  SUBCASE("constant positive gradient strictly decreases the parameter") {
    num::ParamStore ps;
    ps.add("w", Tensor({1}, {0.7}));
    num::AdamW opt(ps, {.weight_decay = 0.0});
    double prev = ps.at("w")[0];
    for (int i = 0; i < 50; ++i) {
      num::GradMap grads;
      grads["w"] = Tensor({1}, {1.0});
      opt.step(grads, 1e-3);
      CHECK(ps.at("w")[0] < prev);
      prev = ps.at("w")[0];
    }
  }
  SUBCASE("quadratic bowl converges in 200 steps") {
    num::ParamStore ps;
    ps.add("w", Tensor({1}, {0.0}));
    num::AdamW opt(ps, {.weight_decay = 0.0});
    for (int i = 0; i < 200; ++i) {
      const double w = ps.at("w")[0];
      num::GradMap grads;
      grads["w"] = Tensor({1}, {2.0 * (w - 2.0)});
      opt.step(grads, 0.05);
    }
    CHECK(std::abs(ps.at("w")[0] - 2.0) < 0.05);
  }
  SUBCASE("NaN gradient aborts and names the parameter") {
    num::ParamStore ps;
    ps.add("w_bad", Tensor({1}, {1.0}));
    num::AdamW opt(ps, {});
    num::GradMap grads;
    grads["w_bad"] = Tensor({1}, {std::nan("")});
    try {
      opt.step(grads, 1e-3);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("w_bad") != std::string::npos);
    }
  }
  SUBCASE("decoupled decay shrinks an untouched parameter") {
    num::ParamStore ps;
    ps.add("w", Tensor({1}, {10.0}));
    num::AdamW opt(ps, {.weight_decay = 0.1});
    num::GradMap grads;
    grads["w"] = Tensor::zeros({1});
    opt.step(grads, 0.01);
    CHECK(ps.at("w")[0] == doctest::Approx(10.0 * (1.0 - 0.01 * 0.1)).epsilon(1e-12));
  }
}

TEST_CASE("one-cycle schedule ramps then anneals") {
  num::OneCycleSchedule sched(1e-3, 1000, 0.3);
  CHECK(sched.lr(0) < 1e-3);
  CHECK(sched.lr(299) == doctest::Approx(1e-3).epsilon(1e-12));
  for (std::int64_t s = 300; s < 999; ++s) CHECK(sched.lr(s + 1) <= sched.lr(s));
  CHECK(sched.lr(999) == doctest::Approx(1e-8).epsilon(1e-9));
  for (std::int64_t s = 0; s < 299; ++s) CHECK(sched.lr(s + 1) >= sched.lr(s));
}

TEST_CASE("rng is deterministic and well-behaved") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
    CHECK(r.index(17) < 17);
  }
  double mean = 0.0, var = 0.0;
  const int n = 20000;
  std::vector<double> zs(n);
  for (int i = 0; i < n; ++i) {
    zs[i] = r.normal();
    mean += zs[i];
  }
  mean /= n;
  for (double z : zs) var += (z - mean) * (z - mean);
  var /= n;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
  std::vector<int> perm{0, 1, 2, 3, 4, 5, 6, 7};
  r.shuffle(perm);
  std::vector<int> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("tape clear empties the graph") {
  Tape tape;
  tape.constant(Tensor::zeros({2, 2}));
  CHECK(tape.size() == 1);
  tape.clear();
  CHECK(tape.size() == 0);
}
