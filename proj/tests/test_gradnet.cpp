#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>

#include "doctest.h"
#include "racer/mlp.hpp"
#include "racer/optimizer.hpp"
#include "racer/policy.hpp"
#include "racer/tape.hpp"

using racer::Rng;
using racer::nn::AdamConfig;
using racer::nn::AdamW;
using racer::nn::bind_mlp;
using racer::nn::GaussianPolicy;
using racer::nn::Matrix;
using racer::nn::MlpSpec;
using racer::nn::mlp_apply;
using racer::nn::mlp_forward_plain;
using racer::nn::ParamSet;
using racer::nn::PolicySpec;
using racer::nn::Tape;
using racer::nn::Var;

namespace {

using GraphFn = std::function<Var(Tape&, Var)>;

double eval_scalar(const GraphFn& graph, const Matrix& x) {
  Tape t;
  const Var leaf = t.leaf(x, false);
  return t.value(graph(t, leaf)).data[0];
}

// Central-difference check of d(graph)/dx against the tape, all elements.
void gradcheck(const GraphFn& graph, Matrix x, double eps = 1e-4, double tol = 1e-3) {
  Tape t;
  const Var leaf = t.leaf(x, true);
  const Var out = graph(t, leaf);
  REQUIRE(t.value(out).rows == 1);
  REQUIRE(t.value(out).cols == 1);
  t.backward(out);
  const Matrix analytic = t.grad(leaf);

  for (std::size_t k = 0; k < x.size(); ++k) {
    Matrix xp = x, xm = x;
    xp.data[k] += eps;
    xm.data[k] -= eps;
    const double fd = (eval_scalar(graph, xp) - eval_scalar(graph, xm)) / (2 * eps);
    const double scale = std::max({std::abs(fd), std::abs(analytic.data[k]), 1e-4});
    CHECK(std::abs(fd - analytic.data[k]) / scale <= tol);
  }
}

Matrix random_matrix(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (double& x : m.data) x = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("mlp forward: zero weights and biases give zero output") {
  MlpSpec spec{4, {8}, 3};
  ParamSet p;
  p.add("l0/W", Matrix::zeros(4, 8));
  p.add("l0/b", Matrix::zeros(1, 8));
  p.add("l1/W", Matrix::zeros(8, 3));
  p.add("l1/b", Matrix::zeros(1, 3));
  const auto out = mlp_forward_plain(p, spec, std::vector<double>{1, -2, 3, 4});
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("mlp forward: identity single layer returns the input") {
  MlpSpec spec{3, {}, 3};
  ParamSet p;
  Matrix w(3, 3);
  for (int i = 0; i < 3; ++i) w(i, i) = 1.0;
  p.add("l0/W", std::move(w));
  p.add("l0/b", Matrix::zeros(1, 3));
  const std::vector<double> x = {0.7, -1.4, 2.5};
  const auto out = mlp_forward_plain(p, spec, x);
  for (int i = 0; i < 3; ++i) CHECK(out[i] == x[i]);
}

TEST_CASE("mlp forward matches a straight-line recomputation") {
  Rng rng(31);
  MlpSpec spec{5, {7, 6}, 4};
  const ParamSet p = racer::nn::init_mlp(spec, rng);
  const Matrix x = random_matrix(rng, 3, 5);

  // Independent re-implementation of the same arithmetic.
  auto naive = [&](int row, int out_idx) {
    std::vector<double> h(x.row_span(row).begin(), x.row_span(row).end());
    const std::vector<std::string> names = {"l0", "l1", "l2"};
    for (int layer = 0; layer < 3; ++layer) {
      const Matrix& w = p.at(names[layer] + "/W");
      const Matrix& b = p.at(names[layer] + "/b");
      std::vector<double> next(w.cols, 0.0);
      for (int j = 0; j < w.cols; ++j) {
        double acc = b(0, j);
        for (int i = 0; i < w.rows; ++i) acc += h[i] * w(i, j);
        next[j] = (layer < 2 && acc < 0.0) ? 0.0 : acc;
      }
      h = next;
    }
    return h[out_idx];
  };

  const Matrix out_plain = mlp_forward_plain(p, spec, x);
  Tape t;
  const auto vars = bind_mlp(t, p, spec, false);
  const Matrix& out_tape = t.value(mlp_apply(t, vars, t.leaf(x, false)));
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      CHECK(out_plain(r, c) == doctest::Approx(naive(r, c)).epsilon(1e-12));
      CHECK(out_tape(r, c) == out_plain(r, c));
    }
  }
}

TEST_CASE("mlp forward is bitwise deterministic") {
  Rng rng(32);
  MlpSpec spec{6, {16, 16}, 5};
  const ParamSet p = racer::nn::init_mlp(spec, rng);
  const Matrix x = random_matrix(rng, 4, 6);
  const Matrix a = mlp_forward_plain(p, spec, x);
  const Matrix b = mlp_forward_plain(p, spec, x);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.data[k] == b.data[k]);
}

TEST_CASE("mlp forward rejects shape mismatch") {
  Rng rng(33);
  MlpSpec spec{4, {8}, 2};
  const ParamSet p = racer::nn::init_mlp(spec, rng);
  CHECK_THROWS(mlp_forward_plain(p, spec, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("backward: f(w) = w * x with x = 2") {
  Tape t;
  const Var w = t.leaf(Matrix::scalar(1.5), true);
  const Var x = t.constant(Matrix::scalar(2.0));
  const Var f = t.mul(w, x);
  t.backward(f);
  CHECK(t.grad(w).data[0] == doctest::Approx(2.0));
}

TEST_CASE("backward: constant function has zero gradients") {
  Tape t;
  const Var w = t.leaf(Matrix::scalar(1.5), true);
  const Var f = t.mean_all(t.scale(w, 0.0));
  t.backward(f);
  CHECK(t.grad(w).data[0] == 0.0);
}

TEST_CASE("backward: softmax-then-cvar composite matches finite differences") {
  Rng rng(34);
  const std::vector<double> atoms = {-2.0, -0.5, 0.5, 1.0, 3.0};
  for (double alpha : {0.0, 0.5, 0.9}) {
    const GraphFn graph = [&](Tape& t, Var logits) {
      return t.mean_all(t.cvar_rows(t.softmax_rows(logits), atoms, alpha));
    };
    gradcheck(graph, random_matrix(rng, 2, 5, -1.5, 1.5));
  }
}

TEST_CASE("backward: tape reuse after consumption throws") {
  Tape t;
  const Var w = t.leaf(Matrix::scalar(1.0), true);
  const Var f = t.scale(w, 2.0);
  t.backward(f);
  CHECK_THROWS_AS(t.backward(f), std::logic_error);
  CHECK_THROWS_AS(t.scale(w, 1.0), std::logic_error);
}

TEST_CASE("every op passes randomized finite-difference probes") {
  Rng rng(35);
  const std::vector<double> atoms5 = {-2.0, -1.0, 0.0, 1.25, 2.5};

  // Constants are drawn once per probe round so each GraphFn is a fixed
  // function of its input.
  auto make_ops = [&]() {
    const Matrix right = random_matrix(rng, 4, 3);
    const Matrix bias = random_matrix(rng, 1, 4);
    const Matrix same = random_matrix(rng, 3, 4);
    const Matrix target = random_matrix(rng, 3, 4, 0.0, 1.0);
    const Matrix extra = random_matrix(rng, 3, 2);
    Matrix lift(4, 5);
    for (int i = 0; i < 4; ++i) lift(i, i) = 0.8;
    for (int i = 0; i < 4; ++i) lift(i, 4) = 0.2;

    return std::vector<GraphFn>{
        [=](Tape& t, Var x) { return t.mean_all(t.matmul(x, t.constant(right))); },
        [=](Tape& t, Var x) { return t.mean_all(t.add_bias(x, t.constant(bias))); },
        [=](Tape& t, Var x) { return t.mean_all(t.add(x, t.constant(same))); },
        [=](Tape& t, Var x) { return t.mean_all(t.sub(t.constant(same), x)); },
        [=](Tape& t, Var x) { return t.mean_all(t.mul(x, t.constant(same))); },
        [](Tape& t, Var x) { return t.mean_all(t.scale(x, -1.7)); },
        [](Tape& t, Var x) { return t.mean_all(t.add_const(x, 0.4)); },
        [](Tape& t, Var x) { return t.mean_all(t.tanh_(x)); },
        [](Tape& t, Var x) { return t.mean_all(t.exp_(x)); },
        [=](Tape& t, Var x) {
          return t.mean_all(t.mul(t.softmax_rows(x), t.constant(same)));
        },
        [=](Tape& t, Var x) {
          return t.mean_all(t.dot_rows(t.log_softmax_rows(x), t.constant(target)));
        },
        [](Tape& t, Var x) { return t.mean_all(t.logsumexp_rows(x)); },
        [=](Tape& t, Var x) {
          return t.mean_all(t.dot_rows(x, t.constant(same)));
        },
        [](Tape& t, Var x) {
          return t.mean_all(t.affine_cols(x, {0.5, -1.0, 2.0, 0.1}, {1, 2, 3, 4}));
        },
        [=](Tape& t, Var x) {
          return t.mean_all(t.concat_cols(x, t.constant(extra)));
        },
        [](Tape& t, Var x) { return t.mean_all(t.slice_cols(x, 1, 3)); },
        [](Tape& t, Var x) {
          const Var s = t.constant(Matrix::scalar(0.7));
          return t.mean_all(t.bcast_add(t.bcast_mul(t.bcast_sub(x, s), s), s));
        },
        // softmax feeding cvar (the actor objective core)
        [=](Tape& t, Var x) {
          Var p = t.softmax_rows(t.slice_cols(x, 0, 4));
          p = t.matmul(p, t.constant(lift));
          return t.mean_all(t.cvar_rows(p, atoms5, 0.6));
        },
    };
  };

  int probes = 0;
  while (probes < 120) {
    for (const auto& op : make_ops()) {
      gradcheck(op, random_matrix(rng, 3, 4, -1.2, 1.2));
      ++probes;
    }
  }

  // relu, clamp and reciprocal probed away from their kinks/poles
  for (int i = 0; i < 10; ++i) {
    gradcheck([](Tape& t, Var x) { return t.mean_all(t.relu(x)); },
              random_matrix(rng, 3, 4, 0.2, 1.5));
    gradcheck([](Tape& t, Var x) { return t.mean_all(t.relu(x)); },
              random_matrix(rng, 3, 4, -1.5, -0.2));
    gradcheck([](Tape& t, Var x) { return t.mean_all(t.clamp(x, -0.8, 0.8)); },
              random_matrix(rng, 3, 4, -0.6, 0.6));
    gradcheck([](Tape& t, Var x) { return t.mean_all(t.reciprocal(x)); },
              random_matrix(rng, 2, 2, 0.5, 2.0));
  }
}

TEST_CASE("optimizer: zero grads and zero decay leave parameters unchanged") {
  Rng rng(36);
  MlpSpec spec{3, {4}, 2};
  ParamSet p = racer::nn::init_mlp(spec, rng);
  const ParamSet before = p;
  AdamW opt(AdamConfig{0.01, 0.9, 0.999, 1e-8, 0.0});
  opt.step(p, p.zeros_like());
  for (std::size_t e = 0; e < p.size(); ++e) {
    for (std::size_t k = 0; k < p.entries()[e].tensor.size(); ++k) {
      CHECK(p.entries()[e].tensor.data[k] == before.entries()[e].tensor.data[k]);
    }
  }
}

TEST_CASE("optimizer: decoupled decay scales weights only") {
  Rng rng(37);
  MlpSpec spec{3, {4}, 2};
  ParamSet p = racer::nn::init_mlp(spec, rng);
  for (auto& e : p.entries()) {
    for (double& x : e.tensor.data) x = 1.0;  // nonzero biases too
  }
  AdamW opt(AdamConfig{0.01, 0.9, 0.999, 1e-8, 0.1});
  opt.step(p, p.zeros_like());
  for (const auto& e : p.entries()) {
    const bool weight = e.name.ends_with("/W");
    for (double x : e.tensor.data) {
      CHECK(x == doctest::Approx(weight ? 1.0 - 0.001 : 1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("optimizer: converges on a scalar quadratic") {
  ParamSet p;
  p.add("l0/W", Matrix::scalar(7.0));
  AdamW opt(AdamConfig{0.05, 0.9, 0.999, 1e-8, 0.0});
  for (int i = 0; i < 1000; ++i) {
    ParamSet g;
    g.add("l0/W", Matrix::scalar(2.0 * (p.at("l0/W").data[0] - 3.0)));
    opt.step(p, g);
  }
  CHECK(p.at("l0/W").data[0] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("optimizer: rejects non-finite gradients") {
  ParamSet p;
  p.add("l0/W", Matrix::scalar(1.0));
  ParamSet g;
  g.add("l0/W", Matrix::scalar(std::numeric_limits<double>::quiet_NaN()));
  AdamW opt(AdamConfig{});
  CHECK_THROWS_AS(opt.step(p, g), std::runtime_error);
}

TEST_CASE("polyak update") {
  ParamSet target, online;
  target.add("x", Matrix::scalar(0.0));
  online.add("x", Matrix::scalar(1.0));

  ParamSet t1 = target;
  racer::nn::polyak_update(t1, online, 1.0);
  CHECK(t1.at("x").data[0] == 1.0);

  ParamSet t0 = target;
  racer::nn::polyak_update(t0, online, 0.0);
  CHECK(t0.at("x").data[0] == 0.0);

  ParamSet th = target;
  racer::nn::polyak_update(th, online, 0.5);
  CHECK(th.at("x").data[0] == 0.5);
}

TEST_CASE("polyak update contracts toward the online parameters") {
  Rng rng(38);
  for (double tau : {0.01, 0.3, 1.0}) {
    ParamSet target, online;
    target.add("x", random_matrix(rng, 2, 3));
    online.add("x", random_matrix(rng, 2, 3));
    double before = 0.0, after = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
      before += std::abs(target.at("x").data[k] - online.at("x").data[k]);
    }
    racer::nn::polyak_update(target, online, tau);
    for (std::size_t k = 0; k < 6; ++k) {
      after += std::abs(target.at("x").data[k] - online.at("x").data[k]);
    }
    CHECK(after == doctest::Approx((1.0 - tau) * before).epsilon(1e-9));
  }
}

TEST_CASE("squashed gaussian: zero mean head and zero noise give zero action") {
  Rng rng(39);
  GaussianPolicy policy(PolicySpec{3, 2, {8}}, rng);
  for (auto& e : policy.params().entries()) {
    for (double& x : e.tensor.data) x = 0.0;
  }
  const auto s = policy.sample(std::vector<double>{0.5, -0.5, 1.0},
                               std::vector<double>{0.0, 0.0});
  CHECK(s.a_pre[0] == 0.0);
  CHECK(s.a_pre[1] == 0.0);
}

TEST_CASE("squashed gaussian: vanishing sigma is deterministic tanh(mu)") {
  Rng rng(40);
  GaussianPolicy policy(PolicySpec{2, 1, {8}, -20.0, 2.0}, rng);
  // Force the log-std head very negative via its output bias.
  Matrix& bias = policy.params().at("l1/b");
  bias(0, 1) = -18.0;
  const std::vector<double> obs = {0.3, -0.7};
  const auto mean = policy.mean_action(obs);
  for (int i = 0; i < 5; ++i) {
    const auto s = policy.sample(obs, rng);
    CHECK(s.a_pre[0] == doctest::Approx(mean[0]).epsilon(1e-6));
  }
}

TEST_CASE("squashed gaussian: log_prob matches a histogram density estimate") {
  Rng rng(41);
  GaussianPolicy policy(PolicySpec{1, 1, {8}}, rng);
  // Moderate spread so the histogram is well conditioned.
  policy.params().at("l1/b")(0, 0) = 0.4;               // mu
  policy.params().at("l1/b")(0, 1) = std::log(0.6);     // log_std
  const std::vector<double> obs = {0.0};

  const int n_samples = 1000000;
  const int n_bins = 80;
  std::vector<long> counts(n_bins, 0);
  for (int i = 0; i < n_samples; ++i) {
    const auto s = policy.sample(obs, rng);
    const int b = static_cast<int>((s.a_pre[0] + 1.0) / 2.0 * n_bins);
    ++counts[std::clamp(b, 0, n_bins - 1)];
  }
  const double bin_w = 2.0 / n_bins;
  for (double a : {-0.2, 0.1, 0.45, 0.7}) {
    const int b = static_cast<int>((a + 1.0) / 2.0 * n_bins);
    const double density = counts[b] / (n_samples * bin_w);
    // Invert the sample at the bin center to get the model's density there.
    const double center = -1.0 + (b + 0.5) * bin_w;
    const double u = std::atanh(center);
    const double noise = (u - 0.4) / 0.6;
    const auto s = policy.sample(obs, std::vector<double>{noise});
    CHECK(std::exp(s.log_prob) == doctest::Approx(density).epsilon(0.05));
  }
}

TEST_CASE("policy tape path matches the plain sampler") {
  Rng rng(42);
  GaussianPolicy policy(PolicySpec{3, 2, {16}}, rng);
  const std::vector<double> obs = {0.2, -1.0, 0.5};
  const std::vector<double> noise = {0.7, -0.3};

  Tape t;
  const auto trunk = policy.bind(t, false);
  Matrix obs_m = Matrix::row(obs);
  Matrix noise_m = Matrix::row(noise);
  const auto out = policy.forward_sample(t, trunk, t.leaf(obs_m, false), noise_m);
  const auto plain = policy.sample(obs, noise);
  CHECK(t.value(out.a_pre)(0, 0) == doctest::Approx(plain.a_pre[0]).epsilon(1e-12));
  CHECK(t.value(out.a_pre)(0, 1) == doctest::Approx(plain.a_pre[1]).epsilon(1e-12));
}
