#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "racer/actor.hpp"

using racer::Rng;
using racer::actor::ActionLimits;
using racer::actor::ActionSpace;
using racer::actor::actor_loss;
using racer::actor::apply_limits;
using racer::actor::limit_loss;
using racer::actor::softclip;
using racer::critic::AtomGrid;
using racer::critic::CriticEnsemble;
using racer::critic::Which;
using racer::nn::GaussianPolicy;
using racer::nn::Matrix;
using racer::nn::PolicySpec;
using racer::nn::Tape;
using racer::nn::Var;
using racer::risk::RiskLevel;

namespace {

ActionLimits speed_limits(double v_minus, double v_plus) {
  ActionLimits lims;
  lims.dims.push_back({1, v_minus, v_plus, 0.0, 1.0});
  return lims;
}

ActionSpace steer_speed_space() { return ActionSpace{{-1.0, 0.0}, {1.0, 1.0}}; }

Matrix random_states(Rng& rng, int n, int dim) {
  Matrix m(n, dim);
  for (double& x : m.data) x = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("softclip: midpoint is a fixed point") {
  CHECK(softclip(0.25, -0.5, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(softclip(0.0, -1.0, 1.0) == 0.0);
}

TEST_CASE("softclip: unit limits at a=0.5 give tanh(0.5)") {
  CHECK(softclip(0.5, -1.0, 1.0) == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  CHECK(softclip(0.5, -1.0, 1.0) == doctest::Approx(0.46212).epsilon(1e-4));
}

TEST_CASE("softclip: asymptotes to the bounds") {
  CHECK(softclip(1e9, 0.2, 0.8) == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(softclip(-1e9, 0.2, 0.8) == doctest::Approx(0.2).epsilon(1e-9));
  // strictly inside wherever tanh has not saturated to 1.0 in floating point
  CHECK(softclip(2.0, 0.2, 0.8) < 0.8);
  CHECK(softclip(-2.0, 0.2, 0.8) > 0.2);
}

TEST_CASE("softclip: degenerate limits are rejected") {
  CHECK_THROWS(softclip(0.0, 0.5, 0.5));
  CHECK_THROWS(softclip(0.0, 0.7, 0.5));
}

TEST_CASE("softclip: strictly monotone with bounded clip error") {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const double vm = rng.uniform(-2.0, 0.0);
    const double vp = vm + rng.uniform(0.1, 2.0);
    const double eta = 0.5 * (vp - vm);
    const double mu = 0.5 * (vp + vm);

    double prev = -1e18;
    for (double a = mu - 3 * eta; a <= mu + 3 * eta; a += eta / 7) {
      const double y = softclip(a, vm, vp);
      CHECK(y > prev);
      prev = y;
    }
    // |softclip - clip| at the clip corner |a - mu| = eta
    const double corner = std::abs(softclip(mu + eta, vm, vp) - (mu + eta));
    CHECK(corner <= eta * (1.0 - std::tanh(1.0)) + 1e-12);
    // and it vanishes toward the midpoint
    CHECK(std::abs(softclip(mu + 1e-4, vm, vp) - (mu + 1e-4)) < 1e-8);
  }
}

TEST_CASE("softclip: output moves continuously as limits move") {
  Rng rng(72);
  for (int trial = 0; trial < 200; ++trial) {
    const double vm = 0.0;
    const double vp = rng.uniform(0.2, 1.0);
    const double a = rng.uniform(-0.5, 1.5);
    const double delta = 1e-5;
    const double jump = std::abs(softclip(a, vm, vp + delta) - softclip(a, vm, vp));
    CHECK(jump <= 5 * delta);
  }
}

TEST_CASE("apply_limits: fully open limits barely move interior actions") {
  const ActionLimits lims = speed_limits(0.0, 1.0);
  for (double a : {0.3, 0.4, 0.5, 0.6, 0.7}) {
    const auto out = apply_limits(std::vector<double>{0.1, a}, lims);
    CHECK(out[0] == 0.1);  // unlimited dim untouched
    CHECK(std::abs(out[1] - a) <= 0.05 * 1.0);
  }
  // Exactly unchanged at the midpoint.
  const auto mid = apply_limits(std::vector<double>{-0.4, 0.5}, lims);
  CHECK(mid[1] == 0.5);
}

TEST_CASE("actor_loss at alpha=0 equals the negative mean of mixture means") {
  Rng rng(73);
  const int n = 6, obs_dim = 3, act_dim = 2;
  GaussianPolicy policy(PolicySpec{obs_dim, act_dim, {12}}, rng);
  CriticEnsemble ensemble(3, obs_dim, act_dim, {10}, AtomGrid(0.0, 5.0, 21), rng);
  const ActionLimits lims = speed_limits(0.05, 0.6);
  const ActionSpace space = steer_speed_space();
  const Matrix states = random_states(rng, n, obs_dim);
  Matrix noise(n, act_dim);
  for (double& x : noise.data) x = rng.normal();

  const auto res = actor_loss(ensemble, policy, lims, space, states, RiskLevel(0.0),
                              noise, true);

  // Independent recomputation through the plain (tapeless) path.
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> obs(states.row_span(i).begin(), states.row_span(i).end());
    std::vector<double> nz(noise.row_span(i).begin(), noise.row_span(i).end());
    const auto smp = policy.sample(obs, nz);
    const auto applied = apply_limits(space.to_hard(smp.a_pre), lims);
    double mixture_mean = 0.0;
    for (int m = 0; m < 3; ++m) {
      mixture_mean += ensemble.evaluate(obs, applied, Which::kOnline, m).mean();
    }
    acc += mixture_mean / 3.0;
  }
  CHECK(res.loss == doctest::Approx(-acc / n).epsilon(1e-9));
}

TEST_CASE("actor_loss: critic constant in the action gives zero policy gradient") {
  Rng rng(74);
  GaussianPolicy policy(PolicySpec{2, 2, {8}}, rng);
  CriticEnsemble ensemble(2, 2, 2, {8}, AtomGrid(0.0, 1.0, 5), rng);
  for (int m = 0; m < 2; ++m) {
    for (auto& e : ensemble.member(m).entries()) {
      for (double& x : e.tensor.data) x = 0.0;
    }
  }
  const Matrix states = random_states(rng, 4, 2);
  Matrix noise(4, 2);
  for (double& x : noise.data) x = rng.normal();
  const auto res = actor_loss(ensemble, policy, speed_limits(0.0, 0.8),
                              steer_speed_space(), states, RiskLevel(0.5), noise, true);
  for (const auto& e : res.policy_grads.entries()) {
    for (double g : e.tensor.data) CHECK(g == 0.0);
  }
}

TEST_CASE("actor_loss gradient matches finite differences") {
  Rng rng(75);
  GaussianPolicy policy(PolicySpec{2, 2, {6}}, rng);
  CriticEnsemble ensemble(2, 2, 2, {6}, AtomGrid(0.0, 2.0, 9), rng);
  const ActionLimits lims = speed_limits(0.05, 0.7);
  const ActionSpace space = steer_speed_space();
  const Matrix states = random_states(rng, 3, 2);
  Matrix noise(3, 2);
  for (double& x : noise.data) x = rng.normal();
  const RiskLevel alpha(0.6);

  const auto res =
      actor_loss(ensemble, policy, lims, space, states, alpha, noise, true);

  const double eps = 1e-5;
  for (std::size_t en = 0; en < policy.params().size(); ++en) {
    auto& tensor = policy.params().entries()[en].tensor;
    for (std::size_t k = 0; k < tensor.size(); k += 5) {
      const double saved = tensor.data[k];
      tensor.data[k] = saved + eps;
      const double up = actor_loss(ensemble, policy, lims, space, states, alpha,
                                   noise, true).loss;
      tensor.data[k] = saved - eps;
      const double dn = actor_loss(ensemble, policy, lims, space, states, alpha,
                                   noise, true).loss;
      tensor.data[k] = saved;
      const double fd = (up - dn) / (2 * eps);
      const double analytic = res.policy_grads.entries()[en].tensor.data[k];
      const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-4});
      CHECK(std::abs(fd - analytic) / scale <= 1e-3);
    }
  }
}

TEST_CASE("actor_loss: shifting all atoms shifts the loss, not the gradient") {
  Rng rng(76);
  GaussianPolicy policy(PolicySpec{2, 2, {8}}, rng);
  const double shift = 2.5;
  CriticEnsemble e1(2, 2, 2, {8}, AtomGrid(0.0, 1.0, 9), rng);
  CriticEnsemble e2(2, 2, 2, {8}, AtomGrid(shift, 1.0 + shift, 9), rng);
  for (int m = 0; m < 2; ++m) {
    e2.member(m) = e1.member(m);
    e2.target(m) = e1.target(m);
  }
  const ActionLimits lims = speed_limits(0.05, 0.7);
  const ActionSpace space = steer_speed_space();
  const Matrix states = random_states(rng, 4, 2);
  Matrix noise(4, 2);
  for (double& x : noise.data) x = rng.normal();
  const RiskLevel alpha(0.7);

  const auto r1 = actor_loss(e1, policy, lims, space, states, alpha, noise, true);
  const auto r2 = actor_loss(e2, policy, lims, space, states, alpha, noise, true);
  CHECK(r2.loss == doctest::Approx(r1.loss - shift).epsilon(1e-9));
  for (std::size_t en = 0; en < r1.policy_grads.size(); ++en) {
    for (std::size_t k = 0; k < r1.policy_grads.entries()[en].tensor.size(); ++k) {
      CHECK(r2.policy_grads.entries()[en].tensor.data[k] ==
            doctest::Approx(r1.policy_grads.entries()[en].tensor.data[k])
                .epsilon(1e-9));
    }
  }
}

namespace {

// Single linear-layer critic whose logits respond to the action dimension
// directly; column profile chosen by the caller.
CriticEnsemble handcrafted_critic(Rng& rng, int n_members, int n_atoms,
                                  const std::vector<std::vector<double>>& action_rows) {
  CriticEnsemble e(n_members, 2, 2, {}, AtomGrid(0.0, 1.0, n_atoms), rng);
  for (int m = 0; m < n_members; ++m) {
    auto& w = e.member(m).at("l0/W");
    auto& b = e.member(m).at("l0/b");
    for (double& x : w.data) x = 0.0;
    for (double& x : b.data) x = 0.0;
    // Input layout: [s0, s1, steer, speed]; drive logits from the speed dim.
    for (int j = 0; j < n_atoms; ++j) w(3, j) = action_rows[m][j];
  }
  return e;
}

}  // namespace

TEST_CASE("limit_loss: a confidently increasing critic pushes v_plus up") {
  Rng rng(77);
  const int n_atoms = 5;
  // Higher speed shifts mass to higher atoms, same for both members.
  std::vector<double> row(n_atoms);
  for (int j = 0; j < n_atoms; ++j) row[j] = 4.0 * (j - (n_atoms - 1) / 2.0);
  CriticEnsemble e = handcrafted_critic(rng, 2, n_atoms, {row, row});
  GaussianPolicy policy(PolicySpec{2, 2, {6}}, rng);

  const Matrix states = random_states(rng, 8, 2);
  Matrix noise(8, 2);
  for (double& x : noise.data) x = rng.normal();
  const auto res = limit_loss(e, policy, speed_limits(0.05, 0.4), steer_speed_space(),
                              states, RiskLevel(0.8), noise);
  CHECK(res.grad_v_plus[0] < 0.0);  // v_plus -= lr * grad grows the limit
}

TEST_CASE("limit_loss: ensemble disagreement above v_plus halts growth") {
  Rng rng(78);
  const int n_atoms = 5;
  std::vector<double> up(n_atoms), down(n_atoms);
  for (int j = 0; j < n_atoms; ++j) {
    up[j] = 2.0 * (j - 2.0);
    down[j] = (j == 0) ? 14.0 : -2.0;  // pessimist: fast speeds mean the 0 atom
  }
  CriticEnsemble e = handcrafted_critic(rng, 2, n_atoms, {up, down});
  GaussianPolicy policy(PolicySpec{2, 2, {6}}, rng);

  const Matrix states = random_states(rng, 8, 2);
  Matrix noise(8, 2);
  for (double& x : noise.data) x = rng.normal();
  const auto res = limit_loss(e, policy, speed_limits(0.05, 0.4), steer_speed_space(),
                              states, RiskLevel(0.8), noise);
  CHECK(res.grad_v_plus[0] >= -1e-12);
}

TEST_CASE("limit_loss: critic constant in the action leaves v_plus alone") {
  Rng rng(79);
  CriticEnsemble e(2, 2, 2, {8}, AtomGrid(0.0, 1.0, 5), rng);
  for (int m = 0; m < 2; ++m) {
    for (auto& en : e.member(m).entries()) {
      for (double& x : en.tensor.data) x = 0.0;
    }
  }
  GaussianPolicy policy(PolicySpec{2, 2, {6}}, rng);
  const Matrix states = random_states(rng, 4, 2);
  Matrix noise(4, 2);
  for (double& x : noise.data) x = rng.normal();
  const auto res = limit_loss(e, policy, speed_limits(0.1, 0.5), steer_speed_space(),
                              states, RiskLevel(0.5), noise);
  CHECK(res.grad_v_plus[0] == 0.0);
}

TEST_CASE("limit_loss gradient matches finite differences") {
  Rng rng(80);
  GaussianPolicy policy(PolicySpec{2, 2, {6}}, rng);
  CriticEnsemble e(2, 2, 2, {6}, AtomGrid(0.0, 2.0, 9), rng);
  const ActionSpace space = steer_speed_space();
  const Matrix states = random_states(rng, 4, 2);
  Matrix noise(4, 2);
  for (double& x : noise.data) x = rng.normal();
  const RiskLevel alpha(0.6);

  const double vp = 0.55;
  const auto res =
      limit_loss(e, policy, speed_limits(0.05, vp), space, states, alpha, noise);
  const double eps = 1e-6;
  const double up = limit_loss(e, policy, speed_limits(0.05, vp + eps), space, states,
                               alpha, noise).loss;
  const double dn = limit_loss(e, policy, speed_limits(0.05, vp - eps), space, states,
                               alpha, noise).loss;
  const double fd = (up - dn) / (2 * eps);
  const double scale = std::max({std::abs(fd), std::abs(res.grad_v_plus[0]), 1e-6});
  CHECK(std::abs(fd - res.grad_v_plus[0]) / scale <= 1e-3);
}

TEST_CASE("softclip tape composition matches finite differences in a and v_plus") {
  // The same graph shape the limit objective uses, in isolation.
  auto value = [](double a, double vm, double vp) {
    Tape t;
    const Var av = t.leaf(Matrix::scalar(a), true);
    const Var vmv = t.constant(Matrix::scalar(vm));
    const Var vpv = t.leaf(Matrix::scalar(vp), true);
    const Var eta = t.scale(t.sub(vpv, vmv), 0.5);
    const Var mu = t.scale(t.add(vpv, vmv), 0.5);
    const Var u = t.bcast_mul(t.bcast_sub(av, mu), t.reciprocal(eta));
    const Var y = t.bcast_add(t.bcast_mul(t.tanh_(u), eta), mu);
    return std::tuple<Tape, Var, Var, Var>(std::move(t), y, av, vpv);
  };

  Rng rng(81);
  for (int trial = 0; trial < 30; ++trial) {
    const double a = rng.uniform(-1.0, 2.0);
    const double vm = 0.0;
    const double vp = rng.uniform(0.3, 1.0);
    auto [t, y, av, vpv] = value(a, vm, vp);
    CHECK(t.value(y).data[0] == doctest::Approx(softclip(a, vm, vp)).epsilon(1e-12));
    t.backward(y);
    const double ga = t.grad(av).data[0];
    const double gp = t.grad(vpv).data[0];

    const double eps = 1e-6;
    const double fda = (softclip(a + eps, vm, vp) - softclip(a - eps, vm, vp)) / (2 * eps);
    const double fdp = (softclip(a, vm, vp + eps) - softclip(a, vm, vp - eps)) / (2 * eps);
    CHECK(ga == doctest::Approx(fda).epsilon(1e-3));
    CHECK(gp == doctest::Approx(fdp).epsilon(1e-3));
  }
}
