#include "racer/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace racer::nn {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2*pi)
constexpr double kTanhEps = 1e-6;
}  // namespace

GaussianPolicy::GaussianPolicy(PolicySpec spec, Rng& rng) : spec_(std::move(spec)) {
  trunk_.in_dim = spec_.obs_dim;
  trunk_.hidden = spec_.hidden;
  trunk_.out_dim = 2 * spec_.act_dim;
  params_ = init_mlp(trunk_, rng, 0.01);
}

GaussianPolicy::Sample GaussianPolicy::sample(std::span<const double> obs,
                                              std::span<const double> noise) const {
  if (static_cast<int>(noise.size()) != spec_.act_dim) {
    throw std::invalid_argument("policy: noise dim mismatch");
  }
  const std::vector<double> head = mlp_forward_plain(params_, trunk_, obs);
  Sample s;
  s.a_pre.resize(spec_.act_dim);
  for (int d = 0; d < spec_.act_dim; ++d) {
    const double mu = head[d];
    const double log_std =
        std::clamp(head[spec_.act_dim + d], spec_.log_std_min, spec_.log_std_max);
    const double sigma = std::exp(log_std);
    const double u = mu + sigma * noise[d];
    const double a = std::tanh(u);
    s.a_pre[d] = a;
    s.log_prob += -0.5 * noise[d] * noise[d] - log_std - kHalfLog2Pi;
    s.log_prob -= std::log(1.0 - a * a + kTanhEps);
  }
  return s;
}

GaussianPolicy::Sample GaussianPolicy::sample(std::span<const double> obs,
                                              Rng& rng) const {
  std::vector<double> noise(spec_.act_dim);
  for (double& n : noise) n = rng.normal();
  return sample(obs, noise);
}

std::vector<double> GaussianPolicy::mean_action(std::span<const double> obs) const {
  const std::vector<double> head = mlp_forward_plain(params_, trunk_, obs);
  std::vector<double> a(spec_.act_dim);
  for (int d = 0; d < spec_.act_dim; ++d) a[d] = std::tanh(head[d]);
  return a;
}

GaussianPolicy::TapeOut GaussianPolicy::forward_sample(Tape& tape,
                                                       const MlpVars& trunk, Var obs,
                                                       const Matrix& noise) const {
  const Var head = mlp_apply(tape, trunk, obs);
  TapeOut out;
  out.mu = tape.slice_cols(head, 0, spec_.act_dim);
  out.log_std = tape.clamp(tape.slice_cols(head, spec_.act_dim, 2 * spec_.act_dim),
                           spec_.log_std_min, spec_.log_std_max);
  const Var sigma = tape.exp_(out.log_std);
  const Var eps = tape.constant(noise);
  const Var u = tape.add(out.mu, tape.mul(sigma, eps));
  out.a_pre = tape.tanh_(u);
  return out;
}

}  // namespace racer::nn
