#pragma once

#include <span>
#include <vector>

#include "racer/mlp.hpp"
#include "racer/params.hpp"
#include "racer/rng.hpp"
#include "racer/tape.hpp"

namespace racer::nn {

struct PolicySpec {
  int obs_dim = 0;
  int act_dim = 0;
  std::vector<int> hidden = {256, 256};
  double log_std_min = -5.0;
  double log_std_max = 2.0;
};

/// Squashed-Gaussian actor head: a trunk MLP emits (mu, log_std) per action
/// dimension; actions are tanh(mu + sigma * noise), in (-1, 1) per dimension
/// before any rescaling or adaptive limits.
class GaussianPolicy {
 public:
  GaussianPolicy(PolicySpec spec, Rng& rng);

  struct Sample {
    std::vector<double> a_pre;  // tanh-squashed, in (-1,1)
    double log_prob = 0.0;      // includes the tanh change-of-variables term
  };

  /// Reparameterized sample with externally supplied standard-normal noise.
  Sample sample(std::span<const double> obs, std::span<const double> noise) const;
  Sample sample(std::span<const double> obs, Rng& rng) const;

  /// Deterministic head: tanh(mu(obs)).
  std::vector<double> mean_action(std::span<const double> obs) const;

  struct TapeOut {
    Var a_pre;     // [n, act_dim]
    Var mu;        // [n, act_dim]
    Var log_std;   // [n, act_dim], clamped
  };

  /// Tape path for actor updates; noise is a constant [n, act_dim] matrix.
  TapeOut forward_sample(Tape& tape, const MlpVars& trunk, Var obs,
                         const Matrix& noise) const;

  MlpVars bind(Tape& tape, bool requires_grad) const {
    return bind_mlp(tape, params_, trunk_, requires_grad);
  }

  const MlpSpec& trunk_spec() const { return trunk_; }
  const PolicySpec& spec() const { return spec_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  PolicySpec spec_;
  MlpSpec trunk_;
  ParamSet params_;
};

}  // namespace racer::nn
