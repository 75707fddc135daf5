#pragma once

#include <vector>

#include "racer/action_limits.hpp"
#include "racer/critic.hpp"
#include "racer/policy.hpp"

namespace racer::actor {

/// Rescaling from the policy's tanh range (-1,1) into hard action bounds.
struct ActionSpace {
  std::vector<double> hard_lo;
  std::vector<double> hard_hi;

  int dim() const { return static_cast<int>(hard_lo.size()); }
  std::vector<double> to_hard(std::span<const double> a_pre) const;
};

struct ActorLossResult {
  double loss = 0.0;       // -mean ensemble CVaR
  double mean_cvar = 0.0;  // diagnostic
  nn::ParamSet policy_grads;
};

/// CVaR actor objective: actions are sampled with reparameterized noise,
/// rescaled to hard bounds, soft-clipped by the current limits, and scored
/// by the CVaR of the online ensemble mixture. Gradients flow into the
/// policy trunk only; critic parameters and limits are constants here.
ActorLossResult actor_loss(const critic::CriticEnsemble& ensemble,
                           const nn::GaussianPolicy& policy,
                           const ActionLimits& limits, const ActionSpace& space,
                           const nn::Matrix& states, risk::RiskLevel alpha,
                           const nn::Matrix& noise, bool use_limits);

struct LimitLossResult {
  double loss = 0.0;
  double mean_cvar = 0.0;
  std::vector<double> grad_v_plus;  // aligned with limits.dims
};

/// Limit-growth objective: same CVaR score at soft-clipped actions, but the
/// only gradient taken is with respect to each v_plus. The policy is frozen;
/// v_minus stays fixed at the cautious floor.
LimitLossResult limit_loss(const critic::CriticEnsemble& ensemble,
                           const nn::GaussianPolicy& policy,
                           const ActionLimits& limits, const ActionSpace& space,
                           const nn::Matrix& states, risk::RiskLevel alpha,
                           const nn::Matrix& noise);

}  // namespace racer::actor
