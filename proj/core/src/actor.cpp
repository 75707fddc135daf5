#include "racer/actor.hpp"

#include <cmath>
#include <stdexcept>

namespace racer::actor {

std::vector<double> ActionSpace::to_hard(std::span<const double> a_pre) const {
  if (a_pre.size() != hard_lo.size()) {
    throw std::invalid_argument("action space: dim mismatch");
  }
  std::vector<double> out(a_pre.size());
  for (std::size_t d = 0; d < a_pre.size(); ++d) {
    out[d] = 0.5 * (hard_hi[d] - hard_lo[d]) * a_pre[d] +
             0.5 * (hard_hi[d] + hard_lo[d]);
  }
  return out;
}

namespace {

// Shared graph: policy sample -> hard rescale -> optional soft clip ->
// ensemble mixture CVaR.
struct CvarGraph {
  nn::Var loss;
  nn::Var mean_cvar;
  nn::MlpVars trunk;                 // policy leaves
  std::vector<nn::Var> v_plus_vars;  // aligned with limits.dims (may be empty)
};

CvarGraph build_cvar_objective(nn::Tape& tape, const critic::CriticEnsemble& ensemble,
                               const nn::GaussianPolicy& policy,
                               const ActionLimits& limits, const ActionSpace& space,
                               const nn::Matrix& states, risk::RiskLevel alpha,
                               const nn::Matrix& noise, bool policy_grad,
                               bool limits_grad, bool use_limits) {
  const int act_dim = policy.spec().act_dim;
  if (space.dim() != act_dim) throw std::invalid_argument("actor: action dim mismatch");
  limits.validate();

  CvarGraph out;
  const nn::Var obs = tape.constant(states);
  out.trunk = policy.bind(tape, policy_grad);
  const auto head = policy.forward_sample(tape, out.trunk, obs, noise);

  // (-1,1) -> hard bounds.
  std::vector<double> scale(act_dim), offset(act_dim);
  for (int d = 0; d < act_dim; ++d) {
    scale[d] = 0.5 * (space.hard_hi[d] - space.hard_lo[d]);
    offset[d] = 0.5 * (space.hard_hi[d] + space.hard_lo[d]);
  }
  const nn::Var a_hard = tape.affine_cols(head.a_pre, scale, offset);

  nn::Var a_applied = a_hard;
  if (use_limits && !limits.dims.empty()) {
    // Rebuild the action column by column, soft-clipping limited dims.
    std::vector<nn::Var> cols;
    cols.reserve(act_dim);
    for (int d = 0; d < act_dim; ++d) cols.push_back(tape.slice_cols(a_hard, d, d + 1));
    for (const auto& lim : limits.dims) {
      const nn::Var vm = tape.constant(nn::Matrix::scalar(lim.v_minus));
      const nn::Var vp = tape.leaf(nn::Matrix::scalar(lim.v_plus), limits_grad);
      out.v_plus_vars.push_back(vp);
      const nn::Var eta = tape.scale(tape.sub(vp, vm), 0.5);
      const nn::Var mu = tape.scale(tape.add(vp, vm), 0.5);
      const nn::Var u = tape.bcast_mul(tape.bcast_sub(cols.at(lim.dim), mu),
                                       tape.reciprocal(eta));
      cols.at(lim.dim) = tape.bcast_add(tape.bcast_mul(tape.tanh_(u), eta), mu);
    }
    a_applied = cols[0];
    for (int d = 1; d < act_dim; ++d) a_applied = tape.concat_cols(a_applied, cols[d]);
  }

  const nn::Var input = tape.concat_cols(obs, a_applied);
  nn::Var mix;
  for (int m = 0; m < ensemble.n_members(); ++m) {
    const nn::MlpVars net =
        nn::bind_mlp(tape, ensemble.member(m), ensemble.net_spec(), false);
    const nn::Var p = tape.softmax_rows(nn::mlp_apply(tape, net, input));
    mix = (m == 0) ? p : tape.add(mix, p);
  }
  mix = tape.scale(mix, 1.0 / ensemble.n_members());
  const nn::Var cv = tape.cvar_rows(mix, ensemble.grid().atoms(), alpha.alpha);
  out.mean_cvar = tape.mean_all(cv);
  out.loss = tape.scale(out.mean_cvar, -1.0);
  return out;
}

}  // namespace

ActorLossResult actor_loss(const critic::CriticEnsemble& ensemble,
                           const nn::GaussianPolicy& policy,
                           const ActionLimits& limits, const ActionSpace& space,
                           const nn::Matrix& states, risk::RiskLevel alpha,
                           const nn::Matrix& noise, bool use_limits) {
  nn::Tape tape;
  const CvarGraph graph =
      build_cvar_objective(tape, ensemble, policy, limits, space, states, alpha,
                           noise, /*policy_grad=*/true, /*limits_grad=*/false,
                           use_limits);

  ActorLossResult result;
  result.loss = tape.value(graph.loss).data[0];
  result.mean_cvar = tape.value(graph.mean_cvar).data[0];
  if (!std::isfinite(result.loss)) {
    throw std::runtime_error("actor_loss: non-finite loss");
  }
  tape.backward(graph.loss);
  result.policy_grads =
      nn::mlp_grads(tape, graph.trunk, policy.trunk_spec());
  return result;
}

LimitLossResult limit_loss(const critic::CriticEnsemble& ensemble,
                           const nn::GaussianPolicy& policy,
                           const ActionLimits& limits, const ActionSpace& space,
                           const nn::Matrix& states, risk::RiskLevel alpha,
                           const nn::Matrix& noise) {
  if (limits.dims.empty()) {
    throw std::invalid_argument("limit_loss: no limited dimensions");
  }
  nn::Tape tape;
  const CvarGraph graph =
      build_cvar_objective(tape, ensemble, policy, limits, space, states, alpha,
                           noise, /*policy_grad=*/false, /*limits_grad=*/true,
                           /*use_limits=*/true);

  LimitLossResult result;
  result.loss = tape.value(graph.loss).data[0];
  result.mean_cvar = tape.value(graph.mean_cvar).data[0];
  if (!std::isfinite(result.loss)) {
    throw std::runtime_error("limit_loss: non-finite loss");
  }
  tape.backward(graph.loss);
  for (const nn::Var vp : graph.v_plus_vars) {
    result.grad_v_plus.push_back(tape.grad(vp).data[0]);
  }
  return result;
}

}  // namespace racer::actor
