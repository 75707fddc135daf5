#include "racer/critic.hpp"

#include <cmath>
#include <stdexcept>

namespace racer::critic {

namespace {

std::vector<double> softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - mx);
    total += p[j];
  }
  for (double& v : p) v /= total;
  return p;
}

}  // namespace

CriticEnsemble::CriticEnsemble(int n_members, int obs_dim, int act_dim,
                               std::vector<int> hidden, AtomGrid grid, Rng& rng)
    : grid_(grid) {
  if (n_members < 1) throw std::invalid_argument("critic ensemble: need >= 1 member");
  spec_.in_dim = obs_dim + act_dim;
  spec_.hidden = std::move(hidden);
  spec_.out_dim = grid_.n_atoms;
  for (int i = 0; i < n_members; ++i) {
    members_.push_back(nn::init_mlp(spec_, rng, 0.01));
    targets_.push_back(members_.back());
  }
}

risk::CategoricalDistribution CriticEnsemble::evaluate(std::span<const double> state,
                                                       std::span<const double> action,
                                                       Which which, int member) const {
  if (member < 0 || member >= n_members()) {
    throw std::out_of_range("critic ensemble: member index out of range");
  }
  std::vector<double> input(state.begin(), state.end());
  input.insert(input.end(), action.begin(), action.end());
  const nn::ParamSet& p =
      (which == Which::kOnline) ? members_[member] : targets_[member];
  const std::vector<double> logits = nn::mlp_forward_plain(p, spec_, input);
  return grid_.with_probs(softmax(logits));
}

std::vector<risk::CategoricalDistribution> CriticEnsemble::evaluate_all(
    std::span<const double> state, std::span<const double> action, Which which) const {
  std::vector<risk::CategoricalDistribution> out;
  out.reserve(members_.size());
  for (int i = 0; i < n_members(); ++i) out.push_back(evaluate(state, action, which, i));
  return out;
}

nn::Matrix CriticEnsemble::logits_plain(const nn::Matrix& input, Which which,
                                        int member) const {
  const nn::ParamSet& p =
      (which == Which::kOnline) ? members_.at(member) : targets_.at(member);
  return nn::mlp_forward_plain(p, spec_, input);
}

double CriticEnsemble::ensemble_cvar(std::span<const double> state,
                                     std::span<const double> action,
                                     risk::RiskLevel alpha) const {
  std::vector<double> mix(grid_.n_atoms, 0.0);
  for (int i = 0; i < n_members(); ++i) {
    const auto d = evaluate(state, action, Which::kOnline, i);
    for (int j = 0; j < grid_.n_atoms; ++j) mix[j] += d.probs[j];
  }
  for (double& v : mix) v /= n_members();
  return risk::cvar(grid_.with_probs(std::move(mix)), alpha);
}

void CriticEnsemble::polyak_targets(double tau) {
  for (int i = 0; i < n_members(); ++i) {
    nn::polyak_update(targets_[i], members_[i], tau);
  }
}

CriticLossResult critic_loss(const CriticEnsemble& ensemble,
                             const train::TransitionBatch& batch,
                             const ActionSampler& policy, const CriticLossConfig& cfg,
                             Rng& rng) {
  const int n = batch.size();
  const int n_atoms = ensemble.grid().n_atoms;
  const int act_dim = batch.actions_applied.cols;
  if (n == 0) throw std::invalid_argument("critic_loss: empty batch");

  // One backup action per batch element at s', and one fresh (pre, applied)
  // pair at s, shared by every member.
  nn::Matrix backup_actions(n, act_dim);
  nn::Matrix cur_applied(n, act_dim);
  nn::Matrix cur_pre(n, act_dim);
  for (int i = 0; i < n; ++i) {
    const SampledActions next_a = policy(batch.next_states.row_span(i), rng);
    const SampledActions cur_a = policy(batch.states.row_span(i), rng);
    for (int d = 0; d < act_dim; ++d) {
      backup_actions(i, d) = next_a.applied[d];
      cur_applied(i, d) = cur_a.applied[d];
      cur_pre(i, d) = cur_a.pre[d];
    }
  }

  const int obs_dim = batch.states.cols;
  auto concat = [&](const nn::Matrix& s, const nn::Matrix& a) {
    nn::Matrix out(n, obs_dim + act_dim);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < obs_dim; ++j) out(i, j) = s(i, j);
      for (int j = 0; j < act_dim; ++j) out(i, obs_dim + j) = a(i, j);
    }
    return out;
  };
  const nn::Matrix next_input = concat(batch.next_states, backup_actions);
  const nn::Matrix pred_input = concat(batch.states, batch.actions_applied);
  const nn::Matrix in_input = concat(batch.states, cur_applied);
  const nn::Matrix ood_input = concat(batch.states, cur_pre);

  CriticLossResult result;
  for (int m = 0; m < ensemble.n_members(); ++m) {
    // Projected target from this member's delayed copy; constant w.r.t. the
    // online parameters.
    const nn::Matrix next_logits =
        ensemble.logits_plain(next_input, Which::kTarget, m);
    nn::Matrix targets(n, n_atoms);
    nn::Matrix target_entropy_const(n, 1);
    for (int i = 0; i < n; ++i) {
      risk::CategoricalDistribution t;
      if (batch.done[i]) {
        t = project_scalar(ensemble.grid(), batch.rewards[i]);
      } else {
        const auto src = ensemble.grid().with_probs(
            softmax(std::span<const double>(next_logits.row_span(i))));
        t = project_target(ensemble.grid(), src, batch.rewards[i], cfg.gamma);
      }
      double tlogt = 0.0;
      for (int j = 0; j < n_atoms; ++j) {
        targets(i, j) = t.probs[j];
        if (t.probs[j] > 0.0) tlogt += t.probs[j] * std::log(t.probs[j]);
      }
      target_entropy_const(i, 0) = tlogt;
    }

    nn::Tape tape;
    const nn::MlpVars vars = nn::bind_mlp(tape, ensemble.member(m),
                                          ensemble.net_spec(), true);
    const nn::Var logits = nn::mlp_apply(tape, vars, tape.constant(pred_input));
    const nn::Var lp = tape.log_softmax_rows(logits);
    const nn::Var cross = tape.dot_rows(tape.constant(targets), lp);
    const nn::Var kl_rows = tape.sub(tape.constant(target_entropy_const), cross);
    const nn::Var kl_mean = tape.mean_all(kl_rows);

    nn::Var total = kl_mean;
    double ent_in_val = 0.0, ent_ood_val = 0.0;
    if (cfg.entropy_terms) {
      auto entropy_mean = [&](const nn::Matrix& input) {
        const nn::Var lg = nn::mlp_apply(tape, vars, tape.constant(input));
        const nn::Var p = tape.softmax_rows(lg);
        const nn::Var h =
            tape.sub(tape.logsumexp_rows(lg), tape.dot_rows(p, lg));
        return tape.mean_all(h);
      };
      const nn::Var h_in = entropy_mean(in_input);
      const nn::Var h_ood = entropy_mean(ood_input);
      ent_in_val = tape.value(h_in).data[0];
      ent_ood_val = tape.value(h_ood).data[0];
      total = tape.add(total, tape.scale(h_in, cfg.entropy_in_coef));
      total = tape.sub(total, tape.scale(h_ood, cfg.entropy_ood_coef));
    }

    const double loss_val = tape.value(total).data[0];
    if (!std::isfinite(loss_val)) {
      throw std::runtime_error("critic_loss: non-finite loss");
    }
    tape.backward(total);

    result.loss += loss_val;
    result.kl += tape.value(kl_mean).data[0];
    result.ent_in += ent_in_val;
    result.ent_ood += ent_ood_val;
    result.member_grads.push_back(
        nn::mlp_grads(tape, vars, ensemble.net_spec()));
  }

  const double inv_n = 1.0 / ensemble.n_members();
  result.loss *= inv_n;
  result.kl *= inv_n;
  result.ent_in *= inv_n;
  result.ent_ood *= inv_n;
  return result;
}

}  // namespace racer::critic
