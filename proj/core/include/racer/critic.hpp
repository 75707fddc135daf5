#pragma once

#include <functional>
#include <span>
#include <vector>

#include "racer/atom_grid.hpp"
#include "racer/batch.hpp"
#include "racer/mlp.hpp"
#include "racer/optimizer.hpp"
#include "racer/risk.hpp"
#include "racer/rng.hpp"

namespace racer::critic {

enum class Which { kOnline, kTarget };

/// Ensemble of categorical distributional critics over a shared atom grid.
/// Each member has an independently initialized network and its own delayed
/// target copy; member i's target tracks only member i.
class CriticEnsemble {
 public:
  CriticEnsemble(int n_members, int obs_dim, int act_dim, std::vector<int> hidden,
                 AtomGrid grid, Rng& rng);

  int n_members() const { return static_cast<int>(members_.size()); }
  const AtomGrid& grid() const { return grid_; }
  const nn::MlpSpec& net_spec() const { return spec_; }

  nn::ParamSet& member(int i) { return members_.at(i); }
  const nn::ParamSet& member(int i) const { return members_.at(i); }
  nn::ParamSet& target(int i) { return targets_.at(i); }
  const nn::ParamSet& target(int i) const { return targets_.at(i); }

  /// Softmax distribution over atoms for one member.
  risk::CategoricalDistribution evaluate(std::span<const double> state,
                                         std::span<const double> action, Which which,
                                         int member) const;

  /// All members at once.
  std::vector<risk::CategoricalDistribution> evaluate_all(
      std::span<const double> state, std::span<const double> action, Which which) const;

  /// Raw logits for a batch input [n, obs+act].
  nn::Matrix logits_plain(const nn::Matrix& input, Which which, int member) const;

  /// CVaR of the uniform mixture of all online member distributions.
  double ensemble_cvar(std::span<const double> state, std::span<const double> action,
                       risk::RiskLevel alpha) const;

  void polyak_targets(double tau);

 private:
  nn::MlpSpec spec_;
  AtomGrid grid_;
  std::vector<nn::ParamSet> members_;
  std::vector<nn::ParamSet> targets_;
};

/// Sampler interface for the actions the critic loss needs: the backup
/// action a' ~ pi(s') plus fresh in-distribution (limited) and pre-limit
/// action samples at s for the two entropy terms. Implemented by the actor
/// stack in training and by lookup tables in oracle tests.
struct SampledActions {
  std::vector<double> pre;      // before limits
  std::vector<double> applied;  // after limits
};
using ActionSampler =
    std::function<SampledActions(std::span<const double> state, Rng& rng)>;

struct CriticLossConfig {
  double gamma = 0.99;
  double entropy_in_coef = 1.0;   // entropy of Z at limited-policy actions
  double entropy_ood_coef = 1.0;  // entropy of Z at pre-limit actions
  bool entropy_terms = true;
};

struct CriticLossResult {
  double loss = 0.0;      // mean over members
  double kl = 0.0;        // mean KL term
  double ent_in = 0.0;    // mean in-distribution entropy
  double ent_ood = 0.0;   // mean OOD entropy
  std::vector<nn::ParamSet> member_grads;
};

/// Projected-KL distributional loss with the two entropy terms, one
/// independent target per member. Backup actions are sampled once per batch
/// element and shared across members. Terminal transitions project the bare
/// reward (no bootstrap term).
CriticLossResult critic_loss(const CriticEnsemble& ensemble,
                             const train::TransitionBatch& batch,
                             const ActionSampler& policy, const CriticLossConfig& cfg,
                             Rng& rng);

}  // namespace racer::critic
