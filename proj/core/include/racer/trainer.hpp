#pragma once

#include <memory>
#include <string>

#include "racer/actor.hpp"
#include "racer/cliffcar.hpp"
#include "racer/critic.hpp"
#include "racer/metrics.hpp"
#include "racer/policy.hpp"
#include "racer/replay.hpp"
#include "racer/trainer_config.hpp"

namespace racer::train {

struct RunArtifacts {
  long cum_failures = 0;
  long cum_failures_fast = 0;
  double final_avg_speed = 0.0;
  double final_avg_return = 0.0;
  double v_plus_final = 0.0;
  bool aborted = false;
  std::string abort_reason;
  std::string metrics_path;
  std::string checkpoint_path;
};

struct EvalResult {
  double avg_speed = 0.0;
  long failures = 0;
  double avg_return = 0.0;
};

/// Deterministic-mean-action rollout of a frozen policy.
EvalResult evaluate_policy(const nn::GaussianPolicy& policy,
                           const actor::ActionLimits& limits,
                           const actor::ActionSpace& space, env::CliffCar& env,
                           int n_episodes, int max_steps, std::uint64_t seed,
                           bool use_limits);

/// Off-policy training loop: per environment step, store the transition,
/// then utd_ratio critic updates (each with a polyak target update), one
/// actor update and one limit update. Single-threaded and deterministic for
/// a fixed seed.
class Trainer {
 public:
  Trainer(TrainerConfig cfg, std::string out_dir);
  ~Trainer();

  RunArtifacts run();

  // Component access for tests and tools.
  const TrainerConfig& config() const { return cfg_; }
  nn::GaussianPolicy& policy();
  critic::CriticEnsemble& ensemble();
  actor::ActionLimits& limits();
  env::CliffCar& environment();
  const ReplayBuffer& replay() const;
  double effective_alpha() const;  // 0 under the risk-neutral ablation

  void save_checkpoint(const std::string& path) const;

 private:
  struct Impl;
  TrainerConfig cfg_;
  std::string out_dir_;
  std::unique_ptr<Impl> impl_;
};

/// Frozen model reconstructed from a checkpoint.
struct LoadedModel {
  int obs_dim = 0;
  int act_dim = 0;
  double alpha = 0.0;
  double gamma = 0.0;
  bool use_limits = true;
  actor::ActionLimits limits;
  critic::AtomGrid grid;
  nn::GaussianPolicy policy;
  critic::CriticEnsemble ensemble;

  LoadedModel(nn::GaussianPolicy p, critic::CriticEnsemble e)
      : policy(std::move(p)), ensemble(std::move(e)) {}
};

LoadedModel load_model(const std::string& checkpoint_path);

}  // namespace racer::train
