#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "racer/cliffcar.hpp"

namespace racer::train {

struct AblationFlags {
  bool no_epistemic = false;  // N = 1, entropy terms off
  bool no_limits = false;     // limits pinned fully open
  bool risk_neutral = false;  // alpha = 0
};

/// Every knob of a training run. Values here are the library defaults; a
/// JSON config file may override any subset (unknown keys are rejected).
struct TrainerConfig {
  double alpha = 0.9;
  double gamma = 0.99;
  int utd_ratio = 8;
  int ensemble_n = 5;

  int n_atoms = 51;
  double v_min = 0.0;
  double v_max = -1.0;  // <= v_min means: derive as r_max / (1 - gamma)

  std::vector<int> hidden = {256, 256};
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double limit_lr = 1e-3;
  double tau = 0.005;
  double weight_decay = 1e-4;        // critic networks
  double actor_weight_decay = 0.0;   // keeps policy pre-activations moderate
  int batch_size = 256;
  std::uint64_t buffer_capacity = 200000;

  std::uint64_t seed = 0;
  long total_steps = 100000;
  int warmup_steps = 1000;

  double entropy_in_coef = 1.0;
  double entropy_ood_coef = 1.0;

  // Adaptive limits on the speed_cmd dimension (hard range [0, 1]).
  double v_minus = 0.05;
  double limit_init_fraction = 0.2;     // v_plus starts this far above v_minus
  double limit_eps_gap_fraction = 0.01; // min v_plus - v_minus, in hard range units
  int limit_warmup_steps = 0;           // env steps before v_plus updates begin

  int metrics_every = 500;
  double fast_fail_speed = 1.0;  // m/s; failures above this speed count as fast
  double log_std_min = -5.0;
  double log_std_max = 2.0;

  int eval_episodes = 10;
  int eval_max_steps = 400;

  AblationFlags ablations;
  env::CliffCarConfig env;

  void validate() const;
  double derived_v_max() const;
};

/// Strict JSON round trip. load rejects unknown keys with a descriptive
/// error; save writes every field.
TrainerConfig load_trainer_config(const std::string& path);
TrainerConfig trainer_config_from_json_text(const std::string& text);
std::string trainer_config_to_json_text(const TrainerConfig& cfg);

}  // namespace racer::train
