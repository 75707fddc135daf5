#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "racer/rng.hpp"

namespace racer::env {

/// Desk-scale driving environment: kinematic bicycle on an uneven terrain
/// field with a stochastic rollover hazard that grows with speed, steering
/// aggression, and local roughness. Non-episodic; episodes end only on
/// failure (rollover), which terminates with zero reward.
struct CliffCarConfig {
  double dt = 0.1;               // s
  double wheelbase = 0.3;        // m
  double max_speed = 2.0;        // m/s at speed_cmd = 1
  double max_steer_angle = 0.4;  // rad at |steer| = 1
  double speed_tau = 0.3;        // s, first-order speed tracking
  double hazard_k = 12.0;        // logistic steepness
  double hazard_threshold = 1.5;
  double rough_min = 0.5;
  double rough_max = 1.5;
  double goal_sigma = 3.0;   // m, goal resampling spread
  double goal_radius = 0.4;  // m, checkpoint capture radius
  double min_goal_dist = 0.5;
  std::uint64_t terrain_seed = 0;
};

struct EnvState {
  std::array<double, 2> position{0.0, 0.0};
  std::array<double, 2> velocity{0.0, 0.0};
  double heading = 0.0;
  double speed = 0.0;  // scalar forward speed, m/s
  std::array<double, 2> goal{1.0, 0.0};
  double roughness = 1.0;  // terrain roughness at position
};

struct StepResult {
  EnvState next_state;
  double reward = 0.0;  // speed-made-good v . g_hat; 0 on failure
  bool failed = false;
  bool done = false;
};

/// One JSONL trajectory record (fixed key order; byte-stable).
std::string step_result_json(const StepResult& r);

class CliffCar {
 public:
  static constexpr int kActDim = 2;  // (steer in [-1,1], speed_cmd in [0,1])
  static constexpr int kObsDim = 6;

  explicit CliffCar(CliffCarConfig cfg = {});

  const CliffCarConfig& config() const { return cfg_; }

  /// Pure stepping kernel: same (state, action, rng draw) -> same result.
  StepResult step_kernel(const EnvState& state, double steer, double speed_cmd,
                         Rng& rng) const;

  /// Stateful interface used by the trainer.
  EnvState reset(std::uint64_t seed);
  StepResult step(double steer, double speed_cmd, Rng& rng);
  const EnvState& state() const { return state_; }

  /// Failures counted at reset time: one per failure-triggered reset.
  long failures() const { return failures_; }

  /// Observation: [speed, cos(heading err to goal), sin(heading err),
  /// capped goal distance, roughness, speed-made-good].
  std::vector<double> observation(const EnvState& s) const;
  std::vector<double> observation() const { return observation(state_); }

  double roughness_at(double x, double y) const;
  double failure_probability(const EnvState& state, double steer,
                             double speed_cmd) const;

 private:
  std::array<double, 2> sample_goal(const std::array<double, 2>& around, Rng& rng) const;

  CliffCarConfig cfg_;
  EnvState state_;
  bool pending_failure_ = false;  // last step failed; next reset counts it
  long failures_ = 0;
  // Terrain field coefficients, derived from terrain_seed.
  std::array<double, 3> freq_x_{}, freq_y_{}, phase_{};
};

}  // namespace racer::env
