#include "racer/cliffcar.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace racer::env {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double norm2(const std::array<double, 2>& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1]);
}

}  // namespace

CliffCar::CliffCar(CliffCarConfig cfg) : cfg_(cfg) {
  if (cfg_.dt <= 0 || cfg_.max_speed <= 0 || cfg_.rough_min > cfg_.rough_max) {
    throw std::invalid_argument("cliffcar: bad config");
  }
  Rng terrain(cfg_.terrain_seed);
  for (int k = 0; k < 3; ++k) {
    freq_x_[k] = terrain.uniform(0.3, 1.2);
    freq_y_[k] = terrain.uniform(0.3, 1.2);
    phase_[k] = terrain.uniform(0.0, 2.0 * M_PI);
  }
}

double CliffCar::roughness_at(double x, double y) const {
  // Smooth deterministic field in [rough_min, rough_max].
  double s = 0.0;
  s += std::sin(freq_x_[0] * x + freq_y_[0] * y + phase_[0]);
  s += std::sin(freq_x_[1] * x - freq_y_[1] * y + phase_[1]);
  s += std::sin(freq_x_[2] * (x + y) + phase_[2]);
  s /= 3.0;
  const double mid = 0.5 * (cfg_.rough_min + cfg_.rough_max);
  const double amp = 0.5 * (cfg_.rough_max - cfg_.rough_min);
  return mid + amp * s;
}

double CliffCar::failure_probability(const EnvState& state, double steer,
                                     double speed_cmd) const {
  // Hazard is evaluated at the speed reached after tracking the command, so
  // it is monotone in speed_cmd and |steer| for a fixed state.
  const double blend = std::min(1.0, cfg_.dt / cfg_.speed_tau);
  const double new_speed = state.speed + (speed_cmd * cfg_.max_speed - state.speed) * blend;
  const double arg = new_speed * std::abs(steer) * state.roughness - cfg_.hazard_threshold;
  return sigmoid(cfg_.hazard_k * arg);
}

StepResult CliffCar::step_kernel(const EnvState& state, double steer,
                                 double speed_cmd, Rng& rng) const {
  if (steer < -1.0 || steer > 1.0 || speed_cmd < 0.0 || speed_cmd > 1.0) {
    throw std::invalid_argument("cliffcar: action outside hard bounds");
  }
  StepResult out;

  const double p_fail = failure_probability(state, steer, speed_cmd);
  if (rng.uniform() < p_fail) {
    out.next_state = state;
    out.reward = 0.0;
    out.failed = true;
    out.done = true;
    return out;
  }

  EnvState next = state;
  const double blend = std::min(1.0, cfg_.dt / cfg_.speed_tau);
  next.speed = state.speed + (speed_cmd * cfg_.max_speed - state.speed) * blend;
  next.heading = state.heading +
                 next.speed / cfg_.wheelbase * std::tan(steer * cfg_.max_steer_angle) *
                     cfg_.dt;
  next.velocity = {next.speed * std::cos(next.heading),
                   next.speed * std::sin(next.heading)};
  next.position = {state.position[0] + next.velocity[0] * cfg_.dt,
                   state.position[1] + next.velocity[1] * cfg_.dt};
  next.roughness = roughness_at(next.position[0], next.position[1]);

  // Speed-made-good toward the goal as seen from the pre-step position.
  const std::array<double, 2> to_goal = {state.goal[0] - state.position[0],
                                         state.goal[1] - state.position[1]};
  const double dist = norm2(to_goal);
  out.reward = (dist > 1e-12)
                   ? (next.velocity[0] * to_goal[0] + next.velocity[1] * to_goal[1]) / dist
                   : 0.0;

  const double new_dist = std::hypot(next.goal[0] - next.position[0],
                                     next.goal[1] - next.position[1]);
  if (new_dist < cfg_.goal_radius) {
    next.goal = sample_goal(next.position, rng);
  }
  out.next_state = next;
  return out;
}

std::array<double, 2> CliffCar::sample_goal(const std::array<double, 2>& around,
                                            Rng& rng) const {
  std::array<double, 2> g;
  do {
    g = {around[0] + cfg_.goal_sigma * rng.normal(),
         around[1] + cfg_.goal_sigma * rng.normal()};
  } while (std::hypot(g[0] - around[0], g[1] - around[1]) < cfg_.min_goal_dist);
  return g;
}

EnvState CliffCar::reset(std::uint64_t seed) {
  if (pending_failure_) {
    ++failures_;
    pending_failure_ = false;
  }
  Rng rng(seed ^ 0xC11FFCA5u);
  EnvState s;
  s.position = {0.0, 0.0};
  s.velocity = {0.0, 0.0};
  s.speed = 0.0;
  s.heading = rng.uniform(0.0, 2.0 * M_PI);
  s.goal = sample_goal(s.position, rng);
  s.roughness = roughness_at(0.0, 0.0);
  state_ = s;
  return s;
}

StepResult CliffCar::step(double steer, double speed_cmd, Rng& rng) {
  const StepResult r = step_kernel(state_, steer, speed_cmd, rng);
  if (r.failed) {
    pending_failure_ = true;
  } else {
    state_ = r.next_state;
  }
  return r;
}

std::string step_result_json(const StepResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "{\"position\":[%.17g,%.17g],\"velocity\":[%.17g,%.17g],"
                "\"heading\":%.17g,\"speed\":%.17g,\"goal\":[%.17g,%.17g],"
                "\"roughness\":%.17g,\"reward\":%.17g,\"failed\":%s,\"done\":%s}",
                r.next_state.position[0], r.next_state.position[1],
                r.next_state.velocity[0], r.next_state.velocity[1],
                r.next_state.heading, r.next_state.speed, r.next_state.goal[0],
                r.next_state.goal[1], r.next_state.roughness, r.reward,
                r.failed ? "true" : "false", r.done ? "true" : "false");
  return std::string(buf);
}

std::vector<double> CliffCar::observation(const EnvState& s) const {
  const std::array<double, 2> to_goal = {s.goal[0] - s.position[0],
                                         s.goal[1] - s.position[1]};
  const double dist = norm2(to_goal);
  const double bearing = std::atan2(to_goal[1], to_goal[0]);
  const double err = bearing - s.heading;
  const double smg = (dist > 1e-12)
                         ? (s.velocity[0] * to_goal[0] + s.velocity[1] * to_goal[1]) / dist
                         : 0.0;
  return {s.speed, std::cos(err), std::sin(err), std::min(dist, 10.0) / 10.0,
          s.roughness, smg};
}

}  // namespace racer::env
