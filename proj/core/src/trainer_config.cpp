#include "racer/trainer_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace racer::train {

namespace {

using nlohmann::json;

// Pulls a field if present, tracking which keys were consumed.
template <typename T>
void get_if(const json& j, std::set<std::string>& seen, const char* key, T& out) {
  if (j.contains(key)) {
    j.at(key).get_to(out);
    seen.insert(key);
  }
}

void reject_unknown(const json& j, const std::set<std::string>& seen,
                    const std::string& scope) {
  for (const auto& [key, _] : j.items()) {
    if (!seen.count(key)) {
      throw std::invalid_argument("config: unknown key '" + scope + key + "'");
    }
  }
}

void parse_env(const json& j, env::CliffCarConfig& e) {
  std::set<std::string> seen;
  get_if(j, seen, "dt", e.dt);
  get_if(j, seen, "wheelbase", e.wheelbase);
  get_if(j, seen, "max_speed", e.max_speed);
  get_if(j, seen, "max_steer_angle", e.max_steer_angle);
  get_if(j, seen, "speed_tau", e.speed_tau);
  get_if(j, seen, "hazard_k", e.hazard_k);
  get_if(j, seen, "hazard_threshold", e.hazard_threshold);
  get_if(j, seen, "rough_min", e.rough_min);
  get_if(j, seen, "rough_max", e.rough_max);
  get_if(j, seen, "goal_sigma", e.goal_sigma);
  get_if(j, seen, "goal_radius", e.goal_radius);
  get_if(j, seen, "min_goal_dist", e.min_goal_dist);
  get_if(j, seen, "terrain_seed", e.terrain_seed);
  reject_unknown(j, seen, "env.");
}

void parse_ablations(const json& j, AblationFlags& a) {
  std::set<std::string> seen;
  get_if(j, seen, "no_epistemic", a.no_epistemic);
  get_if(j, seen, "no_limits", a.no_limits);
  get_if(j, seen, "risk_neutral", a.risk_neutral);
  reject_unknown(j, seen, "ablations.");
}

}  // namespace

void TrainerConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must be in [0,1)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("config: gamma must be in (0,1)");
  if (utd_ratio < 1) throw std::invalid_argument("config: utd_ratio must be >= 1");
  if (ensemble_n < 1) throw std::invalid_argument("config: ensemble_n must be >= 1");
  if (n_atoms < 2) throw std::invalid_argument("config: n_atoms must be >= 2");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (buffer_capacity == 0) throw std::invalid_argument("config: buffer_capacity must be > 0");
  if (total_steps < 1) throw std::invalid_argument("config: total_steps must be >= 1");
  if (warmup_steps < 0) throw std::invalid_argument("config: warmup_steps must be >= 0");
  if (actor_lr <= 0 || critic_lr <= 0 || limit_lr <= 0) {
    throw std::invalid_argument("config: learning rates must be positive");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("config: tau must be in (0,1]");
  if (weight_decay < 0 || actor_weight_decay < 0) {
    throw std::invalid_argument("config: weight decay must be >= 0");
  }
  if (v_minus < 0.0 || v_minus >= 1.0) {
    throw std::invalid_argument("config: v_minus must be in [0,1)");
  }
  if (limit_init_fraction <= 0.0 || limit_init_fraction > 1.0) {
    throw std::invalid_argument("config: limit_init_fraction must be in (0,1]");
  }
  if (hidden.empty()) throw std::invalid_argument("config: hidden layers required");
}

double TrainerConfig::derived_v_max() const {
  if (v_max > v_min) return v_max;
  return env.max_speed / (1.0 - gamma);
}

TrainerConfig trainer_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  TrainerConfig c;
  std::set<std::string> seen;
  get_if(j, seen, "alpha", c.alpha);
  get_if(j, seen, "gamma", c.gamma);
  get_if(j, seen, "utd_ratio", c.utd_ratio);
  get_if(j, seen, "ensemble_n", c.ensemble_n);
  get_if(j, seen, "n_atoms", c.n_atoms);
  get_if(j, seen, "v_min", c.v_min);
  get_if(j, seen, "v_max", c.v_max);
  get_if(j, seen, "hidden", c.hidden);
  get_if(j, seen, "actor_lr", c.actor_lr);
  get_if(j, seen, "critic_lr", c.critic_lr);
  get_if(j, seen, "limit_lr", c.limit_lr);
  get_if(j, seen, "tau", c.tau);
  get_if(j, seen, "weight_decay", c.weight_decay);
  get_if(j, seen, "actor_weight_decay", c.actor_weight_decay);
  get_if(j, seen, "batch_size", c.batch_size);
  get_if(j, seen, "buffer_capacity", c.buffer_capacity);
  get_if(j, seen, "seed", c.seed);
  get_if(j, seen, "total_steps", c.total_steps);
  get_if(j, seen, "warmup_steps", c.warmup_steps);
  get_if(j, seen, "entropy_in_coef", c.entropy_in_coef);
  get_if(j, seen, "entropy_ood_coef", c.entropy_ood_coef);
  get_if(j, seen, "v_minus", c.v_minus);
  get_if(j, seen, "limit_init_fraction", c.limit_init_fraction);
  get_if(j, seen, "limit_eps_gap_fraction", c.limit_eps_gap_fraction);
  get_if(j, seen, "limit_warmup_steps", c.limit_warmup_steps);
  get_if(j, seen, "metrics_every", c.metrics_every);
  get_if(j, seen, "fast_fail_speed", c.fast_fail_speed);
  get_if(j, seen, "log_std_min", c.log_std_min);
  get_if(j, seen, "log_std_max", c.log_std_max);
  get_if(j, seen, "eval_episodes", c.eval_episodes);
  get_if(j, seen, "eval_max_steps", c.eval_max_steps);
  if (j.contains("ablations")) {
    parse_ablations(j.at("ablations"), c.ablations);
    seen.insert("ablations");
  }
  if (j.contains("env")) {
    parse_env(j.at("env"), c.env);
    seen.insert("env");
  }
  reject_unknown(j, seen, "");
  c.validate();
  return c;
}

TrainerConfig load_trainer_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return trainer_config_from_json_text(ss.str());
}

std::string trainer_config_to_json_text(const TrainerConfig& c) {
  json j;
  j["alpha"] = c.alpha;
  j["gamma"] = c.gamma;
  j["utd_ratio"] = c.utd_ratio;
  j["ensemble_n"] = c.ensemble_n;
  j["n_atoms"] = c.n_atoms;
  j["v_min"] = c.v_min;
  j["v_max"] = c.v_max;
  j["hidden"] = c.hidden;
  j["actor_lr"] = c.actor_lr;
  j["critic_lr"] = c.critic_lr;
  j["limit_lr"] = c.limit_lr;
  j["tau"] = c.tau;
  j["weight_decay"] = c.weight_decay;
  j["actor_weight_decay"] = c.actor_weight_decay;
  j["batch_size"] = c.batch_size;
  j["buffer_capacity"] = c.buffer_capacity;
  j["seed"] = c.seed;
  j["total_steps"] = c.total_steps;
  j["warmup_steps"] = c.warmup_steps;
  j["entropy_in_coef"] = c.entropy_in_coef;
  j["entropy_ood_coef"] = c.entropy_ood_coef;
  j["v_minus"] = c.v_minus;
  j["limit_init_fraction"] = c.limit_init_fraction;
  j["limit_eps_gap_fraction"] = c.limit_eps_gap_fraction;
  j["limit_warmup_steps"] = c.limit_warmup_steps;
  j["metrics_every"] = c.metrics_every;
  j["fast_fail_speed"] = c.fast_fail_speed;
  j["log_std_min"] = c.log_std_min;
  j["log_std_max"] = c.log_std_max;
  j["eval_episodes"] = c.eval_episodes;
  j["eval_max_steps"] = c.eval_max_steps;
  j["ablations"] = {{"no_epistemic", c.ablations.no_epistemic},
                    {"no_limits", c.ablations.no_limits},
                    {"risk_neutral", c.ablations.risk_neutral}};
  j["env"] = {{"dt", c.env.dt},
              {"wheelbase", c.env.wheelbase},
              {"max_speed", c.env.max_speed},
              {"max_steer_angle", c.env.max_steer_angle},
              {"speed_tau", c.env.speed_tau},
              {"hazard_k", c.env.hazard_k},
              {"hazard_threshold", c.env.hazard_threshold},
              {"rough_min", c.env.rough_min},
              {"rough_max", c.env.rough_max},
              {"goal_sigma", c.env.goal_sigma},
              {"goal_radius", c.env.goal_radius},
              {"min_goal_dist", c.env.min_goal_dist},
              {"terrain_seed", c.env.terrain_seed}};
  return j.dump(2);
}

}  // namespace racer::train
