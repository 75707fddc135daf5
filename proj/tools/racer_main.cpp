// racer: train, evaluate and inspect risk-sensitive distributional
// actor-critic agents on the desk-scale driving environment.
//
// Subcommands: train | eval | sweep-alpha | gap-experiment | inspect-cvar.
// RACER_LOG_LEVEL={error,info,debug} controls stderr verbosity.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "racer/gap_experiment.hpp"
#include "racer/risk.hpp"
#include "racer/trainer.hpp"

namespace {

namespace fs = std::filesystem;

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("RACER_LOG_LEVEL");
  if (!env) return LogLevel::kInfo;
  const std::string v = env;
  if (v == "error") return LogLevel::kError;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "[racer] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) std::cerr << "[racer:debug] " << msg << "\n";
}

constexpr int kExitUsage = 2;
constexpr int kExitAborted = 3;

racer::train::TrainerConfig resolve_config(const std::string& config_path,
                                           const std::vector<std::string>& ablations,
                                           double alpha_override, long steps_override,
                                           long long seed_override) {
  racer::train::TrainerConfig cfg;
  if (!config_path.empty()) cfg = racer::train::load_trainer_config(config_path);
  if (alpha_override >= 0.0) cfg.alpha = alpha_override;
  if (steps_override > 0) cfg.total_steps = steps_override;
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  for (const std::string& a : ablations) {
    if (a == "no_epistemic") {
      cfg.ablations.no_epistemic = true;
    } else if (a == "no_limits") {
      cfg.ablations.no_limits = true;
    } else if (a == "risk_neutral") {
      cfg.ablations.risk_neutral = true;
    } else {
      throw std::invalid_argument("unknown ablation: " + a);
    }
  }
  cfg.validate();
  return cfg;
}

void write_summary(const std::string& out_dir, const racer::train::RunArtifacts& art) {
  nlohmann::json j;
  j["cum_failures"] = art.cum_failures;
  j["cum_failures_fast"] = art.cum_failures_fast;
  j["avg_speed"] = art.final_avg_speed;
  j["avg_return"] = art.final_avg_return;
  j["v_plus_final"] = art.v_plus_final;
  std::ofstream out(out_dir + "/final_summary.json");
  out << j.dump(2) << "\n";
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              long long seed, long steps, double alpha,
              const std::vector<std::string>& ablations) {
  racer::train::TrainerConfig cfg;
  try {
    cfg = resolve_config(config_path, ablations, alpha, steps, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  log_info("training for " + std::to_string(cfg.total_steps) + " steps into " + out_dir);
  racer::train::Trainer trainer(cfg, out_dir);
  const racer::train::RunArtifacts art = trainer.run();
  write_summary(out_dir, art);
  if (art.aborted) {
    std::cerr << "error: run aborted: " << art.abort_reason << "\n";
    std::cerr << "checkpoint preserved at " << art.checkpoint_path << "\n";
    return kExitAborted;
  }
  log_info("done: " + std::to_string(art.cum_failures) + " failures, avg speed " +
           std::to_string(art.final_avg_speed));
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& config_path,
             int episodes, int max_steps, long long seed,
             const std::string& trajectory_path) {
  racer::train::TrainerConfig cfg;
  try {
    if (!config_path.empty()) cfg = racer::train::load_trainer_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  racer::train::LoadedModel model = [&] {
    try {
      return racer::train::load_model(checkpoint);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      std::exit(kExitUsage);
    }
  }();
  racer::env::CliffCar env(cfg.env);
  const racer::actor::ActionSpace space{{-1.0, 0.0}, {1.0, 1.0}};

  if (!trajectory_path.empty()) {
    std::ofstream traj(trajectory_path);
    racer::Rng rng(seed >= 0 ? seed : 0);
    env.reset(rng.next_u64());
    for (int t = 0; t < max_steps; ++t) {
      const auto obs = env.observation();
      auto a = space.to_hard(model.policy.mean_action(obs));
      if (model.use_limits) a = racer::actor::apply_limits(a, model.limits);
      const auto r = env.step(a[0], a[1], rng);
      traj << racer::env::step_result_json(r) << "\n";
      if (r.failed) env.reset(rng.next_u64());
    }
  }

  const auto res = racer::train::evaluate_policy(
      model.policy, model.limits, space, env, episodes, max_steps,
      seed >= 0 ? static_cast<std::uint64_t>(seed) : 0, model.use_limits);
  nlohmann::json j;
  j["avg_speed"] = res.avg_speed;
  j["failures"] = res.failures;
  j["avg_return"] = res.avg_return;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_sweep_alpha(const std::vector<double>& alphas, const std::string& config_path,
                    const std::string& out_dir, int n_seeds, long long base_seed,
                    long steps, int parallel) {
  if (alphas.size() < 2) {
    std::cerr << "error: sweep-alpha requires at least two alphas\n";
    return kExitUsage;
  }
  racer::train::TrainerConfig base;
  try {
    base = resolve_config(config_path, {}, -1.0, steps, base_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  fs::create_directories(out_dir);

  struct Row {
    double alpha;
    std::uint64_t seed;
    long cum_failures = 0;
    double avg_speed = 0.0;
    bool ok = false;
  };
  std::vector<Row> rows;
  for (double a : alphas) {
    for (int s = 0; s < n_seeds; ++s) {
      rows.push_back({a, base.seed + static_cast<std::uint64_t>(s)});
    }
  }

  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&]() {
    while (true) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= rows.size()) return;
        idx = next++;
      }
      Row& row = rows[idx];
      racer::train::TrainerConfig cfg = base;
      cfg.alpha = row.alpha;
      cfg.ablations.risk_neutral = (row.alpha == 0.0);
      cfg.seed = row.seed;
      char tag[64];
      std::snprintf(tag, sizeof(tag), "alpha_%g_seed_%llu", row.alpha,
                    static_cast<unsigned long long>(row.seed));
      try {
        racer::train::Trainer trainer(cfg, out_dir + "/" + tag);
        const auto art = trainer.run();
        write_summary(out_dir + "/" + tag, art);
        if (!art.aborted) {
          row.cum_failures = art.cum_failures;
          row.avg_speed = art.final_avg_speed;
          row.ok = true;
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        std::cerr << "error: run " << tag << " failed: " << e.what() << "\n";
      }
      log_debug(std::string("finished ") + tag);
    }
  };

  const int n_workers = std::max(1, std::min<int>(parallel, static_cast<int>(rows.size())));
  std::vector<std::thread> threads;
  for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.alpha != b.alpha ? a.alpha < b.alpha : a.seed < b.seed;
  });
  const std::string csv_path = out_dir + "/sweep.csv";
  std::ofstream csv(csv_path);
  csv << "alpha,seed,cum_failures,avg_speed\n";
  bool any_failed = false;
  char buf[128];
  for (const Row& r : rows) {
    if (!r.ok) {
      any_failed = true;
      continue;  // partial results preserved
    }
    std::snprintf(buf, sizeof(buf), "%.17g,%llu,%ld,%.17g\n", r.alpha,
                  static_cast<unsigned long long>(r.seed), r.cum_failures,
                  r.avg_speed);
    csv << buf;
  }
  std::cout << csv_path << "\n";
  return any_failed ? kExitAborted : 0;
}

int cmd_gap_experiment(long n_trials, long long seed, const std::string& out_csv) {
  if (n_trials < 1) {
    std::cerr << "error: gap-experiment requires at least one trial\n";
    return kExitUsage;
  }
  racer::risk::GapExperimentConfig cfg;
  cfg.n_trials = static_cast<int>(n_trials);
  cfg.seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : 0;
  const auto rows = racer::risk::run_gap_experiment(cfg);
  if (out_csv.empty() || out_csv == "-") {
    racer::risk::write_gap_csv(std::cout, rows);
  } else {
    std::ofstream out(out_csv);
    if (!out) {
      std::cerr << "error: cannot open " << out_csv << "\n";
      return 1;
    }
    racer::risk::write_gap_csv(out, rows);
    if (!out) {
      std::cerr << "error: write failed for " << out_csv << "\n";
      return 1;
    }
  }
  return 0;
}

std::vector<double> parse_vector(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

int cmd_inspect_cvar(const std::string& checkpoint, const std::string& state_csv,
                     const std::string& action_csv, double alpha,
                     const std::string& csv_out) {
  racer::train::LoadedModel model = [&] {
    try {
      return racer::train::load_model(checkpoint);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      std::exit(kExitUsage);
    }
  }();
  std::vector<double> state, action;
  try {
    state = parse_vector(state_csv);
    action = parse_vector(action_csv);
    if (static_cast<int>(state.size()) != model.obs_dim ||
        static_cast<int>(action.size()) != model.act_dim) {
      throw std::invalid_argument("state/action dimension mismatch with checkpoint");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const racer::risk::RiskLevel level(alpha);
  std::vector<racer::risk::CategoricalDistribution> members =
      model.ensemble.evaluate_all(state, action, racer::critic::Which::kOnline);
  const auto mix = racer::risk::mixture(members);

  std::printf("checkpoint : %s\n", checkpoint.c_str());
  std::printf("alpha      : %.4f\n", alpha);
  std::printf("%-10s %12s %12s %12s %12s\n", "dist", "mean", "var", "cvar", "entropy");
  double member_cvar_sum = 0.0;
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& d = members[m];
    const double cv = racer::risk::cvar(d, level);
    member_cvar_sum += cv;
    std::printf("member %-3zu %12.5f %12.5f %12.5f %12.5f\n", m, d.mean(),
                racer::risk::var(d, level), cv, racer::risk::entropy(d));
  }
  const double mix_cvar = racer::risk::cvar(mix, level);
  std::printf("%-10s %12.5f %12.5f %12.5f %12.5f\n", "mixture", mix.mean(),
              racer::risk::var(mix, level), mix_cvar, racer::risk::entropy(mix));
  std::printf("cvar gap   : %.6f\n",
              member_cvar_sum / static_cast<double>(members.size()) - mix_cvar);

  if (!csv_out.empty()) {
    std::ofstream out(csv_out);
    out << "atom,mixture";
    for (std::size_t m = 0; m < members.size(); ++m) out << ",member" << m;
    out << "\n";
    for (std::size_t j = 0; j < mix.size(); ++j) {
      out << mix.atoms[j] << "," << mix.probs[j];
      for (const auto& d : members) out << "," << d.probs[j];
      out << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-sensitive distributional actor-critic trainer"};
  app.require_subcommand(1);

  // train
  std::string config_path, out_dir, trajectory_path, checkpoint, csv_out;
  std::string state_csv, action_csv;
  long long seed = -1;
  long steps = 0;
  double alpha = -1.0;
  std::vector<std::string> ablations;
  auto* train = app.add_subcommand("train", "run a training job");
  train->add_option("--config", config_path, "JSON config file");
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "seed override");
  train->add_option("--steps", steps, "total env steps override");
  train->add_option("--alpha", alpha, "risk level override");
  train->add_option("--ablation", ablations,
                    "ablations: no_epistemic, no_limits, risk_neutral");

  // eval
  int episodes = 10, max_steps = 400;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpointed policy");
  eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  eval->add_option("--config", config_path, "JSON config file (env section)");
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--max-steps", max_steps, "max steps per episode");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--trajectory", trajectory_path, "JSONL trajectory dump path");

  // sweep-alpha
  std::vector<double> alphas;
  int n_seeds = 1, parallel = 1;
  auto* sweep = app.add_subcommand("sweep-alpha", "train across risk levels");
  sweep->add_option("--alphas", alphas, "risk levels to sweep")->required();
  sweep->add_option("--config", config_path, "JSON config file");
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--seeds", n_seeds, "seeds per alpha");
  sweep->add_option("--seed", seed, "base seed");
  sweep->add_option("--steps", steps, "total env steps override");
  sweep->add_option("--parallel", parallel, "parallel runs");

  // gap-experiment
  long n_trials = 1000;
  auto* gap = app.add_subcommand("gap-experiment",
                                 "tail-EMD vs CVaR-gap study over random mixtures");
  gap->add_option("--trials", n_trials, "number of trials");
  gap->add_option("--seed", seed, "experiment seed");
  gap->add_option("--out", csv_out, "output CSV ('-' for stdout)");

  // inspect-cvar
  double inspect_alpha = 0.9;
  auto* inspect = app.add_subcommand("inspect-cvar",
                                     "print critic distributions at (s, a)");
  inspect->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  inspect->add_option("--state", state_csv, "comma-separated state")->required();
  inspect->add_option("--action", action_csv, "comma-separated action")->required();
  inspect->add_option("--alpha", inspect_alpha, "risk level");
  inspect->add_option("--csv", csv_out, "optional atom/prob CSV dump");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (train->parsed()) {
      return cmd_train(config_path, out_dir, seed, steps, alpha, ablations);
    }
    if (eval->parsed()) {
      return cmd_eval(checkpoint, config_path, episodes, max_steps, seed,
                      trajectory_path);
    }
    if (sweep->parsed()) {
      return cmd_sweep_alpha(alphas, config_path, out_dir, n_seeds, seed, steps,
                             parallel);
    }
    if (gap->parsed()) {
      return cmd_gap_experiment(n_trials, seed, csv_out);
    }
    if (inspect->parsed()) {
      return cmd_inspect_cvar(checkpoint, state_csv, action_csv, inspect_alpha,
                              csv_out);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
