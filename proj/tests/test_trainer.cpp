#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "racer/checkpoint.hpp"
#include "racer/replay.hpp"
#include "racer/trainer.hpp"

using racer::Rng;
using racer::train::ReplayBuffer;
using racer::train::Trainer;
using racer::train::TrainerConfig;
using racer::train::Transition;

namespace {

namespace fs = std::filesystem;

std::string fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("racer_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

Transition make_transition(int tag) {
  Transition t;
  t.state = {static_cast<double>(tag), 0.0};
  t.a_pre = {0.0, 0.5};
  t.a_applied = {0.0, 0.4};
  t.reward = tag * 0.1;
  t.next_state = {static_cast<double>(tag + 1), 0.0};
  return t;
}

/// Small config so trainer tests run in seconds.
TrainerConfig tiny_config(std::uint64_t seed) {
  TrainerConfig c;
  c.hidden = {8};
  c.ensemble_n = 2;
  c.n_atoms = 11;
  c.batch_size = 8;
  c.utd_ratio = 1;
  c.total_steps = 260;
  c.warmup_steps = 40;
  c.buffer_capacity = 2000;
  c.metrics_every = 50;
  c.eval_episodes = 2;
  c.eval_max_steps = 40;
  c.gamma = 0.95;
  c.seed = seed;
  return c;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<nlohmann::json> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  }
  return rows;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("replay: uniform sampling over a full buffer") {
  ReplayBuffer buf(100);
  for (int i = 0; i < 100; ++i) buf.push(make_transition(i));
  Rng rng(1);
  std::vector<long> counts(100, 0);
  const long draws = 1000000;
  for (long i = 0; i < draws; ++i) {
    const Transition& t = buf.sample(rng);
    ++counts[static_cast<int>(t.state[0])];
  }
  for (long c : counts) {
    const double freq = static_cast<double>(c) / draws;
    CHECK(freq >= 0.0095);
    CHECK(freq <= 0.0105);
  }
}

TEST_CASE("replay: fifo eviction at capacity") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push(make_transition(i));
  CHECK(buf.size() == 3);
  CHECK(buf.inserted() == 5);
  std::vector<double> tags;
  for (std::size_t i = 0; i < buf.size(); ++i) tags.push_back(buf.at(i).state[0]);
  std::sort(tags.begin(), tags.end());
  CHECK(tags == std::vector<double>{2.0, 3.0, 4.0});
}

TEST_CASE("config: json round trip and unknown keys") {
  TrainerConfig c;
  c.alpha = 0.7;
  c.env.hazard_k = 9.0;
  const std::string text = racer::train::trainer_config_to_json_text(c);
  const TrainerConfig back = racer::train::trainer_config_from_json_text(text);
  CHECK(back.alpha == c.alpha);
  CHECK(back.env.hazard_k == 9.0);
  CHECK(back.batch_size == c.batch_size);

  CHECK_THROWS_AS(racer::train::trainer_config_from_json_text("{\"alpa\": 0.5}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      racer::train::trainer_config_from_json_text("{\"env\": {\"dtt\": 0.1}}"),
      std::invalid_argument);
  CHECK_THROWS_AS(racer::train::trainer_config_from_json_text("{\"alpha\": 1.5}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(racer::train::trainer_config_from_json_text("not json"),
                  std::invalid_argument);
}

TEST_CASE("trainer: identical seeds produce byte-identical metrics") {
  const auto run = [](const std::string& dir) {
    Trainer t(tiny_config(99), dir);
    const auto art = t.run();
    REQUIRE_FALSE(art.aborted);
    return art.metrics_path;
  };
  const std::string m1 = run(fresh_dir("det_a"));
  const std::string m2 = run(fresh_dir("det_b"));
  const std::string b1 = slurp(m1);
  CHECK(!b1.empty());
  CHECK(b1 == slurp(m2));
}

TEST_CASE("trainer: metrics rows are monotone and failures are counted once") {
  Trainer t(tiny_config(7), fresh_dir("metrics"));
  const auto art = t.run();
  REQUIRE_FALSE(art.aborted);
  const auto rows = read_jsonl(art.metrics_path);
  REQUIRE(!rows.empty());
  long prev_step = 0;
  long prev_fail = 0;
  long increments = 0;
  for (const auto& r : rows) {
    const long step = r.at("step").get<long>();
    const long fails = r.at("cum_failures").get<long>();
    CHECK(step >= prev_step);
    CHECK(fails >= prev_fail);
    increments += fails - prev_fail;
    prev_step = step;
    prev_fail = fails;
  }
  CHECK(increments == art.cum_failures);
  CHECK(rows.back().at("cum_failures").get<long>() == art.cum_failures);
}

TEST_CASE("trainer: failure count equals failed-flagged stored transitions") {
  TrainerConfig cfg = tiny_config(13);
  cfg.total_steps = 400;
  // Encourage some failures: aggressive warmup actions for the whole run.
  cfg.warmup_steps = 400;
  cfg.ablations.no_limits = true;
  cfg.env.hazard_threshold = 0.8;
  Trainer t(cfg, fresh_dir("failcount"));
  const auto art = t.run();
  REQUIRE_FALSE(art.aborted);
  long flagged = 0;
  for (std::size_t i = 0; i < t.replay().size(); ++i) {
    if (t.replay().at(i).failed) ++flagged;
  }
  CHECK(flagged == art.cum_failures);
  CHECK(art.cum_failures > 0);
}

TEST_CASE("trainer: no_limits pins v_plus at the hard maximum") {
  TrainerConfig cfg = tiny_config(21);
  cfg.ablations.no_limits = true;
  Trainer t(cfg, fresh_dir("nolimits"));
  const auto art = t.run();
  REQUIRE_FALSE(art.aborted);
  CHECK(art.v_plus_final == 1.0);
  for (const auto& r : read_jsonl(art.metrics_path)) {
    CHECK(r.at("v_plus").get<double>() == 1.0);
  }
}

TEST_CASE("trainer: ablation flags wire through") {
  TrainerConfig cfg = tiny_config(22);
  cfg.ablations.no_epistemic = true;
  cfg.ablations.risk_neutral = true;
  Trainer t(cfg, fresh_dir("ablate"));
  CHECK(t.ensemble().n_members() == 1);
  CHECK(t.effective_alpha() == 0.0);

  TrainerConfig full = tiny_config(22);
  Trainer t2(full, fresh_dir("ablate2"));
  CHECK(t2.ensemble().n_members() == 2);
  CHECK(t2.effective_alpha() == full.alpha);
}

TEST_CASE("trainer: limits move only when limit updates run") {
  // With limits enabled, v_plus starts at the configured fraction.
  TrainerConfig cfg = tiny_config(23);
  Trainer t(cfg, fresh_dir("liminit"));
  CHECK(t.limits().dims[0].v_plus ==
        doctest::Approx(cfg.v_minus + cfg.limit_init_fraction).epsilon(1e-12));

  // No other writer: freezing limit updates freezes the logged trajectory.
  TrainerConfig frozen = tiny_config(24);
  frozen.limit_warmup_steps = frozen.total_steps + 1;
  Trainer tf(frozen, fresh_dir("limfrozen"));
  const auto art = tf.run();
  REQUIRE_FALSE(art.aborted);
  const double init = frozen.v_minus + frozen.limit_init_fraction;
  for (const auto& r : read_jsonl(art.metrics_path)) {
    CHECK(r.at("v_plus").get<double>() == doctest::Approx(init).epsilon(1e-12));
    CHECK(r.at("v_minus").get<double>() == frozen.v_minus);
  }
}

TEST_CASE("checkpoint: save and reload reproduce the model bit for bit") {
  TrainerConfig cfg = tiny_config(31);
  cfg.total_steps = 120;
  Trainer t(cfg, fresh_dir("ckpt"));
  const auto art = t.run();
  REQUIRE_FALSE(art.aborted);

  const auto model = racer::train::load_model(art.checkpoint_path);
  CHECK(model.obs_dim == 6);
  CHECK(model.act_dim == 2);
  CHECK(model.ensemble.n_members() == 2);

  const std::vector<double> s = {0.1, 0.9, 0.2, 0.3, 1.0, 0.0};
  const std::vector<double> a = {0.2, 0.4};
  for (int m = 0; m < 2; ++m) {
    const auto d1 = t.ensemble().evaluate(s, a, racer::critic::Which::kOnline, m);
    const auto d2 = model.ensemble.evaluate(s, a, racer::critic::Which::kOnline, m);
    for (std::size_t j = 0; j < d1.size(); ++j) CHECK(d1.probs[j] == d2.probs[j]);
  }
  const auto p1 = t.policy().mean_action(s);
  const auto p2 = model.policy.mean_action(s);
  CHECK(p1[0] == p2[0]);
  CHECK(p1[1] == p2[1]);
}

TEST_CASE("checkpoint: corrupt or mismatched files are rejected") {
  const std::string dir = fresh_dir("badckpt");
  const std::string path = dir + "/x.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint";
  }
  CHECK_THROWS_AS(racer::train::read_param_file(path), std::runtime_error);
  CHECK_THROWS_AS(racer::train::read_param_file(dir + "/missing.bin"),
                  std::runtime_error);
}

TEST_CASE("evaluate_policy: zero-speed policy is safe and slow") {
  Rng rng(41);
  racer::nn::GaussianPolicy policy(racer::nn::PolicySpec{6, 2, {8}}, rng);
  // Saturate the speed head negative: mean action maps to speed_cmd ~ 0.
  // Evaluated without limits: the soft clip would pull a zero command up
  // toward the window midpoint.
  policy.params().at("l1/b")(0, 1) = -30.0;
  policy.params().at("l1/b")(0, 0) = 0.0;
  racer::actor::ActionLimits lims;
  const racer::actor::ActionSpace space{{-1.0, 0.0}, {1.0, 1.0}};
  racer::env::CliffCar env;
  const auto r1 =
      racer::train::evaluate_policy(policy, lims, space, env, 3, 100, 5, false);
  CHECK(r1.failures == 0);
  CHECK(std::abs(r1.avg_speed) < 1e-3);

  racer::env::CliffCar env2;
  const auto r2 =
      racer::train::evaluate_policy(policy, lims, space, env2, 3, 100, 5, false);
  CHECK(r2.avg_speed == r1.avg_speed);
  CHECK(r2.avg_return == r1.avg_return);
}

TEST_CASE("evaluate_policy: aggressive policy fails on hazard defaults") {
  Rng rng(42);
  racer::nn::GaussianPolicy policy(racer::nn::PolicySpec{6, 2, {8}}, rng);
  policy.params().at("l1/b")(0, 0) = 20.0;  // hard right turn
  policy.params().at("l1/b")(0, 1) = 30.0;  // full throttle
  racer::actor::ActionLimits lims;
  lims.dims.push_back({1, 0.0, 1.0, 0.0, 1.0});
  const racer::actor::ActionSpace space{{-1.0, 0.0}, {1.0, 1.0}};
  racer::env::CliffCar env;
  const auto r = racer::train::evaluate_policy(policy, lims, space, env, 5, 400, 7, true);
  CHECK(r.failures > 0);
}

TEST_CASE("trainer: aborts with a checkpoint on non-finite loss") {
  TrainerConfig cfg = tiny_config(51);
  cfg.actor_lr = 1e25;  // drive the policy head into overflow
  cfg.total_steps = 400;
  cfg.warmup_steps = 10;
  Trainer t(cfg, fresh_dir("abort"));
  const auto art = t.run();
  if (art.aborted) {
    CHECK(!art.abort_reason.empty());
    CHECK(fs::exists(art.checkpoint_path));
  } else {
    WARN("abort scenario did not trigger; loss stayed finite");
  }
}
