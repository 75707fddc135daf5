#include "racer/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "racer/checkpoint.hpp"

namespace racer::train {

namespace {

constexpr int kSteerDim = 0;
constexpr int kSpeedDim = 1;

actor::ActionSpace cliffcar_action_space() {
  return actor::ActionSpace{{-1.0, 0.0}, {1.0, 1.0}};
}

}  // namespace

EvalResult evaluate_policy(const nn::GaussianPolicy& policy,
                           const actor::ActionLimits& limits,
                           const actor::ActionSpace& space, env::CliffCar& env,
                           int n_episodes, int max_steps, std::uint64_t seed,
                           bool use_limits) {
  Rng rng(seed);
  EvalResult out;
  long total_steps = 0;
  double total_reward = 0.0;
  double total_return = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    env.reset(rng.next_u64());
    double ep_return = 0.0;
    for (int t = 0; t < max_steps; ++t) {
      const std::vector<double> obs = env.observation();
      const std::vector<double> a_pre = space.to_hard(policy.mean_action(obs));
      const std::vector<double> a =
          use_limits ? actor::apply_limits(a_pre, limits) : a_pre;
      const env::StepResult r = env.step(a[kSteerDim], a[kSpeedDim], rng);
      total_reward += r.reward;
      ep_return += r.reward;
      ++total_steps;
      if (r.failed) {
        ++out.failures;
        break;
      }
    }
    total_return += ep_return;
  }
  out.avg_speed = (total_steps > 0) ? total_reward / total_steps : 0.0;
  out.avg_return = (n_episodes > 0) ? total_return / n_episodes : 0.0;
  return out;
}

struct Trainer::Impl {
  Impl(const TrainerConfig& cfg, std::string out_dir)
      : cfg(cfg),
        out_dir(std::move(out_dir)),
        alpha_eff(cfg.ablations.risk_neutral ? 0.0 : cfg.alpha),
        n_members(cfg.ablations.no_epistemic ? 1 : cfg.ensemble_n),
        use_limits(!cfg.ablations.no_limits),
        grid(cfg.v_min, cfg.derived_v_max(), cfg.n_atoms),
        rng(cfg.seed),
        env(cfg.env),
        space(cliffcar_action_space()),
        policy(nn::PolicySpec{env::CliffCar::kObsDim, env::CliffCar::kActDim,
                              cfg.hidden, cfg.log_std_min, cfg.log_std_max},
               rng),
        ensemble(n_members, env::CliffCar::kObsDim, env::CliffCar::kActDim,
                 cfg.hidden, grid, rng),
        buffer(cfg.buffer_capacity),
        actor_opt(nn::AdamConfig{cfg.actor_lr, 0.9, 0.999, 1e-8, cfg.actor_weight_decay}) {
    for (int i = 0; i < n_members; ++i) {
      critic_opts.emplace_back(
          nn::AdamConfig{cfg.critic_lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    }
    actor::ActionLimits::DimLimit lim;
    lim.dim = kSpeedDim;
    lim.hard_lo = space.hard_lo[kSpeedDim];
    lim.hard_hi = space.hard_hi[kSpeedDim];
    lim.v_minus = cfg.v_minus;
    lim.v_plus = use_limits
                     ? cfg.v_minus + cfg.limit_init_fraction *
                                         (lim.hard_hi - lim.hard_lo)
                     : lim.hard_hi;
    limits.dims.push_back(lim);
    limits.validate();
  }

  critic::SampledActions sample_policy_actions(std::span<const double> obs, Rng& r) {
    const auto smp = policy.sample(obs, r);
    critic::SampledActions out;
    out.pre = space.to_hard(smp.a_pre);
    out.applied = use_limits ? actor::apply_limits(out.pre, limits) : out.pre;
    return out;
  }

  const TrainerConfig& cfg;
  std::string out_dir;
  double alpha_eff;
  int n_members;
  bool use_limits;
  critic::AtomGrid grid;
  Rng rng;
  env::CliffCar env;
  actor::ActionSpace space;
  nn::GaussianPolicy policy;
  critic::CriticEnsemble ensemble;
  actor::ActionLimits limits;
  ReplayBuffer buffer;
  nn::AdamW actor_opt;
  std::vector<nn::AdamW> critic_opts;
};

Trainer::Trainer(TrainerConfig cfg, std::string out_dir)
    : cfg_(std::move(cfg)), out_dir_(std::move(out_dir)) {
  cfg_.validate();
  std::filesystem::create_directories(out_dir_);
  impl_ = std::make_unique<Impl>(cfg_, out_dir_);
}

Trainer::~Trainer() = default;

nn::GaussianPolicy& Trainer::policy() { return impl_->policy; }
critic::CriticEnsemble& Trainer::ensemble() { return impl_->ensemble; }
actor::ActionLimits& Trainer::limits() { return impl_->limits; }
env::CliffCar& Trainer::environment() { return impl_->env; }
const ReplayBuffer& Trainer::replay() const { return impl_->buffer; }
double Trainer::effective_alpha() const { return impl_->alpha_eff; }

void Trainer::save_checkpoint(const std::string& path) const {
  Impl& im = *impl_;
  nn::ParamSet all;
  all.add("meta/obs_dim", nn::Matrix::scalar(env::CliffCar::kObsDim));
  all.add("meta/act_dim", nn::Matrix::scalar(env::CliffCar::kActDim));
  all.add("meta/n_members", nn::Matrix::scalar(im.n_members));
  all.add("meta/alpha", nn::Matrix::scalar(im.alpha_eff));
  all.add("meta/gamma", nn::Matrix::scalar(cfg_.gamma));
  all.add("meta/grid", nn::Matrix::row({im.grid.v_min, im.grid.v_max,
                                        static_cast<double>(im.grid.n_atoms)}));
  std::vector<double> hidden(cfg_.hidden.begin(), cfg_.hidden.end());
  all.add("meta/hidden", nn::Matrix::row(hidden));
  all.add("meta/log_std", nn::Matrix::row({cfg_.log_std_min, cfg_.log_std_max}));
  all.add("meta/use_limits", nn::Matrix::scalar(im.use_limits ? 1.0 : 0.0));
  const auto& lim = im.limits.dims.at(0);
  all.add("meta/limits", nn::Matrix::row({static_cast<double>(lim.dim), lim.v_minus,
                                          lim.v_plus, lim.hard_lo, lim.hard_hi}));

  auto add_set = [&all](const std::string& prefix, const nn::ParamSet& p) {
    for (const auto& e : p.entries()) all.add(prefix + "/" + e.name, e.tensor);
  };
  add_set("actor", im.policy.params());
  for (int i = 0; i < im.n_members; ++i) {
    const std::string tag = "critic" + std::to_string(i);
    add_set(tag, im.ensemble.member(i));
    add_set(tag + "_target", im.ensemble.target(i));
    if (im.critic_opts[i].step_count() > 0) {
      add_set("opt/" + tag + "/m", im.critic_opts[i].first_moment());
      add_set("opt/" + tag + "/v", im.critic_opts[i].second_moment());
      all.add("opt/" + tag + "/t",
              nn::Matrix::scalar(static_cast<double>(im.critic_opts[i].step_count())));
    }
  }
  if (im.actor_opt.step_count() > 0) {
    add_set("opt/actor/m", im.actor_opt.first_moment());
    add_set("opt/actor/v", im.actor_opt.second_moment());
    all.add("opt/actor/t",
            nn::Matrix::scalar(static_cast<double>(im.actor_opt.step_count())));
  }
  write_param_file(path, all);
}

RunArtifacts Trainer::run() {
  Impl& im = *impl_;
  RunArtifacts art;
  art.metrics_path = out_dir_ + "/metrics.jsonl";
  art.checkpoint_path = out_dir_ + "/checkpoint.bin";
  MetricsWriter metrics(art.metrics_path);

  im.env.reset(im.rng.next_u64());
  long episode = 0;
  long cum_failures = 0;
  long cum_failures_fast = 0;
  double window_reward = 0.0;
  long window_steps = 0;
  double last_critic_loss = 0.0, last_actor_loss = 0.0, last_limit_loss = 0.0;
  double last_cvar_mean = 0.0;

  const double eps_gap =
      cfg_.limit_eps_gap_fraction *
      (im.space.hard_hi[kSpeedDim] - im.space.hard_lo[kSpeedDim]);

  auto emit_row = [&](long step) {
    MetricsRow row;
    row.step = step;
    row.episode = episode;
    row.cum_failures = cum_failures;
    row.cum_failures_fast = cum_failures_fast;
    row.avg_speed = (window_steps > 0) ? window_reward / window_steps : 0.0;
    row.v_minus = im.limits.dims[0].v_minus;
    row.v_plus = im.limits.dims[0].v_plus;
    row.cvar_alpha_mean = last_cvar_mean;
    row.critic_loss = last_critic_loss;
    row.actor_loss = last_actor_loss;
    row.limit_loss = last_limit_loss;
    metrics.write(row);
    window_reward = 0.0;
    window_steps = 0;
  };

  critic::ActionSampler sampler = [&](std::span<const double> obs, Rng& r) {
    return im.sample_policy_actions(obs, r);
  };
  critic::CriticLossConfig closs;
  closs.gamma = cfg_.gamma;
  closs.entropy_in_coef = cfg_.entropy_in_coef;
  closs.entropy_ood_coef = cfg_.entropy_ood_coef;
  closs.entropy_terms = !cfg_.ablations.no_epistemic;

  try {
    for (long step = 1; step <= cfg_.total_steps; ++step) {
      // --- act ---
      const std::vector<double> obs = im.env.observation();
      std::vector<double> a_pre;
      if (step <= cfg_.warmup_steps) {
        a_pre = {im.rng.uniform(-1.0, 1.0), im.rng.uniform(0.0, 1.0)};
      } else {
        a_pre = im.space.to_hard(im.policy.sample(obs, im.rng).a_pre);
      }
      const std::vector<double> a_applied =
          im.use_limits ? actor::apply_limits(a_pre, im.limits) : a_pre;
      const double speed_before = im.env.state().speed;
      const env::StepResult sr =
          im.env.step(a_applied[kSteerDim], a_applied[kSpeedDim], im.rng);

      Transition t;
      t.state = obs;
      t.a_pre = a_pre;
      t.a_applied = a_applied;
      t.reward = sr.reward;
      t.next_state = im.env.observation(sr.next_state);
      t.failed = sr.failed;
      t.done = sr.done;
      im.buffer.push(std::move(t));

      window_reward += sr.reward;
      ++window_steps;

      if (sr.failed) {
        ++cum_failures;
        if (speed_before > cfg_.fast_fail_speed) ++cum_failures_fast;
        ++episode;
        emit_row(step);
        im.env.reset(im.rng.next_u64());
      }

      // --- learn ---
      if (step > cfg_.warmup_steps &&
          im.buffer.size() >= static_cast<std::size_t>(cfg_.batch_size)) {
        for (int u = 0; u < cfg_.utd_ratio; ++u) {
          const TransitionBatch batch =
              im.buffer.sample_batch(cfg_.batch_size, im.rng);
          const critic::CriticLossResult cl =
              critic::critic_loss(im.ensemble, batch, sampler, closs, im.rng);
          for (int m = 0; m < im.n_members; ++m) {
            im.critic_opts[m].step(im.ensemble.member(m), cl.member_grads[m]);
          }
          im.ensemble.polyak_targets(cfg_.tau);
          last_critic_loss = cl.loss;
        }

        const TransitionBatch abatch =
            im.buffer.sample_batch(cfg_.batch_size, im.rng);
        nn::Matrix noise(cfg_.batch_size, env::CliffCar::kActDim);
        for (double& x : noise.data) x = im.rng.normal();
        const actor::ActorLossResult al = actor::actor_loss(
            im.ensemble, im.policy, im.limits, im.space, abatch.states,
            risk::RiskLevel(im.alpha_eff), noise, im.use_limits);
        im.actor_opt.step(im.policy.params(), al.policy_grads);
        last_actor_loss = al.loss;
        last_cvar_mean = al.mean_cvar;

        if (im.use_limits && step > cfg_.limit_warmup_steps) {
          nn::Matrix lnoise(cfg_.batch_size, env::CliffCar::kActDim);
          for (double& x : lnoise.data) x = im.rng.normal();
          const actor::LimitLossResult ll = actor::limit_loss(
              im.ensemble, im.policy, im.limits, im.space, abatch.states,
              risk::RiskLevel(im.alpha_eff), lnoise);
          for (std::size_t d = 0; d < im.limits.dims.size(); ++d) {
            im.limits.dims[d].v_plus -= cfg_.limit_lr * ll.grad_v_plus[d];
          }
          im.limits.clamp_v_plus(eps_gap);
          last_limit_loss = ll.loss;
        }
      }

      if (cfg_.metrics_every > 0 && step % cfg_.metrics_every == 0) {
        emit_row(step);
      }
    }
  } catch (const std::exception& e) {
    art.aborted = true;
    art.abort_reason = e.what();
    const std::string abort_path = out_dir_ + "/abort_checkpoint.bin";
    save_checkpoint(abort_path);
    art.checkpoint_path = abort_path;
    art.cum_failures = cum_failures;
    art.cum_failures_fast = cum_failures_fast;
    art.v_plus_final = im.limits.dims[0].v_plus;
    return art;
  }

  save_checkpoint(art.checkpoint_path);
  env::CliffCar eval_env(cfg_.env);
  const EvalResult ev =
      evaluate_policy(im.policy, im.limits, im.space, eval_env, cfg_.eval_episodes,
                      cfg_.eval_max_steps, im.rng.next_u64(), im.use_limits);
  art.cum_failures = cum_failures;
  art.cum_failures_fast = cum_failures_fast;
  art.final_avg_speed = ev.avg_speed;
  art.final_avg_return = ev.avg_return;
  art.v_plus_final = im.limits.dims[0].v_plus;
  return art;
}

LoadedModel load_model(const std::string& checkpoint_path) {
  const nn::ParamSet all = read_param_file(checkpoint_path);
  const int obs_dim = static_cast<int>(all.at("meta/obs_dim").data[0]);
  const int act_dim = static_cast<int>(all.at("meta/act_dim").data[0]);
  const int n_members = static_cast<int>(all.at("meta/n_members").data[0]);
  const auto& grid_row = all.at("meta/grid");
  const critic::AtomGrid grid(grid_row.data[0], grid_row.data[1],
                              static_cast<int>(grid_row.data[2]));
  std::vector<int> hidden;
  for (double h : all.at("meta/hidden").data) hidden.push_back(static_cast<int>(h));
  const auto& ls = all.at("meta/log_std");

  Rng scratch(0);
  nn::GaussianPolicy policy(
      nn::PolicySpec{obs_dim, act_dim, hidden, ls.data[0], ls.data[1]}, scratch);
  critic::CriticEnsemble ensemble(n_members, obs_dim, act_dim, hidden, grid, scratch);

  auto fill = [&all](const std::string& prefix, nn::ParamSet& dst) {
    for (auto& e : dst.entries()) e.tensor = all.at(prefix + "/" + e.name);
  };
  fill("actor", policy.params());
  for (int i = 0; i < n_members; ++i) {
    const std::string tag = "critic" + std::to_string(i);
    fill(tag, ensemble.member(i));
    fill(tag + "_target", ensemble.target(i));
  }

  LoadedModel model(std::move(policy), std::move(ensemble));
  model.obs_dim = obs_dim;
  model.act_dim = act_dim;
  model.alpha = all.at("meta/alpha").data[0];
  model.gamma = all.at("meta/gamma").data[0];
  model.grid = grid;
  model.use_limits = all.at("meta/use_limits").data[0] != 0.0;
  const auto& lim_row = all.at("meta/limits");
  actor::ActionLimits::DimLimit lim;
  lim.dim = static_cast<int>(lim_row.data[0]);
  lim.v_minus = lim_row.data[1];
  lim.v_plus = lim_row.data[2];
  lim.hard_lo = lim_row.data[3];
  lim.hard_hi = lim_row.data[4];
  model.limits.dims.push_back(lim);
  return model;
}

}  // namespace racer::train
