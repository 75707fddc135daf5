#include "racer/gap_experiment.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "racer/risk.hpp"

namespace racer::risk {

void GaussianMixtureSpec::validate() const {
  if (weights.size() != means.size() || weights.size() != stddevs.size() ||
      weights.empty()) {
    throw std::invalid_argument("gaussian mixture: size mismatch");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (stddevs[k] <= 0.0) throw std::invalid_argument("gaussian mixture: stddev <= 0");
    if (weights[k] < 0.0) throw std::invalid_argument("gaussian mixture: weight < 0");
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("gaussian mixture: weights do not sum to 1");
  }
}

double GaussianMixtureSpec::pdf(double z) const {
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  double p = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double t = (z - means[k]) / stddevs[k];
    p += weights[k] * inv_sqrt_2pi / stddevs[k] * std::exp(-0.5 * t * t);
  }
  return p;
}

CategoricalDistribution discretize(const GaussianMixtureSpec& g, double v_min,
                                   double v_max, int n_atoms) {
  g.validate();
  if (n_atoms < 2 || v_min >= v_max) {
    throw std::invalid_argument("discretize: bad grid");
  }
  CategoricalDistribution d;
  d.atoms.resize(n_atoms);
  d.probs.resize(n_atoms);
  const double dz = (v_max - v_min) / (n_atoms - 1);
  double total = 0.0;
  for (int i = 0; i < n_atoms; ++i) {
    d.atoms[i] = v_min + i * dz;
    d.probs[i] = g.pdf(d.atoms[i]);
    total += d.probs[i];
  }
  for (double& p : d.probs) p /= total;
  return d;
}

GaussianMixtureSpec sample_base_mixture(Rng& rng, int n_components) {
  GaussianMixtureSpec g;
  std::vector<double> logits(n_components);
  for (int k = 0; k < n_components; ++k) {
    g.means.push_back(rng.uniform(-3.0, 3.0));
    g.stddevs.push_back(std::exp(rng.uniform(std::log(0.8), std::log(1.6))));
    logits[k] = rng.normal();
  }
  double total = 0.0;
  for (double l : logits) total += std::exp(l);
  for (double l : logits) g.weights.push_back(std::exp(l) / total);
  return g;
}

GaussianMixtureSpec perturb_mixture(const GaussianMixtureSpec& base, Rng& rng,
                                    const GapExperimentConfig& cfg) {
  GaussianMixtureSpec g;
  std::vector<double> logits;
  for (std::size_t k = 0; k < base.weights.size(); ++k) {
    g.means.push_back(base.means[k] + cfg.mean_jitter * rng.normal());
    g.stddevs.push_back(base.stddevs[k] *
                        std::exp(cfg.log_std_jitter * rng.normal()));
    logits.push_back(std::log(base.weights[k]) +
                     cfg.weight_logit_jitter * rng.normal());
  }
  double total = 0.0;
  for (double l : logits) total += std::exp(l);
  for (double l : logits) g.weights.push_back(std::exp(l) / total);
  return g;
}

std::vector<GapTrial> run_gap_experiment(const GapExperimentConfig& cfg) {
  if (cfg.n_trials < 1) throw std::invalid_argument("gap experiment: n_trials < 1");
  Rng rng(cfg.seed);
  const RiskLevel a(cfg.alpha);

  std::vector<GapTrial> rows;
  rows.reserve(cfg.n_trials);
  for (int t = 0; t < cfg.n_trials; ++t) {
    const GaussianMixtureSpec base = sample_base_mixture(rng, cfg.n_components);
    std::vector<CategoricalDistribution> members;
    for (int i = 0; i < cfg.n_members; ++i) {
      members.push_back(discretize(perturb_mixture(base, rng, cfg), cfg.v_min,
                                   cfg.v_max, cfg.n_atoms));
    }
    const CategoricalDistribution mix = mixture(members);
    const CategoricalDistribution mix_tail = tail(mix, a);

    double emd_sum = 0.0;
    for (const auto& mem : members) emd_sum += emd(mix_tail, tail(mem, a));

    GapTrial row;
    row.trial = t;
    row.tail_emd_mean = emd_sum / cfg.n_members;
    row.cvar_gap = cvar_gap(members, a);
    rows.push_back(row);
  }
  return rows;
}

void write_gap_csv(std::ostream& out, std::span<const GapTrial> rows) {
  out << "trial,tail_emd_mean,cvar_gap\n";
  char buf[80];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", r.trial,
                  r.tail_emd_mean, r.cvar_gap);
    out << buf;
  }
}

}  // namespace racer::risk
