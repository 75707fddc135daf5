#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "racer/categorical.hpp"
#include "racer/rng.hpp"

namespace racer::risk {

/// K-component Gaussian mixture, the random "base" family for the
/// gap-vs-tail-EMD study.
struct GaussianMixtureSpec {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> stddevs;

  void validate() const;
  double pdf(double z) const;
};

/// Density evaluated on a uniform grid over [v_min, v_max] and renormalized.
CategoricalDistribution discretize(const GaussianMixtureSpec& g, double v_min,
                                   double v_max, int n_atoms);

struct GapExperimentConfig {
  int n_trials = 1000;
  int n_components = 3;  // K
  int n_members = 3;     // N
  std::uint64_t seed = 0;
  double alpha = 0.9;
  double v_min = -10.0;
  double v_max = 10.0;
  int n_atoms = 201;
  // Member jitter around the base parameters.
  double mean_jitter = 0.5;
  double log_std_jitter = 0.2;
  double weight_logit_jitter = 0.3;
};

struct GapTrial {
  int trial = 0;
  double tail_emd_mean = 0.0;
  double cvar_gap = 0.0;
};

GaussianMixtureSpec sample_base_mixture(Rng& rng, int n_components);
GaussianMixtureSpec perturb_mixture(const GaussianMixtureSpec& base, Rng& rng,
                                    const GapExperimentConfig& cfg);

/// Per trial: sample a base mixture, jitter it into n_members ensemble
/// members, discretize, and report the mean tail-EMD between each member's
/// tail and the ensemble mixture's tail alongside the CVaR gap.
std::vector<GapTrial> run_gap_experiment(const GapExperimentConfig& cfg);

/// CSV with header `trial,tail_emd_mean,cvar_gap`; byte-stable for a fixed seed.
void write_gap_csv(std::ostream& out, std::span<const GapTrial> rows);

}  // namespace racer::risk
