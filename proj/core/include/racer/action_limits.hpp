#pragma once

#include <span>
#include <vector>

namespace racer::actor {

/// Shifted-tanh soft clip of a into (v_minus, v_plus); differentiable in a
/// and in both bounds. Throws on degenerate limits (v_minus >= v_plus).
double softclip(double a, double v_minus, double v_plus);

/// Learnable per-dimension action bounds. Dimensions not listed pass
/// through untouched.
struct ActionLimits {
  struct DimLimit {
    int dim = 0;
    double v_minus = 0.0;
    double v_plus = 1.0;
    double hard_lo = 0.0;  // environment hard bounds for this dimension
    double hard_hi = 1.0;
  };
  std::vector<DimLimit> dims;

  void validate() const;
  const DimLimit* find(int dim) const;

  /// Clamp v_plus into [v_minus + eps_gap, hard_hi] after an update step.
  void clamp_v_plus(double eps_gap);
};

/// Soft-clip each limited dimension of an action already expressed in hard
/// (environment) units.
std::vector<double> apply_limits(std::span<const double> action,
                                 const ActionLimits& limits);

}  // namespace racer::actor
