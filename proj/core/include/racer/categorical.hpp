#pragma once

#include <cstddef>
#include <vector>

namespace racer::risk {

/// Probability mass over a fixed, strictly increasing grid of support points
/// (return units). The working representation of a return distribution.
struct CategoricalDistribution {
  std::vector<double> atoms;
  std::vector<double> probs;

  CategoricalDistribution() = default;
  CategoricalDistribution(std::vector<double> atoms_, std::vector<double> probs_)
      : atoms(std::move(atoms_)), probs(std::move(probs_)) {}

  /// Sorts atoms, merges duplicates (summing mass) and renormalizes.
  /// Use when assembling a distribution from unordered samples.
  static CategoricalDistribution from_unsorted(std::vector<double> atoms,
                                               std::vector<double> probs);

  static CategoricalDistribution point_mass(double atom);

  std::size_t size() const { return atoms.size(); }

  /// Throws std::invalid_argument when the invariants do not hold:
  /// probs sum to 1 within 1e-9, atoms strictly increasing, probs >= 0.
  void validate() const;

  double mean() const;

  /// Right-continuous CDF evaluated at z.
  double cdf(double z) const;
};

/// Risk level in [0, 1). The retained worst-case tail mass is (1 - alpha),
/// so alpha = 0 is risk-neutral and alpha -> 1 is maximally conservative.
struct RiskLevel {
  double alpha = 0.0;

  RiskLevel() = default;
  explicit RiskLevel(double a);
};

/// Shannon entropy -sum p log p, with 0 log 0 = 0.
double entropy(const CategoricalDistribution& d);

}  // namespace racer::risk
