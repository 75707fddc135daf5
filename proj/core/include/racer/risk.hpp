#pragma once

#include <span>
#include <vector>

#include "racer/categorical.hpp"

namespace racer::risk {

/// Conditional value at risk: the mean of the worst (1 - alpha) mass of d.
/// Computed as the clipped-CDF construction: C = cumsum(probs),
/// Chat = min(C, 1-alpha) / (1-alpha), result = dot(diff(Chat), atoms).
/// Piecewise linear in probs; at the clip boundary the subgradient follows
/// the clipped branch (zero flow from atoms fully above the VaR).
double cvar(const CategoricalDistribution& d, RiskLevel a);

/// Value at risk: the smallest atom whose CDF reaches 1 - alpha.
double var(const CategoricalDistribution& d, RiskLevel a);

/// The renormalized worst-case (1 - alpha) slice of d. An atom straddling
/// the VaR boundary keeps fractional mass; mean(tail(d, a)) == cvar(d, a)
/// bit for bit. Atoms past the clipped support are dropped.
CategoricalDistribution tail(const CategoricalDistribution& d, RiskLevel a);

/// 1-D earth-mover's distance: integral of |CDF_x - CDF_y| over the merged
/// support, exact for piecewise-constant CDFs. Grids may differ.
double emd(const CategoricalDistribution& x, const CategoricalDistribution& y);

/// Weighted mixture on the union of the member grids. Weights default to
/// uniform; they must sum to 1.
CategoricalDistribution mixture(std::span<const CategoricalDistribution> ds,
                                std::span<const double> weights = {});

/// Mean of the member CVaRs minus the CVaR of their mixture. Nonnegative.
double cvar_gap(std::span<const CategoricalDistribution> ds, RiskLevel a);

/// d cvar / d probs, holding the renormalization outside (raw partials).
/// The renormalized directional derivative along prob j is
/// grad[j] - dot(probs, grad).
std::vector<double> cvar_grad_probs(const CategoricalDistribution& d, RiskLevel a);

}  // namespace racer::risk
