#pragma once

#include <vector>

#include "racer/categorical.hpp"

namespace racer::critic {

/// Uniform support grid for categorical return distributions.
struct AtomGrid {
  double v_min = 0.0;
  double v_max = 1.0;
  int n_atoms = 51;

  AtomGrid() = default;
  AtomGrid(double v_min_, double v_max_, int n_atoms_);

  double spacing() const { return (v_max - v_min) / (n_atoms - 1); }
  double atom(int i) const { return v_min + i * spacing(); }
  std::vector<double> atoms() const;

  risk::CategoricalDistribution with_probs(std::vector<double> probs) const;
};

/// Distributional Bellman projection: each source atom is transformed to
/// r + gamma * z, clipped to [v_min, v_max], and its mass split linearly
/// between the two nearest grid atoms. Mass is conserved exactly.
risk::CategoricalDistribution project_target(const AtomGrid& grid,
                                             const risk::CategoricalDistribution& source,
                                             double r, double gamma);

/// Projection of a pure scalar return (terminal transitions: no bootstrap).
risk::CategoricalDistribution project_scalar(const AtomGrid& grid, double r);

}  // namespace racer::critic
