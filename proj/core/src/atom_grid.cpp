#include "racer/atom_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace racer::critic {

AtomGrid::AtomGrid(double v_min_, double v_max_, int n_atoms_)
    : v_min(v_min_), v_max(v_max_), n_atoms(n_atoms_) {
  if (!(v_min < v_max) || n_atoms < 2) {
    throw std::invalid_argument("atom grid: need v_min < v_max and n_atoms >= 2");
  }
}

std::vector<double> AtomGrid::atoms() const {
  std::vector<double> z(n_atoms);
  for (int i = 0; i < n_atoms; ++i) z[i] = atom(i);
  return z;
}

risk::CategoricalDistribution AtomGrid::with_probs(std::vector<double> probs) const {
  if (static_cast<int>(probs.size()) != n_atoms) {
    throw std::invalid_argument("atom grid: prob count mismatch");
  }
  return risk::CategoricalDistribution(atoms(), std::move(probs));
}

namespace {

void deposit(const AtomGrid& grid, std::vector<double>& probs, double z, double mass) {
  const double dz = grid.spacing();
  double b = (std::clamp(z, grid.v_min, grid.v_max) - grid.v_min) / dz;
  // Snap near-integral offsets so that on-grid targets map to one atom.
  const double rb = std::round(b);
  if (std::abs(b - rb) < 1e-9) b = rb;
  const int lo = static_cast<int>(std::floor(b));
  const int hi = std::min(lo + 1, grid.n_atoms - 1);
  if (lo == hi || b <= lo) {
    probs[lo] += mass;
    return;
  }
  // Split with an exact complement so each source atom's mass is conserved
  // bit for bit.
  const double w_hi = b - lo;
  const double lower = mass * (1.0 - w_hi);
  probs[lo] += lower;
  probs[hi] += mass - lower;
}

}  // namespace

risk::CategoricalDistribution project_target(const AtomGrid& grid,
                                             const risk::CategoricalDistribution& source,
                                             double r, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("project_target: gamma out of [0,1]");
  }
  source.validate();
  std::vector<double> probs(grid.n_atoms, 0.0);
  for (std::size_t j = 0; j < source.size(); ++j) {
    deposit(grid, probs, r + gamma * source.atoms[j], source.probs[j]);
  }
  return grid.with_probs(std::move(probs));
}

risk::CategoricalDistribution project_scalar(const AtomGrid& grid, double r) {
  std::vector<double> probs(grid.n_atoms, 0.0);
  deposit(grid, probs, r, 1.0);
  return grid.with_probs(std::move(probs));
}

}  // namespace racer::critic
