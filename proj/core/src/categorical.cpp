#include "racer/categorical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace racer::risk {

CategoricalDistribution CategoricalDistribution::from_unsorted(
    std::vector<double> atoms, std::vector<double> probs) {
  if (atoms.size() != probs.size() || atoms.empty()) {
    throw std::invalid_argument("from_unsorted: atoms/probs size mismatch");
  }
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return atoms[i] < atoms[j]; });

  CategoricalDistribution out;
  for (std::size_t k : order) {
    if (!out.atoms.empty() && atoms[k] == out.atoms.back()) {
      out.probs.back() += probs[k];
    } else {
      out.atoms.push_back(atoms[k]);
      out.probs.push_back(probs[k]);
    }
  }
  double total = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
  if (total <= 0.0) throw std::invalid_argument("from_unsorted: zero total mass");
  for (double& p : out.probs) p /= total;
  return out;
}

CategoricalDistribution CategoricalDistribution::point_mass(double atom) {
  return CategoricalDistribution({atom}, {1.0});
}

void CategoricalDistribution::validate() const {
  if (atoms.size() != probs.size() || atoms.empty()) {
    throw std::invalid_argument("distribution: atoms/probs size mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i]) || !std::isfinite(probs[i])) {
      throw std::invalid_argument("distribution: non-finite entry");
    }
    if (probs[i] < 0.0) throw std::invalid_argument("distribution: negative prob");
    if (i > 0 && atoms[i] <= atoms[i - 1]) {
      throw std::invalid_argument("distribution: atoms not strictly increasing");
    }
    total += probs[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("distribution: probs do not sum to 1");
  }
}

double CategoricalDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) m += probs[i] * atoms[i];
  return m;
}

double CategoricalDistribution::cdf(double z) const {
  double c = 0.0;
  for (std::size_t i = 0; i < atoms.size() && atoms[i] <= z; ++i) c += probs[i];
  return c;
}

RiskLevel::RiskLevel(double a) : alpha(a) {
  if (!(a >= 0.0 && a < 1.0)) {
    throw std::invalid_argument("risk level must satisfy 0 <= alpha < 1");
  }
}

double entropy(const CategoricalDistribution& d) {
  double h = 0.0;
  for (double p : d.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace racer::risk
