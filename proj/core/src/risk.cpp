#include "racer/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace racer::risk {

namespace {

// Clipped-CDF tail masses: p_hat_i = (min(C_i, m) - min(C_{i-1}, m)) / m
// with m = 1 - alpha. Shared by cvar() and tail() so that
// mean(tail(d, a)) reproduces cvar(d, a) exactly.
std::vector<double> tail_masses(const CategoricalDistribution& d, double m) {
  std::vector<double> out(d.size());
  double c = 0.0;
  double prev_clipped = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    c += d.probs[i];
    const double clipped = std::min(c, m);
    out[i] = (clipped - prev_clipped) / m;
    prev_clipped = clipped;
  }
  return out;
}

}  // namespace

double cvar(const CategoricalDistribution& d, RiskLevel a) {
  d.validate();
  const double m = 1.0 - a.alpha;
  const std::vector<double> w = tail_masses(d, m);
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) acc += w[i] * d.atoms[i];
  return acc;
}

double var(const CategoricalDistribution& d, RiskLevel a) {
  d.validate();
  const double m = 1.0 - a.alpha;
  double c = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    c += d.probs[i];
    if (c >= m - 1e-12) return d.atoms[i];
  }
  return d.atoms.back();  // cumsum rounding fell short of m
}

CategoricalDistribution tail(const CategoricalDistribution& d, RiskLevel a) {
  d.validate();
  const double m = 1.0 - a.alpha;
  const std::vector<double> w = tail_masses(d, m);

  // Keep the support up to the clip point: atom i stays while the CDF before
  // it has not yet exhausted the tail mass.
  CategoricalDistribution out;
  double c_before = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (c_before >= m) break;
    out.atoms.push_back(d.atoms[i]);
    out.probs.push_back(w[i]);
    c_before += d.probs[i];
  }
  return out;
}

double emd(const CategoricalDistribution& x, const CategoricalDistribution& y) {
  x.validate();
  y.validate();
  // Walk the merged support; both CDFs are right-continuous step functions.
  std::size_t ix = 0, iy = 0;
  double cx = 0.0, cy = 0.0;
  double prev_z = 0.0;
  bool have_prev = false;
  double area = 0.0;
  while (ix < x.size() || iy < y.size()) {
    double z;
    if (iy >= y.size() || (ix < x.size() && x.atoms[ix] <= y.atoms[iy])) {
      z = x.atoms[ix];
    } else {
      z = y.atoms[iy];
    }
    if (have_prev && z > prev_z) area += std::abs(cx - cy) * (z - prev_z);
    while (ix < x.size() && x.atoms[ix] == z) cx += x.probs[ix++];
    while (iy < y.size() && y.atoms[iy] == z) cy += y.probs[iy++];
    prev_z = z;
    have_prev = true;
  }
  return area;
}

CategoricalDistribution mixture(std::span<const CategoricalDistribution> ds,
                                std::span<const double> weights) {
  if (ds.empty()) throw std::invalid_argument("mixture: empty ensemble");
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) {
    w.assign(ds.size(), 1.0 / static_cast<double>(ds.size()));
  } else if (w.size() != ds.size()) {
    throw std::invalid_argument("mixture: weight count mismatch");
  }

  std::vector<double> atoms;
  std::vector<double> probs;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    ds[k].validate();
    for (std::size_t i = 0; i < ds[k].size(); ++i) {
      atoms.push_back(ds[k].atoms[i]);
      probs.push_back(w[k] * ds[k].probs[i]);
    }
  }
  return CategoricalDistribution::from_unsorted(std::move(atoms), std::move(probs));
}

double cvar_gap(std::span<const CategoricalDistribution> ds, RiskLevel a) {
  if (ds.empty()) throw std::invalid_argument("cvar_gap: empty ensemble");
  double member_mean = 0.0;
  for (const auto& d : ds) member_mean += cvar(d, a);
  member_mean /= static_cast<double>(ds.size());
  return member_mean - cvar(mixture(ds), a);
}

std::vector<double> cvar_grad_probs(const CategoricalDistribution& d, RiskLevel a) {
  d.validate();
  const double m = 1.0 - a.alpha;
  const std::size_t n = d.size();

  // result = sum_i (Chat_i - Chat_{i-1}) * z_i, Chat_i = min(C_i, m) / m.
  // d result / d Chat_i = z_i - z_{i+1} (last term z_{n-1});
  // d Chat_i / d C_i = [C_i < m] / m; d C_i / d p_j = [j <= i].
  // Suffix-sum the per-CDF-entry contributions.
  std::vector<double> grad(n, 0.0);
  std::vector<double> cum(n);
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c += d.probs[i];
    cum[i] = c;
  }
  double suffix = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    if (cum[i] < m) {
      const double d_result_d_chat =
          (i + 1 < n) ? (d.atoms[i] - d.atoms[i + 1]) : d.atoms[i];
      suffix += d_result_d_chat / m;
    }
    grad[i] = suffix;
  }
  return grad;
}

}  // namespace racer::risk
