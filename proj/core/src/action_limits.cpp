#include "racer/action_limits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace racer::actor {

double softclip(double a, double v_minus, double v_plus) {
  if (!(v_minus < v_plus)) {
    throw std::invalid_argument("softclip: degenerate limits (v_minus >= v_plus)");
  }
  const double eta = 0.5 * (v_plus - v_minus);
  const double mu = 0.5 * (v_plus + v_minus);
  return eta * std::tanh((a - mu) / eta) + mu;
}

void ActionLimits::validate() const {
  for (const auto& d : dims) {
    if (!(d.v_minus < d.v_plus)) {
      throw std::invalid_argument("action limits: v_minus >= v_plus");
    }
    if (d.v_minus < d.hard_lo || d.v_plus > d.hard_hi) {
      throw std::invalid_argument("action limits: bounds outside hard range");
    }
  }
}

const ActionLimits::DimLimit* ActionLimits::find(int dim) const {
  for (const auto& d : dims) {
    if (d.dim == dim) return &d;
  }
  return nullptr;
}

void ActionLimits::clamp_v_plus(double eps_gap) {
  for (auto& d : dims) {
    d.v_plus = std::clamp(d.v_plus, d.v_minus + eps_gap, d.hard_hi);
  }
}

std::vector<double> apply_limits(std::span<const double> action,
                                 const ActionLimits& limits) {
  std::vector<double> out(action.begin(), action.end());
  for (const auto& d : limits.dims) {
    if (d.dim < 0 || d.dim >= static_cast<int>(out.size())) {
      throw std::out_of_range("action limits: dimension out of range");
    }
    out[d.dim] = softclip(out[d.dim], d.v_minus, d.v_plus);
  }
  return out;
}

}  // namespace racer::actor
