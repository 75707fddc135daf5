#include "racer/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace racer::nn {

namespace {

bool is_weight(const std::string& name) {
  return name.size() >= 2 && name.compare(name.size() - 2, 2, "/W") == 0;
}

}  // namespace

void AdamW::step(ParamSet& params, const ParamSet& grads) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("optimizer: gradient set shape mismatch");
  }
  if (!grads.all_finite()) {
    throw std::runtime_error("optimizer: non-finite gradient");
  }
  if (m_.size() == 0) {
    m_ = params.zeros_like();
    v_ = params.zeros_like();
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (std::size_t e = 0; e < params.size(); ++e) {
    auto& p = params.entries()[e];
    const auto& gent = grads.entries()[e];
    if (gent.name != p.name || !gent.tensor.same_shape(p.tensor)) {
      throw std::invalid_argument("optimizer: gradient entry mismatch at " + p.name);
    }
    Matrix& m = m_.entries()[e].tensor;
    Matrix& v = v_.entries()[e].tensor;
    const bool decay = cfg_.weight_decay > 0.0 && is_weight(p.name);
    for (std::size_t k = 0; k < p.tensor.size(); ++k) {
      const double gk = gent.tensor.data[k];
      m.data[k] = cfg_.beta1 * m.data[k] + (1.0 - cfg_.beta1) * gk;
      v.data[k] = cfg_.beta2 * v.data[k] + (1.0 - cfg_.beta2) * gk * gk;
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      double x = p.tensor.data[k];
      x -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      if (decay) x -= cfg_.lr * cfg_.weight_decay * p.tensor.data[k];
      p.tensor.data[k] = x;
    }
  }
}

void AdamW::restore(ParamSet m, ParamSet v, long t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

void polyak_update(ParamSet& target, const ParamSet& online, double tau) {
  if (target.size() != online.size()) {
    throw std::invalid_argument("polyak: param set size mismatch");
  }
  for (std::size_t e = 0; e < target.size(); ++e) {
    Matrix& t = target.entries()[e].tensor;
    const Matrix& o = online.entries()[e].tensor;
    if (!t.same_shape(o)) throw std::invalid_argument("polyak: shape mismatch");
    for (std::size_t k = 0; k < t.size(); ++k) {
      t.data[k] = (1.0 - tau) * t.data[k] + tau * o.data[k];
    }
  }
}

}  // namespace racer::nn
