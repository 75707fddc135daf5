#pragma once

#include "racer/params.hpp"

namespace racer::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled weight decay; applied only to entries named "*/W".
  double weight_decay = 0.0;
};

/// Adaptive-moment optimizer with decoupled weight decay. Moment state is
/// lazily shaped from the first step() call and is exposed for checkpointing.
class AdamW {
 public:
  explicit AdamW(AdamConfig cfg) : cfg_(cfg) {}

  /// Throws std::runtime_error on non-finite gradients.
  void step(ParamSet& params, const ParamSet& grads);

  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  ParamSet& first_moment() { return m_; }
  ParamSet& second_moment() { return v_; }
  long step_count() const { return t_; }
  void restore(ParamSet m, ParamSet v, long t);

 private:
  AdamConfig cfg_;
  ParamSet m_, v_;
  long t_ = 0;
};

/// target <- (1 - tau) * target + tau * online, elementwise.
void polyak_update(ParamSet& target, const ParamSet& online, double tau);

}  // namespace racer::nn
