#pragma once

#include <span>
#include <vector>

#include "racer/params.hpp"
#include "racer/rng.hpp"
#include "racer/tape.hpp"

namespace racer::nn {

/// Fully connected network shape: in -> hidden... -> out, relu between
/// hidden layers, linear output.
struct MlpSpec {
  int in_dim = 0;
  std::vector<int> hidden;
  int out_dim = 0;

  int n_layers() const { return static_cast<int>(hidden.size()) + 1; }
};

/// Fan-in scaled uniform init for hidden layers; the final layer's weights
/// are scaled by final_weight_scale (near zero keeps an initial categorical
/// head near-uniform). Layer names: l{i}/W [in,out], l{i}/b [1,out].
ParamSet init_mlp(const MlpSpec& spec, Rng& rng, double final_weight_scale = 1.0);

/// Param leaves bound onto a tape, in layer order.
struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

MlpVars bind_mlp(Tape& tape, const ParamSet& params, const MlpSpec& spec,
                 bool requires_grad);

/// x: [n, in_dim] -> [n, out_dim].
Var mlp_apply(Tape& tape, const MlpVars& vars, Var x);

/// Accumulated gradients for the bound params, in layer-name form.
ParamSet mlp_grads(const Tape& tape, const MlpVars& vars, const MlpSpec& spec);

/// Tapeless forward for rollouts and target computation. x: [n, in_dim].
Matrix mlp_forward_plain(const ParamSet& params, const MlpSpec& spec, const Matrix& x);

std::vector<double> mlp_forward_plain(const ParamSet& params, const MlpSpec& spec,
                                      std::span<const double> x);

}  // namespace racer::nn
