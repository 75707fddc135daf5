#include "racer/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace racer::nn {

namespace {

std::string layer_name(int i, const char* kind) {
  return "l" + std::to_string(i) + "/" + kind;
}

}  // namespace

ParamSet init_mlp(const MlpSpec& spec, Rng& rng, double final_weight_scale) {
  if (spec.in_dim <= 0 || spec.out_dim <= 0) {
    throw std::invalid_argument("mlp: dimensions must be positive");
  }
  ParamSet p;
  int in = spec.in_dim;
  const int n_layers = spec.n_layers();
  for (int i = 0; i < n_layers; ++i) {
    const bool last = (i == n_layers - 1);
    const int out = last ? spec.out_dim : spec.hidden[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(in, out);
    for (double& x : w.data) x = rng.uniform(-bound, bound);
    if (last) {
      for (double& x : w.data) x *= final_weight_scale;
    }
    p.add(layer_name(i, "W"), std::move(w));
    p.add(layer_name(i, "b"), Matrix::zeros(1, out));
    in = out;
  }
  return p;
}

MlpVars bind_mlp(Tape& tape, const ParamSet& params, const MlpSpec& spec,
                 bool requires_grad) {
  MlpVars vars;
  for (int i = 0; i < spec.n_layers(); ++i) {
    vars.weights.push_back(tape.leaf(params.at(layer_name(i, "W")), requires_grad));
    vars.biases.push_back(tape.leaf(params.at(layer_name(i, "b")), requires_grad));
  }
  return vars;
}

Var mlp_apply(Tape& tape, const MlpVars& vars, Var x) {
  const int n_layers = static_cast<int>(vars.weights.size());
  Var h = x;
  for (int i = 0; i < n_layers; ++i) {
    h = tape.add_bias(tape.matmul(h, vars.weights[i]), vars.biases[i]);
    if (i + 1 < n_layers) h = tape.relu(h);
  }
  return h;
}

ParamSet mlp_grads(const Tape& tape, const MlpVars& vars, const MlpSpec& spec) {
  ParamSet g;
  for (int i = 0; i < spec.n_layers(); ++i) {
    g.add(layer_name(i, "W"), tape.grad(vars.weights[i]));
    g.add(layer_name(i, "b"), tape.grad(vars.biases[i]));
  }
  return g;
}

Matrix mlp_forward_plain(const ParamSet& params, const MlpSpec& spec, const Matrix& x) {
  if (x.cols != spec.in_dim) throw std::invalid_argument("mlp: input dim mismatch");
  Matrix h = x;
  const int n_layers = spec.n_layers();
  for (int i = 0; i < n_layers; ++i) {
    const Matrix& w = params.at(layer_name(i, "W"));
    const Matrix& b = params.at(layer_name(i, "b"));
    Matrix next(h.rows, w.cols);
    matmul_acc(h, w, next);
    for (int r = 0; r < next.rows; ++r) {
      for (int c = 0; c < next.cols; ++c) {
        next(r, c) += b(0, c);
        if (i + 1 < n_layers && next(r, c) < 0.0) next(r, c) = 0.0;
      }
    }
    h = std::move(next);
  }
  return h;
}

std::vector<double> mlp_forward_plain(const ParamSet& params, const MlpSpec& spec,
                                      std::span<const double> x) {
  Matrix m = mlp_forward_plain(params, spec, Matrix::row(x));
  return m.data;
}

}  // namespace racer::nn
