#pragma once

#include <functional>
#include <vector>

#include "racer/matrix.hpp"

namespace racer::nn {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over matrix operations. One tape records one forward
/// pass; backward() traverses the recorded graph once, in reverse creation
/// order, accumulating gradients additively. A tape cannot be replayed after
/// backward() has consumed it.
class Tape {
 public:
  Var leaf(Matrix value, bool requires_grad);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  Var matmul(Var a, Var b);
  Var add_bias(Var a, Var bias);  // bias [1,m] broadcast over rows of a
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  Var relu(Var a);
  Var tanh_(Var a);
  Var exp_(Var a);
  Var clamp(Var a, double lo, double hi);  // zero gradient outside [lo, hi]
  Var reciprocal(Var a);

  // Broadcast a [1,1] scalar var across a matrix.
  Var bcast_add(Var a, Var s);
  Var bcast_sub(Var a, Var s);  // a - s
  Var bcast_mul(Var a, Var s);

  // y_ij = a_ij * scale_j + offset_j (constants).
  Var affine_cols(Var a, std::vector<double> scale, std::vector<double> offset);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, int c0, int c1);

  Var softmax_rows(Var a);
  Var log_softmax_rows(Var a);
  Var logsumexp_rows(Var a);  // [n,1]
  Var dot_rows(Var a, Var b);  // [n,1], sum_j a_ij b_ij

  /// Per-row CVaR of categorical mass over fixed atoms (clipped-CDF
  /// construction). Gradient w.r.t. probs follows the clipped branch at the
  /// boundary: atoms fully above the VaR contribute none.
  Var cvar_rows(Var probs, std::vector<double> atoms, double alpha);

  Var sum_all(Var a);
  Var mean_all(Var a);

  /// Seeds d(out)/d(out) = 1 and runs the reverse sweep. `out` must be [1,1].
  /// A second call throws: the tape is consumed.
  void backward(Var out);

  const Matrix& value(Var v) const;
  const Matrix& grad(Var v) const;
  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> back;  // empty for leaves
    bool requires_grad = false;
  };

  Var push(Matrix value, bool requires_grad, std::function<void(Tape&)> back);
  Node& at(Var v);
  const Node& at(Var v) const;
  Matrix& g(int id) { return nodes_[id].grad; }
  const Matrix& v(int id) const { return nodes_[id].value; }
  bool needs(int id) const { return nodes_[id].requires_grad; }
  void check_open() const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace racer::nn
