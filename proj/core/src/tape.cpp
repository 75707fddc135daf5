#include "racer/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace racer::nn {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&)> back) {
  check_open();
  Node n;
  n.grad = Matrix::zeros(value.rows, value.cols);
  n.value = std::move(value);
  n.back = std::move(back);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::at(Var v) {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("tape: invalid var");
  }
  return nodes_[v.id];
}

const Tape::Node& Tape::at(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
    throw std::invalid_argument("tape: invalid var");
  }
  return nodes_[v.id];
}

void Tape::check_open() const {
  if (consumed_) throw std::logic_error("tape: reuse after backward");
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  return push(std::move(value), requires_grad, {});
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  if (A.cols != B.rows) throw std::invalid_argument("matmul: shape mismatch");
  Matrix out = nn::matmul(A, B);
  const int ia = a.id, ib = b.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib, self](Tape& t) {
    const Matrix& G = t.g(self);
    if (t.needs(ia)) matmul_nt_acc(G, t.v(ib), t.g(ia));
    if (t.needs(ib)) matmul_tn_acc(t.v(ia), G, t.g(ib));
  });
}

Var Tape::add_bias(Var a, Var bias) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(bias).value;
  if (B.rows != 1 || B.cols != A.cols) {
    throw std::invalid_argument("add_bias: bias must be [1, cols(a)]");
  }
  Matrix out = A;
  for (int i = 0; i < out.rows; ++i) {
    for (int j = 0; j < out.cols; ++j) out(i, j) += B(0, j);
  }
  const int ia = a.id, ib = bias.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib, self](Tape& t) {
    const Matrix& G = t.g(self);
    if (t.needs(ia)) {
      Matrix& da = t.g(ia);
      for (std::size_t k = 0; k < G.size(); ++k) da.data[k] += G.data[k];
    }
    if (t.needs(ib)) {
      Matrix& db = t.g(ib);
      for (int i = 0; i < G.rows; ++i) {
        for (int j = 0; j < G.cols; ++j) db(0, j) += G(i, j);
      }
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  check_same_shape(A, B, "add");
  Matrix out = A;
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] += B.data[k];
  const int ia = a.id, ib = b.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib, self](Tape& t) {
    const Matrix& G = t.g(self);
    for (int id : {ia, ib}) {
      if (!t.needs(id)) continue;
      Matrix& d = t.g(id);
      for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += G.data[k];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  check_same_shape(A, B, "sub");
  Matrix out = A;
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] -= B.data[k];
  const int ia = a.id, ib = b.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib, self](Tape& t) {
    const Matrix& G = t.g(self);
    if (t.needs(ia)) {
      Matrix& d = t.g(ia);
      for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += G.data[k];
    }
    if (t.needs(ib)) {
      Matrix& d = t.g(ib);
      for (std::size_t k = 0; k < G.size(); ++k) d.data[k] -= G.data[k];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  check_same_shape(A, B, "mul");
  Matrix out = A;
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] *= B.data[k];
  const int ia = a.id, ib = b.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib, self](Tape& t) {
    const Matrix& G = t.g(self);
    if (t.needs(ia)) {
      Matrix& d = t.g(ia);
      const Matrix& B2 = t.v(ib);
      for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += G.data[k] * B2.data[k];
    }
    if (t.needs(ib)) {
      Matrix& d = t.g(ib);
      const Matrix& A2 = t.v(ia);
      for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += G.data[k] * A2.data[k];
    }
  });
}

Var Tape::scale(Var a, double c) {
  Matrix out = at(a).value;
  for (double& x : out.data) x *= c;
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, c, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    Matrix& d = t.g(ia);
    for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += c * G.data[k];
  });
}

Var Tape::add_const(Var a, double c) {
  Matrix out = at(a).value;
  for (double& x : out.data) x += c;
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    Matrix& d = t.g(ia);
    for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += G.data[k];
  });
}

Var Tape::relu(Var a) {
  Matrix out = at(a).value;
  for (double& x : out.data) x = std::max(x, 0.0);
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    const Matrix& A = t.v(ia);
    Matrix& d = t.g(ia);
    for (std::size_t k = 0; k < G.size(); ++k) {
      if (A.data[k] > 0.0) d.data[k] += G.data[k];
    }
  });
}

Var Tape::tanh_(Var a) {
  Matrix out = at(a).value;
  for (double& x : out.data) x = std::tanh(x);
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    const Matrix& Y = t.v(self);
    Matrix& d = t.g(ia);
    for (std::size_t k = 0; k < G.size(); ++k) {
      d.data[k] += G.data[k] * (1.0 - Y.data[k] * Y.data[k]);
    }
  });
}

Var Tape::exp_(Var a) {
  Matrix out = at(a).value;
  for (double& x : out.data) x = std::exp(x);
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    const Matrix& Y = t.v(self);
    Matrix& d = t.g(ia);
    for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += G.data[k] * Y.data[k];
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  Matrix out = at(a).value;
  for (double& x : out.data) x = std::clamp(x, lo, hi);
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, lo, hi, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    const Matrix& A = t.v(ia);
    Matrix& d = t.g(ia);
    for (std::size_t k = 0; k < G.size(); ++k) {
      if (A.data[k] > lo && A.data[k] < hi) d.data[k] += G.data[k];
    }
  });
}

Var Tape::reciprocal(Var a) {
  Matrix out = at(a).value;
  for (double& x : out.data) x = 1.0 / x;
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    const Matrix& Y = t.v(self);
    Matrix& d = t.g(ia);
    for (std::size_t k = 0; k < G.size(); ++k) {
      d.data[k] -= G.data[k] * Y.data[k] * Y.data[k];
    }
  });
}

Var Tape::bcast_add(Var a, Var s) {
  const Matrix& A = at(a).value;
  const Matrix& S = at(s).value;
  if (S.rows != 1 || S.cols != 1) throw std::invalid_argument("bcast_add: s must be [1,1]");
  Matrix out = A;
  for (double& x : out.data) x += S.data[0];
  const int ia = a.id, is = s.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(is), [ia, is, self](Tape& t) {
    const Matrix& G = t.g(self);
    if (t.needs(ia)) {
      Matrix& d = t.g(ia);
      for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += G.data[k];
    }
    if (t.needs(is)) {
      double acc = 0.0;
      for (double gv : G.data) acc += gv;
      t.g(is).data[0] += acc;
    }
  });
}

Var Tape::bcast_sub(Var a, Var s) {
  const Matrix& A = at(a).value;
  const Matrix& S = at(s).value;
  if (S.rows != 1 || S.cols != 1) throw std::invalid_argument("bcast_sub: s must be [1,1]");
  Matrix out = A;
  for (double& x : out.data) x -= S.data[0];
  const int ia = a.id, is = s.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(is), [ia, is, self](Tape& t) {
    const Matrix& G = t.g(self);
    if (t.needs(ia)) {
      Matrix& d = t.g(ia);
      for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += G.data[k];
    }
    if (t.needs(is)) {
      double acc = 0.0;
      for (double gv : G.data) acc += gv;
      t.g(is).data[0] -= acc;
    }
  });
}

Var Tape::bcast_mul(Var a, Var s) {
  const Matrix& A = at(a).value;
  const Matrix& S = at(s).value;
  if (S.rows != 1 || S.cols != 1) throw std::invalid_argument("bcast_mul: s must be [1,1]");
  Matrix out = A;
  for (double& x : out.data) x *= S.data[0];
  const int ia = a.id, is = s.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(is), [ia, is, self](Tape& t) {
    const Matrix& G = t.g(self);
    if (t.needs(ia)) {
      Matrix& d = t.g(ia);
      const double sv = t.v(is).data[0];
      for (std::size_t k = 0; k < G.size(); ++k) d.data[k] += sv * G.data[k];
    }
    if (t.needs(is)) {
      const Matrix& A2 = t.v(ia);
      double acc = 0.0;
      for (std::size_t k = 0; k < G.size(); ++k) acc += G.data[k] * A2.data[k];
      t.g(is).data[0] += acc;
    }
  });
}

Var Tape::affine_cols(Var a, std::vector<double> scale, std::vector<double> offset) {
  const Matrix& A = at(a).value;
  if (static_cast<int>(scale.size()) != A.cols || scale.size() != offset.size()) {
    throw std::invalid_argument("affine_cols: coefficient size mismatch");
  }
  Matrix out = A;
  for (int i = 0; i < out.rows; ++i) {
    for (int j = 0; j < out.cols; ++j) out(i, j) = out(i, j) * scale[j] + offset[j];
  }
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self, sc = std::move(scale)](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    Matrix& d = t.g(ia);
    for (int i = 0; i < G.rows; ++i) {
      for (int j = 0; j < G.cols; ++j) d(i, j) += G(i, j) * sc[j];
    }
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  if (A.rows != B.rows) throw std::invalid_argument("concat_cols: row mismatch");
  Matrix out(A.rows, A.cols + B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) out(i, j) = A(i, j);
    for (int j = 0; j < B.cols; ++j) out(i, A.cols + j) = B(i, j);
  }
  const int ia = a.id, ib = b.id, ac = A.cols, self = node_count();
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib, ac, self](Tape& t) {
    const Matrix& G = t.g(self);
    if (t.needs(ia)) {
      Matrix& d = t.g(ia);
      for (int i = 0; i < d.rows; ++i) {
        for (int j = 0; j < d.cols; ++j) d(i, j) += G(i, j);
      }
    }
    if (t.needs(ib)) {
      Matrix& d = t.g(ib);
      for (int i = 0; i < d.rows; ++i) {
        for (int j = 0; j < d.cols; ++j) d(i, j) += G(i, ac + j);
      }
    }
  });
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  const Matrix& A = at(a).value;
  if (c0 < 0 || c1 > A.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
  Matrix out(A.rows, c1 - c0);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = c0; j < c1; ++j) out(i, j - c0) = A(i, j);
  }
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, c0, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    Matrix& d = t.g(ia);
    for (int i = 0; i < G.rows; ++i) {
      for (int j = 0; j < G.cols; ++j) d(i, c0 + j) += G(i, j);
    }
  });
}

Var Tape::softmax_rows(Var a) {
  const Matrix& A = at(a).value;
  Matrix out(A.rows, A.cols);
  for (int i = 0; i < A.rows; ++i) {
    double mx = A(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A(i, j));
    double total = 0.0;
    for (int j = 0; j < A.cols; ++j) {
      out(i, j) = std::exp(A(i, j) - mx);
      total += out(i, j);
    }
    for (int j = 0; j < A.cols; ++j) out(i, j) /= total;
  }
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    const Matrix& Y = t.v(self);
    Matrix& d = t.g(ia);
    for (int i = 0; i < G.rows; ++i) {
      double gy = 0.0;
      for (int j = 0; j < G.cols; ++j) gy += G(i, j) * Y(i, j);
      for (int j = 0; j < G.cols; ++j) d(i, j) += Y(i, j) * (G(i, j) - gy);
    }
  });
}

Var Tape::log_softmax_rows(Var a) {
  const Matrix& A = at(a).value;
  Matrix out(A.rows, A.cols);
  for (int i = 0; i < A.rows; ++i) {
    double mx = A(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A(i, j));
    double total = 0.0;
    for (int j = 0; j < A.cols; ++j) total += std::exp(A(i, j) - mx);
    const double lse = mx + std::log(total);
    for (int j = 0; j < A.cols; ++j) out(i, j) = A(i, j) - lse;
  }
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    const Matrix& Y = t.v(self);  // log-probs
    Matrix& d = t.g(ia);
    for (int i = 0; i < G.rows; ++i) {
      double gsum = 0.0;
      for (int j = 0; j < G.cols; ++j) gsum += G(i, j);
      for (int j = 0; j < G.cols; ++j) {
        d(i, j) += G(i, j) - std::exp(Y(i, j)) * gsum;
      }
    }
  });
}

Var Tape::logsumexp_rows(Var a) {
  const Matrix& A = at(a).value;
  Matrix out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double mx = A(i, 0);
    for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A(i, j));
    double total = 0.0;
    for (int j = 0; j < A.cols; ++j) total += std::exp(A(i, j) - mx);
    out(i, 0) = mx + std::log(total);
  }
  const int ia = a.id, self = node_count();
  return push(std::move(out), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const Matrix& G = t.g(self);
    const Matrix& L = t.v(self);
    const Matrix& A2 = t.v(ia);
    Matrix& d = t.g(ia);
    for (int i = 0; i < A2.rows; ++i) {
      for (int j = 0; j < A2.cols; ++j) {
        d(i, j) += G(i, 0) * std::exp(A2(i, j) - L(i, 0));
      }
    }
  });
}

Var Tape::dot_rows(Var a, Var b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  check_same_shape(A, B, "dot_rows");
  Matrix out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < A.cols; ++j) acc += A(i, j) * B(i, j);
    out(i, 0) = acc;
  }
  const int ia = a.id, ib = b.id, self = node_count();
  return push(std::move(out), needs(ia) || needs(ib), [ia, ib, self](Tape& t) {
    const Matrix& G = t.g(self);
    const Matrix& A2 = t.v(ia);
    const Matrix& B2 = t.v(ib);
    if (t.needs(ia)) {
      Matrix& d = t.g(ia);
      for (int i = 0; i < A2.rows; ++i) {
        for (int j = 0; j < A2.cols; ++j) d(i, j) += G(i, 0) * B2(i, j);
      }
    }
    if (t.needs(ib)) {
      Matrix& d = t.g(ib);
      for (int i = 0; i < A2.rows; ++i) {
        for (int j = 0; j < A2.cols; ++j) d(i, j) += G(i, 0) * A2(i, j);
      }
    }
  });
}

Var Tape::cvar_rows(Var probs, std::vector<double> atoms, double alpha) {
  const Matrix& P = at(probs).value;
  if (static_cast<int>(atoms.size()) != P.cols) {
    throw std::invalid_argument("cvar_rows: atom count mismatch");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("cvar_rows: alpha out of range");
  }
  const double m = 1.0 - alpha;
  Matrix out(P.rows, 1);
  for (int i = 0; i < P.rows; ++i) {
    double c = 0.0, prev = 0.0, acc = 0.0;
    for (int j = 0; j < P.cols; ++j) {
      c += P(i, j);
      const double clipped = std::min(c, m);
      acc += (clipped - prev) / m * atoms[j];
      prev = clipped;
    }
    out(i, 0) = acc;
  }
  const int ip = probs.id, self = node_count();
  return push(std::move(out), needs(ip), [ip, m, self, at2 = std::move(atoms)](Tape& t) {
    if (!t.needs(ip)) return;
    const Matrix& G = t.g(self);
    const Matrix& P2 = t.v(ip);
    Matrix& d = t.g(ip);
    const int n = P2.cols;
    std::vector<double> cum(n);
    for (int i = 0; i < P2.rows; ++i) {
      double c = 0.0;
      for (int j = 0; j < n; ++j) {
        c += P2(i, j);
        cum[j] = c;
      }
      double suffix = 0.0;
      for (int j = n - 1; j >= 0; --j) {
        if (cum[j] < m) {
          const double dz = (j + 1 < n) ? (at2[j] - at2[j + 1]) : at2[j];
          suffix += dz / m;
        }
        d(i, j) += G(i, 0) * suffix;
      }
    }
  });
}

Var Tape::sum_all(Var a) {
  const Matrix& A = at(a).value;
  double acc = 0.0;
  for (double x : A.data) acc += x;
  const int ia = a.id, self = node_count();
  return push(Matrix::scalar(acc), needs(ia), [ia, self](Tape& t) {
    if (!t.needs(ia)) return;
    const double gv = t.g(self).data[0];
    Matrix& d = t.g(ia);
    for (double& x : d.data) x += gv;
  });
}

Var Tape::mean_all(Var a) {
  const Matrix& A = at(a).value;
  double acc = 0.0;
  for (double x : A.data) acc += x;
  const double inv = 1.0 / static_cast<double>(A.size());
  const int ia = a.id, self = node_count();
  return push(Matrix::scalar(acc * inv), needs(ia), [ia, inv, self](Tape& t) {
    if (!t.needs(ia)) return;
    const double gv = t.g(self).data[0] * inv;
    Matrix& d = t.g(ia);
    for (double& x : d.data) x += gv;
  });
}

void Tape::backward(Var out) {
  check_open();
  const Matrix& O = at(out).value;
  if (O.rows != 1 || O.cols != 1) {
    throw std::invalid_argument("backward: output must be scalar [1,1]");
  }
  consumed_ = true;
  nodes_[out.id].grad.data[0] = 1.0;
  for (int id = out.id; id >= 0; --id) {
    if (nodes_[id].back && nodes_[id].requires_grad) {
      nodes_[id].back(*this);
    }
  }
}

const Matrix& Tape::value(Var v) const { return at(v).value; }
const Matrix& Tape::grad(Var v) const { return at(v).grad; }

}  // namespace racer::nn
