// Copyright 2026 The xmrs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XMRS_AUTODIFF_HPP_
#define XMRS_AUTODIFF_HPP_

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "xmrs/common.hpp"

namespace xmrs::ad {

// Reverse-mode automatic differentiation over dense double matrices.
// A forward pass builds an expression graph of shared Nodes; backward()
// walks it once in reverse topological order. Graphs are single-use:
// rebuild the forward expression for every training step.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Matrix value;
  Matrix grad;  // materialized on first accumulation
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;

  explicit Node(Matrix v) : value(std::move(v)) {}

  void accumulate(const Matrix& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }

  double scalar() const { return value(0, 0); }
};

// Graph recording is on by default; disable it (RAII) for pure evaluation.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

class NoGradGuard {
 public:
  NoGradGuard() : prev_(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

inline Var constant(Matrix v) { return std::make_shared<Node>(std::move(v)); }

inline Var scalar_constant(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

inline Var parameter(Matrix v) {
  auto n = std::make_shared<Node>(std::move(v));
  n->requires_grad = true;
  n->zero_grad();
  return n;
}

namespace detail {

inline bool tracked(std::initializer_list<const Var*> parents) {
  if (!grad_mode()) return false;
  for (const Var* p : parents) {
    if (*p && (*p)->requires_grad) return true;
  }
  return false;
}

template <typename Fn>
Var make(Matrix value, std::vector<Var> parents, Fn&& backward) {
  auto n = std::make_shared<Node>(std::move(value));
  bool track = grad_mode();
  if (track) {
    track = false;
    for (const auto& p : parents) {
      if (p->requires_grad) {
        track = true;
        break;
      }
    }
  }
  if (track) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward_fn = std::forward<Fn>(backward);
  }
  return n;
}

}  // namespace detail

inline Var add(const Var& a, const Var& b) {
  return detail::make(a->value + b->value, {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad);
    if (b->requires_grad) b->accumulate(self.grad);
  });
}

inline Var sub(const Var& a, const Var& b) {
  return detail::make(a->value - b->value, {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad);
    if (b->requires_grad) b->accumulate(-self.grad);
  });
}

// Elementwise (Hadamard) product.
inline Var mul(const Var& a, const Var& b) {
  return detail::make(a->value.cwiseProduct(b->value), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad.cwiseProduct(b->value));
    if (b->requires_grad) b->accumulate(self.grad.cwiseProduct(a->value));
  });
}

inline Var scale(const Var& a, double s) {
  return detail::make(a->value * s, {a}, [a, s](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad * s);
  });
}

inline Var add_const(const Var& a, double c) {
  return detail::make((a->value.array() + c).matrix(), {a}, [a](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad);
  });
}

// c - a, elementwise against a scalar constant.
inline Var rsub_const(double c, const Var& a) {
  return detail::make((c - a->value.array()).matrix(), {a}, [a](Node& self) {
    if (a->requires_grad) a->accumulate(-self.grad);
  });
}

inline Var matmul(const Var& a, const Var& b) {
  return detail::make(a->value * b->value, {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad * b->value.transpose());
    if (b->requires_grad) b->accumulate(a->value.transpose() * self.grad);
  });
}

// a * b^T without materializing the transpose in the graph.
inline Var matmul_nt(const Var& a, const Var& b) {
  return detail::make(a->value * b->value.transpose(), {a, b}, [a, b](Node& self) {
    if (a->requires_grad) a->accumulate(self.grad * b->value);
    if (b->requires_grad) b->accumulate(self.grad.transpose() * a->value);
  });
}

// Broadcast a 1 x d row vector over every row of x.
inline Var add_rowvec(const Var& x, const Var& b) {
  if (b->value.rows() != 1 || b->value.cols() != x->value.cols()) {
    throw ShapeError("add_rowvec: bias must be 1 x cols(x)");
  }
  Matrix v = x->value;
  v.rowwise() += b->value.row(0);
  return detail::make(std::move(v), {x, b}, [x, b](Node& self) {
    if (x->requires_grad) x->accumulate(self.grad);
    if (b->requires_grad) b->accumulate(self.grad.colwise().sum());
  });
}

// Tokenwise affine map: x * W + b for every row of x.
inline Var affine(const Var& x, const Var& w, const Var& b) {
  if (x->value.cols() != w->value.rows()) {
    throw ShapeError("affine: cols(x) != rows(W)");
  }
  return add_rowvec(matmul(x, w), b);
}

inline Var softmax_rows(const Var& x) {
  Matrix y = x->value;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return detail::make(std::move(y), {x}, [x](Node& self) {
    if (!x->requires_grad) return;
    Matrix dx(self.value.rows(), self.value.cols());
    for (Eigen::Index i = 0; i < dx.rows(); ++i) {
      double s = self.grad.row(i).dot(self.value.row(i));
      dx.row(i) = (self.grad.row(i).array() - s) * self.value.row(i).array();
    }
    x->accumulate(dx);
  });
}

inline Var tanh_(const Var& x) {
  return detail::make(x->value.array().tanh().matrix(), {x}, [x](Node& self) {
    if (!x->requires_grad) return;
    x->accumulate(
        (self.grad.array() * (1.0 - self.value.array().square())).matrix());
  });
}

inline Var gelu(const Var& x) {
  Matrix y = x->value.unaryExpr([](double t) {
    return 0.5 * t * (1.0 + std::erf(t * 0.7071067811865476));
  });
  return detail::make(std::move(y), {x}, [x](Node& self) {
    if (!x->requires_grad) return;
    Matrix d = x->value.unaryExpr([](double t) {
      return 0.5 * (1.0 + std::erf(t * 0.7071067811865476)) +
             t * 0.3989422804014327 * std::exp(-0.5 * t * t);
    });
    x->accumulate(self.grad.cwiseProduct(d));
  });
}

// max(0, x); subgradient 0 at the kink.
inline Var relu(const Var& x) {
  return detail::make(x->value.cwiseMax(0.0), {x}, [x](Node& self) {
    if (!x->requires_grad) return;
    x->accumulate(
        (self.grad.array() * (x->value.array() > 0.0).cast<double>()).matrix());
  });
}

inline Var exp_(const Var& x) {
  return detail::make(x->value.array().exp().matrix(), {x}, [x](Node& self) {
    if (x->requires_grad)
      x->accumulate(self.grad.cwiseProduct(self.value));
  });
}

inline Var log_(const Var& x) {
  return detail::make(x->value.array().log().matrix(), {x}, [x](Node& self) {
    if (x->requires_grad)
      x->accumulate(self.grad.cwiseQuotient(x->value));
  });
}

inline Var pow_(const Var& x, double p) {
  return detail::make(x->value.array().pow(p).matrix(), {x}, [x, p](Node& self) {
    if (x->requires_grad)
      x->accumulate(
          (self.grad.array() * p * x->value.array().pow(p - 1.0)).matrix());
  });
}

// Mean over sequence positions (rows); result is 1 x d.
inline Var mean_rows(const Var& x) {
  const double inv = 1.0 / static_cast<double>(x->value.rows());
  Matrix v = x->value.colwise().sum() * inv;
  return detail::make(std::move(v), {x}, [x, inv](Node& self) {
    if (!x->requires_grad) return;
    Matrix g = (self.grad * inv).replicate(x->value.rows(), 1);
    x->accumulate(g);
  });
}

inline Var sum_all(const Var& x) {
  Matrix v(1, 1);
  v(0, 0) = x->value.sum();
  return detail::make(std::move(v), {x}, [x](Node& self) {
    if (x->requires_grad)
      x->accumulate(Matrix::Constant(x->value.rows(), x->value.cols(),
                                     self.grad(0, 0)));
  });
}

// Sum of squared entries; the building block for squared L2 distances.
inline Var sum_sq(const Var& x) {
  Matrix v(1, 1);
  v(0, 0) = x->value.squaredNorm();
  return detail::make(std::move(v), {x}, [x](Node& self) {
    if (x->requires_grad) x->accumulate(2.0 * self.grad(0, 0) * x->value);
  });
}

inline Var squared_distance(const Var& a, const Var& b) {
  return sum_sq(sub(a, b));
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_rows: no parts");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front()->value.cols();
  for (const auto& p : parts) {
    if (p->value.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p->value.rows();
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleRows(at, p->value.rows()) = p->value;
    at += p->value.rows();
  }
  return detail::make(std::move(v), parts, [parts](Node& self) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p->requires_grad)
        p->accumulate(self.grad.middleRows(at, p->value.rows()));
      at += p->value.rows();
    }
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InputError("concat_cols: no parts");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.front()->value.rows();
  for (const auto& p : parts) {
    if (p->value.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += p->value.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p->value.cols()) = p->value;
    at += p->value.cols();
  }
  return detail::make(std::move(v), parts, [parts](Node& self) {
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      if (p->requires_grad)
        p->accumulate(self.grad.middleCols(at, p->value.cols()));
      at += p->value.cols();
    }
  });
}

// Per-row layer normalization with learned scale/shift.
inline Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta,
                           double eps = 1e-5) {
  const Eigen::Index d = x->value.cols();
  if (gamma->value.cols() != d || beta->value.cols() != d) {
    throw ShapeError("layer_norm_rows: scale/shift width mismatch");
  }
  Matrix xhat(x->value.rows(), d);
  Eigen::VectorXd inv_sigma(x->value.rows());
  for (Eigen::Index i = 0; i < x->value.rows(); ++i) {
    double mu = x->value.row(i).mean();
    Eigen::RowVectorXd centered = x->value.row(i).array() - mu;
    double var = centered.squaredNorm() / static_cast<double>(d);
    inv_sigma(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = centered * inv_sigma(i);
  }
  Matrix y = xhat;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    y.row(i) = y.row(i).cwiseProduct(gamma->value.row(0)) + beta->value.row(0);
  }
  return detail::make(
      std::move(y), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_sigma](Node& self) {
        const Eigen::Index rows = xhat.rows();
        const Eigen::Index d = xhat.cols();
        if (gamma->requires_grad) {
          Matrix dg = Matrix::Zero(1, d);
          for (Eigen::Index i = 0; i < rows; ++i)
            dg.row(0) += self.grad.row(i).cwiseProduct(xhat.row(i));
          gamma->accumulate(dg);
        }
        if (beta->requires_grad) beta->accumulate(self.grad.colwise().sum());
        if (x->requires_grad) {
          Matrix dx(rows, d);
          for (Eigen::Index i = 0; i < rows; ++i) {
            Eigen::RowVectorXd dxhat =
                self.grad.row(i).cwiseProduct(gamma->value.row(0));
            double m1 = dxhat.mean();
            double m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
            dx.row(i) =
                inv_sigma(i) * (dxhat.array() - m1 - xhat.row(i).array() * m2);
          }
          x->accumulate(dx);
        }
      });
}

// Cosine similarity between two row vectors as a differentiable scalar.
// Degenerate norms are the caller's concern; this is the smooth loss-path
// version (see retrieval::cosine_similarity for the clamped raw rule).
inline Var cosine(const Var& a, const Var& b, double eps = 1e-12) {
  Var dot = matmul_nt(a, b);
  Var na = sum_sq(a);
  Var nb = sum_sq(b);
  Var denom = pow_(add(mul(na, nb), scalar_constant(eps * eps)), 0.5);
  return mul(dot, pow_(denom, -1.0));
}

inline void topo_sort(const Var& root, std::vector<Node*>& order) {
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.reserve(64);
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

// Backpropagates from a 1x1 scalar root. Parameter gradients accumulate;
// zero them between steps.
inline void backward(const Var& root) {
  if (root->value.rows() != 1 || root->value.cols() != 1) {
    throw InputError("backward: root must be a 1x1 scalar");
  }
  if (!root->requires_grad) return;
  std::vector<Node*> order;
  topo_sort(root, order);
  root->grad = Matrix::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
  }
}

inline void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) p->zero_grad();
}

}  // namespace xmrs::ad

#endif  // XMRS_AUTODIFF_HPP_
