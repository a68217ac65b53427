// Copyright 2026 The AANT Authors.
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

#ifndef AANT_AUTOGRAD_HPP_
#define AANT_AUTOGRAD_HPP_

// Minimal reverse-mode differentiation over dense double matrices.
//
// A Var is a shared handle to a graph node. Leaves created with parameter()
// accumulate gradients across backward() calls until zero_grad(); every
// other node is rebuilt per forward pass. Only the operations the model and
// its losses need are provided.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "aant/error.hpp"

namespace aant {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

namespace ag {

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> propagate;

  void accumulate(const Matrix& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
};

}  // namespace detail

class Var {
 public:
  Var() = default;

  static Var constant(Matrix value) {
    auto node = std::make_shared<detail::Node>();
    node->value = std::move(value);
    return Var(std::move(node));
  }

  static Var parameter(Matrix value) {
    auto node = std::make_shared<detail::Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Var(std::move(node));
  }

  static Var scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  double item() const { return node_->value(0, 0); }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }

  /// Gradient of the last backward root with respect to this node; zeros if
  /// no gradient reached it.
  Matrix grad() const {
    if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
    return node_->grad;
  }
  void zero_grad() { node_->grad.resize(0, 0); }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared() const { return node_; }

 private:
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Var make_result(Matrix, std::vector<Var>, std::function<void(detail::Node&)>);

  std::shared_ptr<detail::Node> node_;
};

/// Builds an interior node. The propagate callback receives the node whose
/// grad is populated and must push gradients into node.parents.
inline Var make_result(Matrix value, std::vector<Var> inputs,
                       std::function<void(detail::Node&)> propagate) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  for (const auto& in : inputs) {
    if (in.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->parents.reserve(inputs.size());
    for (const auto& in : inputs) node->parents.push_back(in.shared());
    node->propagate = std::move(propagate);
  }
  return Var(std::move(node));
}

/// Reverse sweep from a 1x1 root.
inline void backward(const Var& root) {
  require_shape(root.rows() == 1 && root.cols() == 1, "backward: root must be 1x1");
  if (!root.requires_grad()) return;

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{root.node(), 0}};
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->propagate && node->grad.size() != 0) node->propagate(*node);
  }
}

namespace detail {
inline Node& parent(Node& n, std::size_t i) { return *n.parents[i]; }
inline void push(Node& n, std::size_t i, const Matrix& g) {
  if (n.parents[i]->requires_grad) n.parents[i]->accumulate(g);
}
}  // namespace detail

inline Var matmul(const Var& a, const Var& b) {
  require_shape(a.cols() == b.rows(), "matmul: inner dimensions differ");
  return make_result(a.value() * b.value(), {a, b}, [](detail::Node& n) {
    const Matrix& av = detail::parent(n, 0).value;
    const Matrix& bv = detail::parent(n, 1).value;
    detail::push(n, 0, n.grad * bv.transpose());
    detail::push(n, 1, av.transpose() * n.grad);
  });
}

inline Var add(const Var& a, const Var& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  return make_result(a.value() + b.value(), {a, b}, [](detail::Node& n) {
    detail::push(n, 0, n.grad);
    detail::push(n, 1, n.grad);
  });
}

inline Var sub(const Var& a, const Var& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  return make_result(a.value() - b.value(), {a, b}, [](detail::Node& n) {
    detail::push(n, 0, n.grad);
    detail::push(n, 1, -n.grad);
  });
}

/// Adds a 1xC row to every row of an RxC matrix.
inline Var add_row(const Var& a, const Var& row) {
  require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row: shape mismatch");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return make_result(std::move(out), {a, row}, [](detail::Node& n) {
    detail::push(n, 0, n.grad);
    detail::push(n, 1, n.grad.colwise().sum());
  });
}

inline Var scale(const Var& a, double factor) {
  return make_result(a.value() * factor, {a}, [factor](detail::Node& n) {
    detail::push(n, 0, n.grad * factor);
  });
}

inline Var hadamard(const Var& a, const Var& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard: shape mismatch");
  return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](detail::Node& n) {
    detail::push(n, 0, n.grad.cwiseProduct(detail::parent(n, 1).value));
    detail::push(n, 1, n.grad.cwiseProduct(detail::parent(n, 0).value));
  });
}

/// a / s for a 1x1 s.
inline Var div_scalar(const Var& a, const Var& s) {
  require_shape(s.rows() == 1 && s.cols() == 1, "div_scalar: divisor must be 1x1");
  const double d = s.item();
  return make_result(a.value() / d, {a, s}, [d](detail::Node& n) {
    const Matrix& av = detail::parent(n, 0).value;
    detail::push(n, 0, n.grad / d);
    detail::push(n, 1, Matrix::Constant(1, 1, -(n.grad.cwiseProduct(av)).sum() / (d * d)));
  });
}

inline Var transpose(const Var& a) {
  return make_result(a.value().transpose(), {a}, [](detail::Node& n) {
    detail::push(n, 0, n.grad.transpose());
  });
}

inline Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  require_shape(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  const Eigen::Index rows = a.rows();
  const Eigen::Index total = a.cols();
  return make_result(a.value().middleCols(start, count), {a},
                     [start, count, rows, total](detail::Node& n) {
                       Matrix g = Matrix::Zero(rows, total);
                       g.middleCols(start, count) = n.grad;
                       detail::push(n, 0, g);
                     });
}

inline Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  require_shape(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: out of range");
  const Eigen::Index total = a.rows();
  const Eigen::Index cols = a.cols();
  return make_result(a.value().middleRows(start, count), {a},
                     [start, count, total, cols](detail::Node& n) {
                       Matrix g = Matrix::Zero(total, cols);
                       g.middleRows(start, count) = n.grad;
                       detail::push(n, 0, g);
                     });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  require_shape(!parts.empty(), "concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index total = 0;
  std::vector<Eigen::Index> widths;
  for (const auto& p : parts) {
    require_shape(p.rows() == rows, "concat_cols: row count mismatch");
    widths.push_back(p.cols());
    total += p.cols();
  }
  Matrix out(rows, total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return make_result(std::move(out), parts, [widths](detail::Node& n) {
    Eigen::Index offset = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      detail::push(n, i, n.grad.middleCols(offset, widths[i]));
      offset += widths[i];
    }
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  require_shape(!parts.empty(), "concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index total = 0;
  std::vector<Eigen::Index> heights;
  for (const auto& p : parts) {
    require_shape(p.cols() == cols, "concat_rows: column count mismatch");
    heights.push_back(p.rows());
    total += p.rows();
  }
  Matrix out(total, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return make_result(std::move(out), parts, [heights](detail::Node& n) {
    Eigen::Index offset = 0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
      detail::push(n, i, n.grad.middleRows(offset, heights[i]));
      offset += heights[i];
    }
  });
}

/// Per-row standardization (zero mean, unit variance), no affine terms.
inline Var layer_norm_rows(const Var& a, double eps = 1e-5) {
  const Matrix& x = a.value();
  const Eigen::Index d = x.cols();
  Matrix y(x.rows(), d);
  Vector inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    y.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  Matrix yc = y;
  return make_result(std::move(y), {a}, [yc = std::move(yc), inv_std](detail::Node& n) {
    Matrix g(yc.rows(), yc.cols());
    for (Eigen::Index r = 0; r < yc.rows(); ++r) {
      const auto gy = n.grad.row(r).array();
      const auto yr = yc.row(r).array();
      g.row(r) = inv_std(r) * (gy - gy.mean() - yr * (gy * yr).mean());
    }
    detail::push(n, 0, g);
  });
}

inline Var softmax_rows(const Var& a) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  Matrix yc = y;
  return make_result(std::move(y), {a}, [yc = std::move(yc)](detail::Node& n) {
    Matrix g(yc.rows(), yc.cols());
    for (Eigen::Index r = 0; r < yc.rows(); ++r) {
      const double dot = n.grad.row(r).dot(yc.row(r));
      g.row(r) = yc.row(r).array() * (n.grad.row(r).array() - dot);
    }
    detail::push(n, 0, g);
  });
}

/// Softmax down each column (normalizes over rows).
inline Var softmax_cols(const Var& a) { return transpose(softmax_rows(transpose(a))); }

/// Row-wise L2 normalization; an all-zero row maps to zero with zero gradient.
inline Var l2_normalize_rows(const Var& a) {
  const Matrix& x = a.value();
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  Vector norms(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    norms(r) = x.row(r).norm();
    if (norms(r) > 0.0) y.row(r) = x.row(r) / norms(r);
  }
  Matrix yc = y;
  return make_result(std::move(y), {a}, [yc = std::move(yc), norms](detail::Node& n) {
    Matrix g = Matrix::Zero(yc.rows(), yc.cols());
    for (Eigen::Index r = 0; r < yc.rows(); ++r) {
      if (norms(r) <= 0.0) continue;
      const double dot = n.grad.row(r).dot(yc.row(r));
      g.row(r) = (n.grad.row(r) - dot * yc.row(r)) / norms(r);
    }
    detail::push(n, 0, g);
  });
}

/// Exact (erf-based) GELU.
inline Var gelu(const Var& a) {
  const Matrix& x = a.value();
  Matrix y = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); });
  Matrix xc = x;
  return make_result(std::move(y), {a}, [xc = std::move(xc)](detail::Node& n) {
    const Matrix d = xc.unaryExpr([](double v) {
      const double cdf = 0.5 * (1.0 + std::erf(v / std::sqrt(2.0)));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * 3.14159265358979323846);
      return cdf + v * pdf;
    });
    detail::push(n, 0, n.grad.cwiseProduct(d));
  });
}

inline double softplus_value(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

inline double sigmoid_value(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline Var softplus(const Var& a) {
  Matrix y = a.value().unaryExpr([](double v) { return softplus_value(v); });
  return make_result(std::move(y), {a}, [](detail::Node& n) {
    const Matrix d = detail::parent(n, 0).value.unaryExpr([](double v) { return sigmoid_value(v); });
    detail::push(n, 0, n.grad.cwiseProduct(d));
  });
}

inline Var sum(const Var& a) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  return make_result(Matrix::Constant(1, 1, a.value().sum()), {a}, [rows, cols](detail::Node& n) {
    detail::push(n, 0, Matrix::Constant(rows, cols, n.grad(0, 0)));
  });
}

/// Column-wise max over rows [begin, end); returns 1xC. The gradient goes to
/// the first maximizing row of each column.
inline Var max_over_rows(const Var& a, Eigen::Index begin, Eigen::Index end) {
  require_shape(begin >= 0 && begin < end && end <= a.rows(), "max_over_rows: empty or invalid window");
  const Matrix& x = a.value();
  Matrix out(1, x.cols());
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    Eigen::Index best = begin;
    for (Eigen::Index r = begin + 1; r < end; ++r) {
      if (x(r, c) > x(best, c)) best = r;
    }
    arg[static_cast<std::size_t>(c)] = best;
    out(0, c) = x(best, c);
  }
  const Eigen::Index rows = x.rows();
  return make_result(std::move(out), {a}, [arg, rows](detail::Node& n) {
    Matrix g = Matrix::Zero(rows, n.grad.cols());
    for (Eigen::Index c = 0; c < n.grad.cols(); ++c) g(arg[static_cast<std::size_t>(c)], c) = n.grad(0, c);
    detail::push(n, 0, g);
  });
}

/// Indices of the k largest entries of a column, ties broken by lower index.
inline std::vector<Eigen::Index> top_k_rows(const Matrix& x, Eigen::Index col, Eigen::Index k) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index l, Eigen::Index r) { return x(l, col) > x(r, col); });
  idx.resize(static_cast<std::size_t>(std::min<Eigen::Index>(k, x.rows())));
  return idx;
}

/// Per-column mean of the top-k entries (k clamped to the row count); 1xC.
inline Var top_k_mean_cols(const Var& a, Eigen::Index k) {
  require_shape(k >= 1 && a.rows() >= 1, "top_k_mean_cols: k and rows must be positive");
  const Matrix& x = a.value();
  const Eigen::Index kk = std::min(k, x.rows());
  Matrix out(1, x.cols());
  std::vector<std::vector<Eigen::Index>> picks;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    picks.push_back(top_k_rows(x, c, kk));
    double s = 0.0;
    for (Eigen::Index r : picks.back()) s += x(r, c);
    out(0, c) = s / static_cast<double>(kk);
  }
  const Eigen::Index rows = x.rows();
  return make_result(std::move(out), {a}, [picks = std::move(picks), rows, kk](detail::Node& n) {
    Matrix g = Matrix::Zero(rows, n.grad.cols());
    for (Eigen::Index c = 0; c < n.grad.cols(); ++c) {
      for (Eigen::Index r : picks[static_cast<std::size_t>(c)]) g(r, c) = n.grad(0, c) / static_cast<double>(kk);
    }
    detail::push(n, 0, g);
  });
}

/// Row-wise cross-entropy -log softmax(row)[label]; returns Rx1.
inline Var cross_entropy_rows(const Var& logits, std::vector<int> labels) {
  const Matrix& x = logits.value();
  require_shape(static_cast<Eigen::Index>(labels.size()) == x.rows(), "cross_entropy_rows: label count mismatch");
  Matrix out(x.rows(), 1);
  Matrix probs(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    require(label >= 0 && label < x.cols(), "cross_entropy_rows: label out of range");
    const double m = x.row(r).maxCoeff();
    const double lse = m + std::log((x.row(r).array() - m).exp().sum());
    out(r, 0) = lse - x(r, label);
    probs.row(r) = (x.row(r).array() - lse).exp();
  }
  return make_result(std::move(out), {logits},
                     [probs = std::move(probs), labels = std::move(labels)](detail::Node& n) {
                       Matrix g = probs;
                       for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
                       g.array().colwise() *= n.grad.col(0).array();
                       detail::push(n, 0, g);
                     });
}

}  // namespace ag
}  // namespace aant

#endif  // AANT_AUTOGRAD_HPP_
