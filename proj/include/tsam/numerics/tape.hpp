#pragma once

// Reverse-mode differentiation over dense matrices. A Tape records every
// operation applied to its Vars; backward() from a 1x1 root fills gradients
// for all nodes that depend on a leaf.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "tsam/numerics/tensor.hpp"

namespace tsam::ad {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
class Tape;

template <typename S>
struct Var {
  Tape<S>* tape = nullptr;
  int id = -1;

  const Matrix<S>& value() const { return tape->value(id); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename S>
class Tape {
 public:
  using Mat = Matrix<S>;
  using Backward = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<S> constant(Mat v) { return push(std::move(v), false, nullptr); }
  Var<S> leaf(Mat v) { return push(std::move(v), true, nullptr); }

  // Leaf whose value lives outside the tape; `v` must outlive the tape.
  Var<S> leaf_ref(const Mat& v) {
    nodes_.push_back(Node{Mat(), Mat(), true, nullptr, &v});
    return Var<S>{this, static_cast<int>(nodes_.size()) - 1};
  }
  Var<S> constant_ref(const Mat& v) {
    nodes_.push_back(Node{Mat(), Mat(), false, nullptr, &v});
    return Var<S>{this, static_cast<int>(nodes_.size()) - 1};
  }

  Var<S> push(Mat v, bool needs_grad, Backward back) {
#ifndef NDEBUG
    if (!v.allFinite()) throw Error("non-finite value recorded on tape");
#endif
    nodes_.push_back(Node{std::move(v), Mat(), needs_grad, std::move(back), nullptr});
    return Var<S>{this, static_cast<int>(nodes_.size()) - 1};
  }

  const Mat& value(int id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  bool needs_grad(Var<S> v) const { return nodes_[v.id].needs_grad; }

  // Gradient of the last backward() root with respect to node `id`; zeros
  // when the node did not influence the root.
  Mat grad(int id) const {
    const Node& n = nodes_[id];
    if (n.grad.size() == 0) return Mat::Zero(value(id).rows(), value(id).cols());
    return n.grad;
  }
  Mat grad(Var<S> v) const { return grad(v.id); }

  // Upstream gradient of node `id` during backward(); empty if none arrived.
  const Mat& upstream(int id) const { return nodes_[id].grad; }

  template <typename Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  void backward(Var<S> root) {
    if (root.rows() != 1 || root.cols() != 1)
      throw DimensionError("backward: root must be 1x1, got " + shape_str(root.value()));
    for (auto& n : nodes_) n.grad.resize(0, 0);
    nodes_[root.id].grad = Mat::Ones(1, 1);
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.back || n.grad.size() == 0) continue;
      n.back(*this, id);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad;
    Backward back;
    const Mat* external;
  };
  std::vector<Node> nodes_;
};

namespace detail {

template <typename S>
void require_same_shape(const char* op, Var<S> a, Var<S> b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                         shape_str(b.value()));
}

template <typename S>
bool any_grad(Var<S> a) {
  return a.tape->needs_grad(a);
}
template <typename S>
bool any_grad(Var<S> a, Var<S> b) {
  return a.tape->needs_grad(a) || b.tape->needs_grad(b);
}

}  // namespace detail

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape;
  Matrix<S> out = tsam::matmul(a.value(), b.value());
  return t.push(std::move(out), detail::any_grad(a, b), [a, b](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    if (t.needs_grad(a)) t.accumulate(a.id, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b.id, a.value().transpose() * g);
  });
}

// a * b^T
template <typename S>
Var<S> matmul_bt(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape;
  if (a.cols() != b.cols())
    throw DimensionError("matmul_bt: inner dimensions differ, " + shape_str(a.value()) + " * " +
                         shape_str(b.value()) + "^T");
  Matrix<S> out = a.value() * b.value().transpose();
  return t.push(std::move(out), detail::any_grad(a, b), [a, b](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    if (t.needs_grad(a)) t.accumulate(a.id, g * b.value());
    if (t.needs_grad(b)) t.accumulate(b.id, g.transpose() * a.value());
  });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  detail::require_same_shape("add", a, b);
  Tape<S>& t = *a.tape;
  return t.push(a.value() + b.value(), detail::any_grad(a, b), [a, b](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  detail::require_same_shape("sub", a, b);
  Tape<S>& t = *a.tape;
  return t.push(a.value() - b.value(), detail::any_grad(a, b), [a, b](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    t.accumulate(a.id, g);
    t.accumulate(b.id, -g);
  });
}

template <typename S>
Var<S> hadamard(Var<S> a, Var<S> b) {
  detail::require_same_shape("hadamard", a, b);
  Tape<S>& t = *a.tape;
  Matrix<S> out = a.value().cwiseProduct(b.value());
  return t.push(std::move(out), detail::any_grad(a, b), [a, b](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    if (t.needs_grad(a)) t.accumulate(a.id, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate(b.id, g.cwiseProduct(a.value()));
  });
}

template <typename S>
Var<S> scale(Var<S> a, S factor) {
  Tape<S>& t = *a.tape;
  return t.push(a.value() * factor, detail::any_grad(a), [a, factor](Tape<S>& t, int self) {
    t.accumulate(a.id, t.upstream(self) * factor);
  });
}

// a (m x n) + bias (1 x n) broadcast over rows.
template <typename S>
Var<S> add_row(Var<S> a, Var<S> bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw DimensionError("add_row: bias " + shape_str(bias.value()) + " does not fit " +
                         shape_str(a.value()));
  Tape<S>& t = *a.tape;
  Matrix<S> out = a.value().rowwise() + bias.value().row(0);
  return t.push(std::move(out), detail::any_grad(a, bias), [a, bias](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    t.accumulate(a.id, g);
    if (t.needs_grad(bias)) t.accumulate(bias.id, g.colwise().sum());
  });
}

// out(i, j) = col(i, 0) + row(0, j)
template <typename S>
Var<S> add_outer(Var<S> col, Var<S> row) {
  if (col.cols() != 1 || row.rows() != 1)
    throw DimensionError("add_outer: expected column and row vectors, got " +
                         shape_str(col.value()) + " and " + shape_str(row.value()));
  Tape<S>& t = *col.tape;
  Matrix<S> out = col.value().replicate(1, row.cols()).rowwise() + row.value().row(0);
  return t.push(std::move(out), detail::any_grad(col, row), [col, row](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    if (t.needs_grad(col)) t.accumulate(col.id, g.rowwise().sum());
    if (t.needs_grad(row)) t.accumulate(row.id, g.colwise().sum());
  });
}

template <typename S>
Var<S> transpose(Var<S> a) {
  Tape<S>& t = *a.tape;
  Matrix<S> out = a.value().transpose();
  return t.push(std::move(out), detail::any_grad(a), [a](Tape<S>& t, int self) {
    t.accumulate(a.id, t.upstream(self).transpose());
  });
}

// Row-major reinterpretation of the same data.
template <typename S>
Var<S> reshape(Var<S> a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size())
    throw DimensionError("reshape: cannot view " + shape_str(a.value()) + " as [" +
                         std::to_string(rows) + "x" + std::to_string(cols) + "]");
  Tape<S>& t = *a.tape;
  Matrix<S> out = Eigen::Map<const Matrix<S>>(a.value().data(), rows, cols);
  const Eigen::Index r0 = a.rows(), c0 = a.cols();
  return t.push(std::move(out), detail::any_grad(a), [a, r0, c0](Tape<S>& t, int self) {
    t.accumulate(a.id, Eigen::Map<const Matrix<S>>(t.upstream(self).data(), r0, c0));
  });
}

template <typename S>
Var<S> middle_cols(Var<S> a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw IndexError("middle_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + shape_str(a.value()));
  Tape<S>& t = *a.tape;
  Matrix<S> out = a.value().middleCols(start, count);
  return t.push(std::move(out), detail::any_grad(a), [a, start, count](Tape<S>& t, int self) {
    Matrix<S> g = Matrix<S>::Zero(a.rows(), a.cols());
    g.middleCols(start, count) = t.upstream(self);
    t.accumulate(a.id, g);
  });
}

template <typename S>
Var<S> row(Var<S> a, Eigen::Index i) {
  if (i < 0 || i >= a.rows())
    throw IndexError("row: index " + std::to_string(i) + " outside " + shape_str(a.value()));
  Tape<S>& t = *a.tape;
  Matrix<S> out = a.value().row(i);
  return t.push(std::move(out), detail::any_grad(a), [a, i](Tape<S>& t, int self) {
    Matrix<S> g = Matrix<S>::Zero(a.rows(), a.cols());
    g.row(i) = t.upstream(self).row(0);
    t.accumulate(a.id, g);
  });
}

template <typename S>
Var<S> vstack(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw DimensionError("vstack: no inputs");
  Tape<S>& t = *parts.front().tape;
  Eigen::Index rows = 0;
  bool grad = false;
  for (const auto& p : parts) {
    if (p.cols() != parts.front().cols())
      throw DimensionError("vstack: column mismatch " + shape_str(p.value()) + " vs " +
                           shape_str(parts.front().value()));
    rows += p.rows();
    grad = grad || t.needs_grad(p);
  }
  Matrix<S> out(rows, parts.front().cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return t.push(std::move(out), grad, [parts](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    Eigen::Index r = 0;
    for (const auto& p : parts) {
      if (t.needs_grad(p)) t.accumulate(p.id, g.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

template <typename S>
Var<S> hstack(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw DimensionError("hstack: no inputs");
  Tape<S>& t = *parts.front().tape;
  Eigen::Index cols = 0;
  bool grad = false;
  for (const auto& p : parts) {
    if (p.rows() != parts.front().rows())
      throw DimensionError("hstack: row mismatch " + shape_str(p.value()) + " vs " +
                           shape_str(parts.front().value()));
    cols += p.cols();
    grad = grad || t.needs_grad(p);
  }
  Matrix<S> out(parts.front().rows(), cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.push(std::move(out), grad, [parts](Tape<S>& t, int self) {
    const auto& g = t.upstream(self);
    Eigen::Index c = 0;
    for (const auto& p : parts) {
      if (t.needs_grad(p)) t.accumulate(p.id, g.middleCols(c, p.cols()));
      c += p.cols();
    }
  });
}

template <typename S>
Var<S> sum(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw DimensionError("sum: no inputs");
  Var<S> acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
  return acc;
}

namespace detail {

template <typename S, typename F, typename DF>
Var<S> unary(Var<S> a, F f, DF df) {
  Tape<S>& t = *a.tape;
  Matrix<S> out = a.value().unaryExpr(f);
  return t.push(std::move(out), any_grad(a), [a, df](Tape<S>& t, int self) {
    t.accumulate(a.id, t.upstream(self).cwiseProduct(a.value().unaryExpr(df)));
  });
}

}  // namespace detail

template <typename S>
Var<S> elu(Var<S> a) {
  return detail::unary(a, [](S v) { return act::elu(v); }, [](S v) { return act::elu_grad(v); });
}

template <typename S>
Var<S> leaky_relu(Var<S> a, S alpha = S(kLeakySlope)) {
  return detail::unary(
      a, [alpha](S v) { return act::leaky_relu(v, alpha); },
      [alpha](S v) { return act::leaky_relu_grad(v, alpha); });
}

template <typename S>
Var<S> relu(Var<S> a) {
  return detail::unary(
      a, [](S v) { return act::relu(v); }, [](S v) { return v > S(0) ? S(1) : S(0); });
}

template <typename S>
Var<S> sigmoid(Var<S> a) {
  Tape<S>& t = *a.tape;
  Matrix<S> out = a.value().unaryExpr([](S v) { return act::sigmoid(v); });
  return t.push(std::move(out), detail::any_grad(a), [a](Tape<S>& t, int self) {
    const auto& y = t.value(self).array();
    t.accumulate(a.id, (t.upstream(self).array() * y * (S(1) - y)).matrix());
  });
}

template <typename S>
Var<S> tanh(Var<S> a) {
  Tape<S>& t = *a.tape;
  Matrix<S> out = a.value().unaryExpr([](S v) { return std::tanh(v); });
  return t.push(std::move(out), detail::any_grad(a), [a](Tape<S>& t, int self) {
    const auto& y = t.value(self).array();
    t.accumulate(a.id, (t.upstream(self).array() * (S(1) - y * y)).matrix());
  });
}

// Row-wise softmax over the entries where mask is true; every other entry is
// exactly zero. Each row needs at least one allowed entry.
template <typename S>
Var<S> masked_softmax_rows(Var<S> a, const Mask& mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols())
    throw DimensionError("masked_softmax_rows: mask [" + std::to_string(mask.rows()) + "x" +
                         std::to_string(mask.cols()) + "] vs logits " + shape_str(a.value()));
  Tape<S>& t = *a.tape;
  const Matrix<S>& x = a.value();
  Matrix<S> out = Matrix<S>::Zero(x.rows(), x.cols());
  std::vector<bool> allowed(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) allowed[j] = mask(i, j);
    std::span<const S> logits(x.data() + i * x.cols(), static_cast<std::size_t>(x.cols()));
    const auto p = softmax_masked<S>(logits, allowed);
    for (Eigen::Index j = 0; j < x.cols(); ++j) out(i, j) = p[j];
  }
  return t.push(std::move(out), detail::any_grad(a), [a](Tape<S>& t, int self) {
    const auto& y = t.value(self);
    const auto& g = t.upstream(self);
    Vector<S> dots = g.cwiseProduct(y).rowwise().sum();
    Matrix<S> dx = y.cwiseProduct(g - dots.replicate(1, g.cols()));
    t.accumulate(a.id, dx);
  });
}

// layer_norm applied independently to every row.
template <typename S>
Var<S> layer_norm_rows(Var<S> a, S eps = S(kLayerNormEps)) {
  Tape<S>& t = *a.tape;
  const Matrix<S>& x = a.value();
  const auto n = static_cast<S>(x.cols());
  Vector<S> inv(x.rows());
  Matrix<S> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const S mean = x.row(i).sum() / n;
    const S var = (x.row(i).array() - mean).square().sum() / n;
    inv(i) = S(1) / std::sqrt(var + eps);
    out.row(i) = (x.row(i).array() - mean) * inv(i);
  }
  return t.push(std::move(out), detail::any_grad(a), [a, inv, n](Tape<S>& t, int self) {
    const auto& xhat = t.value(self);
    const auto& g = t.upstream(self);
    Matrix<S> dx(g.rows(), g.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const S gsum = g.row(i).sum();
      const S gx = g.row(i).dot(xhat.row(i));
      dx.row(i) = (inv(i) / n) * (n * g.row(i).array() - gsum - xhat.row(i).array() * gx);
    }
    t.accumulate(a.id, dx);
  });
}

// Sum of squared entries, as a 1x1.
template <typename S>
Var<S> sum_squares(Var<S> a) {
  Tape<S>& t = *a.tape;
  Matrix<S> out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return t.push(std::move(out), detail::any_grad(a), [a](Tape<S>& t, int self) {
    t.accumulate(a.id, a.value() * (S(2) * t.upstream(self)(0, 0)));
  });
}

// sum_ij ((s - target) * weight)^2 with constant target and weight.
template <typename S>
Var<S> weighted_sq_error(Var<S> s, const Matrix<S>& target, const Matrix<S>& weight) {
  if (target.rows() != s.rows() || target.cols() != s.cols() || weight.rows() != s.rows() ||
      weight.cols() != s.cols())
    throw DimensionError("weighted_sq_error: scores " + shape_str(s.value()) + ", target " +
                         shape_str(target) + ", weight " + shape_str(weight));
  Tape<S>& t = *s.tape;
  Matrix<S> out(1, 1);
  out(0, 0) = (s.value() - target).cwiseProduct(weight).squaredNorm();
  return t.push(std::move(out), detail::any_grad(s), [s, target, weight](Tape<S>& t, int self) {
    const S g = t.upstream(self)(0, 0);
    Matrix<S> w2 = weight.cwiseProduct(weight);
    t.accumulate(s.id, (s.value() - target).cwiseProduct(w2) * (S(2) * g));
  });
}

}  // namespace tsam::ad
