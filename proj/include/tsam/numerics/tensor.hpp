#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "tsam/errors.hpp"

namespace tsam {

// Dense row-major matrix; every tensor in the model is 2-D (vectors are 1 x n).
template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using MatrixD = Matrix<double>;

enum class Precision { f32, f64 };

template <typename Derived>
std::string shape_str(const Eigen::MatrixBase<Derived>& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

template <typename S>
bool all_finite(const Matrix<S>& m) {
  return m.allFinite();
}

template <typename S>
Matrix<S> matmul(const Matrix<S>& a, const Matrix<S>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a) + " * " + shape_str(b));
  return a * b;
}

// Softmax restricted to the positions where `allowed` is true. Disallowed
// outputs are exactly zero.
template <typename S>
std::vector<S> softmax_masked(std::span<const S> logits, const std::vector<bool>& allowed) {
  if (logits.size() != allowed.size())
    throw DimensionError("softmax_masked: " + std::to_string(logits.size()) + " logits vs " +
                         std::to_string(allowed.size()) + " mask entries");
  S max_logit = 0;
  bool any = false;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!allowed[i]) continue;
    if (!any || logits[i] > max_logit) max_logit = logits[i];
    any = true;
  }
  if (!any) throw EmptySupportError("softmax_masked: no allowed position");

  std::vector<S> out(logits.size(), S(0));
  S total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!allowed[i]) continue;
    out[i] = std::exp(logits[i] - max_logit);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

inline constexpr double kLayerNormEps = 1e-5;

// (x - mean) / sqrt(var + eps), population variance, no affine parameters.
template <typename S>
std::vector<S> layer_norm(std::span<const S> x, S eps = S(kLayerNormEps)) {
  if (x.empty()) throw DimensionError("layer_norm: empty input");
  S mean = 0;
  for (S v : x) mean += v;
  mean /= static_cast<S>(x.size());
  S var = 0;
  for (S v : x) var += (v - mean) * (v - mean);
  var /= static_cast<S>(x.size());
  const S inv = S(1) / std::sqrt(var + eps);
  std::vector<S> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv;
  return out;
}

inline constexpr double kLeakySlope = 0.2;

namespace act {

template <typename S>
S elu(S x) {
  return x >= S(0) ? x : std::expm1(x);
}
template <typename S>
S elu_grad(S x) {
  return x >= S(0) ? S(1) : std::exp(x);
}
template <typename S>
S leaky_relu(S x, S alpha = S(kLeakySlope)) {
  return x >= S(0) ? x : alpha * x;
}
template <typename S>
S leaky_relu_grad(S x, S alpha = S(kLeakySlope)) {
  return x >= S(0) ? S(1) : alpha;
}
template <typename S>
S sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}
template <typename S>
S relu(S x) {
  return x > S(0) ? x : S(0);
}

}  // namespace act

template <typename S>
Matrix<S> elu(const Matrix<S>& m) {
  return m.unaryExpr([](S v) { return act::elu(v); });
}
template <typename S>
Matrix<S> leaky_relu(const Matrix<S>& m, S alpha = S(kLeakySlope)) {
  return m.unaryExpr([alpha](S v) { return act::leaky_relu(v, alpha); });
}
template <typename S>
Matrix<S> sigmoid(const Matrix<S>& m) {
  return m.unaryExpr([](S v) { return act::sigmoid(v); });
}
template <typename S>
Matrix<S> tanh(const Matrix<S>& m) {
  return m.unaryExpr([](S v) { return std::tanh(v); });
}
template <typename S>
Matrix<S> relu(const Matrix<S>& m) {
  return m.unaryExpr([](S v) { return act::relu(v); });
}

}  // namespace tsam
