#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tsam/numerics/tape.hpp"

namespace fd {

using tsam::MatrixD;
using Graph = std::function<tsam::ad::Var<double>(tsam::ad::Tape<double>&, const std::vector<tsam::ad::Var<double>>&)>;

inline double evaluate(const Graph& f, const std::vector<MatrixD>& inputs) {
  tsam::ad::Tape<double> tape;
  std::vector<tsam::ad::Var<double>> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
  return f(tape, leaves).value()(0, 0);
}

inline std::vector<MatrixD> analytic(const Graph& f, const std::vector<MatrixD>& inputs) {
  tsam::ad::Tape<double> tape;
  std::vector<tsam::ad::Var<double>> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
  tape.backward(f(tape, leaves));
  std::vector<MatrixD> out;
  for (auto v : leaves) out.push_back(tape.grad(v));
  return out;
}

// Largest |analytic - numeric| / max(1, |analytic|, |numeric|) over every
// input entry, using central differences with step h.
inline double max_error(const Graph& f, std::vector<MatrixD> inputs, double h = 1e-6) {
  const auto grads = analytic(f, inputs);
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (long i = 0; i < inputs[k].size(); ++i) {
      double& x = inputs[k].data()[i];
      const double keep = x;
      x = keep + h;
      const double up = evaluate(f, inputs);
      x = keep - h;
      const double down = evaluate(f, inputs);
      x = keep;
      const double numeric = (up - down) / (2 * h);
      const double a = grads[k].data()[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
    }
  }
  return worst;
}

}  // namespace fd
