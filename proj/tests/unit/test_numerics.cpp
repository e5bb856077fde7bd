#include <doctest.h>

#include <random>

#include "../support/finite_diff.hpp"
#include "../support/reference.hpp"
#include "tsam/numerics/tape.hpp"

using namespace tsam;
using V = ad::Var<double>;
using T = ad::Tape<double>;

namespace {

// Scalar read-out of an arbitrary-shape node, fixed random weighting.
V readout(T& t, V out, std::uint64_t seed = 99) {
  ref::Rng rng(seed);
  auto w = t.constant(ref::random_matrix(rng, out.rows(), out.cols()));
  return ad::sum_squares(ad::hadamard(out, w));
}

}  // namespace

TEST_CASE("softmax_masked zeroes disallowed positions and normalises the rest") {
  std::vector<double> logits{1.0, 2.0, 3.0, 1000.0};
  const auto p = softmax_masked<double>(logits, {true, true, true, false});
  CHECK(p[3] == 0.0);
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p[2] / p[1] == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("softmax_masked survives large logits") {
  std::vector<double> logits{1000.0, 999.0};
  const auto p = softmax_masked<double>(logits, {true, true});
  CHECK(std::isfinite(p[0]));
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("softmax_masked with no allowed position throws") {
  std::vector<double> logits{1.0, 2.0};
  CHECK_THROWS_AS(softmax_masked<double>(logits, {false, false}), EmptySupportError);
  CHECK_THROWS_AS(softmax_masked<double>(logits, {true}), DimensionError);
}

TEST_CASE("layer_norm gives zero mean and unit variance") {
  std::vector<double> x{1, 2, 3, 4, 10};
  const auto y = layer_norm<double>(x);
  double mean = 0, var = 0;
  for (double v : y) mean += v;
  mean /= 5;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= 5;
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-5));
  std::vector<double> constant{2, 2, 2};
  for (double v : layer_norm<double>(constant)) CHECK(v == 0.0);
}

TEST_CASE("activations") {
  CHECK(act::elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1));
  CHECK(act::elu(2.0) == 2.0);
  CHECK(act::leaky_relu(-1.0) == doctest::Approx(-0.2));
  CHECK(act::sigmoid(-800.0) >= 0.0);
  CHECK(act::sigmoid(0.0) == 0.5);
  CHECK(act::relu(-3.0) == 0.0);
}

TEST_CASE("matmul reports both shapes on mismatch") {
  MatrixD a(2, 3), b(2, 3);
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("[2x3] * [2x3]") != std::string::npos);
  }
}

TEST_CASE("tape op gradients match central differences") {
  ref::Rng rng(7);
  auto m = [&](long r, long c) { return ref::random_matrix(rng, r, c); };
  ad::Mask mask = ad::Mask::Constant(3, 4, true);
  mask(0, 1) = false;
  mask(2, 0) = mask(2, 2) = mask(2, 3) = false;

  struct Case {
    const char* name;
    fd::Graph graph;
    std::vector<MatrixD> inputs;
  };
  const std::vector<Case> cases = {
      {"matmul", [](T& t, auto& v) { return readout(t, ad::matmul(v[0], v[1])); }, {m(3, 4), m(4, 2)}},
      {"matmul_bt", [](T& t, auto& v) { return readout(t, ad::matmul_bt(v[0], v[1])); }, {m(3, 4), m(2, 4)}},
      {"add/sub", [](T& t, auto& v) { return readout(t, ad::sub(ad::add(v[0], v[1]), v[1])); }, {m(2, 3), m(2, 3)}},
      {"hadamard", [](T& t, auto& v) { return readout(t, ad::hadamard(v[0], v[1])); }, {m(2, 3), m(2, 3)}},
      {"scale", [](T& t, auto& v) { return readout(t, ad::scale(v[0], 2.5)); }, {m(2, 2)}},
      {"add_row", [](T& t, auto& v) { return readout(t, ad::add_row(v[0], v[1])); }, {m(3, 2), m(1, 2)}},
      {"add_outer", [](T& t, auto& v) { return readout(t, ad::add_outer(v[0], v[1])); }, {m(3, 1), m(1, 4)}},
      {"transpose", [](T& t, auto& v) { return readout(t, ad::transpose(v[0])); }, {m(2, 3)}},
      {"reshape", [](T& t, auto& v) { return readout(t, ad::reshape(v[0], 1, 6)); }, {m(2, 3)}},
      {"middle_cols", [](T& t, auto& v) { return readout(t, ad::middle_cols(v[0], 1, 2)); }, {m(2, 4)}},
      {"row", [](T& t, auto& v) { return readout(t, ad::row(v[0], 1)); }, {m(3, 2)}},
      {"vstack", [](T& t, auto& v) { return readout(t, ad::vstack(std::vector<V>{v[0], v[1]})); }, {m(1, 3), m(2, 3)}},
      {"hstack", [](T& t, auto& v) { return readout(t, ad::hstack(std::vector<V>{v[0], v[1]})); }, {m(2, 1), m(2, 3)}},
      {"sum", [](T& t, auto& v) { return readout(t, ad::sum(std::vector<V>{v[0], v[1], v[0]})); }, {m(2, 2), m(2, 2)}},
      {"elu", [](T& t, auto& v) { return readout(t, ad::elu(v[0])); }, {m(3, 3)}},
      {"leaky_relu", [](T& t, auto& v) { return readout(t, ad::leaky_relu(v[0], 0.2)); }, {m(3, 3)}},
      {"relu", [](T& t, auto& v) { return readout(t, ad::relu(v[0])); }, {m(3, 3)}},
      {"sigmoid", [](T& t, auto& v) { return readout(t, ad::sigmoid(v[0])); }, {m(3, 3)}},
      {"tanh", [](T& t, auto& v) { return readout(t, ad::tanh(v[0])); }, {m(3, 3)}},
      {"masked_softmax_rows", [mask](T& t, auto& v) { return readout(t, ad::masked_softmax_rows(v[0], mask)); },
       {m(3, 4)}},
      {"layer_norm_rows", [](T& t, auto& v) { return readout(t, ad::layer_norm_rows(v[0], 1e-5)); }, {m(3, 5)}},
      {"sum_squares", [](T&, auto& v) { return ad::sum_squares(v[0]); }, {m(2, 3)}},
      {"weighted_sq_error",
       [w = m(2, 3), y = m(2, 3)](T&, auto& v) { return ad::weighted_sq_error(v[0], y, w); },
       {m(2, 3)}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    CHECK(fd::max_error(c.graph, c.inputs) < 1e-6);
  }
}

TEST_CASE("masked softmax rows put exact zeros outside the mask") {
  T t;
  ad::Mask mask = ad::Mask::Constant(2, 3, false);
  mask(0, 0) = mask(1, 1) = mask(1, 2) = true;
  auto y = ad::masked_softmax_rows(t.leaf(MatrixD::Constant(2, 3, 5.0)), mask);
  CHECK(y.value()(0, 0) == 1.0);
  CHECK(y.value()(0, 1) == 0.0);
  CHECK(y.value()(1, 0) == 0.0);
  CHECK(y.value()(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("gradient accumulates across shared uses and skips constants") {
  T t;
  auto x = t.leaf(MatrixD::Constant(1, 1, 3.0));
  auto c = t.constant(MatrixD::Constant(1, 1, 2.0));
  auto unused = t.leaf(MatrixD::Constant(2, 2, 1.0));
  auto y = ad::add(ad::hadamard(x, x), ad::hadamard(x, c));  // x^2 + 2x
  t.backward(y);
  CHECK(t.grad(x)(0, 0) == doctest::Approx(8.0));
  CHECK(t.grad(unused).isZero());
  CHECK_FALSE(t.needs_grad(c));
}

TEST_CASE("backward requires a scalar root") {
  T t;
  auto x = t.leaf(MatrixD::Ones(2, 2));
  CHECK_THROWS_AS(t.backward(x), DimensionError);
}

TEST_CASE("shape errors on tape ops") {
  T t;
  auto a = t.leaf(MatrixD::Ones(2, 3));
  auto b = t.leaf(MatrixD::Ones(2, 3));
  CHECK_THROWS_AS(ad::matmul(a, b), DimensionError);
  CHECK_THROWS_AS(ad::add(a, t.leaf(MatrixD::Ones(3, 2))), DimensionError);
  CHECK_THROWS_AS(ad::reshape(a, 4, 2), DimensionError);
  CHECK_THROWS_AS(ad::middle_cols(a, 2, 2), IndexError);
  CHECK_THROWS_AS(ad::row(a, 2), IndexError);
  CHECK_THROWS_AS(ad::add_row(a, t.leaf(MatrixD::Ones(1, 2))), DimensionError);
}
