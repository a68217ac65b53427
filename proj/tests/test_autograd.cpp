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


#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "aant/autograd.hpp"
#include "support.hpp"

namespace aant {
namespace {

using testing::numeric_gradient;
using testing::random_matrix;
using testing::relative_error;

// Contract a matrix-valued op against a fixed random weight so every output
// entry contributes to the scalar being differentiated.
struct UnaryCase {
  std::string name;
  std::function<ag::Var(const ag::Var&)> op;
  Eigen::Index rows;
  Eigen::Index cols;
};

void expect_unary_gradient(const UnaryCase& c, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const Matrix x0 = random_matrix(rng, c.rows, c.cols);
  const Matrix probe = c.op(ag::Var::constant(x0)).value();
  const Matrix w = random_matrix(rng, probe.rows(), probe.cols());

  auto x = ag::Var::parameter(x0);
  ag::backward(ag::sum(ag::hadamard(c.op(x), ag::Var::constant(w))));
  const Matrix numeric = numeric_gradient(
      [&](const Matrix& m) { return c.op(ag::Var::constant(m)).value().cwiseProduct(w).sum(); }, x0);
  EXPECT_LT(relative_error(x.grad(), numeric), 1e-6) << c.name << " seed " << seed;
}

TEST(Autograd, UnaryOpsMatchFiniteDifferences) {
  const std::vector<UnaryCase> cases{
      {"transpose", [](const ag::Var& a) { return ag::transpose(a); }, 3, 4},
      {"scale", [](const ag::Var& a) { return ag::scale(a, -2.5); }, 2, 3},
      {"slice_cols", [](const ag::Var& a) { return ag::slice_cols(a, 1, 2); }, 3, 4},
      {"slice_rows", [](const ag::Var& a) { return ag::slice_rows(a, 1, 2); }, 4, 3},
      {"layer_norm_rows", [](const ag::Var& a) { return ag::layer_norm_rows(a); }, 3, 5},
      {"softmax_rows", [](const ag::Var& a) { return ag::softmax_rows(a); }, 3, 4},
      {"softmax_cols", [](const ag::Var& a) { return ag::softmax_cols(a); }, 4, 3},
      {"l2_normalize_rows", [](const ag::Var& a) { return ag::l2_normalize_rows(a); }, 3, 4},
      {"gelu", [](const ag::Var& a) { return ag::gelu(a); }, 3, 3},
      {"softplus", [](const ag::Var& a) { return ag::softplus(a); }, 2, 4},
      {"sum", [](const ag::Var& a) { return ag::sum(a); }, 3, 2},
      {"max_over_rows", [](const ag::Var& a) { return ag::max_over_rows(a, 1, 4); }, 5, 2},
      {"top_k_mean_cols", [](const ag::Var& a) { return ag::top_k_mean_cols(a, 3); }, 6, 2},
      {"cross_entropy_rows", [](const ag::Var& a) { return ag::cross_entropy_rows(a, {1, 0, 1}); }, 3, 2},
  };
  for (const auto& c : cases) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) expect_unary_gradient(c, seed);
  }
}

TEST(Autograd, BinaryOpsMatchFiniteDifferences) {
  SplitMix64 rng(42);
  const Matrix a0 = random_matrix(rng, 3, 4);
  const Matrix b0 = random_matrix(rng, 4, 2);
  const Matrix c0 = random_matrix(rng, 3, 4);
  const Matrix r0 = random_matrix(rng, 1, 4);
  const Matrix s0 = Matrix::Constant(1, 1, 1.7);
  const Matrix w = random_matrix(rng, 3, 4);
  const Matrix w2 = random_matrix(rng, 3, 2);

  auto check = [&](const std::function<ag::Var(const ag::Var&, const ag::Var&)>& op, const Matrix& x0,
                   const Matrix& y0, const Matrix& weight, const char* name) {
    auto x = ag::Var::parameter(x0);
    auto y = ag::Var::parameter(y0);
    ag::backward(ag::sum(ag::hadamard(op(x, y), ag::Var::constant(weight))));
    auto value = [&](const Matrix& xm, const Matrix& ym) {
      return op(ag::Var::constant(xm), ag::Var::constant(ym)).value().cwiseProduct(weight).sum();
    };
    EXPECT_LT(relative_error(x.grad(), numeric_gradient([&](const Matrix& m) { return value(m, y0); }, x0)), 1e-6)
        << name << " lhs";
    EXPECT_LT(relative_error(y.grad(), numeric_gradient([&](const Matrix& m) { return value(x0, m); }, y0)), 1e-6)
        << name << " rhs";
  };
  check([](const ag::Var& x, const ag::Var& y) { return ag::matmul(x, y); }, a0, b0, w2, "matmul");
  check([](const ag::Var& x, const ag::Var& y) { return ag::add(x, y); }, a0, c0, w, "add");
  check([](const ag::Var& x, const ag::Var& y) { return ag::sub(x, y); }, a0, c0, w, "sub");
  check([](const ag::Var& x, const ag::Var& y) { return ag::hadamard(x, y); }, a0, c0, w, "hadamard");
  check([](const ag::Var& x, const ag::Var& y) { return ag::add_row(x, y); }, a0, r0, w, "add_row");
  check([](const ag::Var& x, const ag::Var& y) { return ag::div_scalar(x, y); }, a0, s0, w, "div_scalar");
  check([](const ag::Var& x, const ag::Var& y) { return ag::concat_cols({x, ag::slice_cols(y, 0, 2)}); },
        Matrix(a0.leftCols(2)), c0, w, "concat_cols");
  check([](const ag::Var& x, const ag::Var& y) { return ag::concat_rows({ag::slice_rows(x, 0, 1), y}); }, a0,
        Matrix(c0.topRows(2)), w, "concat_rows");
}

TEST(Autograd, SharedInputAccumulatesGradient) {
  auto x = ag::Var::parameter(Matrix::Constant(1, 1, 3.0));
  ag::backward(ag::sum(ag::hadamard(x, x)));
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 6.0);
}

TEST(Autograd, ConstantsReceiveNoGradient) {
  auto c = ag::Var::constant(Matrix::Ones(2, 2));
  auto p = ag::Var::parameter(Matrix::Ones(2, 2));
  ag::backward(ag::sum(ag::add(c, p)));
  EXPECT_TRUE(c.grad().isZero());
  EXPECT_TRUE(p.grad().isOnes());
}

TEST(Autograd, ZeroRowNormalizesToZero) {
  Matrix x(2, 3);
  x << 0, 0, 0, 3, 0, 4;
  auto v = ag::Var::parameter(x);
  const auto y = ag::l2_normalize_rows(v);
  EXPECT_TRUE(y.value().row(0).isZero());
  EXPECT_NEAR(y.value()(1, 0), 0.6, 1e-15);
  EXPECT_NEAR(y.value()(1, 2), 0.8, 1e-15);
  ag::backward(ag::sum(y));
  EXPECT_TRUE(v.grad().row(0).isZero());
}

TEST(Autograd, SoftmaxRowsSumToOne) {
  SplitMix64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = ag::softmax_rows(ag::Var::constant(random_matrix(rng, 4, 5, 10.0)));
    for (Eigen::Index r = 0; r < 4; ++r) EXPECT_NEAR(y.value().row(r).sum(), 1.0, 1e-12);
  }
}

TEST(Autograd, CrossEntropyHandValue) {
  Matrix z(1, 2);
  z << 0.0, 3.0;
  const double v = ag::cross_entropy_rows(ag::Var::constant(z), {1}).item();
  EXPECT_NEAR(v, std::log1p(std::exp(-3.0)), 1e-15);
}

TEST(Autograd, TopKPicksLargestWithStableTies) {
  Matrix x(4, 1);
  x << 1, 3, 3, 2;
  const auto idx = ag::top_k_rows(x, 0, 2);
  ASSERT_EQ(idx.size(), 2U);
  EXPECT_EQ(idx[0], 1);
  EXPECT_EQ(idx[1], 2);
  EXPECT_DOUBLE_EQ(ag::top_k_mean_cols(ag::Var::constant(x), 2).item(), 3.0);
  // k beyond the row count averages everything.
  EXPECT_DOUBLE_EQ(ag::top_k_mean_cols(ag::Var::constant(x), 10).item(), 2.25);
}

TEST(Autograd, ShapeErrors) {
  auto a = ag::Var::constant(Matrix::Ones(2, 3));
  EXPECT_THROW(ag::matmul(a, a), ShapeError);
  EXPECT_THROW(ag::add(a, ag::Var::constant(Matrix::Ones(3, 2))), ShapeError);
  EXPECT_THROW(ag::backward(a), ShapeError);
  EXPECT_THROW(ag::max_over_rows(a, 1, 1), ShapeError);
}

}  // namespace
}  // namespace aant
