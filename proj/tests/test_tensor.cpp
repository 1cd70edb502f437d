// Copyright 2026 The capgan Authors.
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

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "common/error.hpp"
#include "gradcheck.hpp"
#include "tensor/autograd.hpp"

namespace capgan {
namespace {

using testing::CheckLeafGradients;

Tensor Random(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

constexpr double kOpTol = 1e-4;

TEST_CASE("matmul forward against hand values") {
  ag::Tape t(false);
  auto a = t.Constant(Tensor::Matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  auto b = t.Constant(Tensor::Matrix(3, 2, {7, 8, 9, 10, 11, 12}));
  const Tensor& c = ag::matmul(a, b).value();
  CHECK(c.at(0, 0) == 58);
  CHECK(c.at(0, 1) == 64);
  CHECK(c.at(1, 0) == 139);
  CHECK(c.at(1, 1) == 154);
}

TEST_CASE("matmul shape mismatch is a dimension error") {
  ag::Tape t;
  auto a = t.Leaf(Tensor({2, 3}));
  auto b = t.Leaf(Tensor({2, 3}));
  try {
    ag::matmul(a, b);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDimension);
  }
}

TEST_CASE("only scalar broadcasting is allowed") {
  ag::Tape t;
  auto a = t.Leaf(Tensor({2, 3}, 1.0));
  auto row = t.Leaf(Tensor({1, 3}, 1.0));
  auto s = t.Leaf(Tensor::Scalar(2.0));
  CHECK_THROWS_AS(ag::add(a, row), Error);
  CHECK(ag::mul(a, s).value()[5] == 2.0);
  CHECK(ag::sub(s, a).value()[0] == 1.0);
}

TEST_CASE("elementwise ops pass finite differences") {
  const Tensor a = Random({3, 4}, 1);
  const Tensor b = Random({3, 4}, 2);
  const Tensor pos = Random({3, 4}, 3, 0.2, 2.0);
  // Keep relu inputs away from the kink.
  Tensor r = Random({3, 4}, 4);
  for (double& v : r.data()) v += v >= 0 ? 0.1 : -0.1;
  auto weigh = [](ag::Var v) {
    Tensor w(v.shape());
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = 0.3 + 0.1 * static_cast<double>(i);
    return ag::sum(ag::mul(v, v.tape().Constant(w)));
  };
  CHECK(CheckLeafGradients({a, b}, [&](ag::Tape&, auto& x) { return weigh(ag::add(x[0], x[1])); }) < kOpTol);
  CHECK(CheckLeafGradients({a, b}, [&](ag::Tape&, auto& x) { return weigh(ag::sub(x[0], x[1])); }) < kOpTol);
  CHECK(CheckLeafGradients({a, b}, [&](ag::Tape&, auto& x) { return weigh(ag::mul(x[0], x[1])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::sigmoid(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::tanh(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::log_sigmoid(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::exp(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({pos}, [&](ag::Tape&, auto& x) { return weigh(ag::log(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({r}, [&](ag::Tape&, auto& x) { return weigh(ag::relu(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a, Tensor::Scalar(0.7)},
                           [&](ag::Tape&, auto& x) { return weigh(ag::mul(x[0], x[1])); }) < kOpTol);
}

TEST_CASE("elementwise dispatcher matches the named ops") {
  ag::Tape t(false);
  auto a = t.Constant(Random({2, 2}, 5));
  auto b = t.Constant(Random({2, 2}, 6));
  std::vector<ag::Var> ab{a, b};
  CHECK(ag::elementwise(ag::ElementwiseOp::kMul, ab).value() == ag::mul(a, b).value());
  std::vector<ag::Var> one{a};
  CHECK(ag::elementwise(ag::ElementwiseOp::kTanh, one).value() == ag::tanh(a).value());
}

TEST_CASE("log_sigmoid stays finite where log(sigmoid) would not") {
  ag::Tape t(false);
  auto x = t.Constant(Tensor({3}, std::vector<double>{-800.0, 0.0, 800.0}));
  const Tensor& y = ag::log_sigmoid(x).value();
  CHECK(y[0] == -800.0);
  CHECK(y[1] == doctest::Approx(-std::log(2.0)));
  CHECK(y[2] == 0.0);
}

TEST_CASE("log of a non-positive value is a domain error") {
  ag::Tape t;
  auto a = t.Leaf(Tensor({2}, std::vector<double>{1.0, 0.0}));
  try {
    ag::log(a);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDomain);
  }
}

TEST_CASE("matrix and shape ops pass finite differences") {
  const Tensor a = Random({3, 4}, 11);
  const Tensor b = Random({4, 2}, 12);
  const Tensor row = Random({4}, 13);
  auto weigh = [](ag::Var v) {
    Tensor w(v.shape());
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = std::sin(1.0 + static_cast<double>(i));
    return ag::sum(ag::mul(v, v.tape().Constant(w)));
  };
  CHECK(CheckLeafGradients({a, b}, [&](ag::Tape&, auto& x) { return weigh(ag::matmul(x[0], x[1])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::transpose(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::reshape(x[0], {6, 2})); }) < kOpTol);
  CHECK(CheckLeafGradients({a, row}, [&](ag::Tape&, auto& x) { return weigh(ag::add_row(x[0], x[1])); }) < kOpTol);
  CHECK(CheckLeafGradients({a, row}, [&](ag::Tape&, auto& x) { return weigh(ag::mul_row(x[0], x[1])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::slice_rows(x[0], 1, 3)); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::slice_cols(x[0], 1, 3)); }) < kOpTol);
  CHECK(CheckLeafGradients({a, a}, [&](ag::Tape&, auto& x) {
          std::vector<ag::Var> parts{x[0], x[1]};
          return weigh(ag::concat_rows(parts));
        }) < kOpTol);
  CHECK(CheckLeafGradients({a, b.Reshaped({2, 4}).Reshaped({4, 2})}, [&](ag::Tape&, auto& x) {
          std::vector<ag::Var> parts{ag::slice_rows(x[0], 0, 3), ag::slice_rows(x[1], 0, 3)};
          return weigh(ag::concat_cols(parts));
        }) < kOpTol);
  const std::vector<int> ids{2, 0, 2};
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::gather_rows(x[0], ids)); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::pick(x[0], ids)); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::mean_rows(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return ag::mean(ag::mul(x[0], x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::unfold_frames(x[0], 3)); }) < kOpTol);
}

TEST_CASE("softmax, normalization and loss ops pass finite differences") {
  const Tensor a = Random({3, 5}, 21, -2.0, 2.0);
  auto weigh = [](ag::Var v) {
    Tensor w(v.shape());
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = std::cos(0.5 + static_cast<double>(i));
    return ag::sum(ag::mul(v, v.tape().Constant(w)));
  };
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::softmax(x[0], -1)); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::softmax(x[0], 0)); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::log_softmax(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::layer_norm(x[0])); }) < kOpTol);
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return weigh(ag::l2_normalize(x[0])); }) < kOpTol);
  const std::vector<int> targets{4, 0, 2};
  const std::vector<unsigned char> mask{1, 0, 1};
  CHECK(CheckLeafGradients({a}, [&](ag::Tape&, auto& x) { return ag::cross_entropy(x[0], targets, mask); }) <
        kOpTol);
}

TEST_CASE("softmax rows sum to one and survive large logits") {
  ag::Tape t(false);
  auto x = t.Constant(Tensor::Matrix(2, 3, {1000, 1001, 1002, -5, 0, 5}));
  const Tensor& p = ag::softmax(x).value();
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(p.at(r, 0) + p.at(r, 1) + p.at(r, 2) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(p.AllFinite());
}

TEST_CASE("cross entropy against a hand value and masking") {
  ag::Tape t(false);
  auto logits = t.Constant(Tensor::Matrix(2, 2, {0.0, 0.0, 100.0, 0.0}));
  const std::vector<int> targets{1, 1};
  const std::vector<unsigned char> first_only{1, 0};
  CHECK(ag::cross_entropy(logits, targets, first_only).value().item() == doctest::Approx(std::log(2.0)));
  const std::vector<unsigned char> none{0, 0};
  try {
    ag::cross_entropy(logits, targets, none);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDegenerate);
  }
}

TEST_CASE("l2 normalize rejects a zero vector") {
  ag::Tape t(false);
  auto z = t.Constant(Tensor({1, 4}, 0.0));
  try {
    ag::l2_normalize(z);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
}

TEST_CASE("parameter gradients accumulate across backward passes until zeroed") {
  Parameter p("w", Tensor::Matrix(1, 2, {1.0, 2.0}));
  for (int pass = 0; pass < 2; ++pass) {
    ag::Tape t;
    t.Backward(ag::sum(ag::mul(t.Param(p), t.Param(p))));
  }
  CHECK(p.grad[0] == 4.0);
  CHECK(p.grad[1] == 8.0);
  p.ZeroGrad();
  CHECK(p.grad[0] == 0.0);
}

TEST_CASE("a reused input receives the sum of both paths") {
  ag::Tape t;
  auto x = t.Leaf(Tensor::Scalar(3.0));
  t.Backward(ag::add(ag::mul(x, x), x));
  CHECK(t.Grad(x).item() == 7.0);
}

TEST_CASE("backward requires a scalar root") {
  ag::Tape t;
  auto x = t.Leaf(Tensor({2, 2}, 1.0));
  CHECK_THROWS_AS(t.Backward(x), Error);
}

TEST_CASE("dropout with zero rate is the identity") {
  ag::Tape t(false);
  Rng rng(1);
  auto x = t.Constant(Random({2, 3}, 31));
  CHECK(ag::dropout(x, 0.0, rng).value() == x.value());
  const Tensor& d = ag::dropout(x, 0.5, rng).value();
  for (std::size_t i = 0; i < d.numel(); ++i) {
    CHECK((d[i] == 0.0 || d[i] == doctest::Approx(2.0 * x.value()[i])));
  }
}

}  // namespace
}  // namespace capgan
