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

// Central finite-difference oracle for the autograd tape.

#ifndef CAPGAN_TESTS_GRADCHECK_HPP_
#define CAPGAN_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "models/nn.hpp"
#include "tensor/autograd.hpp"

namespace capgan::testing {

// ||a - n|| / max(||a||, ||n||, floor). The floor keeps parameters whose true
// gradient is identically zero (attention key biases) from scoring
// finite-difference round-off as a 100% error.
inline double RelativeError(const std::vector<double>& analytic, const std::vector<double>& numeric,
                            double floor = 1e-10) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
}

using LeafLoss = std::function<ag::Var(ag::Tape&, const std::vector<ag::Var>&)>;

// Worst relative error over all inputs of a function of leaf tensors.
inline double CheckLeafGradients(std::vector<Tensor> inputs, const LeafLoss& f, double h = 1e-6) {
  std::vector<std::vector<double>> analytic;
  {
    ag::Tape t;
    std::vector<ag::Var> leaves;
    for (const Tensor& x : inputs) leaves.push_back(t.Leaf(x));
    t.Backward(f(t, leaves));
    for (const ag::Var& v : leaves) {
      Tensor g = t.Grad(v);
      analytic.emplace_back(g.data().begin(), g.data().end());
    }
  }
  auto eval = [&]() {
    ag::Tape t(false);
    std::vector<ag::Var> leaves;
    for (const Tensor& x : inputs) leaves.push_back(t.Constant(x));
    return f(t, leaves).value().item();
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> numeric(inputs[k].numel());
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      const double x0 = inputs[k][i];
      inputs[k][i] = x0 + h;
      const double up = eval();
      inputs[k][i] = x0 - h;
      const double down = eval();
      inputs[k][i] = x0;
      numeric[i] = (up - down) / (2 * h);
    }
    worst = std::max(worst, RelativeError(analytic[k], numeric));
  }
  return worst;
}

// Same check over every parameter of a model. loss(tape) must build the
// scalar objective from the model's parameters. h near cbrt(machine epsilon):
// at 1e-6 the round-off on zero-gradient key biases already reaches 1e-3.
inline double CheckParameterGradients(models::ParameterSet& ps, const std::function<ag::Var(ag::Tape&)>& loss,
                                      std::string* worst_name = nullptr, double floor = 1e-6,
                                      double h = 1e-5) {
  ps.ZeroGrad();
  {
    ag::Tape t;
    t.Backward(loss(t));
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Parameter& p = ps[k];
    std::vector<double> analytic(p.grad.data().begin(), p.grad.data().end());
    std::vector<double> numeric(p.value.numel());
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double x0 = p.value[i];
      p.value[i] = x0 + h;
      double up, down;
      {
        ag::Tape t(false);
        up = loss(t).value().item();
      }
      p.value[i] = x0 - h;
      {
        ag::Tape t(false);
        down = loss(t).value().item();
      }
      p.value[i] = x0;
      numeric[i] = (up - down) / (2 * h);
    }
    const double err = RelativeError(analytic, numeric, floor);
    if (err >= worst) {
      worst = err;
      if (worst_name) *worst_name = p.name;
    }
  }
  ps.ZeroGrad();
  return worst;
}

}  // namespace capgan::testing

#endif  // CAPGAN_TESTS_GRADCHECK_HPP_
