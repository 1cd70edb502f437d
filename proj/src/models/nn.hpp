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

// Building blocks shared by the three networks. Layers hold indices into
// their model's ParameterSet, so models stay copyable.

#ifndef CAPGAN_MODELS_NN_HPP_
#define CAPGAN_MODELS_NN_HPP_

#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "tensor/autograd.hpp"
#include "tensor/tensor.hpp"

namespace capgan::models {

class ParameterSet {
 public:
  std::size_t Add(std::string name, Tensor value);

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  // kNotFound when absent.
  std::size_t IndexOf(const std::string& name) const;

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }
  std::vector<Parameter*> Pointers();

  void ZeroGrad() const;
  std::size_t NumValues() const;
  // Same names, shapes and bit-identical values.
  bool SameValues(const ParameterSet& other) const;

 private:
  std::deque<Parameter> params_;
};

// Rounds every value to the nearest float32 so that checkpoints (float32
// payload) reproduce parameters exactly.
void RoundToFloat(Tensor& t);

// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
Tensor XavierUniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor NormalInit(Shape shape, double stddev, Rng& rng);

struct Linear {
  std::size_t weight = 0;  // [in x out]
  std::size_t bias = 0;    // [out]

  static Linear Create(ParameterSet& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  ag::Var operator()(ag::Tape& t, const ParameterSet& ps, ag::Var x) const;
};

struct LayerNorm {
  std::size_t gain = 0;
  std::size_t bias = 0;

  static LayerNorm Create(ParameterSet& ps, const std::string& name, std::size_t dim);
  ag::Var operator()(ag::Tape& t, const ParameterSet& ps, ag::Var x) const;
};

// Single-layer GRU:
//   r = sigmoid(W_r x + U_r h + b_r)
//   u = sigmoid(W_u x + U_u h + b_u)
//   c = tanh(W_h x + U_h (r * h) + b_h)
//   h' = (1 - u) * h + u * c
struct Gru {
  std::size_t w_r = 0, w_u = 0, w_h = 0;  // [in x hidden]
  std::size_t u_r = 0, u_u = 0, u_h = 0;  // [hidden x hidden]
  std::size_t b_r = 0, b_u = 0, b_h = 0;  // [hidden]
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  static Gru Create(ParameterSet& ps, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

  // One step; x is [1 x in], h is [1 x hidden].
  ag::Var Cell(ag::Tape& t, const ParameterSet& ps, ag::Var x, ag::Var h) const;
  // Runs over the rows of xs [T x in] from a zero state; returns the final
  // hidden state [1 x hidden]. Same arithmetic as repeated Cell().
  ag::Var Run(ag::Tape& t, const ParameterSet& ps, ag::Var xs) const;
};

// Convolution over frames with "same" zero padding: [F x in] -> [F x out].
struct Conv1d {
  Linear affine;  // [(kernel*in) x out]
  std::size_t kernel = 3;

  static Conv1d Create(ParameterSet& ps, const std::string& name, std::size_t in, std::size_t out,
                       std::size_t kernel, Rng& rng);
  ag::Var operator()(ag::Tape& t, const ParameterSet& ps, ag::Var x) const;
};

}  // namespace capgan::models

#endif  // CAPGAN_MODELS_NN_HPP_
