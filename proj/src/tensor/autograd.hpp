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

// Reverse-mode automatic differentiation over a linear tape.
//
// Every op appends one node holding its forward value and a closure that
// pushes the output gradient into its inputs. Since inputs are always created
// before outputs, a single reverse sweep over the node list is a valid
// topological order and visits each node once.
//
// Parameter leaves reference the Parameter's storage instead of copying it;
// the Parameter must outlive the tape. backward() accumulates into
// Parameter::grad, so repeated calls sum until the optimizer zeroes them.

#ifndef CAPGAN_TENSOR_AUTOGRAD_HPP_
#define CAPGAN_TENSOR_AUTOGRAD_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "common/rng.hpp"
#include "tensor/tensor.hpp"

namespace capgan::ag {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t numel() const { return value().numel(); }
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // The backward rule receives the op's output value and gradient; it writes
  // input gradients through Tape::Accumulate.
  using BackwardFn = std::function<void(Tape&, const Tensor& out, const Tensor& out_grad)>;

  // With grad disabled nothing is recorded for backward; used for inference.
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var Constant(Tensor value);
  // A differentiable leaf owned by the tape; read its gradient with Grad().
  Var Leaf(Tensor value);
  // Non-differentiable reference to caller-owned storage that outlives the tape.
  Var External(const Tensor& value);
  // References param's storage; no copy. The Parameter must outlive the tape.
  Var Param(const Parameter& param);

  // Appends an op output. The backward rule is kept only if some input
  // requires grad.
  Var Record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var Record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  void Backward(Var root);

  // Gradient of the last Backward() root w.r.t. v (zeros if never reached).
  Tensor Grad(Var v) const;

  // For backward rules: adds g into v's gradient buffer if v requires grad.
  void Accumulate(Var v, const Tensor& g);
  // Direct access to v's gradient buffer (allocated on demand).
  Tensor& GradBuffer(Var v);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Tensor value;
    const Tensor* external = nullptr;  // parameter storage
    const Parameter* param = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;

    const Tensor& get() const { return external ? *external : value; }
  };

  bool grad_enabled_;
  std::deque<Node> nodes_;
};

// Elementwise ops. Binary ops accept equal shapes or a scalar operand.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double value);
Var sigmoid(Var a);
Var log_sigmoid(Var a);  // stable for large |a|
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);  // kDomain on non-positive input
Var relu(Var a);

enum class ElementwiseOp { kAdd, kSub, kMul, kSigmoid, kTanh, kExp, kLog, kRelu };
Var elementwise(ElementwiseOp op, std::span<const Var> inputs);

// Linear algebra and reshaping.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, Shape shape);
// x[m x n] + b[n] on every row.
Var add_row(Var x, Var b);
// x[m x n] * g[n] on every row.
Var mul_row(Var x, Var g);
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
// Rows of table[V x d] selected by ids -> [ids.size() x d].
Var gather_rows(Var table, std::span<const int> ids);
// out[i] = x[i, ids[i]] -> [rows].
Var pick(Var x, std::span<const int> ids);

// Reductions.
Var sum(Var a);
Var mean(Var a);
Var mean_rows(Var x);  // [m x n] -> [1 x n]

// Normalization and probability.
Var softmax(Var x, int axis = -1);
Var log_softmax(Var x);  // along the last axis
// Mean negative log-likelihood of targets over rows where mask is nonzero.
Var cross_entropy(Var logits, std::span<const int> targets, std::span<const unsigned char> mask);
Var layer_norm(Var x, double eps = 1e-5);  // per row, no affine
Var l2_normalize(Var x);                   // whole tensor; kNumeric on zero norm

// [frames x channels] -> [frames x kernel*channels], zero padded so that the
// centre tap of an odd kernel lines up with the output frame.
Var unfold_frames(Var x, std::size_t kernel);

// Inverted dropout; identity when rate == 0.
Var dropout(Var x, double rate, Rng& rng);

}  // namespace capgan::ag

#endif  // CAPGAN_TENSOR_AUTOGRAD_HPP_
