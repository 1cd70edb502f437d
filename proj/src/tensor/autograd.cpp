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

#include "tensor/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace capgan::ag {

const Tensor& Var::value() const { return tape_->nodes_[id_].get(); }

bool Var::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

Var Tape::Constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return Var(this, nodes_.size() - 1);
}

Var Tape::Leaf(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  return Var(this, nodes_.size() - 1);
}

Var Tape::External(const Tensor& value) {
  Node& n = nodes_.emplace_back();
  n.external = &value;
  return Var(this, nodes_.size() - 1);
}

Var Tape::Param(const Parameter& param) {
  Node& n = nodes_.emplace_back();
  n.external = &param.value;
  n.param = &param;
  n.requires_grad = grad_enabled_;
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return Record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::Record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      Require(v.tape_ == this, ErrorKind::kContract, "op mixes variables from different tapes");
      needs = needs || nodes_[v.id_].requires_grad;
    }
  }
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return Var(this, nodes_.size() - 1);
}

void Tape::Backward(Var root) {
  Require(root.tape_ == this, ErrorKind::kContract, "backward root belongs to another tape");
  Require(root.numel() == 1, ErrorKind::kContract,
          "backward root must be scalar, got " + ShapeString(root.shape()));
  for (Node& n : nodes_) n.grad = Tensor();
  Node& r = nodes_[root.id_];
  if (!r.requires_grad) return;
  r.grad = Tensor(r.get().shape(), 1.0);
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.get(), n.grad);
    if (n.param) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

Tensor Tape::Grad(Var v) const {
  const Node& n = nodes_[v.id_];
  if (n.grad.empty()) return Tensor(n.get().shape(), 0.0);
  return n.grad;
}

Tensor& Tape::GradBuffer(Var v) {
  Node& n = nodes_[v.id_];
  if (n.grad.empty()) n.grad = Tensor(n.get().shape(), 0.0);
  return n.grad;
}

void Tape::Accumulate(Var v, const Tensor& g) {
  if (!nodes_[v.id_].requires_grad) return;
  Tensor& buf = GradBuffer(v);
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
}

namespace {

bool IsScalar(const Tensor& t) { return t.numel() == 1; }

// Result shape of a binary elementwise op under the scalar-only broadcast rule.
Shape BinaryShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return a.shape();
  if (IsScalar(b)) return a.shape();
  if (IsScalar(a)) return b.shape();
  Fail(ErrorKind::kDimension, std::string(op) + ": incompatible shapes " + ShapeString(a.shape()) + " and " +
                                  ShapeString(b.shape()));
}

// Reduces g to the operand's shape (summing when the operand was a broadcast scalar).
Tensor ReduceTo(const Tensor& g, const Tensor& operand) {
  if (g.shape() == operand.shape()) return g;
  double s = 0.0;
  for (double v : g.data()) s += v;
  return Tensor(operand.shape(), s);
}

template <typename F>
Tensor Map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename F>
Tensor Zip(const Tensor& a, const Tensor& b, const Shape& shape, F f) {
  Tensor out(shape);
  const bool sa = a.numel() == 1 && a.shape() != shape;
  const bool sb = b.numel() == 1 && b.shape() != shape;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(sa ? a[0] : a[i], sb ? b[0] : b[i]);
  return out;
}

// Expands a scalar (broadcast) operand to the output shape.
Tensor Expand(const Tensor& t, const Shape& shape) {
  if (t.shape() == shape) return t;
  return Tensor(shape, t[0]);
}

void CheckMatrix(const Tensor& t, const char* op) {
  Require(t.rank() == 1 || t.rank() == 2, ErrorKind::kDimension,
          std::string(op) + ": expected a matrix, got " + ShapeString(t.shape()));
}

}  // namespace

Var add(Var a, Var b) {
  const Shape shape = BinaryShape(a.value(), b.value(), "add");
  Tensor out = Zip(a.value(), b.value(), shape, [](double x, double y) { return x + y; });
  return a.tape().Record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    t.Accumulate(a, ReduceTo(g, a.value()));
    t.Accumulate(b, ReduceTo(g, b.value()));
  });
}

Var sub(Var a, Var b) {
  const Shape shape = BinaryShape(a.value(), b.value(), "sub");
  Tensor out = Zip(a.value(), b.value(), shape, [](double x, double y) { return x - y; });
  return a.tape().Record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    t.Accumulate(a, ReduceTo(g, a.value()));
    t.Accumulate(b, ReduceTo(Map(g, [](double v) { return -v; }), b.value()));
  });
}

Var mul(Var a, Var b) {
  const Shape shape = BinaryShape(a.value(), b.value(), "mul");
  Tensor out = Zip(a.value(), b.value(), shape, [](double x, double y) { return x * y; });
  return a.tape().Record(std::move(out), {a, b}, [a, b, shape](Tape& t, const Tensor&, const Tensor& g) {
    if (a.requires_grad()) {
      Tensor ga = Zip(g, Expand(b.value(), shape), shape, [](double x, double y) { return x * y; });
      t.Accumulate(a, ReduceTo(ga, a.value()));
    }
    if (b.requires_grad()) {
      Tensor gb = Zip(g, Expand(a.value(), shape), shape, [](double x, double y) { return x * y; });
      t.Accumulate(b, ReduceTo(gb, b.value()));
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = Map(a.value(), [factor](double x) { return x * factor; });
  return a.tape().Record(std::move(out), {a}, [a, factor](Tape& t, const Tensor&, const Tensor& g) {
    t.Accumulate(a, Map(g, [factor](double v) { return v * factor; }));
  });
}

Var add_scalar(Var a, double value) {
  Tensor out = Map(a.value(), [value](double x) { return x + value; });
  return a.tape().Record(std::move(out), {a}, [a](Tape& t, const Tensor&, const Tensor& g) { t.Accumulate(a, g); });
}

Var sigmoid(Var a) {
  Tensor out = Map(a.value(), [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return a.tape().Record(std::move(out), {a}, [a](Tape& t, const Tensor& s, const Tensor& g) {
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * s[i] * (1.0 - s[i]);
    t.Accumulate(a, ga);
  });
}

Var log_sigmoid(Var a) {
  Tensor out = Map(a.value(), [](double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); });
  return a.tape().Record(std::move(out), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& x = a.value();
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) {
      // d/dx log sigmoid(x) = sigmoid(-x)
      const double e = std::exp(-std::abs(x[i]));
      ga[i] = g[i] * (x[i] >= 0 ? e / (1.0 + e) : 1.0 / (1.0 + e));
    }
    t.Accumulate(a, ga);
  });
}

Var tanh(Var a) {
  Tensor out = Map(a.value(), [](double x) { return std::tanh(x); });
  return a.tape().Record(std::move(out), {a}, [a](Tape& t, const Tensor& y, const Tensor& g) {
    const Tensor& th = y;
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * (1.0 - th[i] * th[i]);
    t.Accumulate(a, ga);
  });
}

Var exp(Var a) {
  Tensor out = Map(a.value(), [](double x) { return std::exp(x); });
  Require(out.AllFinite(), ErrorKind::kNumeric, "exp overflow");
  return a.tape().Record(std::move(out), {a}, [a](Tape& t, const Tensor& y, const Tensor& g) {
    const Tensor& e = y;
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * e[i];
    t.Accumulate(a, ga);
  });
}

Var log(Var a) {
  for (double v : a.value().data()) {
    Require(v > 0.0, ErrorKind::kDomain, "log of non-positive value");
  }
  Tensor out = Map(a.value(), [](double x) { return std::log(x); });
  return a.tape().Record(std::move(out), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& x = a.value();
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = g[i] / x[i];
    t.Accumulate(a, ga);
  });
}

Var relu(Var a) {
  Tensor out = Map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
  return a.tape().Record(std::move(out), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& x = a.value();
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] = x[i] > 0.0 ? g[i] : 0.0;
    t.Accumulate(a, ga);
  });
}

Var elementwise(ElementwiseOp op, std::span<const Var> inputs) {
  const bool binary = op == ElementwiseOp::kAdd || op == ElementwiseOp::kSub || op == ElementwiseOp::kMul;
  Require(inputs.size() == (binary ? 2u : 1u), ErrorKind::kContract, "elementwise: wrong number of inputs");
  switch (op) {
    case ElementwiseOp::kAdd: return add(inputs[0], inputs[1]);
    case ElementwiseOp::kSub: return sub(inputs[0], inputs[1]);
    case ElementwiseOp::kMul: return mul(inputs[0], inputs[1]);
    case ElementwiseOp::kSigmoid: return sigmoid(inputs[0]);
    case ElementwiseOp::kTanh: return tanh(inputs[0]);
    case ElementwiseOp::kExp: return exp(inputs[0]);
    case ElementwiseOp::kLog: return log(inputs[0]);
    case ElementwiseOp::kRelu: return relu(inputs[0]);
  }
  Fail(ErrorKind::kContract, "elementwise: unknown op");
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  CheckMatrix(av, "matmul");
  CheckMatrix(bv, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Require(bv.rows() == k, ErrorKind::kDimension,
          "matmul: inner dimensions disagree " + ShapeString(av.shape()) + " * " + ShapeString(bv.shape()));
  Tensor out({m, n});
  kernels::GemmAcc(av.data(), bv.data(), out.data(), m, k, n);
  return a.tape().Record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor&, const Tensor& g) {
    if (a.requires_grad()) {
      kernels::GemmNtAcc(g.data(), b.value().data(), t.GradBuffer(a).data(), m, n, k);
    }
    if (b.requires_grad()) {
      kernels::GemmTnAcc(a.value().data(), g.data(), t.GradBuffer(b).data(), k, m, n);
    }
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  CheckMatrix(av, "transpose");
  const std::size_t m = av.rows(), n = av.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return a.tape().Record(std::move(out), {a}, [a, m, n](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.GradBuffer(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().Reshaped(std::move(shape));
  return a.tape().Record(std::move(out), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    t.Accumulate(a, g.Reshaped(a.value().shape()));
  });
}

Var add_row(Var x, Var b) {
  const Tensor& xv = x.value();
  CheckMatrix(xv, "add_row");
  const std::size_t m = xv.rows(), n = xv.cols();
  Require(b.numel() == n, ErrorKind::kDimension,
          "add_row: bias " + ShapeString(b.shape()) + " does not match " + ShapeString(xv.shape()));
  Tensor out = xv;
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  return x.tape().Record(std::move(out), {x, b}, [x, b, m, n](Tape& t, const Tensor&, const Tensor& g) {
    t.Accumulate(x, g);
    if (b.requires_grad()) {
      Tensor& gb = t.GradBuffer(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
    }
  });
}

Var mul_row(Var x, Var w) {
  const Tensor& xv = x.value();
  CheckMatrix(xv, "mul_row");
  const std::size_t m = xv.rows(), n = xv.cols();
  Require(w.numel() == n, ErrorKind::kDimension,
          "mul_row: gain " + ShapeString(w.shape()) + " does not match " + ShapeString(xv.shape()));
  Tensor out = xv;
  const Tensor& wv = w.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= wv[j];
  return x.tape().Record(std::move(out), {x, w}, [x, w, m, n](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    if (x.requires_grad()) {
      Tensor& gx = t.GradBuffer(x);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i * n + j] * wv[j];
    }
    if (w.requires_grad()) {
      Tensor& gw = t.GradBuffer(w);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gw[j] += g[i * n + j] * xv[i * n + j];
    }
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  CheckMatrix(xv, "slice_rows");
  Require(begin < end && end <= xv.rows(), ErrorKind::kRange, "slice_rows: bad range");
  const std::size_t n = xv.cols();
  Tensor out({end - begin, n});
  std::copy(xv.data().begin() + begin * n, xv.data().begin() + end * n, out.data().begin());
  return x.tape().Record(std::move(out), {x}, [x, begin, n](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& gx = t.GradBuffer(x);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[begin * n + i] += g[i];
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  CheckMatrix(xv, "slice_cols");
  Require(begin < end && end <= xv.cols(), ErrorKind::kRange, "slice_cols: bad range");
  const std::size_t m = xv.rows(), n = xv.cols(), w = end - begin;
  Tensor out({m, w});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = xv[i * n + begin + j];
  return x.tape().Record(std::move(out), {x}, [x, begin, m, n, w](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& gx = t.GradBuffer(x);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) gx[i * n + begin + j] += g[i * w + j];
  });
}

Var concat_rows(std::span<const Var> parts) {
  Require(!parts.empty(), ErrorKind::kContract, "concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  for (const Var& p : parts) {
    CheckMatrix(p.value(), "concat_rows");
    Require(p.cols() == n, ErrorKind::kDimension, "concat_rows: column counts differ");
    m += p.rows();
  }
  Tensor out({m, n});
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + off);
    off += p.numel();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().Record(std::move(out), parts, [inputs](Tape& t, const Tensor&, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      if (p.requires_grad()) {
        Tensor& gp = t.GradBuffer(p);
        for (std::size_t i = 0; i < gp.numel(); ++i) gp[i] += g[off + i];
      }
      off += p.numel();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  Require(!parts.empty(), ErrorKind::kContract, "concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  for (const Var& p : parts) {
    CheckMatrix(p.value(), "concat_cols");
    Require(p.rows() == m, ErrorKind::kDimension, "concat_cols: row counts differ");
    n += p.cols();
  }
  Tensor out({m, n});
  std::size_t off = 0;
  for (const Var& p : parts) {
    const std::size_t w = p.cols();
    const Tensor& pv = p.value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * n + off + j] = pv[i * w + j];
    off += w;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().Record(std::move(out), parts, [inputs, m, n](Tape& t, const Tensor&, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      const std::size_t w = p.cols();
      if (p.requires_grad()) {
        Tensor& gp = t.GradBuffer(p);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[i * n + off + j];
      }
      off += w;
    }
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Tensor& tv = table.value();
  CheckMatrix(tv, "gather_rows");
  Require(!ids.empty(), ErrorKind::kContract, "gather_rows: no ids");
  const std::size_t n = tv.cols();
  Tensor out({ids.size(), n});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Require(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < tv.rows(), ErrorKind::kRange,
            "gather_rows: id " + std::to_string(ids[i]) + " out of range");
    std::copy_n(tv.data().begin() + ids[i] * n, n, out.data().begin() + i * n);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return table.tape().Record(std::move(out), {table}, [table, idx, n](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& gt = t.GradBuffer(table);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) gt[idx[i] * n + j] += g[i * n + j];
  });
}

Var pick(Var x, std::span<const int> ids) {
  const Tensor& xv = x.value();
  CheckMatrix(xv, "pick");
  const std::size_t m = xv.rows(), n = xv.cols();
  Require(ids.size() == m, ErrorKind::kDimension, "pick: need one id per row");
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    Require(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < n, ErrorKind::kRange, "pick: id out of range");
    out[i] = xv[i * n + ids[i]];
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return x.tape().Record(std::move(out), {x}, [x, idx, n](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& gx = t.GradBuffer(x);
    for (std::size_t i = 0; i < idx.size(); ++i) gx[i * n + idx[i]] += g[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().Record(Tensor::Scalar(s), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    t.Accumulate(a, Tensor(a.value().shape(), g[0]));
  });
}

Var mean(Var a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  return scale(sum(a), inv);
}

Var mean_rows(Var x) {
  const Tensor& xv = x.value();
  CheckMatrix(xv, "mean_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out({1, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += xv[i * n + j];
  for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
  return x.tape().Record(std::move(out), {x}, [x, m, n](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& gx = t.GradBuffer(x);
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j] * inv;
  });
}

Var softmax(Var x, int axis) {
  const Tensor& xv = x.value();
  const int rank = static_cast<int>(xv.rank());
  const int ax = axis < 0 ? axis + rank : axis;
  Require(ax >= 0 && ax < rank, ErrorKind::kRange, "softmax: invalid axis");
  std::size_t outer = 1, inner = 1;
  for (int d = 0; d < ax; ++d) outer *= xv.shape()[d];
  for (int d = ax + 1; d < rank; ++d) inner *= xv.shape()[d];
  const std::size_t len = xv.shape()[ax];
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, xv[base + k * inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const double e = std::exp(xv[base + k * inner] - mx);
        out[base + k * inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= z;
    }
  }
  return x.tape().Record(std::move(out), {x}, [x, outer, inner, len](Tape& t, const Tensor& y, const Tensor& g) {
    const Tensor& s = y;
    Tensor& gx = t.GradBuffer(x);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * len * inner + in;
        double dot = 0.0;
        for (std::size_t k = 0; k < len; ++k) dot += g[base + k * inner] * s[base + k * inner];
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = base + k * inner;
          gx[i] += s[i] * (g[i] - dot);
        }
      }
    }
  });
}

Var log_softmax(Var x) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data().data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
  }
  return x.tape().Record(std::move(out), {x}, [x, m, n](Tape& t, const Tensor& y, const Tensor& g) {
    const Tensor& ls = y;
    Tensor& gx = t.GradBuffer(x);
    for (std::size_t i = 0; i < m; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += g[i * n + j];
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[i * n + j] - std::exp(ls[i * n + j]) * gs;
    }
  });
}

Var cross_entropy(Var logits, std::span<const int> targets, std::span<const unsigned char> mask) {
  const Tensor& xv = logits.value();
  CheckMatrix(xv, "cross_entropy");
  const std::size_t m = xv.rows(), n = xv.cols();
  Require(targets.size() == m && mask.size() == m, ErrorKind::kDimension,
          "cross_entropy: targets/mask length must equal the number of rows");
  std::size_t count = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    Require(targets[i] >= 0 && static_cast<std::size_t>(targets[i]) < n, ErrorKind::kRange,
            "cross_entropy: target id out of vocabulary range");
    ++count;
  }
  Require(count > 0, ErrorKind::kDegenerate, "cross_entropy: every position is masked");
  Tensor probs({m, n});
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data().data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[i * n + j] = std::exp(row[j] - mx);
      z += probs[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) probs[i * n + j] /= z;
    if (mask[i]) loss += mx + std::log(z) - row[targets[i]];
  }
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<unsigned char> msk(mask.begin(), mask.end());
  return logits.tape().Record(
      Tensor::Scalar(loss * inv), {logits},
      [logits, probs = std::move(probs), tgt = std::move(tgt), msk = std::move(msk), m, n, inv](
          Tape& t, const Tensor&, const Tensor& g) {
        Tensor& gx = t.GradBuffer(logits);
        const double s = g[0] * inv;
        for (std::size_t i = 0; i < m; ++i) {
          if (!msk[i]) continue;
          for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += s * probs[i * n + j];
          gx[i * n + tgt[i]] -= s;
        }
      });
}

Var layer_norm(Var x, double eps) {
  const Tensor& xv = x.value();
  CheckMatrix(xv, "layer_norm");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xv[i * n + j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xv[i * n + j] - mu) * (xv[i * n + j] - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = (xv[i * n + j] - mu) * inv_std[i];
  }
  return x.tape().Record(std::move(out), {x}, [x, inv_std, m, n](Tape& t, const Tensor& y, const Tensor& g) {
    const Tensor& xh = y;
    Tensor& gx = t.GradBuffer(x);
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
      double gsum = 0.0, gxh = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        gsum += g[i * n + j];
        gxh += g[i * n + j] * xh[i * n + j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        gx[i * n + j] += inv_std[i] * (g[i * n + j] - gsum / dn - xh[i * n + j] * gxh / dn);
      }
    }
  });
}

Var l2_normalize(Var x) {
  const Tensor& xv = x.value();
  double ss = 0.0;
  for (double v : xv.data()) ss += v * v;
  const double norm = std::sqrt(ss);
  Require(norm > 0.0 && std::isfinite(norm), ErrorKind::kNumeric, "l2_normalize: zero-norm vector");
  Tensor out = Map(xv, [norm](double v) { return v / norm; });
  return x.tape().Record(std::move(out), {x}, [x, norm](Tape& t, const Tensor& y, const Tensor& g) {
    const Tensor& u = y;
    double dot = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) dot += g[i] * u[i];
    Tensor& gx = t.GradBuffer(x);
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += (g[i] - u[i] * dot) / norm;
  });
}

Var unfold_frames(Var x, std::size_t kernel) {
  const Tensor& xv = x.value();
  CheckMatrix(xv, "unfold_frames");
  Require(kernel % 2 == 1, ErrorKind::kContract, "unfold_frames: kernel must be odd");
  const std::size_t frames = xv.rows(), ch = xv.cols(), half = kernel / 2;
  const std::size_t width = kernel * ch;
  Tensor out({frames, width});
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const long src = static_cast<long>(f + k) - static_cast<long>(half);
      if (src < 0 || src >= static_cast<long>(frames)) continue;
      std::copy_n(xv.data().begin() + src * ch, ch, out.data().begin() + f * width + k * ch);
    }
  }
  return x.tape().Record(std::move(out), {x}, [x, frames, ch, kernel, half, width](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& gx = t.GradBuffer(x);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t k = 0; k < kernel; ++k) {
        const long src = static_cast<long>(f + k) - static_cast<long>(half);
        if (src < 0 || src >= static_cast<long>(frames)) continue;
        for (std::size_t c = 0; c < ch; ++c) gx[src * ch + c] += g[f * width + k * ch + c];
      }
    }
  });
}

Var dropout(Var x, double rate, Rng& rng) {
  Require(rate >= 0.0 && rate < 1.0, ErrorKind::kContract, "dropout: rate must be in [0, 1)");
  if (rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  Tensor mask(x.shape());
  for (std::size_t i = 0; i < mask.numel(); ++i) mask[i] = keep(rng) ? s : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= mask[i];
  return x.tape().Record(std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, const Tensor&, const Tensor& g) {
    Tensor gx(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) gx[i] = g[i] * mask[i];
    t.Accumulate(x, gx);
  });
}

}  // namespace capgan::ag
