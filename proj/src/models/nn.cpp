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

#include "models/nn.hpp"

#include <cmath>

#include "common/error.hpp"

namespace capgan::models {

std::size_t ParameterSet::Add(std::string name, Tensor value) {
  for (const Parameter& p : params_)
    Require(p.name != name, ErrorKind::kContract, "duplicate parameter name " + name);
  params_.emplace_back(std::move(name), std::move(value));
  return params_.size() - 1;
}

std::size_t ParameterSet::IndexOf(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  Fail(ErrorKind::kNotFound, "no parameter named " + name);
}

std::vector<Parameter*> ParameterSet::Pointers() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

void ParameterSet::ZeroGrad() const {
  for (const Parameter& p : params_) p.ZeroGrad();
}

std::size_t ParameterSet::NumValues() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.numel();
  return n;
}

bool ParameterSet::SameValues(const ParameterSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name != other.params_[i].name || !(params_[i].value == other.params_[i].value)) return false;
  }
  return true;
}

void RoundToFloat(Tensor& t) {
  for (double& v : t.data()) v = static_cast<float>(v);
}

Tensor XavierUniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({fan_in, fan_out});
  for (double& v : t.data()) v = dist(rng);
  RoundToFloat(t);
  return t;
}

Tensor NormalInit(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  RoundToFloat(t);
  return t;
}

Linear Linear::Create(ParameterSet& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  Linear l;
  l.weight = ps.Add(name + ".weight", XavierUniform(in, out, rng));
  l.bias = ps.Add(name + ".bias", Tensor({out}, 0.0));
  return l;
}

ag::Var Linear::operator()(ag::Tape& t, const ParameterSet& ps, ag::Var x) const {
  return ag::add_row(ag::matmul(x, t.Param(ps[weight])), t.Param(ps[bias]));
}

LayerNorm LayerNorm::Create(ParameterSet& ps, const std::string& name, std::size_t dim) {
  LayerNorm ln;
  ln.gain = ps.Add(name + ".gain", Tensor({dim}, 1.0));
  ln.bias = ps.Add(name + ".bias", Tensor({dim}, 0.0));
  return ln;
}

ag::Var LayerNorm::operator()(ag::Tape& t, const ParameterSet& ps, ag::Var x) const {
  return ag::add_row(ag::mul_row(ag::layer_norm(x), t.Param(ps[gain])), t.Param(ps[bias]));
}

Gru Gru::Create(ParameterSet& ps, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng) {
  Gru g;
  g.input_dim = in;
  g.hidden_dim = hidden;
  g.w_r = ps.Add(name + ".w_r", XavierUniform(in, hidden, rng));
  g.w_u = ps.Add(name + ".w_u", XavierUniform(in, hidden, rng));
  g.w_h = ps.Add(name + ".w_h", XavierUniform(in, hidden, rng));
  g.u_r = ps.Add(name + ".u_r", XavierUniform(hidden, hidden, rng));
  g.u_u = ps.Add(name + ".u_u", XavierUniform(hidden, hidden, rng));
  g.u_h = ps.Add(name + ".u_h", XavierUniform(hidden, hidden, rng));
  g.b_r = ps.Add(name + ".b_r", Tensor({hidden}, 0.0));
  g.b_u = ps.Add(name + ".b_u", Tensor({hidden}, 0.0));
  g.b_h = ps.Add(name + ".b_h", Tensor({hidden}, 0.0));
  return g;
}

namespace {

ag::Var GruUpdate(ag::Tape& t, const ParameterSet& ps, const Gru& g, ag::Var xr, ag::Var xu, ag::Var xh,
                  ag::Var h) {
  using namespace ag;
  Var r = sigmoid(add(xr, matmul(h, t.Param(ps[g.u_r]))));
  Var u = sigmoid(add(xu, matmul(h, t.Param(ps[g.u_u]))));
  Var c = ag::tanh(add(xh, matmul(mul(r, h), t.Param(ps[g.u_h]))));
  // (1 - u) * h + u * c == h + u * (c - h)
  return add(h, mul(u, sub(c, h)));
}

}  // namespace

ag::Var Gru::Cell(ag::Tape& t, const ParameterSet& ps, ag::Var x, ag::Var h) const {
  using namespace ag;
  Var xr = add_row(matmul(x, t.Param(ps[w_r])), t.Param(ps[b_r]));
  Var xu = add_row(matmul(x, t.Param(ps[w_u])), t.Param(ps[b_u]));
  Var xh = add_row(matmul(x, t.Param(ps[w_h])), t.Param(ps[b_h]));
  return GruUpdate(t, ps, *this, xr, xu, xh, h);
}

ag::Var Gru::Run(ag::Tape& t, const ParameterSet& ps, ag::Var xs) const {
  using namespace ag;
  Var xr = add_row(matmul(xs, t.Param(ps[w_r])), t.Param(ps[b_r]));
  Var xu = add_row(matmul(xs, t.Param(ps[w_u])), t.Param(ps[b_u]));
  Var xh = add_row(matmul(xs, t.Param(ps[w_h])), t.Param(ps[b_h]));
  Var h = t.Constant(Tensor({1, hidden_dim}, 0.0));
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    h = GruUpdate(t, ps, *this, slice_rows(xr, i, i + 1), slice_rows(xu, i, i + 1), slice_rows(xh, i, i + 1), h);
  }
  return h;
}

Conv1d Conv1d::Create(ParameterSet& ps, const std::string& name, std::size_t in, std::size_t out,
                      std::size_t kernel, Rng& rng) {
  Conv1d c;
  c.kernel = kernel;
  c.affine = Linear::Create(ps, name, kernel * in, out, rng);
  return c;
}

ag::Var Conv1d::operator()(ag::Tape& t, const ParameterSet& ps, ag::Var x) const {
  return affine(t, ps, ag::unfold_frames(x, kernel));
}

}  // namespace capgan::models
