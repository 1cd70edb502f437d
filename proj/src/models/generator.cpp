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

#include "models/generator.hpp"

#include <cmath>
#include <string>

#include "common/error.hpp"

namespace capgan::models {

using ag::Tape;
using ag::Var;

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size}, {"feat_dim", c.feat_dim},     {"d_model", c.d_model},
                     {"layers", c.layers},         {"heads", c.heads},           {"ff_dim", c.ff_dim},
                     {"noise_dim", c.noise_dim},   {"max_length", c.max_length}, {"conv_kernel", c.conv_kernel},
                     {"dropout", c.dropout}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("feat_dim").get_to(c.feat_dim);
  j.at("d_model").get_to(c.d_model);
  j.at("layers").get_to(c.layers);
  j.at("heads").get_to(c.heads);
  j.at("ff_dim").get_to(c.ff_dim);
  j.at("noise_dim").get_to(c.noise_dim);
  j.at("max_length").get_to(c.max_length);
  j.at("conv_kernel").get_to(c.conv_kernel);
  j.at("dropout").get_to(c.dropout);
}

namespace {
constexpr double kMasked = -1e9;
// Gain on the noise rows of noise_proj. At plain Xavier scale z barely moves
// the decoder and sampled sets collapse onto the beam output.
constexpr double kNoiseGain = 3.0;
}

Generator::Generator(const GeneratorConfig& config, Rng& rng) : config_(config) {
  const std::size_t d = config.d_model;
  Require(config.vocab_size > text::kNumReserved, ErrorKind::kContract, "generator vocabulary too small");
  Require(d > 0 && config.heads > 0 && d % config.heads == 0, ErrorKind::kContract,
          "d_model must be a positive multiple of heads");
  Require(config.noise_dim > 0 && config.feat_dim > 0 && config.ff_dim > 0 && config.layers > 0,
          ErrorKind::kContract, "generator dimensions must be positive");
  Require(config.dropout >= 0.0 && config.dropout < 1.0, ErrorKind::kContract, "dropout must be in [0, 1)");

  enc_conv_ = Conv1d::Create(params_, "encoder.conv", config.feat_dim, d, config.conv_kernel, rng);
  enc_out_ = Linear::Create(params_, "encoder.out", d, d, rng);
  noise_proj_ = Linear::Create(params_, "noise_proj", d + config.noise_dim, d, rng);
  {
    Tensor& w = params_[noise_proj_.weight].value;
    for (std::size_t r = d; r < w.rows(); ++r)
      for (std::size_t c = 0; c < w.cols(); ++c) w.at(r, c) = static_cast<float>(w.at(r, c) * kNoiseGain);
  }
  token_embedding_ = params_.Add("decoder.embedding", NormalInit({config.vocab_size, d}, 1.0 / std::sqrt(d), rng));
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "decoder.layer" + std::to_string(l) + ".";
    DecoderLayer layer;
    layer.norm_self = LayerNorm::Create(params_, p + "norm_self", d);
    layer.self_attn.query = Linear::Create(params_, p + "self.query", d, d, rng);
    layer.self_attn.key = Linear::Create(params_, p + "self.key", d, d, rng);
    layer.self_attn.value = Linear::Create(params_, p + "self.value", d, d, rng);
    layer.self_attn.output = Linear::Create(params_, p + "self.output", d, d, rng);
    layer.norm_cross = LayerNorm::Create(params_, p + "norm_cross", d);
    layer.cross_attn.query = Linear::Create(params_, p + "cross.query", d, d, rng);
    layer.cross_attn.key = Linear::Create(params_, p + "cross.key", d, d, rng);
    layer.cross_attn.value = Linear::Create(params_, p + "cross.value", d, d, rng);
    layer.cross_attn.output = Linear::Create(params_, p + "cross.output", d, d, rng);
    layer.norm_ff = LayerNorm::Create(params_, p + "norm_ff", d);
    layer.ff_in = Linear::Create(params_, p + "ff_in", d, config.ff_dim, rng);
    layer.ff_out = Linear::Create(params_, p + "ff_out", config.ff_dim, d, rng);
    layers_.push_back(layer);
  }
  final_norm_ = LayerNorm::Create(params_, "decoder.final_norm", d);
  vocab_proj_ = Linear::Create(params_, "decoder.vocab_proj", d, config.vocab_size, rng);

  positions_ = Tensor({config.max_positions(), d});
  for (std::size_t pos = 0; pos < config.max_positions(); ++pos) {
    for (std::size_t i = 0; i < d; i += 2) {
      const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      positions_.at(pos, i) = std::sin(angle);
      if (i + 1 < d) positions_.at(pos, i + 1) = std::cos(angle);
    }
  }
}

std::vector<double> Generator::SampleNoise(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(config_.noise_dim);
  for (double& v : z) v = normal(rng);
  return z;
}

Var Generator::EncodeMemory(Tape& t, const Tensor& features, std::span<const double> z) const {
  Require(features.rank() == 2 && features.cols() == config_.feat_dim, ErrorKind::kDimension,
          "generator expects [frames x " + std::to_string(config_.feat_dim) + "] features, got " +
              ShapeString(features.shape()));
  Require(z.size() == config_.noise_dim, ErrorKind::kDimension, "noise vector has the wrong dimension");
  const std::size_t frames = features.rows();
  Var x = t.External(features);
  Var enc = enc_out_(t, params_, ag::relu(enc_conv_(t, params_, x)));
  Tensor noise({frames, config_.noise_dim});
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t i = 0; i < z.size(); ++i) noise.at(f, i) = z[i];
  const Var parts[] = {enc, t.Constant(std::move(noise))};
  return noise_proj_(t, params_, ag::concat_cols(parts));
}

Var Generator::Embed(Tape& t, std::span<const text::TokenId> ids, std::size_t first_position) const {
  const std::size_t n = ids.size();
  Require(first_position + n <= config_.max_positions(), ErrorKind::kContract,
          "decoder input longer than max_length + 1 tokens");
  for (text::TokenId id : ids)
    Require(id >= 0 && static_cast<std::size_t>(id) < config_.vocab_size, ErrorKind::kRange, "token id out of range");
  Var emb = ag::scale(ag::gather_rows(t.Param(params_[token_embedding_]), ids),
                      std::sqrt(static_cast<double>(config_.d_model)));
  Tensor pos({n, config_.d_model});
  std::copy_n(positions_.data().begin() + first_position * config_.d_model, n * config_.d_model, pos.data().begin());
  return ag::add(emb, t.Constant(std::move(pos)));
}

Var Generator::MultiHead(Tape& t, Var q, Var k, Var v, bool causal) const {
  const std::size_t heads = config_.heads;
  const std::size_t dh = config_.d_model / heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t n = q.rows(), m = k.rows();
  Var mask;
  if (causal) {
    Tensor mk({n, m}, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < m; ++j) mk.at(i, j) = kMasked;
    mask = t.Constant(std::move(mk));
  }
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = ag::slice_cols(q, h * dh, (h + 1) * dh);
    Var kh = ag::slice_cols(k, h * dh, (h + 1) * dh);
    Var vh = ag::slice_cols(v, h * dh, (h + 1) * dh);
    Var scores = ag::scale(ag::matmul(qh, ag::transpose(kh)), inv);
    if (causal) scores = ag::add(scores, mask);
    outs.push_back(ag::matmul(ag::softmax(scores), vh));
  }
  return heads == 1 ? outs[0] : ag::concat_cols(outs);
}

Var Generator::RunLayer(Tape& t, const DecoderLayer& layer, Var x, Var mem_k, Var mem_v, Tensor* cache_k,
                        Tensor* cache_v, Rng* dropout_rng) const {
  auto drop = [&](Var v) { return dropout_rng ? ag::dropout(v, config_.dropout, *dropout_rng) : v; };

  Var h = layer.norm_self(t, params_, x);
  Var q = layer.self_attn.query(t, params_, h);
  Var k = layer.self_attn.key(t, params_, h);
  Var v = layer.self_attn.value(t, params_, h);
  bool causal = true;
  if (cache_k != nullptr) {
    cache_k->AppendRows(k.value());
    cache_v->AppendRows(v.value());
    k = t.External(*cache_k);
    v = t.External(*cache_v);
    causal = false;
  }
  Var a = layer.self_attn.output(t, params_, MultiHead(t, q, k, v, causal));
  x = ag::add(x, drop(a));

  h = layer.norm_cross(t, params_, x);
  q = layer.cross_attn.query(t, params_, h);
  a = layer.cross_attn.output(t, params_, MultiHead(t, q, mem_k, mem_v, false));
  x = ag::add(x, drop(a));

  h = layer.norm_ff(t, params_, x);
  Var f = layer.ff_out(t, params_, ag::relu(layer.ff_in(t, params_, h)));
  return ag::add(x, drop(f));
}

Var Generator::DecodeLogits(Tape& t, Var memory, const text::TokenSeq& inputs, Rng* dropout_rng) const {
  Require(!inputs.empty() && inputs.front() == text::kSos, ErrorKind::kContract, "decoder input must start with <sos>");
  Var x = Embed(t, inputs, 0);
  if (dropout_rng) x = ag::dropout(x, config_.dropout, *dropout_rng);
  for (const DecoderLayer& layer : layers_) {
    Var mem_k = layer.cross_attn.key(t, params_, memory);
    Var mem_v = layer.cross_attn.value(t, params_, memory);
    x = RunLayer(t, layer, x, mem_k, mem_v, nullptr, nullptr, dropout_rng);
  }
  return vocab_proj_(t, params_, final_norm_(t, params_, x));
}

Var Generator::Forward(Tape& t, const Tensor& features, std::span<const double> z, const text::TokenSeq& inputs,
                       Rng* dropout_rng) const {
  return DecodeLogits(t, EncodeMemory(t, features, z), inputs, dropout_rng);
}

Tensor Generator::StepLogits(const Tensor& features, std::span<const double> z, const text::TokenSeq& prefix) const {
  Require(prefix.size() <= config_.max_positions(), ErrorKind::kContract,
          "prefix longer than max_length + 1 tokens");
  Tape t(false);
  Var logits = Forward(t, features, z, prefix);
  const std::size_t v = config_.vocab_size;
  const std::size_t last = logits.rows() - 1;
  return Tensor({v}, std::vector<double>(logits.value().data().begin() + last * v,
                                         logits.value().data().begin() + (last + 1) * v));
}

GeneratorState Generator::Start(const Tensor& features, std::span<const double> z) const {
  Tape t(false);
  Var memory = EncodeMemory(t, features, z);
  auto keys = std::make_shared<std::vector<Tensor>>();
  auto values = std::make_shared<std::vector<Tensor>>();
  for (const DecoderLayer& layer : layers_) {
    keys->push_back(layer.cross_attn.key(t, params_, memory).value());
    values->push_back(layer.cross_attn.value(t, params_, memory).value());
  }
  GeneratorState state;
  state.memory_keys = std::move(keys);
  state.memory_values = std::move(values);
  state.self_keys.resize(layers_.size());
  state.self_values.resize(layers_.size());
  return state;
}

Tensor Generator::Advance(GeneratorState& state, text::TokenId token) const {
  Require(state.position < config_.max_positions(), ErrorKind::kContract,
          "decoder state already holds max_length + 1 tokens");
  Tape t(false);
  const text::TokenId ids[] = {token};
  Var x = Embed(t, ids, state.position);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = RunLayer(t, layers_[l], x, t.External((*state.memory_keys)[l]), t.External((*state.memory_values)[l]),
                 &state.self_keys[l], &state.self_values[l], nullptr);
  }
  ++state.position;
  Var logits = vocab_proj_(t, params_, final_norm_(t, params_, x));
  return logits.value().Reshaped({config_.vocab_size});
}

}  // namespace capgan::models
