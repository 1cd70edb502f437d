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

#ifndef CAPGAN_MODELS_GENERATOR_HPP_
#define CAPGAN_MODELS_GENERATOR_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "common/rng.hpp"
#include "models/nn.hpp"
#include "text/vocabulary.hpp"

namespace capgan::models {

struct GeneratorConfig {
  std::size_t vocab_size = 0;
  std::size_t feat_dim = 64;
  std::size_t d_model = 128;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 256;
  std::size_t noise_dim = 64;
  std::size_t max_length = text::kDefaultMaxLength;  // content tokens
  std::size_t conv_kernel = 3;
  double dropout = 0.1;

  // Longest decoder input: <sos> plus max_length content tokens.
  std::size_t max_positions() const { return max_length + 1; }
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

// Cached decoder state for token-by-token inference.
struct GeneratorState {
  std::shared_ptr<const std::vector<Tensor>> memory_keys;    // per layer [F x d]
  std::shared_ptr<const std::vector<Tensor>> memory_values;  // per layer [F x d]
  std::vector<Tensor> self_keys;                              // per layer [t x d]
  std::vector<Tensor> self_values;
  std::size_t position = 0;
};

// Caption generator: a convolutional frame encoder, a noise-conditioning
// projection of concat(frame_encoding, z) per frame, and a causal transformer
// decoder cross-attending to the projected frames.
class Generator {
 public:
  static constexpr const char* kKind = "generator";
  using Config = GeneratorConfig;

  Generator(const GeneratorConfig& config, Rng& init_rng);

  const GeneratorConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Decoder memory [F x d_model] for one clip and noise vector.
  ag::Var EncodeMemory(ag::Tape& t, const Tensor& features, std::span<const double> z) const;

  // Teacher-forced logits [inputs.size() x V]; row i scores the token after
  // inputs[0..i]. inputs must start with <sos>. Dropout applies only when
  // dropout_rng is given.
  ag::Var DecodeLogits(ag::Tape& t, ag::Var memory, const text::TokenSeq& inputs, Rng* dropout_rng = nullptr) const;

  ag::Var Forward(ag::Tape& t, const Tensor& features, std::span<const double> z, const text::TokenSeq& inputs,
                  Rng* dropout_rng = nullptr) const;

  // Next-token logits after `prefix` (which starts with <sos>), without grad.
  Tensor StepLogits(const Tensor& features, std::span<const double> z, const text::TokenSeq& prefix) const;

  // Incremental decoding: Start() encodes the clip, each Advance() feeds one
  // token and returns the logits for the next position.
  GeneratorState Start(const Tensor& features, std::span<const double> z) const;
  Tensor Advance(GeneratorState& state, text::TokenId token) const;

  std::vector<double> ZeroNoise() const { return std::vector<double>(config_.noise_dim, 0.0); }
  std::vector<double> SampleNoise(Rng& rng) const;

 private:
  struct Attention {
    Linear query, key, value, output;
  };
  struct DecoderLayer {
    LayerNorm norm_self, norm_cross, norm_ff;
    Attention self_attn, cross_attn;
    Linear ff_in, ff_out;
  };

  ag::Var RunLayer(ag::Tape& t, const DecoderLayer& layer, ag::Var x, ag::Var mem_k, ag::Var mem_v,
                   Tensor* cache_k, Tensor* cache_v, Rng* dropout_rng) const;
  ag::Var MultiHead(ag::Tape& t, ag::Var q, ag::Var k, ag::Var v, bool causal) const;
  ag::Var Embed(ag::Tape& t, std::span<const text::TokenId> ids, std::size_t first_position) const;

  GeneratorConfig config_;
  ParameterSet params_;
  Conv1d enc_conv_;
  Linear enc_out_;
  Linear noise_proj_;
  std::size_t token_embedding_ = 0;
  std::vector<DecoderLayer> layers_;
  LayerNorm final_norm_;
  Linear vocab_proj_;
  Tensor positions_;  // sinusoidal [max_positions x d_model], not learned
};

}  // namespace capgan::models

#endif  // CAPGAN_MODELS_GENERATOR_HPP_
