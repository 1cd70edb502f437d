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

#ifndef CAPGAN_MODELS_SEMANTIC_HPP_
#define CAPGAN_MODELS_SEMANTIC_HPP_

#include <cstddef>

#include <json.hpp>

#include "common/rng.hpp"
#include "models/nn.hpp"
#include "text/vocabulary.hpp"

namespace capgan::models {

struct SemanticConfig {
  std::size_t vocab_size = 0;
  std::size_t feat_dim = 64;
  std::size_t conv_channels = 64;
  std::size_t word_dim = 64;
  std::size_t embed_dim = 128;
};

void to_json(nlohmann::json& j, const SemanticConfig& c);
void from_json(const nlohmann::json& j, SemanticConfig& c);

// Audio/caption joint embedding. The audio branch is two frame convolutions
// with a temporal mean pool and a projection; the caption branch is a token
// embedding feeding a GRU. Both outputs are L2-normalized, so their dot
// product is the cosine score.
class SemanticEvaluator {
 public:
  static constexpr const char* kKind = "semantic";
  using Config = SemanticConfig;

  SemanticEvaluator(const SemanticConfig& config, Rng& init_rng);

  const SemanticConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Unit-norm [1 x embed_dim] embeddings. kNumeric on a zero-norm embedding.
  ag::Var AudioEmbedding(ag::Tape& t, const Tensor& features) const;
  ag::Var CaptionEmbedding(ag::Tape& t, const text::TokenSeq& caption) const;

  // Cosine similarity in [-1, 1].
  double Score(const Tensor& features, const text::TokenSeq& caption) const;

 private:
  SemanticConfig config_;
  ParameterSet params_;
  Conv1d conv1_, conv2_;
  Linear audio_proj_;
  std::size_t embedding_ = 0;
  Gru gru_;
};

// Cosine of two embeddings after L2 normalization; kNumeric on a zero vector.
double CosineScore(const Tensor& a, const Tensor& b);

}  // namespace capgan::models

#endif  // CAPGAN_MODELS_SEMANTIC_HPP_
