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

#ifndef CAPGAN_MODELS_DISCRIMINATOR_HPP_
#define CAPGAN_MODELS_DISCRIMINATOR_HPP_

#include <cstddef>

#include <json.hpp>

#include "common/rng.hpp"
#include "models/nn.hpp"
#include "text/vocabulary.hpp"

namespace capgan::models {

// Tokens a caption-reading network consumes: content ids followed by <eos>
// when the caption was terminated (truncated captions carry no <eos>).
text::TokenSeq CaptionStream(const text::TokenSeq& ids);

struct DiscriminatorConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;
};

void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);

// Single-layer GRU over a caption's tokens; the final hidden state goes
// through an affine head and a sigmoid. Reads only the caption.
class Discriminator {
 public:
  static constexpr const char* kKind = "discriminator";
  using Config = DiscriminatorConfig;

  Discriminator(const DiscriminatorConfig& config, Rng& init_rng);

  const DiscriminatorConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Pre-sigmoid logit [1 x 1]. kContract when the caption has no tokens.
  ag::Var Logit(ag::Tape& t, const text::TokenSeq& caption) const;
  // Probability that the caption is human-written, in (0, 1).
  double Score(const text::TokenSeq& caption) const;

  std::size_t head_weight() const { return head_.weight; }
  std::size_t head_bias() const { return head_.bias; }

 private:
  DiscriminatorConfig config_;
  ParameterSet params_;
  std::size_t embedding_ = 0;
  Gru gru_;
  Linear head_;
};

}  // namespace capgan::models

#endif  // CAPGAN_MODELS_DISCRIMINATOR_HPP_
