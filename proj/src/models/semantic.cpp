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

#include "models/semantic.hpp"

#include "common/error.hpp"
#include "models/discriminator.hpp"

namespace capgan::models {

void to_json(nlohmann::json& j, const SemanticConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size},
                     {"feat_dim", c.feat_dim},
                     {"conv_channels", c.conv_channels},
                     {"word_dim", c.word_dim},
                     {"embed_dim", c.embed_dim}};
}

void from_json(const nlohmann::json& j, SemanticConfig& c) {
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("feat_dim").get_to(c.feat_dim);
  j.at("conv_channels").get_to(c.conv_channels);
  j.at("word_dim").get_to(c.word_dim);
  j.at("embed_dim").get_to(c.embed_dim);
}

SemanticEvaluator::SemanticEvaluator(const SemanticConfig& config, Rng& rng) : config_(config) {
  Require(config.vocab_size > text::kNumReserved && config.feat_dim > 0 && config.conv_channels > 0 &&
              config.word_dim > 0 && config.embed_dim > 0,
          ErrorKind::kContract, "invalid semantic evaluator dimensions");
  conv1_ = Conv1d::Create(params_, "audio.conv1", config.feat_dim, config.conv_channels, 3, rng);
  conv2_ = Conv1d::Create(params_, "audio.conv2", config.conv_channels, config.conv_channels, 3, rng);
  audio_proj_ = Linear::Create(params_, "audio.proj", config.conv_channels, config.embed_dim, rng);
  embedding_ = params_.Add("caption.embedding", NormalInit({config.vocab_size, config.word_dim}, 0.1, rng));
  gru_ = Gru::Create(params_, "caption.gru", config.word_dim, config.embed_dim, rng);
}

ag::Var SemanticEvaluator::AudioEmbedding(ag::Tape& t, const Tensor& features) const {
  Require(features.rank() == 2 && features.cols() == config_.feat_dim, ErrorKind::kDimension,
          "semantic evaluator expects [frames x " + std::to_string(config_.feat_dim) + "] features");
  ag::Var x = ag::relu(conv1_(t, params_, t.External(features)));
  x = ag::relu(conv2_(t, params_, x));
  return ag::l2_normalize(audio_proj_(t, params_, ag::mean_rows(x)));
}

ag::Var SemanticEvaluator::CaptionEmbedding(ag::Tape& t, const text::TokenSeq& caption) const {
  const text::TokenSeq stream = CaptionStream(caption);
  Require(!stream.empty(), ErrorKind::kContract, "semantic evaluator input caption is empty");
  ag::Var x = ag::gather_rows(t.Param(params_[embedding_]), stream);
  return ag::l2_normalize(gru_.Run(t, params_, x));
}

double SemanticEvaluator::Score(const Tensor& features, const text::TokenSeq& caption) const {
  ag::Tape t(false);
  return ag::sum(ag::mul(AudioEmbedding(t, features), CaptionEmbedding(t, caption))).value().item();
}

double CosineScore(const Tensor& a, const Tensor& b) {
  Require(a.numel() == b.numel(), ErrorKind::kDimension, "cosine of vectors with different sizes");
  ag::Tape t(false);
  ag::Var ua = ag::l2_normalize(t.External(a));
  ag::Var ub = ag::l2_normalize(t.External(b));
  return ag::sum(ag::mul(ua, ub)).value().item();
}

}  // namespace capgan::models
