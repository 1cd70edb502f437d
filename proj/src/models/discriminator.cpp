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

#include "models/discriminator.hpp"

#include <cmath>

#include "common/error.hpp"

namespace capgan::models {

text::TokenSeq CaptionStream(const text::TokenSeq& ids) {
  text::TokenSeq out;
  for (text::TokenId id : ids) {
    if (id == text::kSos || id == text::kPad) continue;
    out.push_back(id);
    if (id == text::kEos) break;
  }
  return out;
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim}, {"hidden_dim", c.hidden_dim}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("embed_dim").get_to(c.embed_dim);
  j.at("hidden_dim").get_to(c.hidden_dim);
}

Discriminator::Discriminator(const DiscriminatorConfig& config, Rng& rng) : config_(config) {
  Require(config.vocab_size > text::kNumReserved && config.embed_dim > 0 && config.hidden_dim > 0,
          ErrorKind::kContract, "invalid discriminator dimensions");
  embedding_ = params_.Add("embedding", NormalInit({config.vocab_size, config.embed_dim}, 0.1, rng));
  gru_ = Gru::Create(params_, "gru", config.embed_dim, config.hidden_dim, rng);
  head_ = Linear::Create(params_, "head", config.hidden_dim, 1, rng);
}

ag::Var Discriminator::Logit(ag::Tape& t, const text::TokenSeq& caption) const {
  const text::TokenSeq stream = CaptionStream(caption);
  Require(!stream.empty(), ErrorKind::kContract, "discriminator input caption is empty");
  ag::Var x = ag::gather_rows(t.Param(params_[embedding_]), stream);
  return head_(t, params_, gru_.Run(t, params_, x));
}

double Discriminator::Score(const text::TokenSeq& caption) const {
  ag::Tape t(false);
  return ag::sigmoid(Logit(t, caption)).value().item();
}

}  // namespace capgan::models
