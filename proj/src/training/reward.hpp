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

#ifndef CAPGAN_TRAINING_REWARD_HPP_
#define CAPGAN_TRAINING_REWARD_HPP_

#include <cstddef>
#include <string>

#include "corpus/dataset.hpp"
#include "metrics/metrics.hpp"
#include "models/discriminator.hpp"
#include "models/semantic.hpp"

namespace capgan::training {

struct RewardBreakdown {
  double n = 0.0;       // discriminator score
  double s = 0.0;       // semantic cosine
  double c = 0.0;       // CIDEr (divided by 10 when normalization is on)
  double lambda = 0.0;
  double total = 0.0;
};

// total = lambda * (n + s) + (1 - lambda) * c, evaluated in exactly this form.
double CombineReward(double lambda, double n, double s, double c);
RewardBreakdown MakeBreakdown(double lambda, double n, double s, double c);

enum class Ablation { kNone, kNoSemantic, kNoDiscriminator, kCiderOnly };
// "nd" -> D-only reward, "se" -> SE-only reward, "le" -> CIDEr only.
Ablation ParseAblation(const std::string& name);
std::string AblationName(Ablation a);

struct RewardOptions {
  double lambda = 0.5;
  Ablation ablation = Ablation::kNone;
  bool normalize_cider = false;

  // Ablations pin lambda: nd/se use 1, le uses 0.
  double effective_lambda() const;
  bool uses_discriminator() const;
  bool uses_semantic() const;
};

// Scores complete captions. D and SE are only queried when their term can
// contribute; the counters make that observable.
class RewardModel {
 public:
  RewardModel(const models::Discriminator* d, const models::SemanticEvaluator* se, const metrics::DocFreqTable& df,
              const RewardOptions& options);

  RewardBreakdown Score(const text::TokenSeq& caption, const corpus::ClipRecord& clip,
                        const text::Vocabulary& vocab) const;

  const RewardOptions& options() const { return options_; }
  std::size_t discriminator_queries() const { return d_queries_; }
  std::size_t semantic_queries() const { return se_queries_; }

 private:
  const models::Discriminator* d_;
  const models::SemanticEvaluator* se_;
  const metrics::DocFreqTable* df_;
  RewardOptions options_;
  mutable std::size_t d_queries_ = 0;
  mutable std::size_t se_queries_ = 0;
};

}  // namespace capgan::training

#endif  // CAPGAN_TRAINING_REWARD_HPP_
