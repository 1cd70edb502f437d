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

#include "training/reward.hpp"

#include <vector>

#include "common/error.hpp"

namespace capgan::training {

double CombineReward(double lambda, double n, double s, double c) { return lambda * (n + s) + (1.0 - lambda) * c; }

RewardBreakdown MakeBreakdown(double lambda, double n, double s, double c) {
  return {n, s, c, lambda, CombineReward(lambda, n, s, c)};
}

Ablation ParseAblation(const std::string& name) {
  if (name.empty() || name == "none") return Ablation::kNone;
  if (name == "nd") return Ablation::kNoSemantic;
  if (name == "se") return Ablation::kNoDiscriminator;
  if (name == "le") return Ablation::kCiderOnly;
  Fail(ErrorKind::kConfig, "unknown ablation '" + name + "' (expected nd, se or le)");
}

std::string AblationName(Ablation a) {
  switch (a) {
    case Ablation::kNoSemantic: return "nd";
    case Ablation::kNoDiscriminator: return "se";
    case Ablation::kCiderOnly: return "le";
    case Ablation::kNone: break;
  }
  return "none";
}

double RewardOptions::effective_lambda() const {
  switch (ablation) {
    case Ablation::kNoSemantic:
    case Ablation::kNoDiscriminator: return 1.0;
    case Ablation::kCiderOnly: return 0.0;
    case Ablation::kNone: break;
  }
  return lambda;
}

bool RewardOptions::uses_discriminator() const {
  return effective_lambda() != 0.0 && ablation != Ablation::kNoDiscriminator;
}

bool RewardOptions::uses_semantic() const { return effective_lambda() != 0.0 && ablation != Ablation::kNoSemantic; }

RewardModel::RewardModel(const models::Discriminator* d, const models::SemanticEvaluator* se,
                         const metrics::DocFreqTable& df, const RewardOptions& options)
    : d_(d), se_(se), df_(&df), options_(options) {
  const double lambda = options.effective_lambda();
  Require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kConfig, "lambda must lie in [0, 1]");
  Require(!options.uses_discriminator() || d != nullptr, ErrorKind::kContract, "reward needs a discriminator");
  Require(!options.uses_semantic() || se != nullptr, ErrorKind::kContract, "reward needs a semantic evaluator");
}

RewardBreakdown RewardModel::Score(const text::TokenSeq& caption, const corpus::ClipRecord& clip,
                                   const text::Vocabulary& vocab) const {
  const double lambda = options_.effective_lambda();
  double n = 0.0, s = 0.0;
  if (options_.uses_discriminator()) {
    ++d_queries_;
    n = d_->Score(caption);
  }
  if (options_.uses_semantic()) {
    ++se_queries_;
    s = se_->Score(clip.features, caption);
  }
  const metrics::ReferenceSet refs(clip.references.begin(), clip.references.end());
  double c = metrics::Cider(vocab.Decode(caption), refs, *df_);
  if (options_.normalize_cider) c /= 10.0;
  return MakeBreakdown(lambda, n, s, c);
}

}  // namespace capgan::training
