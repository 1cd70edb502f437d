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

#ifndef CAPGAN_TRAINING_TRAINER_HPP_
#define CAPGAN_TRAINING_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "corpus/dataset.hpp"
#include "metrics/metrics.hpp"
#include "models/discriminator.hpp"
#include "models/generator.hpp"
#include "models/semantic.hpp"
#include "training/optimizer.hpp"
#include "training/reward.hpp"
#include "training/train_log.hpp"

namespace capgan::training {

struct TrainConfig {
  double lambda = 0.5;
  std::size_t mle_epochs = 25;
  std::size_t d_pretrain_epochs = 5;
  std::size_t se_pretrain_epochs = 25;
  std::size_t adversarial_epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  double d_learning_rate = 0.0;  // discriminator only; 0 means learning_rate
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kNone;
  bool normalize_cider = false;
  double se_margin = 0.2;
  std::size_t eval_every = 1;  // adversarial epochs between eval snapshots; 0 disables
  std::size_t eval_beam = 5;

  double discriminator_lr() const { return d_learning_rate > 0.0 ? d_learning_rate : learning_rate; }
  RewardOptions reward_options() const { return {lambda, ablation, normalize_cider}; }
};

struct TrainData {
  const corpus::DatasetSplit* train = nullptr;
  const corpus::DatasetSplit* eval = nullptr;  // may be null: no eval snapshots
  const text::Vocabulary* vocab = nullptr;
};

// Where a stage writes checkpoints and how it reports progress. Empty
// run_dir: nothing is written. start_epoch > 0 resumes after that epoch.
struct StageIo {
  std::string run_dir;
  std::size_t start_epoch = 0;
  std::function<void(const std::string&)> progress;
};

// Teacher-forced cross entropy with z = 0. Writes generator_final.ckpt and
// generator_best.ckpt (best greedy CIDEr on the eval split).
TrainLog MlePretrain(models::Generator& g, const TrainData& data, const TrainConfig& config, const StageIo& io = {});

// Loss -[log D(real) + log(1 - D(fake))] averaged over pairs; fakes are
// multinomial samples from g with fresh z. Returns the batch loss.
double DiscriminatorStep(models::Discriminator& d, Adam& opt, const std::vector<text::TokenSeq>& real,
                         const std::vector<text::TokenSeq>& fake);

TrainLog PretrainDiscriminator(models::Discriminator& d, const models::Generator& g, const TrainData& data,
                               const TrainConfig& config, const StageIo& io = {});

// Bidirectional hinge loss over in-batch negatives (self excluded), summed
// over negatives and averaged over the batch.
ag::Var SemanticLoss(ag::Tape& t, const models::SemanticEvaluator& se, const std::vector<const Tensor*>& audio,
                     const std::vector<text::TokenSeq>& captions, double margin);

TrainLog PretrainSemantic(models::SemanticEvaluator& se, const TrainData& data, const TrainConfig& config,
                          const StageIo& io = {});

// One discriminator step then one SCST generator step per batch; se is
// frozen. When the reward does not use D, D is neither queried nor trained.
// Epoch records carry cumulative reward-time D/SE query counts.
TrainLog AdversarialTrain(models::Generator& g, models::Discriminator& d, const models::SemanticEvaluator& se,
                          const TrainData& data, const TrainConfig& config, const StageIo& io = {});

// Held-out measurements.
struct DiscriminatorEval {
  double accuracy = 0.0;
  double mean_real = 0.0;
  double mean_fake = 0.0;
};
// Real: every reference of every clip. Fake: one multinomial sample per
// reference from g.
DiscriminatorEval EvaluateDiscriminator(const models::Discriminator& d, const models::Generator& g,
                                        const corpus::DatasetSplit& split, const text::Vocabulary& vocab,
                                        std::uint64_t seed);

struct SemanticEval {
  double mean_paired = 0.0;
  double mean_unpaired = 0.0;
  double gap() const { return mean_paired - mean_unpaired; }
};
// Paired: each clip with each of its references. Unpaired: each clip with
// the references of every other clip.
SemanticEval EvaluateSemantic(const models::SemanticEvaluator& se, const corpus::DatasetSplit& split,
                              const text::Vocabulary& vocab);

// Mean greedy CIDEr (z = 0) over a split, df from that split's references.
double GreedyCider(const models::Generator& g, const corpus::DatasetSplit& split, const text::Vocabulary& vocab);

}  // namespace capgan::training

#endif  // CAPGAN_TRAINING_TRAINER_HPP_
