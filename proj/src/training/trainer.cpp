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

#include "training/trainer.hpp"

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <limits>

#include "common/error.hpp"
#include "corpus/batching.hpp"
#include "decoding/decode.hpp"
#include "metrics/report.hpp"
#include "models/checkpoint.hpp"
#include "training/scst.hpp"

namespace capgan::training {

namespace {

std::string Path(const StageIo& io, const std::string& name) {
  return (std::filesystem::path(io.run_dir) / name).string();
}

// Reports the epoch and appends it to the run directory's logs. Called
// before the epoch's checkpoints are written, so a resumed run never lacks
// log lines for checkpointed epochs.
void FinishEpoch(const StageIo& io, TrainLog& log, nlohmann::ordered_json rec, TrainLog epoch_log = {},
                 bool rewards = false) {
  if (io.progress) io.progress(rec.dump());
  epoch_log.Append(std::move(rec));
  if (!io.run_dir.empty())
    epoch_log.AppendToFiles(Path(io, "train_log.jsonl"), rewards ? Path(io, "rewards.csv") : std::string());
  log.Merge(epoch_log);
}

// Aborts the stage on a non-finite loss or gradient. Checkpoints are only
// written at epoch end, so the last good one stays on disk.
void CheckFinite(double loss, const models::ParameterSet& ps, const std::string& stage, std::size_t epoch,
                 std::size_t batch) {
  bool ok = std::isfinite(loss);
  for (const Parameter& p : ps.all()) ok = ok && p.grad.AllFinite();
  Require(ok, ErrorKind::kNumeric,
          stage + ": non-finite loss or gradient at epoch " + std::to_string(epoch) + " batch " +
              std::to_string(batch) + "; keeping the last good checkpoint");
}

std::vector<int> Shifted(const text::TokenSeq& ids) { return {ids.begin() + 1, ids.end()}; }

corpus::BatchOptions Batching(const TrainConfig& c, std::size_t epoch, std::size_t max_length) {
  corpus::BatchOptions b;
  b.batch_size = c.batch_size;
  b.seed = c.seed;
  b.epoch = epoch;
  b.max_length = max_length;
  return b;
}

void RequireData(const TrainData& data) {
  Require(data.train && data.vocab && !data.train->records.empty(), ErrorKind::kContract,
          "training needs a non-empty train split and a vocabulary");
}

text::TokenSeq SampleFake(const models::Generator& g, const Tensor& features, Rng& rng) {
  const std::vector<double> z = g.SampleNoise(rng);
  return decoding::SampleDecode(decoding::GeneratorDecoderState(g, features, z), g.config().max_length, 1.0, rng)
      .ids;
}

}  // namespace

double GreedyCider(const models::Generator& g, const corpus::DatasetSplit& split, const text::Vocabulary& vocab) {
  std::vector<metrics::ReferenceSet> refs;
  for (const auto& r : split.records) refs.emplace_back(r.references.begin(), r.references.end());
  const metrics::DocFreqTable df = metrics::DocFreqTable::Build(refs);
  double total = 0.0;
  for (std::size_t i = 0; i < split.records.size(); ++i) {
    const decoding::GeneratorDecoderState start(g, split.records[i].features, g.ZeroNoise());
    const auto hyp = decoding::GreedyDecode(start, g.config().max_length);
    total += metrics::Cider(vocab.Decode(hyp.ids), refs[i], df);
  }
  return total / static_cast<double>(split.records.size());
}

TrainLog MlePretrain(models::Generator& g, const TrainData& data, const TrainConfig& config, const StageIo& io) {
  RequireData(data);
  TrainLog log;
  Adam opt(g.params(), {config.learning_rate});
  const std::vector<double> z = g.ZeroNoise();
  double best = -std::numeric_limits<double>::infinity();
  const bool write = !io.run_dir.empty();
  if (write && io.start_epoch > 0 && std::filesystem::exists(Path(io, "generator_best.ckpt")) && data.eval) {
    best = GreedyCider(models::LoadModel<models::Generator>(Path(io, "generator_best.ckpt")), *data.eval,
                       *data.vocab);
  }
  for (std::size_t epoch = io.start_epoch + 1; epoch <= config.mle_epochs; ++epoch) {
    Rng dropout_rng = SubstreamRng(config.seed, "mle/dropout", epoch);
    const auto batches = corpus::MakeBatches(*data.train, *data.vocab, Batching(config, epoch, g.config().max_length));
    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const corpus::Batch& batch = batches[bi];
      opt.ZeroGrad();
      ag::Tape t;
      std::size_t tokens = 0;
      for (std::size_t b = 0; b < batch.size(); ++b) tokens += batch.target_lengths[b] - 1;
      ag::Var loss;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const text::TokenSeq ids = batch.Targets(b);
        const text::TokenSeq inputs(ids.begin(), ids.end() - 1);
        const std::vector<int> targets = Shifted(ids);
        ag::Var logits = g.Forward(t, batch.ClipFeatures(b), z, inputs, &dropout_rng);
        logits = ag::add(logits, t.Constant(decoding::OutputMask(logits.rows(), logits.cols())));
        const std::vector<unsigned char> mask(targets.size(), 1);
        ag::Var ce = ag::scale(ag::cross_entropy(logits, targets, mask),
                               static_cast<double>(targets.size()) / static_cast<double>(tokens));
        loss = loss.valid() ? ag::add(loss, ce) : ce;
      }
      t.Backward(loss);
      CheckFinite(loss.value().item(), g.params(), "mle", epoch, bi);
      opt.Step();
      loss_sum += loss.value().item();
    }
    nlohmann::ordered_json rec;
    rec["stage"] = "mle";
    rec["epoch"] = epoch;
    rec["loss"] = loss_sum / static_cast<double>(batches.size());
    const models::CheckpointMeta meta{static_cast<std::uint32_t>(epoch), config.seed, 0};
    bool improved = false;
    if (data.eval) {
      const double cider = GreedyCider(g, *data.eval, *data.vocab);
      rec["eval_greedy_cider"] = cider;
      improved = cider > best;
      best = std::max(best, cider);
    }
    FinishEpoch(io, log, std::move(rec));
    if (write && improved) models::SaveModel(Path(io, "generator_best.ckpt"), g, meta);
    if (write) models::SaveModel(Path(io, "generator_final.ckpt"), g, meta);
  }
  if (write && !std::filesystem::exists(Path(io, "generator_final.ckpt"))) {
    models::SaveModel(Path(io, "generator_final.ckpt"), g, {0, config.seed, 0});
  }
  return log;
}

double DiscriminatorStep(models::Discriminator& d, Adam& opt, const std::vector<text::TokenSeq>& real,
                         const std::vector<text::TokenSeq>& fake) {
  Require(!real.empty() && real.size() == fake.size(), ErrorKind::kContract,
          "discriminator step needs equal, non-empty real and fake sets");
  opt.ZeroGrad();
  ag::Tape t;
  ag::Var total;
  for (std::size_t i = 0; i < real.size(); ++i) {
    ag::Var pair = ag::add(ag::log_sigmoid(d.Logit(t, real[i])), ag::log_sigmoid(ag::scale(d.Logit(t, fake[i]), -1.0)));
    total = total.valid() ? ag::add(total, pair) : pair;
  }
  ag::Var loss = ag::scale(total, -1.0 / static_cast<double>(real.size()));
  t.Backward(loss);
  bool ok = std::isfinite(loss.value().item());
  for (const Parameter& p : d.params().all()) ok = ok && p.grad.AllFinite();
  Require(ok, ErrorKind::kNumeric, "discriminator: non-finite loss or gradient");
  opt.Step();
  return loss.value().item();
}

DiscriminatorEval EvaluateDiscriminator(const models::Discriminator& d, const models::Generator& g,
                                        const corpus::DatasetSplit& split, const text::Vocabulary& vocab,
                                        std::uint64_t seed) {
  Rng rng = SubstreamRng(seed, "discriminator/eval");
  DiscriminatorEval e;
  std::size_t correct = 0, count = 0;
  for (const auto& rec : split.records) {
    for (const auto& ref : rec.references) {
      const double real = d.Score(vocab.Encode(ref, g.config().max_length));
      const double fake = d.Score(SampleFake(g, rec.features, rng));
      correct += (real > 0.5) + (fake < 0.5);
      e.mean_real += real;
      e.mean_fake += fake;
      ++count;
    }
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(2 * count);
  e.mean_real /= static_cast<double>(count);
  e.mean_fake /= static_cast<double>(count);
  return e;
}

TrainLog PretrainDiscriminator(models::Discriminator& d, const models::Generator& g, const TrainData& data,
                               const TrainConfig& config, const StageIo& io) {
  RequireData(data);
  TrainLog log;
  Adam opt(d.params(), {config.discriminator_lr()});
  for (std::size_t epoch = io.start_epoch + 1; epoch <= config.d_pretrain_epochs; ++epoch) {
    // Every reference of every clip once, each against a fresh sample for that clip.
    const auto& records = data.train->records;
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (std::size_t i = 0; i < records.size(); ++i)
      for (std::size_t k = 0; k < corpus::kReferencesPerClip; ++k) order.emplace_back(i, k);
    {
      Rng shuffle = SubstreamRng(config.seed, "discriminator/shuffle", epoch);
      std::shuffle(order.begin(), order.end(), shuffle);
    }
    Rng rng = SubstreamRng(config.seed, "discriminator/fake", epoch);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<text::TokenSeq> real, fake;
      for (std::size_t j = start; j < std::min(order.size(), start + config.batch_size); ++j) {
        const corpus::ClipRecord& rec = records[order[j].first];
        real.push_back(data.vocab->Encode(rec.references[order[j].second], g.config().max_length));
        fake.push_back(SampleFake(g, rec.features, rng));
      }
      loss_sum += DiscriminatorStep(d, opt, real, fake);
      ++steps;
    }
    nlohmann::ordered_json rec;
    rec["stage"] = "discriminator";
    rec["epoch"] = epoch;
    rec["loss"] = loss_sum / static_cast<double>(steps);
    if (data.eval) {
      const DiscriminatorEval e = EvaluateDiscriminator(d, g, *data.eval, *data.vocab, config.seed);
      rec["eval_accuracy"] = e.accuracy;
      rec["eval_mean_real"] = e.mean_real;
      rec["eval_mean_fake"] = e.mean_fake;
    }
    FinishEpoch(io, log, std::move(rec));
    if (!io.run_dir.empty())
      models::SaveModel(Path(io, "discriminator.ckpt"), d, {static_cast<std::uint32_t>(epoch), config.seed, 0});
  }
  if (!io.run_dir.empty() && !std::filesystem::exists(Path(io, "discriminator.ckpt")))
    models::SaveModel(Path(io, "discriminator.ckpt"), d, {0, config.seed, 0});
  return log;
}

ag::Var SemanticLoss(ag::Tape& t, const models::SemanticEvaluator& se, const std::vector<const Tensor*>& audio,
                     const std::vector<text::TokenSeq>& captions, double margin) {
  Require(!audio.empty() && audio.size() == captions.size(), ErrorKind::kContract,
          "semantic loss needs matching audio and captions");
  const std::size_t n = audio.size();
  std::vector<ag::Var> a, c;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(se.AudioEmbedding(t, *audio[i]));
    c.push_back(se.CaptionEmbedding(t, captions[i]));
  }
  const ag::Var sim = ag::matmul(ag::concat_rows(a), ag::transpose(ag::concat_rows(c)));  // [audio x caption]
  const ag::Var sim_t = ag::transpose(sim);
  ag::Var total;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<int> self{static_cast<int>(i)};
    for (const ag::Var& m : {sim, sim_t}) {
      const ag::Var row = ag::slice_rows(m, i, i + 1);
      // The j == i term is exactly relu(margin) = margin; removed below.
      const ag::Var hinge = ag::sum(ag::relu(ag::add_scalar(ag::sub(row, ag::pick(row, self)), margin)));
      total = total.valid() ? ag::add(total, hinge) : hinge;
    }
  }
  return ag::scale(ag::add_scalar(total, -2.0 * static_cast<double>(n) * margin), 1.0 / static_cast<double>(n));
}

SemanticEval EvaluateSemantic(const models::SemanticEvaluator& se, const corpus::DatasetSplit& split,
                              const text::Vocabulary& vocab) {
  std::vector<Tensor> audio;
  std::vector<std::vector<Tensor>> caps;
  for (const auto& rec : split.records) {
    ag::Tape t(false);
    audio.push_back(se.AudioEmbedding(t, rec.features).value());
    caps.emplace_back();
    for (const auto& ref : rec.references) caps.back().push_back(se.CaptionEmbedding(t, vocab.Encode(ref)).value());
  }
  auto dot = [](const Tensor& x, const Tensor& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.numel(); ++k) s += x[k] * y[k];
    return s;
  };
  SemanticEval e;
  double n_paired = 0, n_unpaired = 0;
  for (std::size_t i = 0; i < audio.size(); ++i) {
    for (std::size_t j = 0; j < audio.size(); ++j) {
      for (const Tensor& c : caps[j]) {
        if (i == j) {
          e.mean_paired += dot(audio[i], c);
          ++n_paired;
        } else {
          e.mean_unpaired += dot(audio[i], c);
          ++n_unpaired;
        }
      }
    }
  }
  e.mean_paired /= n_paired;
  e.mean_unpaired = n_unpaired > 0 ? e.mean_unpaired / n_unpaired : 0.0;
  return e;
}

TrainLog PretrainSemantic(models::SemanticEvaluator& se, const TrainData& data, const TrainConfig& config,
                          const StageIo& io) {
  RequireData(data);
  TrainLog log;
  Adam opt(se.params(), {config.learning_rate});
  for (std::size_t epoch = io.start_epoch + 1; epoch <= config.se_pretrain_epochs; ++epoch) {
    const auto batches =
        corpus::MakeBatches(*data.train, *data.vocab, Batching(config, epoch, text::kDefaultMaxLength));
    double loss_sum = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const corpus::Batch& batch = batches[bi];
      std::vector<const Tensor*> audio;
      std::vector<text::TokenSeq> captions;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        audio.push_back(&data.train->records[batch.record_indices[b]].features);
        captions.push_back(batch.Targets(b));
      }
      opt.ZeroGrad();
      ag::Tape t;
      const ag::Var loss = SemanticLoss(t, se, audio, captions, config.se_margin);
      t.Backward(loss);
      CheckFinite(loss.value().item(), se.params(), "semantic", epoch, bi);
      opt.Step();
      loss_sum += loss.value().item();
    }
    nlohmann::ordered_json rec;
    rec["stage"] = "semantic";
    rec["epoch"] = epoch;
    rec["loss"] = loss_sum / static_cast<double>(batches.size());
    if (data.eval) {
      const SemanticEval e = EvaluateSemantic(se, *data.eval, *data.vocab);
      rec["eval_paired"] = e.mean_paired;
      rec["eval_unpaired"] = e.mean_unpaired;
      rec["eval_gap"] = e.gap();
    }
    FinishEpoch(io, log, std::move(rec));
    if (!io.run_dir.empty())
      models::SaveModel(Path(io, "semantic.ckpt"), se, {static_cast<std::uint32_t>(epoch), config.seed, 0});
  }
  if (!io.run_dir.empty() && !std::filesystem::exists(Path(io, "semantic.ckpt")))
    models::SaveModel(Path(io, "semantic.ckpt"), se, {0, config.seed, 0});
  return log;
}

namespace {

nlohmann::ordered_json EvalSnapshot(const models::Generator& g, const TrainData& data, const TrainConfig& config,
                                    std::size_t epoch) {
  const std::uint64_t seed = SubstreamRng(config.seed, "adversarial/eval", epoch)();
  std::vector<metrics::ClipCaptions> clips;
  for (const auto& rec : data.eval->records) {
    const auto set = decoding::GenerateDiverseSet(g, rec.features, decoding::DiverseMode::kGan, 5, config.eval_beam,
                                                  seed, rec.clip_id);
    metrics::ClipCaptions c;
    c.clip_id = rec.clip_id;
    for (const auto& h : set.captions) c.generated.push_back(data.vocab->Decode(h.ids));
    c.references.assign(rec.references.begin(), rec.references.end());
    clips.push_back(std::move(c));
  }
  return metrics::ReportToJson(metrics::Evaluate(clips));
}

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void Add(double v) {
    sum += v;
    ++n;
  }
  double get() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

}  // namespace

TrainLog AdversarialTrain(models::Generator& g, models::Discriminator& d, const models::SemanticEvaluator& se,
                          const TrainData& data, const TrainConfig& config, const StageIo& io) {
  RequireData(data);
  TrainLog log;
  Adam g_opt(g.params(), {config.learning_rate});
  Adam d_opt(d.params(), {config.discriminator_lr()});
  std::vector<metrics::ReferenceSet> train_refs;
  for (const auto& r : data.train->records) train_refs.emplace_back(r.references.begin(), r.references.end());
  const metrics::DocFreqTable df = metrics::DocFreqTable::Build(train_refs);
  const RewardModel reward(&d, &se, df, config.reward_options());
  const bool train_d = reward.options().uses_discriminator();
  const std::size_t max_length = g.config().max_length;

  for (std::size_t epoch = io.start_epoch + 1; epoch <= config.adversarial_epochs; ++epoch) {
    Rng rng = SubstreamRng(config.seed, "adversarial/rollout", epoch);
    const auto batches = corpus::MakeBatches(*data.train, *data.vocab, Batching(config, epoch, max_length));
    Mean d_loss, g_loss, n, s, c, r_sample, r_greedy, adv;
    std::size_t skipped = 0;
    TrainLog epoch_log;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const corpus::Batch& batch = batches[bi];
      if (train_d) {
        std::vector<text::TokenSeq> real, fake;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          real.push_back(batch.Targets(b));
          fake.push_back(SampleFake(g, batch.ClipFeatures(b), rng));
        }
        d_loss.Add(DiscriminatorStep(d, d_opt, real, fake));
      }

      g_opt.ZeroGrad();
      ag::Tape t;
      ag::Var loss;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const corpus::ClipRecord& clip = data.train->records[batch.record_indices[b]];
        const std::vector<double> z = g.SampleNoise(rng);
        const decoding::GeneratorDecoderState start(g, clip.features, z);
        const decoding::Hypothesis w = decoding::SampleDecode(start, max_length, 1.0, rng);
        const decoding::Hypothesis w_hat = decoding::GreedyDecode(start, max_length);
        const RewardBreakdown rw = reward.Score(w.ids, clip, *data.vocab);
        const RewardBreakdown rg = reward.Score(w_hat.ids, clip, *data.vocab);
        epoch_log.AddReward({epoch, bi + 1, clip.clip_id, "sample", rw});
        epoch_log.AddReward({epoch, bi + 1, clip.clip_id, "greedy", rg});
        n.Add(rw.n);
        s.Add(rw.s);
        c.Add(rw.c);
        r_sample.Add(rw.total);
        r_greedy.Add(rg.total);
        const double advantage = rw.total - rg.total;
        adv.Add(advantage);
        if (advantage == 0.0) continue;
        const ag::Var term = ag::scale(ScstSurrogate(SequenceLogProbs(t, g, clip.features, z, w), advantage),
                                       1.0 / static_cast<double>(batch.size()));
        loss = loss.valid() ? ag::add(loss, term) : term;
      }
      if (!loss.valid()) {
        ++skipped;  // every advantage was zero: no update at all
        g_loss.Add(0.0);
        continue;
      }
      t.Backward(loss);
      CheckFinite(loss.value().item(), g.params(), "adversarial", epoch, bi);
      g_opt.Step();
      g_loss.Add(loss.value().item());
    }
    nlohmann::ordered_json rec;
    rec["stage"] = "adversarial";
    rec["epoch"] = epoch;
    rec["lambda"] = reward.options().effective_lambda();
    rec["ablation"] = AblationName(config.ablation);
    rec["d_loss"] = train_d ? nlohmann::ordered_json(d_loss.get()) : nlohmann::ordered_json(nullptr);
    rec["g_loss"] = g_loss.get();
    rec["mean_n"] = n.get();
    rec["mean_s"] = s.get();
    rec["mean_c"] = c.get();
    rec["mean_reward_sample"] = r_sample.get();
    rec["mean_reward_greedy"] = r_greedy.get();
    rec["mean_advantage"] = adv.get();
    rec["skipped_updates"] = skipped;
    rec["reward_d_queries"] = reward.discriminator_queries();
    rec["reward_se_queries"] = reward.semantic_queries();
    if (data.eval && config.eval_every > 0 && epoch % config.eval_every == 0)
      rec["eval"] = EvalSnapshot(g, data, config, epoch);
    FinishEpoch(io, log, std::move(rec), std::move(epoch_log), true);
    if (!io.run_dir.empty()) {
      const models::CheckpointMeta meta{static_cast<std::uint32_t>(epoch), config.seed, 0};
      models::SaveModel(Path(io, "generator_last.ckpt"), g, meta);
      models::SaveModel(Path(io, "discriminator_last.ckpt"), d, meta);
    }
  }
  return log;
}

}  // namespace capgan::training
