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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "bandit.hpp"
#include "common/error.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"
#include "tiny_setup.hpp"
#include "training/optimizer.hpp"
#include "training/reward.hpp"
#include "training/scst.hpp"
#include "training/train_log.hpp"
#include "training/trainer.hpp"

namespace capgan::training {
namespace {

using testing::TempDir;
using testing::TinySetup;

float AdamOracle(double x, const std::vector<double>& grads, double lr) {
  double m = 0.0, v = 0.0;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    m = 0.9 * m + 0.1 * grads[k];
    v = 0.999 * v + 0.001 * grads[k] * grads[k];
    const double mh = m / (1.0 - std::pow(0.9, k + 1.0));
    const double vh = v / (1.0 - std::pow(0.999, k + 1.0));
    x = static_cast<float>(x - lr * mh / (std::sqrt(vh) + 1e-8));
  }
  return static_cast<float>(x);
}

TEST_CASE("adam matches the bias-corrected update written out by hand") {
  models::ParameterSet ps;
  const std::size_t i = ps.Add("w", Tensor::Matrix(1, 2, {0.5, -0.25}));
  Adam opt(ps, {0.01});
  const std::vector<double> g0{0.3, -2.0, 0.7}, g1{-1.0, 0.0, 4.0};
  for (std::size_t k = 0; k < 3; ++k) {
    opt.ZeroGrad();
    ps[i].grad[0] = g0[k];
    ps[i].grad[1] = g1[k];
    opt.Step();
    CHECK(ps[i].grad[0] == g0[k]);  // step leaves gradients in place
  }
  CHECK(ps[i].value[0] == AdamOracle(0.5, g0, 0.01));
  CHECK(ps[i].value[1] == AdamOracle(-0.25, g1, 0.01));
  CHECK(opt.steps() == 3);
  opt.ZeroGrad();
  CHECK(ps[i].grad[0] == 0.0);
}

TEST_CASE("reward combines the three scores with lambda") {
  CHECK(CombineReward(0.5, 0.8, 0.6, 0.4) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(CombineReward(0.0, 0.8, 0.6, 0.4) == 0.4);
  CHECK(CombineReward(1.0, 0.8, 0.6, 0.4) == 0.8 + 0.6);
  const RewardBreakdown b = MakeBreakdown(0.3, 0.1, 0.2, 0.9);
  CHECK(b.total == CombineReward(b.lambda, b.n, b.s, b.c));
}

TEST_CASE("ablations pin lambda and select the queried models") {
  CHECK(ParseAblation("nd") == Ablation::kNoSemantic);
  CHECK(ParseAblation("se") == Ablation::kNoDiscriminator);
  CHECK(ParseAblation("le") == Ablation::kCiderOnly);
  CHECK_THROWS_AS(ParseAblation("xx"), Error);
  for (const char* name : {"nd", "se", "le"}) CHECK(AblationName(ParseAblation(name)) == name);

  RewardOptions o;
  o.lambda = 0.0;
  CHECK(!o.uses_discriminator());
  CHECK(!o.uses_semantic());
  o.lambda = 0.4;
  o.ablation = Ablation::kCiderOnly;
  CHECK(o.effective_lambda() == 0.0);
  o.ablation = Ablation::kNoSemantic;
  CHECK(o.effective_lambda() == 1.0);
  CHECK(o.uses_discriminator());
  CHECK(!o.uses_semantic());
  o.ablation = Ablation::kNoDiscriminator;
  CHECK(!o.uses_discriminator());
  CHECK(o.uses_semantic());
}

TEST_CASE("reward model queries d and se only when lambda uses them") {
  TinySetup s;
  Rng rng(1);
  models::Discriminator d(s.DiscriminatorConfig(), rng);
  models::SemanticEvaluator se(s.SemanticConfig(), rng);
  const auto refs = s.corpus.train.AllReferences();
  std::vector<metrics::ReferenceSet> sets;
  for (const auto& r : s.corpus.train.records) sets.emplace_back(r.references.begin(), r.references.end());
  const auto df = metrics::DocFreqTable::Build(sets);
  const auto& clip = s.corpus.train.records[0];
  const text::TokenSeq caption = s.vocab.Encode(clip.references[0]);

  RewardOptions zero;
  zero.lambda = 0.0;
  const RewardModel none(nullptr, nullptr, df, zero);
  const RewardBreakdown r0 = none.Score(caption, clip, s.vocab);
  CHECK(r0.total == r0.c);
  CHECK(r0.n == 0.0);
  CHECK(r0.s == 0.0);

  const RewardModel lazy(&d, &se, df, zero);
  lazy.Score(caption, clip, s.vocab);
  CHECK(lazy.discriminator_queries() == 0);
  CHECK(lazy.semantic_queries() == 0);

  RewardOptions half;
  half.lambda = 0.5;
  const RewardModel full(&d, &se, df, half);
  const RewardBreakdown r = full.Score(caption, clip, s.vocab);
  CHECK(full.discriminator_queries() == 1);
  CHECK(full.semantic_queries() == 1);
  CHECK(r.total == CombineReward(0.5, r.n, r.s, r.c));
  CHECK(r.n == d.Score(caption));
  CHECK(r.s == se.Score(clip.features, caption));
  CHECK(r.c == r0.c);

  half.normalize_cider = true;
  const RewardModel scaled(&d, &se, df, half);
  CHECK(scaled.Score(caption, clip, s.vocab).c == r0.c / 10.0);

  CHECK_THROWS_AS(RewardModel(nullptr, &se, df, half), Error);
}

TEST_CASE("teacher-forced sequence log-probs equal the ones recorded while sampling") {
  TinySetup s;
  Rng rng(2);
  models::Generator g(s.GeneratorConfig(), rng);
  const auto& clip = s.corpus.train.records[1];
  for (int k = 0; k < 5; ++k) {
    const auto z = g.SampleNoise(rng);
    const auto hyp = decoding::SampleDecode(decoding::GeneratorDecoderState(g, clip.features, z), 12, 1.0, rng);
    ag::Tape t(false);
    const Tensor lp = SequenceLogProbs(t, g, clip.features, z, hyp).value();
    REQUIRE(lp.numel() == hyp.log_probs.size());
    for (std::size_t i = 0; i < lp.numel(); ++i) CHECK(lp[i] == doctest::Approx(hyp.log_probs[i]).epsilon(1e-9));
  }
}

TEST_CASE("scst surrogate gradients pass finite differences") {
  TinySetup s;
  Rng rng(3);
  models::Generator g(s.GeneratorConfig(), rng);
  const auto& clip = s.corpus.train.records[2];
  const auto z = g.SampleNoise(rng);
  const auto hyp = decoding::SampleDecode(decoding::GeneratorDecoderState(g, clip.features, z), 6, 1.0, rng);
  std::string worst;
  const double err = testing::CheckParameterGradients(
      g.params(), [&](ag::Tape& t) { return ScstSurrogate(SequenceLogProbs(t, g, clip.features, z, hyp), 0.7); },
      &worst, 1e-5);  // the surrogate sums ~10 log-probs, so FD round-off on zero-gradient biases is larger
  INFO("worst parameter: ", worst);
  CHECK(err < 1e-3);
}

TEST_CASE("zero advantage produces exactly zero gradient and no parameter change") {
  TinySetup s;
  Rng rng(4);
  models::Generator g(s.GeneratorConfig(), rng);
  models::ParameterSet before = g.params();
  const auto& clip = s.corpus.train.records[0];
  const auto z = g.SampleNoise(rng);
  const auto hyp = decoding::SampleDecode(decoding::GeneratorDecoderState(g, clip.features, z), 12, 1.0, rng);
  Adam opt(g.params(), {0.1});
  opt.ZeroGrad();
  ag::Tape t;
  t.Backward(ScstSurrogate(SequenceLogProbs(t, g, clip.features, z, hyp), 0.0));
  for (const Parameter& p : g.params().all())
    for (double v : p.grad.data()) REQUIRE(v == 0.0);
  opt.Step();
  CHECK(g.params().SameValues(before));
}

TEST_CASE("scst bandit concentrates on the best arm for every seed") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = testing::RunScstBandit(seed);
    INFO("seed ", seed, " final P(best) ", r.final_p);
    CHECK(r.first_step > 0);
    CHECK(r.final_p > 0.9);
  }
}

TEST_CASE("discriminator loss is 2 ln 2 when d outputs one half") {
  TinySetup s;
  Rng rng(5);
  models::Discriminator d(s.DiscriminatorConfig(), rng);
  d.params()[d.head_weight()].value.Fill(0.0);
  d.params()[d.head_bias()].value.Fill(0.0);
  Adam opt(d.params(), {0.01});
  const std::vector<text::TokenSeq> real{s.vocab.Encode(s.corpus.train.records[0].references[0]),
                                         s.vocab.Encode(s.corpus.train.records[1].references[0])};
  const std::vector<text::TokenSeq> fake{{text::kSos, 4, 4, 4, text::kEos}, {text::kSos, 5, text::kEos}};
  CHECK(DiscriminatorStep(d, opt, real, fake) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  double last = 0.0;
  for (int k = 0; k < 60; ++k) last = DiscriminatorStep(d, opt, real, fake);
  CHECK(last < 0.1);
  CHECK_THROWS_AS(DiscriminatorStep(d, opt, real, {fake[0]}), Error);
}

double SemanticLossOracle(const models::SemanticEvaluator& se, const std::vector<const Tensor*>& audio,
                          const std::vector<text::TokenSeq>& caps, double m) {
  const std::size_t n = audio.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sim[i][j] = se.Score(*audio[i], caps[j]);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) loss += std::max(0.0, m - sim[i][i] + sim[i][j]) + std::max(0.0, m - sim[i][i] + sim[j][i]);
  return loss / static_cast<double>(n);
}

TEST_CASE("semantic hinge loss matches a plain double oracle and passes finite differences") {
  TinySetup s;
  Rng rng(6);
  models::SemanticEvaluator se(s.SemanticConfig(), rng);
  std::vector<const Tensor*> audio;
  std::vector<text::TokenSeq> caps;
  for (std::size_t i = 0; i < 4; ++i) {
    audio.push_back(&s.corpus.train.records[i].features);
    caps.push_back(s.vocab.Encode(s.corpus.train.records[i].references[i]));
  }
  for (double m : {0.2, 5.0}) {
    ag::Tape t(false);
    CHECK(SemanticLoss(t, se, audio, caps, m).value().item() ==
          doctest::Approx(SemanticLossOracle(se, audio, caps, m)).epsilon(1e-12));
  }
  ag::Tape t(false);
  CHECK(SemanticLoss(t, se, {audio[0]}, {caps[0]}, 0.2).value().item() == doctest::Approx(0.0));
  std::string worst;
  const double err = testing::CheckParameterGradients(
      se.params(), [&](ag::Tape& tape) { return SemanticLoss(tape, se, audio, caps, 5.0); }, &worst);
  INFO("worst parameter: ", worst);
  CHECK(err < 1e-3);
}

TEST_CASE("mle overfits a single clip") {
  TinySetup s;
  corpus::DatasetSplit one;
  one.name = "train";
  one.records = {s.corpus.train.records[0]};
  for (auto& r : one.records[0].references) r = one.records[0].references[0];
  Rng rng(7);
  models::Generator g(s.GeneratorConfig(), rng);
  TrainConfig c;
  c.mle_epochs = 200;
  c.batch_size = 1;
  c.learning_rate = 1e-2;
  const TrainLog log = MlePretrain(g, {&one, nullptr, &s.vocab}, c);
  REQUIRE(log.records().size() == 200);
  CHECK(log.records().front()["loss"].get<double>() > 1.0);
  CHECK(log.records().back()["loss"].get<double>() < 0.1);
}

TEST_CASE("zero epochs leave every model unchanged") {
  TinySetup s;
  Rng rng(8);
  models::Generator g(s.GeneratorConfig(), rng);
  models::Discriminator d(s.DiscriminatorConfig(), rng);
  models::SemanticEvaluator se(s.SemanticConfig(), rng);
  const models::ParameterSet g0 = g.params(), d0 = d.params(), s0 = se.params();
  TrainConfig c;
  c.mle_epochs = c.d_pretrain_epochs = c.se_pretrain_epochs = c.adversarial_epochs = 0;
  CHECK(MlePretrain(g, s.Data(), c).records().empty());
  CHECK(PretrainDiscriminator(d, g, s.Data(), c).records().empty());
  CHECK(PretrainSemantic(se, s.Data(), c).records().empty());
  CHECK(AdversarialTrain(g, d, se, s.Data(), c).records().empty());
  CHECK(g.params().SameValues(g0));
  CHECK(d.params().SameValues(d0));
  CHECK(se.params().SameValues(s0));
}

TEST_CASE("a non-finite loss aborts with a numeric error and keeps the last checkpoint") {
  TinySetup s;
  TempDir dir("nan");
  Rng rng(9);
  models::Generator g(s.GeneratorConfig(), rng);
  TrainConfig c;
  c.mle_epochs = 1;
  c.batch_size = 4;
  MlePretrain(g, s.Data(), c, {dir.str(), 0, nullptr});
  const std::string saved = testing::Slurp(dir / "generator_final.ckpt");
  for (Parameter& p : g.params().all()) p.value[p.value.numel() - 1] = std::numeric_limits<double>::quiet_NaN();
  c.mle_epochs = 2;
  try {
    MlePretrain(g, s.Data(), c, {dir.str(), 1, nullptr});
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
  CHECK(testing::Slurp(dir / "generator_final.ckpt") == saved);
}

struct FullRun {
  models::ParameterSet g, d;
  std::string rewards;
  std::string log;
};

FullRun RunAll(double lambda, std::uint64_t seed) {
  TinySetup s;
  Rng rng = SubstreamRng(seed, "init");
  models::Generator g(s.GeneratorConfig(), rng);
  models::Discriminator d(s.DiscriminatorConfig(), rng);
  models::SemanticEvaluator se(s.SemanticConfig(), rng);
  TrainConfig c;
  c.seed = seed;
  c.lambda = lambda;
  c.mle_epochs = 2;
  c.d_pretrain_epochs = 1;
  c.se_pretrain_epochs = 1;
  c.adversarial_epochs = 2;
  c.batch_size = 4;
  c.learning_rate = 1e-3;
  c.eval_beam = 2;
  TrainLog log = MlePretrain(g, s.Data(), c);
  log.Merge(PretrainDiscriminator(d, g, s.Data(), c));
  log.Merge(PretrainSemantic(se, s.Data(), c));
  log.Merge(AdversarialTrain(g, d, se, s.Data(), c));
  return {g.params(), d.params(), log.RewardsCsv(), log.ToJsonl()};
}

TEST_CASE("training is bit-identical for a fixed seed") {
  const FullRun a = RunAll(0.5, 11), b = RunAll(0.5, 11);
  CHECK(a.g.SameValues(b.g));
  CHECK(a.d.SameValues(b.d));
  CHECK(a.rewards == b.rewards);
  CHECK(a.log == b.log);
  const FullRun c = RunAll(0.5, 12);
  CHECK(!a.g.SameValues(c.g));
}

TEST_CASE("adversarial log obeys the reward identity and lambda zero never touches d") {
  TinySetup s;
  Rng rng(13);
  models::Generator g(s.GeneratorConfig(), rng);
  models::Discriminator d(s.DiscriminatorConfig(), rng);
  models::SemanticEvaluator se(s.SemanticConfig(), rng);
  TrainConfig c;
  c.adversarial_epochs = 2;
  c.batch_size = 4;
  c.learning_rate = 1e-3;
  c.eval_beam = 2;
  for (double lambda : {0.0, 0.3, 1.0}) {
    c.lambda = lambda;
    const models::ParameterSet d0 = d.params();
    const TrainLog log = AdversarialTrain(g, d, se, s.Data(), c);
    REQUIRE(!log.rewards().empty());
    for (const RewardRow& row : log.rewards()) {
      const RewardBreakdown& r = row.reward;
      REQUIRE(r.total == CombineReward(r.lambda, r.n, r.s, r.c));
      REQUIRE(r.lambda == lambda);
    }
    const auto& last = log.records().back();
    if (lambda == 0.0) {
      CHECK(last["reward_d_queries"].get<std::size_t>() == 0);
      CHECK(last["reward_se_queries"].get<std::size_t>() == 0);
      CHECK(d.params().SameValues(d0));
    } else {
      CHECK(last["reward_d_queries"].get<std::size_t>() == log.rewards().size());
      CHECK(!d.params().SameValues(d0));
    }
    CHECK(last.contains("eval"));
    const auto parsed = ParseRewardsCsv(std::string(kRewardCsvHeader) + log.RewardsCsv());
    CHECK(parsed.size() == log.rewards().size());
  }
}

TEST_CASE("train log rejects records without stage or with non-increasing epochs") {
  TrainLog log;
  log.Append({{"stage", "mle"}, {"epoch", 1}});
  CHECK_THROWS_AS(log.Append({{"stage", "mle"}, {"epoch", 1}}), Error);
  CHECK_THROWS_AS(log.Append({{"epoch", 2}}), Error);
  log.Append({{"stage", "semantic"}, {"epoch", 1}});
  CHECK(log.records().size() == 2);
}

}  // namespace
}  // namespace capgan::training
