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
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "common/error.hpp"
#include "decoding/captions.hpp"
#include "decoding/decode.hpp"
#include "test_util.hpp"

namespace capgan::decoding {
namespace {

constexpr std::size_t kToyVocab = 7;  // reserved ids + content tokens 4, 5, 6

// Logits are a pure function of the prefix fed so far.
using LogitFn = std::function<std::vector<double>(const text::TokenSeq&)>;

class ToyState : public DecoderState {
 public:
  explicit ToyState(LogitFn f) : f_(std::move(f)) {}
  std::unique_ptr<DecoderState> Clone() const override { return std::make_unique<ToyState>(*this); }
  std::vector<double> Advance(text::TokenId token) override {
    prefix_.push_back(token);
    return f_(prefix_);
  }

 private:
  LogitFn f_;
  text::TokenSeq prefix_;
};

LogitFn RandomToy(std::uint64_t seed, double peak = 0.0, double offset = 0.0) {
  return [=](const text::TokenSeq& prefix) {
    std::uint64_t h = seed;
    for (int t : prefix) h = h * 1000003ULL + static_cast<std::uint64_t>(t) + 1;
    std::mt19937_64 rng(h);
    std::normal_distribution<double> n(0.0, 1.5);
    std::vector<double> logits(kToyVocab);
    for (double& v : logits) v = n(rng) + offset;
    if (peak > 0.0) logits[4 + rng() % 3] += peak;
    return logits;
  };
}

struct Path {
  text::TokenSeq ids;
  double sum = 0.0;
  std::size_t generated = 0;
};

// Every caption of at most max_length content tokens, with its log-prob.
std::vector<Path> Enumerate(const LogitFn& f, std::size_t max_length) {
  std::vector<Path> out;
  std::function<void(Path)> rec = [&](Path p) {
    std::vector<double> logits = f(p.ids);
    MaskOutputLogits(logits);
    const std::vector<double> logp = LogSoftmax(logits);
    for (int v = text::kEos; v < static_cast<int>(kToyVocab); ++v) {
      Path q = p;
      q.ids.push_back(v);
      q.sum += logp[v];
      q.generated += 1;
      if (v == text::kEos || q.generated == max_length) {
        out.push_back(q);
      } else {
        rec(q);
      }
    }
  };
  rec(Path{{text::kSos}, 0.0, 0});
  return out;
}

TEST_CASE("beam search finds the brute-force best length-normalized path") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const LogitFn f = RandomToy(seed);
    const auto paths = Enumerate(f, 3);
    const Path* best = &paths.front();
    for (const Path& p : paths)
      if (p.sum / p.generated > best->sum / best->generated) best = &p;
    const auto beams = BeamDecode(ToyState(f), paths.size(), 3);
    REQUIRE(!beams.empty());
    CHECK(beams.front().ids == best->ids);
    CHECK(beams.front().score == doctest::Approx(best->sum / best->generated).epsilon(1e-12));
    CHECK(beams.size() == paths.size());
  }
}

TEST_CASE("greedy follows the argmax path of a near-deterministic model") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const LogitFn f = RandomToy(seed, 30.0);
    const auto paths = Enumerate(f, 3);
    const Path* best = &paths.front();
    for (const Path& p : paths)
      if (p.sum > best->sum) best = &p;
    const Hypothesis g = GreedyDecode(ToyState(f), 3);
    CHECK(g.ids == best->ids);
    CHECK(GreedyDecode(ToyState(f), 3).ids == g.ids);
  }
}

TEST_CASE("beam size one reproduces greedy") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const LogitFn f = RandomToy(seed);
    const auto beams = BeamDecode(ToyState(f), 1, 6);
    REQUIRE(beams.size() == 1);
    CHECK(beams.front().ids == GreedyDecode(ToyState(f), 6).ids);
  }
}

TEST_CASE("beam results are distinct and sorted best first") {
  const auto beams = BeamDecode(ToyState(RandomToy(77)), 5, 6);
  CHECK(beams.size() == 5);
  std::set<text::TokenSeq> distinct;
  for (std::size_t i = 0; i < beams.size(); ++i) {
    distinct.insert(beams[i].content());
    if (i > 0) CHECK(beams[i - 1].score >= beams[i].score);
  }
  CHECK(distinct.size() == beams.size());
}

TEST_CASE("a constant shift of the logits leaves beam rankings unchanged") {
  const auto a = BeamDecode(ToyState(RandomToy(5)), 5, 5);
  const auto b = BeamDecode(ToyState(RandomToy(5, 0.0, 3.0)), 5, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ids == b[i].ids);
    CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-9));
  }
}

TEST_CASE("a model that emits eos first yields a flagged empty caption") {
  LogitFn f = [](const text::TokenSeq&) {
    std::vector<double> l(kToyVocab, 0.0);
    l[text::kEos] = 50.0;
    return l;
  };
  const Hypothesis g = GreedyDecode(ToyState(f), 5);
  CHECK(g.empty_content());
  CHECK(g.terminated);
  CHECK(BeamDecode(ToyState(f), 3, 5).front().empty_content());
}

TEST_CASE("sampling frequencies match a fixed distribution") {
  LogitFn f = [](const text::TokenSeq&) {
    std::vector<double> l(kToyVocab, -std::numeric_limits<double>::infinity());
    l[4] = std::log(0.7);
    l[5] = std::log(0.2);
    l[6] = std::log(0.1);
    return l;
  };
  Rng rng(123);
  std::map<int, double> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[SampleDecode(ToyState(f), 1, 1.0, rng).ids[1]] += 1.0;
  CHECK(std::abs(counts[4] / n - 0.7) < 0.01);
  CHECK(std::abs(counts[5] / n - 0.2) < 0.01);
  CHECK(std::abs(counts[6] / n - 0.1) < 0.01);
}

TEST_CASE("sampled log-probs equal the log-softmax at the drawn ids") {
  const LogitFn f = RandomToy(9);
  Rng rng(10);
  for (double temp : {1.0, 0.5, 2.0}) {
    const Hypothesis h = SampleDecode(ToyState(f), 6, temp, rng);
    for (std::size_t i = 0; i < h.log_probs.size(); ++i) {
      std::vector<double> logits = f(text::TokenSeq(h.ids.begin(), h.ids.begin() + i + 1));
      for (double& v : logits) v /= temp;
      MaskOutputLogits(logits);
      CHECK(h.log_probs[i] == LogSoftmax(logits)[h.ids[i + 1]]);
    }
  }
}

TEST_CASE("sampling at a vanishing temperature is greedy") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LogitFn f = RandomToy(seed);
    Rng rng(seed);
    CHECK(SampleDecode(ToyState(f), 6, 1e-4, rng).ids == GreedyDecode(ToyState(f), 6).ids);
  }
  Rng rng(1);
  CHECK_THROWS_AS(SampleDecode(ToyState(RandomToy(1)), 6, 0.0, rng), Error);
}

TEST_CASE("generation never emits pad or sos") {
  LogitFn f = [](const text::TokenSeq&) {
    std::vector<double> l(kToyVocab, 0.0);
    l[text::kPad] = 20.0;
    l[text::kSos] = 20.0;
    return l;
  };
  const Hypothesis h = GreedyDecode(ToyState(f), 4);
  for (std::size_t i = 1; i < h.ids.size(); ++i) CHECK(h.ids[i] > text::kSos);
}

models::GeneratorConfig Tiny() {
  models::GeneratorConfig c;
  c.vocab_size = 12;
  c.feat_dim = 4;
  c.d_model = 8;
  c.layers = 1;
  c.heads = 2;
  c.ff_dim = 16;
  c.noise_dim = 4;
  c.max_length = 6;
  c.dropout = 0.0;
  return c;
}

TEST_CASE("diverse sets: GAN keeps duplicates, MLE returns distinct beam hypotheses") {
  Rng rng(3);
  models::Generator g(Tiny(), rng);
  Tensor feats({5, 4});
  for (std::size_t i = 0; i < feats.numel(); ++i) feats[i] = std::sin(static_cast<double>(i));
  const DiverseSet gan = GenerateDiverseSet(g, feats, DiverseMode::kGan, 5, 5, 99, "clip");
  CHECK(gan.captions.size() == 5);
  const DiverseSet again = GenerateDiverseSet(g, feats, DiverseMode::kGan, 5, 5, 99, "clip");
  for (std::size_t i = 0; i < 5; ++i) CHECK(again.captions[i].ids == gan.captions[i].ids);

  const DiverseSet mle = GenerateDiverseSet(g, feats, DiverseMode::kMle, 5, 5, 99, "clip");
  const auto beams = BeamDecode(GeneratorDecoderState(g, feats, g.ZeroNoise()), 5, 6);
  REQUIRE(mle.captions.size() == beams.size());
  std::set<text::TokenSeq> distinct;
  for (std::size_t i = 0; i < beams.size(); ++i) {
    CHECK(mle.captions[i].ids == beams[i].ids);
    distinct.insert(beams[i].content());
  }
  CHECK(distinct.size() == mle.captions.size());
  CHECK(mle.short_of_n == (mle.captions.size() < 5));
}

TEST_CASE("caption files round-trip byte-identically") {
  testing::TempDir dir("caps");
  std::vector<CaptionRecord> recs{{"a", {"a dog barks", "rain"}, {-0.25, -1.0 / 3.0}}, {"b", {"x"}, {0.1}}};
  WriteCaptionFile(dir / "c1.jsonl", recs);
  const auto back = ReadCaptionFile(dir / "c1.jsonl");
  CHECK(back == recs);
  WriteCaptionFile(dir / "c2.jsonl", back);
  CHECK(testing::Slurp(dir / "c1.jsonl") == testing::Slurp(dir / "c2.jsonl"));
  testing::Spit(dir / "bad.jsonl", "{\"clip_id\": \"q\"}\n");
  CHECK_THROWS_AS(ReadCaptionFile(dir / "bad.jsonl"), Error);
}

}  // namespace
}  // namespace capgan::decoding
