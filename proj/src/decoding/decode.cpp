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

#include "decoding/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "common/error.hpp"

namespace capgan::decoding {

GeneratorDecoderState::GeneratorDecoderState(const models::Generator& g, const Tensor& features,
                                             std::span<const double> z)
    : g_(&g), state_(g.Start(features, z)) {}

std::unique_ptr<DecoderState> GeneratorDecoderState::Clone() const {
  return std::unique_ptr<DecoderState>(new GeneratorDecoderState(g_, state_));
}

std::vector<double> GeneratorDecoderState::Advance(text::TokenId token) {
  const Tensor logits = g_->Advance(state_, token);
  return {logits.data().begin(), logits.data().end()};
}

void MaskOutputLogits(std::span<double> logits) {
  logits[text::kPad] += kBannedLogit;
  logits[text::kSos] += kBannedLogit;
}

Tensor OutputMask(std::size_t rows, std::size_t vocab) {
  Tensor m({rows, vocab}, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    m.at(r, text::kPad) = kBannedLogit;
    m.at(r, text::kSos) = kBannedLogit;
  }
  return m;
}

std::vector<double> LogSoftmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::size_t DrawCategorical(std::span<const double> p, Rng& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = i;
    if (u < acc) return i;
  }
  return last;  // round-off left u above the final cumulative sum
}

namespace {

std::vector<double> MaskedLogits(DecoderState& state, text::TokenId token, double temperature = 1.0) {
  std::vector<double> logits = state.Advance(token);
  Require(logits.size() > text::kNumReserved, ErrorKind::kContract, "decoder vocabulary too small");
  if (temperature != 1.0)
    for (double& v : logits) v /= temperature;
  MaskOutputLogits(logits);
  return logits;
}

}  // namespace

Hypothesis GreedyDecode(const DecoderState& start, std::size_t max_length) {
  auto state = start.Clone();
  Hypothesis h;
  h.ids.push_back(text::kSos);
  std::vector<double> logits = MaskedLogits(*state, text::kSos);
  for (std::size_t step = 0;; ++step) {
    const auto best = std::max_element(logits.begin(), logits.end());
    const auto id = static_cast<text::TokenId>(best - logits.begin());
    h.log_probs.push_back(LogSoftmax(logits)[id]);
    h.ids.push_back(id);
    if (id == text::kEos) {
      h.terminated = true;
      break;
    }
    if (step + 1 == max_length) break;
    logits = MaskedLogits(*state, id);
  }
  return h;
}

Hypothesis SampleDecode(const DecoderState& start, std::size_t max_length, double temperature, Rng& rng) {
  Require(temperature > 0.0, ErrorKind::kContract, "sampling temperature must be positive");
  auto state = start.Clone();
  Hypothesis h;
  h.ids.push_back(text::kSos);
  std::vector<double> logits = MaskedLogits(*state, text::kSos, temperature);
  for (std::size_t step = 0;; ++step) {
    const std::vector<double> logp = LogSoftmax(logits);
    std::vector<double> p(logp.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logp[i]);
    const auto id = static_cast<text::TokenId>(DrawCategorical(p, rng));
    h.log_probs.push_back(logp[id]);
    h.ids.push_back(id);
    if (id == text::kEos) {
      h.terminated = true;
      break;
    }
    if (step + 1 == max_length) break;
    logits = MaskedLogits(*state, id, temperature);
  }
  return h;
}

namespace {

struct Live {
  std::unique_ptr<DecoderState> state;
  Hypothesis hyp;
  double sum = 0.0;
  std::vector<double> logp;  // next-token log-probs
};

void Finish(Hypothesis& h, double sum) { h.score = sum / static_cast<double>(h.log_probs.size()); }

}  // namespace

std::vector<Hypothesis> BeamDecode(const DecoderState& start, std::size_t beam_size, std::size_t max_length) {
  Require(beam_size >= 1, ErrorKind::kContract, "beam size must be at least 1");
  Require(max_length >= 1, ErrorKind::kContract, "max_length must be at least 1");
  std::vector<Live> live(1);
  live[0].state = start.Clone();
  live[0].hyp.ids.push_back(text::kSos);
  live[0].logp = LogSoftmax(MaskedLogits(*live[0].state, text::kSos));
  std::vector<Hypothesis> finished;

  for (std::size_t step = 0; step < max_length && !live.empty(); ++step) {
    struct Cand {
      double sum;
      std::size_t parent;
      text::TokenId token;
    };
    std::vector<Cand> cands;
    for (std::size_t b = 0; b < live.size(); ++b) {
      for (std::size_t v = 0; v < live[b].logp.size(); ++v) {
        if (v == static_cast<std::size_t>(text::kPad) || v == static_cast<std::size_t>(text::kSos)) continue;
        cands.push_back({live[b].sum + live[b].logp[v], b, static_cast<text::TokenId>(v)});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      return std::tie(b.sum, a.parent, a.token) < std::tie(a.sum, b.parent, b.token);
    });
    // The best beam_size expansions survive; those ending in <eos> (or hitting
    // the length cap) retire and still use up their slot.
    if (cands.size() > beam_size) cands.resize(beam_size);
    std::vector<Live> next;
    const bool last_step = step + 1 == max_length;
    for (const Cand& c : cands) {
      const Live& parent = live[c.parent];
      Hypothesis h = parent.hyp;
      h.ids.push_back(c.token);
      h.log_probs.push_back(parent.logp[c.token]);
      if (c.token == text::kEos || last_step) {
        h.terminated = c.token == text::kEos;
        Finish(h, c.sum);
        finished.push_back(std::move(h));
        continue;
      }
      Live child;
      child.state = parent.state->Clone();
      child.hyp = std::move(h);
      child.sum = c.sum;
      child.logp = LogSoftmax(MaskedLogits(*child.state, c.token));
      next.push_back(std::move(child));
    }
    live = std::move(next);
  }

  std::stable_sort(finished.begin(), finished.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ids < b.ids;
  });
  std::vector<Hypothesis> out;
  std::set<text::TokenSeq> seen;
  for (Hypothesis& h : finished) {
    if (out.size() == beam_size) break;
    if (seen.insert(h.content()).second) out.push_back(std::move(h));
  }
  return out;
}

DiverseSet GenerateDiverseSet(const models::Generator& g, const Tensor& features, DiverseMode mode,
                              std::size_t n_captions, std::size_t beam_size, std::uint64_t seed,
                              const std::string& clip_id) {
  Require(n_captions >= 1, ErrorKind::kContract, "n_captions must be at least 1");
  const std::size_t max_length = g.config().max_length;
  DiverseSet set;
  if (mode == DiverseMode::kMle) {
    const GeneratorDecoderState start(g, features, g.ZeroNoise());
    set.captions = BeamDecode(start, std::max(beam_size, n_captions), max_length);
    if (set.captions.size() > n_captions) set.captions.resize(n_captions);
  } else {
    for (std::size_t i = 0; i < n_captions; ++i) {
      Rng zr = SubstreamRng(seed, "decode/z/" + clip_id, i);
      const GeneratorDecoderState start(g, features, g.SampleNoise(zr));
      auto beams = BeamDecode(start, beam_size, max_length);
      if (!beams.empty()) set.captions.push_back(std::move(beams.front()));
    }
  }
  set.short_of_n = set.captions.size() < n_captions;
  return set;
}

}  // namespace capgan::decoding
