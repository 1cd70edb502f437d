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

#ifndef CAPGAN_DECODING_DECODE_HPP_
#define CAPGAN_DECODING_DECODE_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "models/generator.hpp"
#include "text/vocabulary.hpp"

namespace capgan::decoding {

// Autoregressive decoder positioned after some prefix. Advance() feeds one
// token and returns the logits for the next one.
class DecoderState {
 public:
  virtual ~DecoderState() = default;
  virtual std::unique_ptr<DecoderState> Clone() const = 0;
  virtual std::vector<double> Advance(text::TokenId token) = 0;
};

class GeneratorDecoderState : public DecoderState {
 public:
  GeneratorDecoderState(const models::Generator& g, const Tensor& features, std::span<const double> z);

  std::unique_ptr<DecoderState> Clone() const override;
  std::vector<double> Advance(text::TokenId token) override;

 private:
  GeneratorDecoderState(const models::Generator* g, models::GeneratorState s) : g_(g), state_(std::move(s)) {}

  const models::Generator* g_;
  models::GeneratorState state_;
};

// Added to the logits of ids that may never be emitted (<pad>, <sos>). The
// same constant is used by the teacher-forced training path, so log-probs
// agree exactly between sampling and scoring.
inline constexpr double kBannedLogit = -1e9;
void MaskOutputLogits(std::span<double> logits);
// [rows x vocab] additive mask with kBannedLogit at the banned columns.
Tensor OutputMask(std::size_t rows, std::size_t vocab);
std::vector<double> LogSoftmax(std::span<const double> logits);

struct Hypothesis {
  text::TokenSeq ids;              // <sos> content [<eos>]
  std::vector<double> log_probs;   // one per generated token
  double score = 0.0;              // beam: sum log-prob / generated length
  bool terminated = false;         // ended with <eos> rather than the length cap

  text::TokenSeq content() const { return text::Vocabulary::Content(ids); }
  bool empty_content() const { return content().empty(); }
};

enum class DecodeMode { kGreedy, kSample, kBeam };

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kBeam;
  std::size_t beam_size = 5;
  std::size_t max_length = text::kDefaultMaxLength;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::size_t n_captions = 5;
};

// Argmax each step (lowest id on ties) until <eos> or max_length content tokens.
Hypothesis GreedyDecode(const DecoderState& start, std::size_t max_length);

// Multinomial draw from softmax(logits / temperature); log_probs hold the
// log-probability of each drawn id under that distribution.
Hypothesis SampleDecode(const DecoderState& start, std::size_t max_length, double temperature, Rng& rng);

// Length-normalized beam search; up to beam_size distinct hypotheses sorted
// by score, best first.
std::vector<Hypothesis> BeamDecode(const DecoderState& start, std::size_t beam_size, std::size_t max_length);

// Index drawn from probabilities p using one 53-bit uniform from rng.
std::size_t DrawCategorical(std::span<const double> p, Rng& rng);

enum class DiverseMode { kGan, kMle };

struct DiverseSet {
  std::vector<Hypothesis> captions;
  bool short_of_n = false;  // beam yielded fewer than n distinct captions
};

// GAN: n independent z (one named RNG substream per caption), beam top-1
// each, duplicates kept. MLE: z = 0, top-n distinct beam hypotheses.
DiverseSet GenerateDiverseSet(const models::Generator& g, const Tensor& features, DiverseMode mode,
                              std::size_t n_captions, std::size_t beam_size, std::uint64_t seed,
                              const std::string& clip_id);

}  // namespace capgan::decoding

#endif  // CAPGAN_DECODING_DECODE_HPP_
