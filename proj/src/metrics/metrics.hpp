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

#ifndef CAPGAN_METRICS_METRICS_HPP_
#define CAPGAN_METRICS_METRICS_HPP_

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "text/vocabulary.hpp"

namespace capgan::metrics {

using text::Words;
using NGram = std::vector<std::string>;
using NGramCounts = std::map<NGram, int>;
using ReferenceSet = std::vector<Words>;

inline constexpr int kMaxOrder = 4;

NGramCounts CountNGrams(const Words& words, int n);

// Corpus-level BLEU_n: clipped precisions summed over the corpus, geometric
// mean, brevity penalty against the closest reference length (shorter wins
// ties). kContract on an empty corpus or a candidate without references.
double Bleu(std::span<const Words> candidates, std::span<const ReferenceSet> references, int n);
// Single-sentence BLEU_n without smoothing; any zero precision gives 0.
double SentenceBleu(const Words& candidate, const ReferenceSet& references, int n = kMaxOrder);

class DocFreqTable {
 public:
  // df(g) = number of clips whose reference set contains g.
  static DocFreqTable Build(std::span<const ReferenceSet> references);

  std::size_t corpus_size() const { return corpus_size_; }
  int Df(const NGram& g) const;  // 0 when never seen
  // log(N / max(1, df)); unseen n-grams get the largest weight, log N.
  double Idf(const NGram& g) const;

 private:
  std::size_t corpus_size_ = 0;
  std::array<std::map<NGram, int>, kMaxOrder> df_;
};

enum class CiderVariant { kCider, kCiderD };

// Plain CIDEr in [0, 10]: per n, mean cosine between the candidate's and each
// reference's tf-idf vectors; 10 times the mean over n = 1..4.
double Cider(const Words& candidate, const ReferenceSet& references, const DocFreqTable& df,
             CiderVariant variant = CiderVariant::kCider);

// Distinct content words over all captions.
std::size_t VocabSize(std::span<const Words> captions);

// Mean over captions of BLEU_4(caption, the other captions); kContract when
// the set has fewer than 2 captions.
double MBleuSet(const std::vector<Words>& set, int n = kMaxOrder);
double MBleu(std::span<const std::vector<Words>> sets, int n = kMaxOrder);

// Distinct n-grams over total word count of one caption set (0 for no words).
double DivNSet(const std::vector<Words>& set, int n);
double DivN(std::span<const std::vector<Words>> sets, int n);

}  // namespace capgan::metrics

#endif  // CAPGAN_METRICS_METRICS_HPP_
