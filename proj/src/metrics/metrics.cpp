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

#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "common/error.hpp"

namespace capgan::metrics {

NGramCounts CountNGrams(const Words& words, int n) {
  NGramCounts counts;
  if (words.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) ++counts[NGram(words.begin() + i, words.begin() + i + n)];
  return counts;
}

namespace {

struct BleuTotals {
  std::array<double, kMaxOrder> matched{};
  std::array<double, kMaxOrder> total{};
  double cand_len = 0.0;
  double ref_len = 0.0;

  void Add(const Words& candidate, const ReferenceSet& refs, int n) {
    Require(!refs.empty(), ErrorKind::kContract, "candidate has no references");
    for (int k = 1; k <= n; ++k) {
      const NGramCounts cand = CountNGrams(candidate, k);
      std::map<NGram, int> max_ref;
      for (const Words& r : refs)
        for (const auto& [g, c] : CountNGrams(r, k)) max_ref[g] = std::max(max_ref[g], c);
      for (const auto& [g, c] : cand) {
        const auto it = max_ref.find(g);
        matched[k - 1] += std::min(c, it == max_ref.end() ? 0 : it->second);
        total[k - 1] += c;
      }
    }
    const auto c = static_cast<long>(candidate.size());
    long best = static_cast<long>(refs.front().size());
    for (const Words& r : refs) {
      const auto len = static_cast<long>(r.size());
      if (std::labs(len - c) < std::labs(best - c) || (std::labs(len - c) == std::labs(best - c) && len < best))
        best = len;
    }
    cand_len += static_cast<double>(c);
    ref_len += static_cast<double>(best);
  }

  double Score(int n) const {
    if (cand_len == 0.0) return 0.0;
    double log_sum = 0.0;
    for (int k = 0; k < n; ++k) {
      if (matched[k] == 0.0) return 0.0;
      log_sum += std::log(matched[k] / total[k]);
    }
    const double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
    return bp * std::exp(log_sum / n);
  }
};

void CheckOrder(int n) { Require(n >= 1 && n <= kMaxOrder, ErrorKind::kContract, "n-gram order must be in 1..4"); }

}  // namespace

double Bleu(std::span<const Words> candidates, std::span<const ReferenceSet> references, int n) {
  CheckOrder(n);
  Require(!candidates.empty(), ErrorKind::kContract, "BLEU of an empty candidate set");
  Require(candidates.size() == references.size(), ErrorKind::kContract, "candidate and reference counts differ");
  BleuTotals t;
  for (std::size_t i = 0; i < candidates.size(); ++i) t.Add(candidates[i], references[i], n);
  return t.Score(n);
}

double SentenceBleu(const Words& candidate, const ReferenceSet& references, int n) {
  CheckOrder(n);
  BleuTotals t;
  t.Add(candidate, references, n);
  return t.Score(n);
}

DocFreqTable DocFreqTable::Build(std::span<const ReferenceSet> references) {
  Require(!references.empty(), ErrorKind::kContract, "document frequencies of an empty corpus");
  DocFreqTable t;
  t.corpus_size_ = references.size();
  for (const ReferenceSet& refs : references) {
    for (int k = 1; k <= kMaxOrder; ++k) {
      std::set<NGram> present;
      for (const Words& r : refs)
        for (const auto& [g, c] : CountNGrams(r, k)) present.insert(g);
      for (const NGram& g : present) ++t.df_[k - 1][g];
    }
  }
  return t;
}

int DocFreqTable::Df(const NGram& g) const {
  if (g.empty() || g.size() > static_cast<std::size_t>(kMaxOrder)) return 0;
  const auto& m = df_[g.size() - 1];
  const auto it = m.find(g);
  return it == m.end() ? 0 : it->second;
}

double DocFreqTable::Idf(const NGram& g) const {
  return std::log(static_cast<double>(corpus_size_) / std::max(1.0, static_cast<double>(Df(g))));
}

namespace {

using TfIdf = std::map<NGram, double>;

TfIdf Vectorize(const Words& words, int n, const DocFreqTable& df) {
  TfIdf v;
  for (const auto& [g, c] : CountNGrams(words, n)) v[g] = c * df.Idf(g);
  return v;
}

double Cosine(const TfIdf& a, const TfIdf& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, x] : a) {
    na += x * x;
    const auto it = b.find(g);
    if (it != b.end()) dot += x * it->second;
  }
  for (const auto& [g, y] : b) nb += y * y;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double Cider(const Words& candidate, const ReferenceSet& references, const DocFreqTable& df, CiderVariant variant) {
  Require(variant == CiderVariant::kCider, ErrorKind::kConfig, "CIDEr-D is not implemented");
  Require(!references.empty(), ErrorKind::kContract, "CIDEr candidate has no references");
  double total = 0.0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    const TfIdf c = Vectorize(candidate, n, df);
    double s = 0.0;
    for (const Words& r : references) s += Cosine(c, Vectorize(r, n, df));
    total += s / static_cast<double>(references.size());
  }
  return 10.0 * total / kMaxOrder;
}

std::size_t VocabSize(std::span<const Words> captions) {
  std::set<std::string> words;
  for (const Words& c : captions) words.insert(c.begin(), c.end());
  return words.size();
}

double MBleuSet(const std::vector<Words>& set, int n) {
  Require(set.size() >= 2, ErrorKind::kContract, "mBLEU needs at least 2 captions per clip");
  double s = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    ReferenceSet others;
    for (std::size_t j = 0; j < set.size(); ++j)
      if (j != i) others.push_back(set[j]);
    s += SentenceBleu(set[i], others, n);
  }
  return s / static_cast<double>(set.size());
}

double MBleu(std::span<const std::vector<Words>> sets, int n) {
  Require(!sets.empty(), ErrorKind::kContract, "mBLEU of an empty corpus");
  double s = 0.0;
  for (const auto& set : sets) s += MBleuSet(set, n);
  return s / static_cast<double>(sets.size());
}

double DivNSet(const std::vector<Words>& set, int n) {
  Require(n == 1 || n == 2, ErrorKind::kContract, "div-n is defined for n = 1, 2");
  std::set<NGram> distinct;
  double words = 0.0;
  for (const Words& c : set) {
    words += static_cast<double>(c.size());
    for (const auto& [g, k] : CountNGrams(c, n)) distinct.insert(g);
  }
  return words == 0.0 ? 0.0 : static_cast<double>(distinct.size()) / words;
}

double DivN(std::span<const std::vector<Words>> sets, int n) {
  Require(!sets.empty(), ErrorKind::kContract, "div-n of an empty corpus");
  double s = 0.0;
  for (const auto& set : sets) s += DivNSet(set, n);
  return s / static_cast<double>(sets.size());
}

}  // namespace capgan::metrics
