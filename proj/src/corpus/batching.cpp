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

#include "corpus/batching.hpp"

#include <algorithm>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace capgan::corpus {

Tensor Batch::ClipFeatures(std::size_t b) const {
  const std::size_t fmax = features.shape()[1], dim = features.shape()[2];
  const std::size_t len = feature_lengths[b];
  std::vector<double> data(features.data().begin() + b * fmax * dim,
                           features.data().begin() + (b * fmax + len) * dim);
  return Tensor({len, dim}, std::move(data));
}

text::TokenSeq Batch::Targets(std::size_t b) const {
  const auto begin = targets.begin() + static_cast<std::ptrdiff_t>(b * target_width);
  return text::TokenSeq(begin, begin + static_cast<std::ptrdiff_t>(target_lengths[b]));
}

std::vector<Batch> MakeBatches(const DatasetSplit& split, const text::Vocabulary& vocab, const BatchOptions& options) {
  Require(options.batch_size >= 1, ErrorKind::kContract, "batch_size must be at least 1");
  const std::size_t n = split.records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (options.shuffle) {
    Rng rng = SubstreamRng(options.seed, "batch/shuffle", options.epoch);
    std::shuffle(order.begin(), order.end(), rng);
  }
  // Reference choices are drawn in record order so they do not depend on the shuffle.
  std::vector<std::size_t> choice(n);
  {
    Rng rng = SubstreamRng(options.seed, "batch/reference", options.epoch);
    std::uniform_int_distribution<std::size_t> pick(0, kReferencesPerClip - 1);
    for (std::size_t& c : choice) c = pick(rng);
  }

  const std::size_t width = options.max_length + 2;
  const std::size_t dim = split.feat_dim();
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < n; start += options.batch_size) {
    const std::size_t end = std::min(n, start + options.batch_size);
    const std::size_t bsz = end - start;
    std::size_t fmax = 1;
    for (std::size_t i = start; i < end; ++i) fmax = std::max(fmax, split.records[order[i]].frames());
    Batch batch;
    batch.features = Tensor({bsz, fmax, dim});
    batch.target_width = width;
    batch.targets.assign(bsz * width, text::kPad);
    batch.mask.assign(bsz * width, 0);
    for (std::size_t b = 0; b < bsz; ++b) {
      const std::size_t idx = order[start + b];
      const ClipRecord& rec = split.records[idx];
      std::copy(rec.features.data().begin(), rec.features.data().end(),
                batch.features.data().begin() + b * fmax * dim);
      batch.feature_lengths.push_back(rec.frames());
      const text::TokenSeq ids = vocab.Encode(rec.references[choice[idx]], options.max_length);
      std::copy(ids.begin(), ids.end(), batch.targets.begin() + b * width);
      std::fill_n(batch.mask.begin() + b * width, ids.size(), 1);
      batch.target_lengths.push_back(ids.size());
      batch.record_indices.push_back(idx);
      batch.reference_choice.push_back(choice[idx]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace capgan::corpus
