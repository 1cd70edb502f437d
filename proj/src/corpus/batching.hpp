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

#ifndef CAPGAN_CORPUS_BATCHING_HPP_
#define CAPGAN_CORPUS_BATCHING_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "corpus/dataset.hpp"
#include "tensor/tensor.hpp"
#include "text/vocabulary.hpp"

namespace capgan::corpus {

struct Batch {
  Tensor features;                          // [B x F_max x feat_dim], zero padded
  std::vector<std::size_t> feature_lengths;  // true frame counts
  std::size_t target_width = 0;             // T_max + 2
  std::vector<text::TokenId> targets;       // [B x target_width], kPad padded
  std::vector<std::size_t> target_lengths;  // ids including <sos>/<eos>
  std::vector<unsigned char> mask;          // [B x target_width], 1 where t < length
  std::vector<std::size_t> record_indices;  // rows of the source split
  std::vector<std::size_t> reference_choice;

  std::size_t size() const { return record_indices.size(); }
  // Unpadded [frames x feat_dim] features of row b.
  Tensor ClipFeatures(std::size_t b) const;
  // Unpadded token ids of row b.
  text::TokenSeq Targets(std::size_t b) const;
};

struct BatchOptions {
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  bool shuffle = true;
  std::size_t max_length = text::kDefaultMaxLength;
};

// One epoch of batches covering every record once. Each record contributes
// one of its five references, drawn uniformly per (seed, epoch).
std::vector<Batch> MakeBatches(const DatasetSplit& split, const text::Vocabulary& vocab, const BatchOptions& options);

}  // namespace capgan::corpus

#endif  // CAPGAN_CORPUS_BATCHING_HPP_
