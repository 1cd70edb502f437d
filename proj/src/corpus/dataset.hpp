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

#ifndef CAPGAN_CORPUS_DATASET_HPP_
#define CAPGAN_CORPUS_DATASET_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tensor/tensor.hpp"
#include "text/vocabulary.hpp"

namespace capgan::corpus {

inline constexpr std::size_t kReferencesPerClip = 5;
inline constexpr std::size_t kMaxFrames = 256;

// One clip: a [frames x feat_dim] feature matrix and its five normalized
// reference captions.
struct ClipRecord {
  std::string clip_id;
  Tensor features;
  std::array<text::Words, kReferencesPerClip> references;

  std::size_t frames() const { return features.rows(); }
  std::size_t feat_dim() const { return features.cols(); }

  friend bool operator==(const ClipRecord&, const ClipRecord&) = default;
};

struct DatasetSplit {
  std::string name;
  std::vector<ClipRecord> records;

  std::size_t feat_dim() const { return records.empty() ? 0 : records.front().feat_dim(); }
  // All references of all clips, in record order.
  std::vector<text::Words> AllReferences() const;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

// Checks the ClipRecord invariants; throws kLoad naming the clip.
void ValidateRecord(const ClipRecord& record);
// Also checks clip_id uniqueness and a common feature dimension.
void ValidateSplit(const DatasetSplit& split);

// Feature file: "DCFEAT01", u32 frames, u32 feat_dim (little-endian), then
// frames*feat_dim little-endian float32 values in row-major order.
void WriteFeatureFile(const std::string& path, const Tensor& features);
Tensor ReadFeatureFile(const std::string& path);

// Manifest: JSON array of {clip_id, feature_file, captions[5]}. Feature paths
// are resolved relative to the manifest's directory. The split name is the
// manifest file stem.
DatasetSplit LoadDataset(const std::string& manifest_path);
// Writes the manifest plus one feature file per clip under
// <manifest dir>/<feature_subdir>/<clip_id>.dcfeat.
void SaveDataset(const DatasetSplit& split, const std::string& manifest_path,
                 const std::string& feature_subdir = "features");

struct SyntheticCorpus {
  DatasetSplit train;
  DatasetSplit eval;
  // Sound class of every clip, aligned with train/eval records.
  std::vector<int> train_classes;
  std::vector<int> eval_classes;
};

struct SyntheticOptions {
  std::uint64_t seed = 7;
  std::size_t n_clips = 60;
  std::size_t n_classes = 4;
  std::size_t feat_dim = 64;
  std::size_t min_frames = 24;
  std::size_t max_frames = 40;
  double noise_std = 0.6;
};

// Class-dependent Gaussian feature sequences with five references per clip
// drawn from a per-class template grammar. Every fifth clip goes to the
// evaluation split. Pure function of the options.
SyntheticCorpus GenerateSyntheticCorpus(const SyntheticOptions& options);

}  // namespace capgan::corpus

#endif  // CAPGAN_CORPUS_DATASET_HPP_
