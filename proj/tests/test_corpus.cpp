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
#include <set>

#include <json.hpp>

#include "common/error.hpp"
#include "corpus/batching.hpp"
#include "corpus/dataset.hpp"
#include "test_util.hpp"

namespace capgan::corpus {
namespace {

using testing::Slurp;
using testing::Spit;
using testing::TempDir;

SyntheticOptions Small() {
  SyntheticOptions o;
  o.n_clips = 20;
  o.n_classes = 4;
  return o;
}

void WriteManifest(const std::string& path, const nlohmann::json& j) { Spit(path, j.dump(2)); }

TEST_CASE("feature file layout is magic, frames, dim, then little-endian floats") {
  TempDir dir("feat");
  const Tensor f = Tensor::Matrix(2, 3, {1, 2, 3, 4, 5, 0.5});
  WriteFeatureFile(dir / "a.dcfeat", f);
  const std::string bytes = Slurp(dir / "a.dcfeat");
  REQUIRE(bytes.size() == 8 + 4 + 4 + 6 * 4);
  CHECK(bytes.substr(0, 8) == "DCFEAT01");
  CHECK(bytes[8] == 2);
  CHECK(bytes[12] == 3);
  CHECK(ReadFeatureFile(dir / "a.dcfeat") == f);
  WriteFeatureFile(dir / "b.dcfeat", ReadFeatureFile(dir / "a.dcfeat"));
  CHECK(Slurp(dir / "b.dcfeat") == bytes);
  Spit(dir / "c.dcfeat", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(ReadFeatureFile(dir / "c.dcfeat"), Error);
  Spit(dir / "d.dcfeat", "DCFEAT02" + bytes.substr(8));
  CHECK_THROWS_AS(ReadFeatureFile(dir / "d.dcfeat"), Error);
}

TEST_CASE("two-clip manifest loads and captions are normalized") {
  TempDir dir("load");
  std::filesystem::create_directories(dir / "features");
  WriteFeatureFile(dir / "features/x.dcfeat", Tensor({3, 4}, 0.25));
  WriteFeatureFile(dir / "features/y.dcfeat", Tensor({5, 4}, -1.0));
  nlohmann::json m = nlohmann::json::array();
  m.push_back({{"clip_id", "x"},
               {"feature_file", "features/x.dcfeat"},
               {"captions", {"A dog barks!", "dog", "a b", "c d", "e f"}}});
  m.push_back({{"clip_id", "y"}, {"feature_file", "features/y.dcfeat"}, {"captions", {"q", "w", "e", "r", "t"}}});
  WriteManifest(dir / "train.json", m);
  const DatasetSplit split = LoadDataset(dir / "train.json");
  CHECK(split.name == "train");
  REQUIRE(split.records.size() == 2);
  CHECK(split.records[0].references[0] == text::Words{"a", "dog", "barks"});
  CHECK(split.records[1].frames() == 5);
}

std::string LoadError(const std::string& manifest) {
  try {
    LoadDataset(manifest);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kLoad);
    return e.what();
  }
  return "";
}

TEST_CASE("load errors name the offending clip") {
  TempDir dir("bad");
  WriteFeatureFile(dir / "ok.dcfeat", Tensor({2, 2}, 1.0));
  Tensor nan({2, 2}, 1.0);
  nan[3] = std::numeric_limits<double>::quiet_NaN();
  WriteFeatureFile(dir / "nan.dcfeat", nan);

  nlohmann::json four = nlohmann::json::array();
  four.push_back({{"clip_id", "clip_four"}, {"feature_file", "ok.dcfeat"}, {"captions", {"a", "b", "c", "d"}}});
  WriteManifest(dir / "four.json", four);
  CHECK(LoadError(dir / "four.json").find("clip_four") != std::string::npos);

  nlohmann::json missing = nlohmann::json::array();
  missing.push_back(
      {{"clip_id", "clip_missing"}, {"feature_file", "nope.dcfeat"}, {"captions", {"a", "b", "c", "d", "e"}}});
  WriteManifest(dir / "missing.json", missing);
  CHECK(LoadError(dir / "missing.json").find("clip_missing") != std::string::npos);

  nlohmann::json bad = nlohmann::json::array();
  bad.push_back({{"clip_id", "clip_nan"}, {"feature_file", "nan.dcfeat"}, {"captions", {"a", "b", "c", "d", "e"}}});
  WriteManifest(dir / "nan.json", bad);
  CHECK(LoadError(dir / "nan.json").find("clip_nan") != std::string::npos);
}

TEST_CASE("save then load reproduces the split and the bytes") {
  TempDir dir("rt");
  const SyntheticCorpus c = GenerateSyntheticCorpus(Small());
  SaveDataset(c.train, dir / "train.json");
  const DatasetSplit back = LoadDataset(dir / "train.json");
  CHECK(back == c.train);
  const std::string manifest = Slurp(dir / "train.json");
  const std::string feat = Slurp(dir / ("features/" + c.train.records[0].clip_id + ".dcfeat"));
  SaveDataset(back, dir / "train.json");
  CHECK(Slurp(dir / "train.json") == manifest);
  CHECK(Slurp(dir / ("features/" + c.train.records[0].clip_id + ".dcfeat")) == feat);
}

TEST_CASE("synthetic corpus is a pure function of its seed") {
  const SyntheticCorpus a = GenerateSyntheticCorpus(Small());
  const SyntheticCorpus b = GenerateSyntheticCorpus(Small());
  CHECK(a.train == b.train);
  CHECK(a.eval == b.eval);
  SyntheticOptions other = Small();
  other.seed = 8;
  CHECK_FALSE(GenerateSyntheticCorpus(other).train == a.train);
}

TEST_CASE("synthetic references are diverse, within length bounds, and exactly five") {
  const SyntheticCorpus c = GenerateSyntheticCorpus(Small());
  CHECK(c.train.records.size() + c.eval.records.size() == 20);
  for (const auto* split : {&c.train, &c.eval}) {
    for (const ClipRecord& r : split->records) {
      std::set<text::Words> distinct(r.references.begin(), r.references.end());
      CHECK(distinct.size() > 1);
      for (const auto& ref : r.references) {
        CHECK(ref.size() >= 6);
        CHECK(ref.size() <= 14);
      }
      CHECK(r.features.AllFinite());
    }
  }
}

TEST_CASE("synthetic classes are nearest-centroid separable") {
  SyntheticOptions o;  // 60 clips, 4 classes
  const SyntheticCorpus c = GenerateSyntheticCorpus(o);
  const std::size_t dim = c.train.feat_dim();
  auto pooled = [&](const ClipRecord& r) {
    std::vector<double> m(dim, 0.0);
    for (std::size_t f = 0; f < r.frames(); ++f)
      for (std::size_t d = 0; d < dim; ++d) m[d] += r.features.at(f, d) / static_cast<double>(r.frames());
    return m;
  };
  std::vector<std::vector<double>> centroid(o.n_classes, std::vector<double>(dim, 0.0));
  std::vector<double> count(o.n_classes, 0.0);
  for (std::size_t i = 0; i < c.train.records.size(); ++i) {
    const auto m = pooled(c.train.records[i]);
    const int k = c.train_classes[i];
    for (std::size_t d = 0; d < dim; ++d) centroid[k][d] += m[d];
    count[k] += 1.0;
  }
  for (std::size_t k = 0; k < o.n_classes; ++k)
    for (double& v : centroid[k]) v /= count[k];
  std::size_t correct = 0, total = 0;
  auto classify = [&](const DatasetSplit& split, const std::vector<int>& labels) {
    for (std::size_t i = 0; i < split.records.size(); ++i) {
      const auto m = pooled(split.records[i]);
      int best = -1;
      double best_d = 0.0;
      for (std::size_t k = 0; k < o.n_classes; ++k) {
        double dist = 0.0;
        for (std::size_t d = 0; d < dim; ++d) dist += (m[d] - centroid[k][d]) * (m[d] - centroid[k][d]);
        if (best < 0 || dist < best_d) {
          best = static_cast<int>(k);
          best_d = dist;
        }
      }
      correct += best == labels[i];
      ++total;
    }
  };
  classify(c.train, c.train_classes);
  classify(c.eval, c.eval_classes);
  CHECK(static_cast<double>(correct) / static_cast<double>(total) >= 0.95);
}

TEST_CASE("batching covers every record once with the expected sizes") {
  SyntheticOptions o = Small();
  o.n_clips = 12;  // 10 train clips
  const SyntheticCorpus c = GenerateSyntheticCorpus(o);
  REQUIRE(c.train.records.size() == 10);
  const auto vocab = text::Vocabulary::Build(c.train.AllReferences());
  BatchOptions bo;
  bo.batch_size = 4;
  const auto batches = MakeBatches(c.train, vocab, bo);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[1].size() == 4);
  CHECK(batches[2].size() == 2);
  std::set<std::size_t> seen;
  for (const Batch& b : batches) {
    std::size_t mask_sum = 0, length_sum = 0;
    for (unsigned char m : b.mask) mask_sum += m;
    for (std::size_t l : b.target_lengths) length_sum += l;
    CHECK(mask_sum == length_sum);
    CHECK(b.target_width == text::kDefaultMaxLength + 2);
    for (std::size_t i = 0; i < b.size(); ++i) {
      seen.insert(b.record_indices[i]);
      const auto ids = b.Targets(i);
      CHECK(ids.front() == text::kSos);
      CHECK(ids.back() == text::kEos);
      const ClipRecord& r = c.train.records[b.record_indices[i]];
      CHECK(vocab.Decode(ids) == r.references[b.reference_choice[i]]);
      CHECK(b.ClipFeatures(i) == r.features);
      for (std::size_t t = ids.size(); t < b.target_width; ++t) CHECK(b.targets[i * b.target_width + t] == 0);
    }
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("unshuffled batches keep record order") {
  const SyntheticCorpus c = GenerateSyntheticCorpus(Small());
  const auto vocab = text::Vocabulary::Build(c.train.AllReferences());
  BatchOptions bo;
  bo.batch_size = 3;
  bo.shuffle = false;
  std::size_t next = 0;
  for (const Batch& b : MakeBatches(c.train, vocab, bo))
    for (std::size_t i : b.record_indices) CHECK(i == next++);
}

TEST_CASE("every reference is chosen at least once over 100 epochs") {
  const SyntheticCorpus c = GenerateSyntheticCorpus(Small());
  const auto vocab = text::Vocabulary::Build(c.train.AllReferences());
  std::vector<std::set<std::size_t>> chosen(c.train.records.size());
  for (std::size_t epoch = 0; epoch < 100; ++epoch) {
    BatchOptions bo;
    bo.batch_size = 8;
    bo.epoch = epoch;
    for (const Batch& b : MakeBatches(c.train, vocab, bo))
      for (std::size_t i = 0; i < b.size(); ++i) chosen[b.record_indices[i]].insert(b.reference_choice[i]);
  }
  for (const auto& s : chosen) CHECK(s.size() == kReferencesPerClip);
}

}  // namespace
}  // namespace capgan::corpus
