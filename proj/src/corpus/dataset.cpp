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

#include "corpus/dataset.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>

#include <json.hpp>

#include "common/binary_io.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"

namespace capgan::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr char kFeatureMagic[8] = {'D', 'C', 'F', 'E', 'A', 'T', '0', '1'};
}

std::vector<text::Words> DatasetSplit::AllReferences() const {
  std::vector<text::Words> out;
  out.reserve(records.size() * kReferencesPerClip);
  for (const ClipRecord& r : records)
    for (const text::Words& ref : r.references) out.push_back(ref);
  return out;
}

void ValidateRecord(const ClipRecord& record) {
  const std::string who = "clip '" + record.clip_id + "': ";
  Require(!record.clip_id.empty(), ErrorKind::kLoad, "clip with empty clip_id");
  Require(record.features.rank() == 2 && record.frames() >= 1, ErrorKind::kLoad, who + "feature matrix is empty");
  Require(record.frames() <= kMaxFrames, ErrorKind::kLoad,
          who + "too many frames (" + std::to_string(record.frames()) + " > " + std::to_string(kMaxFrames) + ")");
  Require(record.features.AllFinite(), ErrorKind::kLoad, who + "non-finite feature value");
  for (const text::Words& ref : record.references) Require(!ref.empty(), ErrorKind::kLoad, who + "empty reference");
}

void ValidateSplit(const DatasetSplit& split) {
  std::set<std::string> seen;
  for (const ClipRecord& r : split.records) {
    ValidateRecord(r);
    Require(seen.insert(r.clip_id).second, ErrorKind::kLoad, "duplicate clip_id '" + r.clip_id + "'");
    Require(r.feat_dim() == split.feat_dim(), ErrorKind::kLoad,
            "clip '" + r.clip_id + "': feature dimension differs from the rest of the split");
  }
}

void WriteFeatureFile(const std::string& path, const Tensor& features) {
  Require(features.rank() == 2, ErrorKind::kContract, "feature tensor must be [frames x feat_dim]");
  io::ByteWriter w;
  w.Bytes(kFeatureMagic, sizeof(kFeatureMagic));
  w.U32(static_cast<std::uint32_t>(features.rows()));
  w.U32(static_cast<std::uint32_t>(features.cols()));
  for (double v : features.data()) w.F32(static_cast<float>(v));
  w.WriteFile(path);
}

Tensor ReadFeatureFile(const std::string& path) {
  io::ByteReader r(io::ReadFile(path), path);
  char magic[8];
  r.Bytes(magic, sizeof(magic));
  Require(std::memcmp(magic, kFeatureMagic, sizeof(magic)) == 0, ErrorKind::kLoad, path + ": bad feature-file magic");
  const std::uint32_t frames = r.U32();
  const std::uint32_t dim = r.U32();
  Require(frames >= 1 && dim >= 1, ErrorKind::kLoad, path + ": empty feature matrix");
  Require(r.remaining() == static_cast<std::size_t>(frames) * dim * 4, ErrorKind::kLoad,
          path + ": payload size does not match header");
  std::vector<double> data(static_cast<std::size_t>(frames) * dim);
  for (double& v : data) v = r.F32();
  return Tensor({frames, dim}, std::move(data));
}

DatasetSplit LoadDataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  Require(static_cast<bool>(in), ErrorKind::kNotFound, "cannot open manifest " + manifest_path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    Fail(ErrorKind::kLoad, manifest_path + ": " + e.what());
  }
  Require(doc.is_array(), ErrorKind::kLoad, manifest_path + ": manifest must be a JSON array");
  const fs::path base = fs::path(manifest_path).parent_path();
  DatasetSplit split;
  split.name = fs::path(manifest_path).stem().string();
  for (const json& item : doc) {
    Require(item.is_object() && item.contains("clip_id") && item["clip_id"].is_string(), ErrorKind::kLoad,
            manifest_path + ": entry without a string clip_id");
    ClipRecord rec;
    rec.clip_id = item["clip_id"].get<std::string>();
    const std::string who = "clip '" + rec.clip_id + "': ";
    Require(item.contains("feature_file") && item["feature_file"].is_string(), ErrorKind::kLoad,
            who + "missing feature_file");
    Require(item.contains("captions") && item["captions"].is_array(), ErrorKind::kLoad, who + "missing captions");
    const json& caps = item["captions"];
    Require(caps.size() == kReferencesPerClip, ErrorKind::kLoad,
            who + "expected 5 captions, found " + std::to_string(caps.size()));
    for (std::size_t i = 0; i < kReferencesPerClip; ++i) {
      Require(caps[i].is_string(), ErrorKind::kLoad, who + "caption is not a string");
      try {
        rec.references[i] = text::NormalizeAndTokenize(caps[i].get<std::string>());
      } catch (const Error& e) {
        Fail(ErrorKind::kLoad, who + e.what());
      }
    }
    const fs::path feat = base / item["feature_file"].get<std::string>();
    Require(fs::exists(feat), ErrorKind::kLoad, who + "missing feature file " + feat.string());
    try {
      rec.features = ReadFeatureFile(feat.string());
    } catch (const Error& e) {
      Fail(ErrorKind::kLoad, who + e.what());
    }
    split.records.push_back(std::move(rec));
  }
  ValidateSplit(split);
  return split;
}

void SaveDataset(const DatasetSplit& split, const std::string& manifest_path, const std::string& feature_subdir) {
  ValidateSplit(split);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::error_code ec;
  fs::create_directories(base / feature_subdir, ec);
  Require(!ec, ErrorKind::kIo, "cannot create " + (base / feature_subdir).string());
  json doc = json::array();
  for (const ClipRecord& r : split.records) {
    const std::string rel = feature_subdir + "/" + r.clip_id + ".dcfeat";
    WriteFeatureFile((base / rel).string(), r.features);
    json caps = json::array();
    for (const text::Words& ref : r.references) caps.push_back(text::JoinWords(ref));
    doc.push_back({{"clip_id", r.clip_id}, {"feature_file", rel}, {"captions", caps}});
  }
  io::WriteTextFile(manifest_path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Synthetic corpus.

namespace {

struct Lexicon {
  std::vector<std::string> subjects;
  std::vector<std::string> verbs;
  std::vector<std::string> adverbs;
  std::vector<std::string> places;
};

const std::vector<Lexicon>& BaseLexicons() {
  static const std::vector<Lexicon> kLexicons = {
      {{"the rain", "heavy rain", "light rain", "raindrops"},
       {"is falling", "falls", "is pouring down", "patters", "is dripping"},
       {"steadily", "softly", "heavily", "constantly"},
       {"on a tin roof", "on the window", "onto the pavement", "in the garden"}},
      {{"a dog", "a small dog", "the puppy", "a large dog"},
       {"barks", "is barking", "growls", "is whining", "yelps"},
       {"loudly", "repeatedly", "angrily", "nearby"},
       {"in the yard", "behind a fence", "near the house", "at a stranger"}},
      {{"an engine", "a motor", "the old truck", "a machine"},
       {"is running", "idles", "revs up", "hums", "rumbles"},
       {"loudly", "roughly", "continuously", "slowly"},
       {"in a garage", "on the street", "near the workshop", "outside the building"}},
      {{"birds", "a bird", "the sparrows", "several birds"},
       {"are chirping", "sing", "tweet", "are calling", "chirp"},
       {"happily", "brightly", "softly", "constantly"},
       {"in the trees", "in the forest", "at dawn", "near the river"}},
      {{"water", "a stream", "the river", "a small creek"},
       {"is flowing", "trickles", "splashes", "is rushing", "gurgles"},
       {"gently", "quickly", "steadily", "calmly"},
       {"over the rocks", "through the forest", "into a pond", "down the hill"}},
      {{"a crowd", "people", "the audience", "many voices"},
       {"are talking", "cheer", "murmur", "are clapping", "chatter"},
       {"loudly", "excitedly", "quietly", "together"},
       {"in a hall", "at a stadium", "in the square", "during a party"}},
      {{"cars", "the traffic", "a bus", "several vehicles"},
       {"pass by", "are driving", "honk", "rush past", "roar"},
       {"quickly", "noisily", "constantly", "slowly"},
       {"on the highway", "in the city", "on a wet road", "at an intersection"}},
      {{"a bell", "the church bells", "a small bell", "chimes"},
       {"rings", "is ringing", "tolls", "jingles", "sounds"},
       {"clearly", "slowly", "repeatedly", "softly"},
       {"in the distance", "in a tower", "at noon", "near the church"}},
      {{"the wind", "a strong wind", "a breeze", "gusts"},
       {"is blowing", "howls", "whistles", "rustles the leaves", "blows"},
       {"strongly", "gently", "constantly", "fiercely"},
       {"through the trees", "across the field", "outside the window", "over the hills"}},
      {{"footsteps", "a person", "someone", "a man"},
       {"walks", "is walking", "steps", "is stomping", "shuffles"},
       {"slowly", "quickly", "heavily", "quietly"},
       {"on a wooden floor", "on gravel", "down the hallway", "up the stairs"}},
      {{"a door", "the wooden door", "a gate", "the front door"},
       {"creaks", "slams shut", "opens", "is squeaking", "bangs"},
       {"loudly", "slowly", "suddenly", "repeatedly"},
       {"in an old house", "in the wind", "behind someone", "at the entrance"}},
      {{"a typist", "an office worker", "a clerk", "a writer"},
       {"types", "is typing", "clicks keys", "taps", "is writing"},
       {"quickly", "steadily", "rapidly", "quietly"},
       {"on a keyboard", "in an office", "on a laptop", "at a desk"}},
  };
  return kLexicons;
}

// Classes beyond the built-in lexicons reuse one of them with an invented
// subject noun, which keeps the captions class-identifying.
Lexicon LexiconForClass(std::size_t cls) {
  const auto& base = BaseLexicons();
  Lexicon lex = base[cls % base.size()];
  if (cls < base.size()) return lex;
  static const char* const kSyllables[] = {"ba", "ko", "ri", "tu", "me", "za", "lo", "fi"};
  std::string noun;
  for (std::size_t c = cls; c > 0; c /= 8) noun += kSyllables[c % 8];
  noun += "x";
  lex.subjects = {"a " + noun, "the " + noun, "a loud " + noun, "some " + noun + "s"};
  return lex;
}

template <typename T>
const T& Pick(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

text::Words SampleCaption(const Lexicon& lex, Rng& rng) {
  std::uniform_int_distribution<int> tmpl(0, 3);
  for (;;) {
    std::string s;
    switch (tmpl(rng)) {
      case 0:
        s = Pick(lex.subjects, rng) + " " + Pick(lex.verbs, rng) + " " + Pick(lex.adverbs, rng) + " " +
            Pick(lex.places, rng);
        break;
      case 1:
        s = "in the background " + Pick(lex.subjects, rng) + " " + Pick(lex.verbs, rng) + " " + Pick(lex.adverbs, rng);
        break;
      case 2:
        s = Pick(lex.subjects, rng) + " " + Pick(lex.verbs, rng) + " " + Pick(lex.adverbs, rng) + " and then " +
            Pick(lex.verbs, rng) + " " + Pick(lex.places, rng);
        break;
      default:
        s = Pick(lex.subjects, rng) + " " + Pick(lex.verbs, rng) + " " + Pick(lex.places, rng);
        break;
    }
    text::Words words = text::NormalizeAndTokenize(s);
    if (words.size() >= 6 && words.size() <= 14) return words;
  }
}

struct ClassPattern {
  std::vector<double> prototype;
  double period;
  double phase;
};

ClassPattern MakeClassPattern(std::uint64_t seed, std::size_t cls, std::size_t dim) {
  Rng rng = SubstreamRng(seed, "synthetic/class", cls);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  ClassPattern p;
  p.prototype.resize(dim);
  for (double& v : p.prototype) v = normal(rng);
  p.period = 6.0 + 10.0 * uni(rng);
  p.phase = 2.0 * std::numbers::pi * uni(rng);
  return p;
}

}  // namespace

SyntheticCorpus GenerateSyntheticCorpus(const SyntheticOptions& options) {
  Require(options.n_clips >= 10, ErrorKind::kContract, "synthetic corpus needs at least 10 clips");
  Require(options.n_classes >= 2, ErrorKind::kContract, "synthetic corpus needs at least 2 classes");
  Require(options.feat_dim >= 1, ErrorKind::kContract, "feat_dim must be positive");
  Require(options.min_frames >= 1 && options.min_frames <= options.max_frames && options.max_frames <= kMaxFrames,
          ErrorKind::kContract, "invalid frame range");

  std::vector<ClassPattern> patterns;
  std::vector<Lexicon> lexicons;
  for (std::size_t c = 0; c < options.n_classes; ++c) {
    patterns.push_back(MakeClassPattern(options.seed, c, options.feat_dim));
    lexicons.push_back(LexiconForClass(c));
  }

  SyntheticCorpus out;
  out.train.name = "train";
  out.eval.name = "eval";
  for (std::size_t i = 0; i < options.n_clips; ++i) {
    const std::size_t cls = i % options.n_classes;
    Rng rng = SubstreamRng(options.seed, "synthetic/clip", i);
    std::uniform_int_distribution<std::size_t> frames_dist(options.min_frames, options.max_frames);
    std::normal_distribution<double> noise(0.0, options.noise_std);
    const std::size_t frames = frames_dist(rng);
    const ClassPattern& p = patterns[cls];
    ClipRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "syn_%05zu", i);
    rec.clip_id = id;
    rec.features = Tensor({frames, options.feat_dim});
    for (std::size_t f = 0; f < frames; ++f) {
      const double envelope = 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(f) / p.period + p.phase);
      for (std::size_t d = 0; d < options.feat_dim; ++d) {
        // Stored as float32 on disk; round here so save/load is exact.
        rec.features.at(f, d) = static_cast<float>(p.prototype[d] * envelope + noise(rng));
      }
    }
    for (text::Words& ref : rec.references) ref = SampleCaption(lexicons[cls], rng);
    if (i % 5 == 4) {
      out.eval.records.push_back(std::move(rec));
      out.eval_classes.push_back(static_cast<int>(cls));
    } else {
      out.train.records.push_back(std::move(rec));
      out.train_classes.push_back(static_cast<int>(cls));
    }
  }
  return out;
}

}  // namespace capgan::corpus
