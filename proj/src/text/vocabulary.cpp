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

#include "text/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "common/error.hpp"

namespace capgan::text {

namespace {
const char* const kReservedTokens[kNumReserved] = {"<pad>", "<sos>", "<eos>", "<unk>"};
}

Words NormalizeAndTokenize(std::string_view raw) {
  std::string cleaned;
  cleaned.reserve(raw.size());
  for (char ch : raw) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') {
      cleaned.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'') {
      cleaned.push_back(ch);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      cleaned.push_back(' ');
    }
  }
  Words words;
  std::istringstream is(cleaned);
  for (std::string w; is >> w;) words.push_back(std::move(w));
  Require(!words.empty(), ErrorKind::kDegenerate, "caption is empty after normalization: \"" + std::string(raw) + "\"");
  return words;
}

std::string JoinWords(const Words& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* t : kReservedTokens) Add(t);
}

void Vocabulary::Add(const std::string& token) {
  token_to_id_.emplace(token, static_cast<TokenId>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocabulary Vocabulary::Build(const std::vector<Words>& corpus, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const Words& words : corpus)
    for (const std::string& w : words) ++counts[w];
  Require(!counts.empty(), ErrorKind::kDegenerate, "cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [token, count] : counts)
    if (count >= min_count) kept.emplace_back(token, count);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [token, count] : kept) {
    if (!vocab.Contains(token)) vocab.Add(token);
  }
  return vocab;
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string>& tokens) {
  Vocabulary vocab;
  for (const std::string& t : tokens) {
    Require(!t.empty() && t.find_first_of(" \t\r\n") == std::string::npos, ErrorKind::kLoad,
            "invalid vocabulary token \"" + t + "\"");
    Require(!vocab.Contains(t), ErrorKind::kLoad, "duplicate vocabulary token \"" + t + "\"");
    vocab.Add(t);
  }
  return vocab;
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorKind::kNotFound, "cannot open vocabulary file " + path);
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return FromTokens(tokens);
}

void Vocabulary::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), ErrorKind::kIo, "cannot write vocabulary file " + path);
  for (std::size_t i = kNumReserved; i < id_to_token_.size(); ++i) out << id_to_token_[i] << '\n';
  Require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path);
}

TokenId Vocabulary::Id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::Token(TokenId id) const {
  Require(id >= 0 && static_cast<std::size_t>(id) < id_to_token_.size(), ErrorKind::kRange,
          "token id " + std::to_string(id) + " out of range for vocabulary of size " + std::to_string(size()));
  return id_to_token_[id];
}

TokenSeq Vocabulary::Encode(const Words& words, std::size_t max_length) const {
  TokenSeq ids;
  ids.reserve(std::min(words.size(), max_length) + 2);
  ids.push_back(kSos);
  for (std::size_t i = 0; i < words.size() && i < max_length; ++i) ids.push_back(Id(words[i]));
  ids.push_back(kEos);
  return ids;
}

Words Vocabulary::Decode(const TokenSeq& ids) const {
  Words words;
  for (TokenId id : ids) {
    const std::string& tok = Token(id);
    if (id == kPad || id == kSos || id == kEos) continue;
    words.push_back(tok);
  }
  return words;
}

TokenSeq Vocabulary::Content(const TokenSeq& ids) {
  TokenSeq out;
  for (TokenId id : ids)
    if (id != kPad && id != kSos && id != kEos) out.push_back(id);
  return out;
}

}  // namespace capgan::text
