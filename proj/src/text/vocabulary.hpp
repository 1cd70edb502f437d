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

#ifndef CAPGAN_TEXT_VOCABULARY_HPP_
#define CAPGAN_TEXT_VOCABULARY_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace capgan::text {

using TokenId = int;
using Words = std::vector<std::string>;
// Token ids of one caption. Generated and encoded sequences start with kSos
// and end with kEos unless truncated at the length cap.
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kSos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kNumReserved = 4;
// Content tokens per caption, excluding markers.
inline constexpr std::size_t kDefaultMaxLength = 22;

// Lowercases, keeps [a-z0-9'] and spaces, deletes everything else, then
// splits on whitespace. Throws kDegenerate when nothing is left.
Words NormalizeAndTokenize(std::string_view raw);

std::string JoinWords(const Words& words);

class Vocabulary {
 public:
  // Tokens with count >= min_count, ordered by count desc then lexicographic.
  static Vocabulary Build(const std::vector<Words>& corpus, std::size_t min_count = 1);
  // One token per line; line i gets id kNumReserved + i.
  static Vocabulary Load(const std::string& path);
  static Vocabulary FromTokens(const std::vector<std::string>& tokens);

  void Save(const std::string& path) const;

  std::size_t size() const { return id_to_token_.size(); }
  TokenId Id(const std::string& token) const;  // kUnk when absent
  bool Contains(const std::string& token) const { return token_to_id_.count(token) > 0; }
  const std::string& Token(TokenId id) const;  // kRange when out of range

  // Content words -> <sos> ids <eos>, truncated to max_length content tokens.
  TokenSeq Encode(const Words& words, std::size_t max_length = kDefaultMaxLength) const;
  // Ids -> words with pad/sos/eos markers removed; unk decodes to "<unk>".
  Words Decode(const TokenSeq& ids) const;

  // Content ids only (markers stripped).
  static TokenSeq Content(const TokenSeq& ids);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.id_to_token_ == b.id_to_token_; }

 private:
  Vocabulary();
  void Add(const std::string& token);

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

}  // namespace capgan::text

#endif  // CAPGAN_TEXT_VOCABULARY_HPP_
