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

#include "common/error.hpp"
#include "test_util.hpp"
#include "text/vocabulary.hpp"

namespace capgan::text {
namespace {

TEST_CASE("normalization lowercases, keeps apostrophes and drops punctuation") {
  CHECK(NormalizeAndTokenize("A Dog's  BARK, loud!") == Words{"a", "dog's", "bark", "loud"});
  CHECK(NormalizeAndTokenize("rain-drops\tfall 2x") == Words{"raindrops", "fall", "2x"});
  CHECK(NormalizeAndTokenize("A man, walking!") == Words{"a", "man", "walking"});
  CHECK(NormalizeAndTokenize("  Rain -- falls. ") == Words{"rain", "falls"});
  CHECK_THROWS_AS(NormalizeAndTokenize("?!..."), Error);
  const Words once = NormalizeAndTokenize("The Man's DOG, barking.");
  CHECK(NormalizeAndTokenize(JoinWords(once)) == once);
}

TEST_CASE("vocabulary orders by count then lexicographically after the reserved ids") {
  const std::vector<Words> corpus{{"b", "a", "c"}, {"c", "b"}, {"c", "d"}};
  const Vocabulary v = Vocabulary::Build(corpus);
  CHECK(v.size() == 8);
  CHECK(v.Token(kPad) == "<pad>");
  CHECK(v.Token(kSos) == "<sos>");
  CHECK(v.Token(kEos) == "<eos>");
  CHECK(v.Token(kUnk) == "<unk>");
  CHECK(v.Id("c") == 4);
  CHECK(v.Id("b") == 5);
  CHECK(v.Id("a") == 6);
  CHECK(v.Id("d") == 7);
  CHECK(v.Id("zebra") == kUnk);
  CHECK_THROWS_AS(v.Token(8), Error);
  CHECK_THROWS_AS(Vocabulary::Build({}), Error);
}

TEST_CASE("vocabulary size counts the reserved ids") {
  CHECK(Vocabulary::Build({{"a", "b"}, {"a"}}).size() == 6);
  CHECK(Vocabulary::Build({{"a", "b"}, {"a"}}, 2).size() == 5);
}

TEST_CASE("min_count drops rare words") {
  const Vocabulary v = Vocabulary::Build({{"x", "x", "y"}}, 2);
  CHECK(v.Contains("x"));
  CHECK_FALSE(v.Contains("y"));
}

TEST_CASE("encode wraps and truncates, decode strips markers") {
  const Vocabulary v = Vocabulary::Build({{"a", "b"}});
  CHECK(v.Encode({"a", "b", "q"}) == TokenSeq{kSos, 4, 5, kUnk, kEos});
  CHECK(v.Encode({"a", "b", "a"}, 2) == TokenSeq{kSos, 4, 5, kEos});
  CHECK(v.Decode({kSos, 5, 4, kEos, kPad}) == Words{"b", "a"});
  CHECK(v.Decode(v.Encode({"b", "a"})) == Words{"b", "a"});
  CHECK_THROWS_AS(v.Decode({kSos, 99}), Error);
  CHECK(Vocabulary::Content({kSos, 5, kEos, kPad}) == TokenSeq{5});
}

TEST_CASE("vocabulary file stores one token per line and round-trips byte-identically") {
  testing::TempDir dir("vocab");
  const Vocabulary v = Vocabulary::Build({{"dog", "barks"}, {"dog", "runs"}});
  v.Save(dir / "v1.txt");
  CHECK(testing::Slurp(dir / "v1.txt") == "dog\nbarks\nruns\n");
  const Vocabulary back = Vocabulary::Load(dir / "v1.txt");
  CHECK(back == v);
  back.Save(dir / "v2.txt");
  CHECK(testing::Slurp(dir / "v1.txt") == testing::Slurp(dir / "v2.txt"));
}

}  // namespace
}  // namespace capgan::text
