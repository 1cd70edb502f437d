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

#ifndef CAPGAN_COMMON_RNG_HPP_
#define CAPGAN_COMMON_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace capgan {

using Rng = std::mt19937_64;

// 64-bit FNV-1a. Used for substream naming and config hashing.
std::uint64_t Fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Derives an independent generator from a root seed and a stream name, e.g.
// SubstreamRng(seed, "init/generator") or SubstreamRng(seed, "z", clip_index).
Rng SubstreamRng(std::uint64_t root_seed, std::string_view name, std::uint64_t index = 0);

}  // namespace capgan

#endif  // CAPGAN_COMMON_RNG_HPP_
