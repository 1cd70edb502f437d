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

// Three-armed bandit trained with the sequence-level SCST update: one sampled
// arm, the greedy arm as baseline, Adam on the logits.

#ifndef CAPGAN_TESTS_BANDIT_HPP_
#define CAPGAN_TESTS_BANDIT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

#include "common/rng.hpp"
#include "decoding/decode.hpp"
#include "models/nn.hpp"
#include "training/optimizer.hpp"
#include "training/scst.hpp"

namespace capgan::testing {

inline constexpr std::array<double, 3> kBanditRewards{1.0, 0.2, 0.0};
// Starts with the worst arm most likely and the best arm least likely.
inline constexpr std::array<double, 3> kBanditInit{-0.5, 0.5, 1.0};

struct BanditResult {
  std::size_t first_step = 0;  // first step with P(best) > 0.9; 0 if never
  double final_p = 0.0;
};

inline std::array<double, 3> BanditProbs(const Tensor& logits) {
  const double m = std::max({logits[0], logits[1], logits[2]});
  std::array<double, 3> p{};
  double z = 0.0;
  for (int i = 0; i < 3; ++i) z += p[i] = std::exp(logits[i] - m);
  for (double& v : p) v /= z;
  return p;
}

inline BanditResult RunScstBandit(std::uint64_t seed, std::size_t steps = 500, double lr = 0.05) {
  models::ParameterSet ps;
  const std::size_t idx = ps.Add("logits", Tensor::Matrix(1, 3, {kBanditInit[0], kBanditInit[1], kBanditInit[2]}));
  training::Adam opt(ps, {lr});
  Rng rng = SubstreamRng(seed, "bandit");
  BanditResult result;
  for (std::size_t step = 1; step <= steps; ++step) {
    const Tensor& logits = ps[idx].value;
    const auto p = BanditProbs(logits);
    const std::size_t arm = decoding::DrawCategorical(p, rng);
    const std::size_t greedy = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const double advantage = kBanditRewards[arm] - kBanditRewards[greedy];
    if (advantage != 0.0) {
      opt.ZeroGrad();
      ag::Tape t;
      const int a = static_cast<int>(arm);
      const ag::Var lp = ag::pick(ag::log_softmax(t.Param(ps[idx])), std::span<const int>(&a, 1));
      t.Backward(training::ScstSurrogate(lp, advantage));
      opt.Step();
    }
    result.final_p = BanditProbs(ps[idx].value)[0];
    if (result.first_step == 0 && result.final_p > 0.9) result.first_step = step;
  }
  return result;
}

}  // namespace capgan::testing

#endif  // CAPGAN_TESTS_BANDIT_HPP_
