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

#include "training/scst.hpp"

#include "common/error.hpp"

namespace capgan::training {

ag::Var ScstSurrogate(ag::Var log_probs, double advantage) { return ag::scale(ag::sum(log_probs), -advantage); }

ag::Var SequenceLogProbs(ag::Tape& t, const models::Generator& g, const Tensor& features,
                         std::span<const double> z, const decoding::Hypothesis& hyp) {
  Require(hyp.ids.size() >= 2 && hyp.ids.front() == text::kSos, ErrorKind::kContract,
          "hypothesis must start with <sos> and contain a generated token");
  const text::TokenSeq inputs(hyp.ids.begin(), hyp.ids.end() - 1);
  const std::vector<int> targets(hyp.ids.begin() + 1, hyp.ids.end());
  ag::Var logits = g.Forward(t, features, z, inputs);
  logits = ag::add(logits, t.Constant(decoding::OutputMask(logits.rows(), logits.cols())));
  return ag::pick(ag::log_softmax(logits), targets);
}

}  // namespace capgan::training
