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

#ifndef CAPGAN_TRAINING_SCST_HPP_
#define CAPGAN_TRAINING_SCST_HPP_

#include <span>

#include "decoding/decode.hpp"
#include "models/generator.hpp"
#include "tensor/autograd.hpp"

namespace capgan::training {

// -advantage * sum(log_probs). log_probs holds log pi(w_t) for the taken
// tokens; the advantage r(w) - r(w_hat) is a constant, so gradient flows only
// through the log-probabilities.
ag::Var ScstSurrogate(ag::Var log_probs, double advantage);

// Teacher-forced log pi(w_t) of every generated token of hyp, [T] on the
// tape. Uses the same output mask as decoding, so the values equal the
// log-probs recorded while sampling.
ag::Var SequenceLogProbs(ag::Tape& t, const models::Generator& g, const Tensor& features,
                         std::span<const double> z, const decoding::Hypothesis& hyp);

}  // namespace capgan::training

#endif  // CAPGAN_TRAINING_SCST_HPP_
