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

#ifndef CAPGAN_TRAINING_OPTIMIZER_HPP_
#define CAPGAN_TRAINING_OPTIMIZER_HPP_

#include <cstddef>
#include <vector>

#include "models/nn.hpp"

namespace capgan::training {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam over one ParameterSet. Gradients accumulate in the parameters until
// ZeroGrad(); Step() reads them and leaves them in place. Updated values are
// rounded to float32 so checkpoints hold them exactly.
class Adam {
 public:
  Adam(models::ParameterSet& params, const AdamConfig& config);

  void ZeroGrad();
  void Step();
  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  models::ParameterSet* params_;
  AdamConfig config_;
  std::vector<Tensor> m_, v_;
  std::size_t steps_ = 0;
};

}  // namespace capgan::training

#endif  // CAPGAN_TRAINING_OPTIMIZER_HPP_
