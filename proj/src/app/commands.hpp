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

#ifndef CAPGAN_APP_COMMANDS_HPP_
#define CAPGAN_APP_COMMANDS_HPP_

#include <cstdint>
#include <functional>
#include <string>

#include "app/run_config.hpp"
#include "corpus/dataset.hpp"
#include "decoding/decode.hpp"
#include "metrics/report.hpp"
#include "models/generator.hpp"

namespace capgan::app {

struct RunFlags {
  bool force = false;   // replace existing outputs
  bool resume = false;  // continue a stage from its last checkpoint
  std::function<void(const std::string&)> progress;
};

// Each command returns the text it reports on stdout.
std::string PrepareData(const RunConfig& config, const RunFlags& flags);
std::string Pretrain(const RunConfig& config, const RunFlags& flags);
std::string PretrainD(const RunConfig& config, const RunFlags& flags);
std::string PretrainSe(const RunConfig& config, const RunFlags& flags);
std::string TrainGan(const RunConfig& config, const RunFlags& flags);
std::string Generate(const RunConfig& config, const RunFlags& flags);
std::string EvaluateCaptions(const RunConfig& config, const RunFlags& flags);

// Stage outputs live under paths.run_dir: mle/, discriminator/, semantic/,
// gan/<GanRunName>/.
std::string StageDir(const RunConfig& config, const std::string& stage);
std::string GanRunName(double lambda, training::Ablation ablation);

// n captions per clip under one generation protocol, scored against the
// split's references.
metrics::MetricReport EvaluateGenerator(const models::Generator& g, const corpus::DatasetSplit& split,
                                        const text::Vocabulary& vocab, decoding::DiverseMode mode, std::size_t n,
                                        std::size_t beam_size, std::uint64_t seed);

}  // namespace capgan::app

#endif  // CAPGAN_APP_COMMANDS_HPP_
