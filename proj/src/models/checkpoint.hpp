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

#ifndef CAPGAN_MODELS_CHECKPOINT_HPP_
#define CAPGAN_MODELS_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "models/nn.hpp"

namespace capgan::models {

inline constexpr char kCheckpointMagic[8] = {'D', 'C', 'C', 'K', 'P', 'T', '0', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint32_t epoch = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

struct CheckpointEntry {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::string kind;
  CheckpointMeta meta;
  nlohmann::json hparams;  // model config, used to rebuild the network
  std::vector<CheckpointEntry> entries;
};

std::vector<unsigned char> SerializeCheckpoint(const Checkpoint& ckpt);
// kLoad on bad magic, unknown version, truncation or trailing bytes.
Checkpoint ParseCheckpoint(std::vector<unsigned char> bytes, const std::string& source);

void WriteCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint ReadCheckpoint(const std::string& path);

std::uint64_t ConfigHash(const nlohmann::json& hparams);

Checkpoint CaptureParameters(const std::string& kind, const ParameterSet& ps, const nlohmann::json& hparams,
                             const CheckpointMeta& meta);
// All-or-nothing: names and shapes are checked before any value is copied.
void RestoreParameters(const Checkpoint& ckpt, ParameterSet& ps);

template <typename Model>
Checkpoint Capture(const Model& model, const CheckpointMeta& meta) {
  nlohmann::json hparams = model.config();
  CheckpointMeta m = meta;
  m.config_hash = ConfigHash(hparams);
  return CaptureParameters(Model::kKind, model.params(), hparams, m);
}

template <typename Model>
void SaveModel(const std::string& path, const Model& model, const CheckpointMeta& meta) {
  WriteCheckpoint(path, Capture(model, meta));
}

// Rebuilds the model from the stored config and restores its values.
// kLoad when the checkpoint holds a different model kind.
template <typename Model>
Model LoadModel(const std::string& path, CheckpointMeta* meta = nullptr) {
  Checkpoint ckpt = ReadCheckpoint(path);
  Require(ckpt.kind == Model::kKind, ErrorKind::kLoad,
          path + ": checkpoint holds a '" + ckpt.kind + "', expected '" + Model::kKind + "'");
  typename Model::Config config;
  try {
    config = ckpt.hparams.get<typename Model::Config>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kLoad, path + ": bad model config: " + e.what());
  }
  Rng rng(0);
  Model model(config, rng);
  RestoreParameters(ckpt, model.params());
  if (meta) *meta = ckpt.meta;
  return model;
}

}  // namespace capgan::models

#endif  // CAPGAN_MODELS_CHECKPOINT_HPP_
