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

#ifndef CAPGAN_APP_RUN_CONFIG_HPP_
#define CAPGAN_APP_RUN_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "models/discriminator.hpp"
#include "models/generator.hpp"
#include "models/semantic.hpp"
#include "training/trainer.hpp"

namespace capgan::app {

enum class ValueType { kString, kSize, kReal, kBool, kSeed };

struct KeySpec {
  std::string key;  // "section.name"
  ValueType type;
  std::string default_value;
};

// Every recognised key with its default, in file order.
const std::vector<KeySpec>& ConfigSchema();

// Flat section.key -> value map over ConfigSchema(). Values are validated on
// every write; unknown keys are rejected with kConfig.
class RunConfig {
 public:
  RunConfig();

  // INI file ([section] / key = value). Later sources win, so load the file
  // first and apply command-line values after it.
  void LoadIni(const std::string& path);
  void Set(const std::string& key, const std::string& value);

  const std::string& Get(const std::string& key) const;
  std::size_t GetSize(const std::string& key) const;
  double GetReal(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  std::uint64_t GetSeed(const std::string& key) const;

  std::string ToIni() const;
  void WriteIni(const std::string& path) const;

  // Keys whose values differ, in schema order.
  std::vector<std::string> Diff(const RunConfig& other) const;

 private:
  std::map<std::string, std::string> values_;
};

training::TrainConfig ToTrainConfig(const RunConfig& c);
models::GeneratorConfig ToGeneratorConfig(const RunConfig& c, std::size_t vocab_size, std::size_t feat_dim);
models::DiscriminatorConfig ToDiscriminatorConfig(const RunConfig& c, std::size_t vocab_size);
models::SemanticConfig ToSemanticConfig(const RunConfig& c, std::size_t vocab_size, std::size_t feat_dim);

// "1.0,0.7,0.5" -> {1.0, 0.7, 0.5}; each value in [0, 1].
std::vector<double> ParseLambdaList(const std::string& text);

}  // namespace capgan::app

#endif  // CAPGAN_APP_RUN_CONFIG_HPP_
