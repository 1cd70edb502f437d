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

#include "app/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "common/error.hpp"

namespace capgan::app {

namespace {

namespace pt = boost::property_tree;

const KeySpec& Spec(const std::string& key) {
  for (const KeySpec& s : ConfigSchema())
    if (s.key == key) return s;
  Fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
}

template <typename T>
T Convert(const std::string& key, const std::string& value, const char* what) {
  try {
    return boost::lexical_cast<T>(value);
  } catch (const boost::bad_lexical_cast&) {
    Fail(ErrorKind::kConfig, "config key '" + key + "' expects " + what + ", got '" + value + "'");
  }
}

bool ParseBool(const std::string& key, const std::string& value) {
  const std::string v = boost::to_lower_copy(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  Fail(ErrorKind::kConfig, "config key '" + key + "' expects true or false, got '" + value + "'");
}

void Validate(const KeySpec& spec, const std::string& value) {
  switch (spec.type) {
    case ValueType::kString:
      break;
    case ValueType::kSize:
    case ValueType::kSeed:
      Require(!value.empty() && value.find_first_not_of("0123456789") == std::string::npos, ErrorKind::kConfig,
              "config key '" + spec.key + "' expects a non-negative integer, got '" + value + "'");
      Convert<std::uint64_t>(spec.key, value, "a non-negative integer");
      break;
    case ValueType::kReal: {
      const double v = Convert<double>(spec.key, value, "a number");
      Require(std::isfinite(v), ErrorKind::kConfig, "config key '" + spec.key + "' must be finite");
      break;
    }
    case ValueType::kBool:
      ParseBool(spec.key, value);
      break;
  }
}

}  // namespace

const std::vector<KeySpec>& ConfigSchema() {
  using V = ValueType;
  static const std::vector<KeySpec> schema = {
      {"run.seed", V::kSeed, "0"},
      {"paths.data_dir", V::kString, ""},
      {"paths.run_dir", V::kString, ""},
      {"paths.import_dir", V::kString, ""},
      {"paths.generator", V::kString, ""},
      {"paths.discriminator", V::kString, ""},
      {"paths.semantic", V::kString, ""},
      {"paths.captions", V::kString, ""},
      {"paths.report_dir", V::kString, ""},
      {"data.synthetic", V::kBool, "true"},
      {"data.clips", V::kSize, "60"},
      {"data.classes", V::kSize, "4"},
      {"data.feat_dim", V::kSize, "64"},
      {"data.min_count", V::kSize, "1"},
      {"data.split", V::kString, "eval"},
      {"model.d_model", V::kSize, "128"},
      {"model.layers", V::kSize, "2"},
      {"model.heads", V::kSize, "4"},
      {"model.ff_dim", V::kSize, "256"},
      {"model.noise_dim", V::kSize, "64"},
      {"model.max_length", V::kSize, std::to_string(text::kDefaultMaxLength)},
      {"model.conv_kernel", V::kSize, "3"},
      {"model.dropout", V::kReal, "0.1"},
      {"model.d_embed_dim", V::kSize, "64"},
      {"model.d_hidden_dim", V::kSize, "128"},
      {"model.se_conv_channels", V::kSize, "64"},
      {"model.se_word_dim", V::kSize, "64"},
      {"model.se_embed_dim", V::kSize, "128"},
      {"train.lambda", V::kReal, "0.5"},
      {"train.lambda_sweep", V::kString, ""},
      {"train.ablation", V::kString, "none"},
      {"train.mle_epochs", V::kSize, "25"},
      {"train.d_pretrain_epochs", V::kSize, "5"},
      {"train.se_pretrain_epochs", V::kSize, "25"},
      {"train.adversarial_epochs", V::kSize, "30"},
      {"train.batch_size", V::kSize, "32"},
      {"train.learning_rate", V::kReal, "0.0001"},
      {"train.d_learning_rate", V::kReal, "0"},
      {"train.se_margin", V::kReal, "0.2"},
      {"train.normalize_cider", V::kBool, "false"},
      {"train.eval_every", V::kSize, "1"},
      {"train.eval_beam", V::kSize, "5"},
      {"decode.mode", V::kString, "gan"},
      {"decode.n", V::kSize, "5"},
      {"decode.beam_size", V::kSize, "5"},
      {"report.per_clip_csv", V::kBool, "false"},
  };
  return schema;
}

RunConfig::RunConfig() {
  for (const KeySpec& s : ConfigSchema()) values_[s.key] = s.default_value;
}

void RunConfig::LoadIni(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    Fail(ErrorKind::kConfig, "cannot parse config " + path + ": " + e.message() + " (line " +
                                 std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    Require(!body.empty(), ErrorKind::kConfig, "config " + path + ": key '" + section + "' outside a section");
    for (const auto& [name, value] : body) Set(section + "." + name, value.data());
  }
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  const std::string v = boost::trim_copy(value);
  Validate(Spec(key), v);
  values_[key] = v;
}

const std::string& RunConfig::Get(const std::string& key) const {
  Spec(key);
  return values_.at(key);
}

std::size_t RunConfig::GetSize(const std::string& key) const {
  return Convert<std::size_t>(key, Get(key), "a non-negative integer");
}

double RunConfig::GetReal(const std::string& key) const { return Convert<double>(key, Get(key), "a number"); }

bool RunConfig::GetBool(const std::string& key) const { return ParseBool(key, Get(key)); }

std::uint64_t RunConfig::GetSeed(const std::string& key) const {
  return Convert<std::uint64_t>(key, Get(key), "a non-negative integer");
}

std::string RunConfig::ToIni() const {
  pt::ptree tree;
  for (const KeySpec& s : ConfigSchema()) tree.put(pt::ptree::path_type(s.key, '.'), values_.at(s.key));
  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

void RunConfig::WriteIni(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorKind::kIo, "cannot write " + path);
  out << ToIni();
}

std::vector<std::string> RunConfig::Diff(const RunConfig& other) const {
  std::vector<std::string> keys;
  for (const KeySpec& s : ConfigSchema())
    if (values_.at(s.key) != other.values_.at(s.key)) keys.push_back(s.key);
  return keys;
}

training::TrainConfig ToTrainConfig(const RunConfig& c) {
  training::TrainConfig t;
  t.lambda = c.GetReal("train.lambda");
  Require(t.lambda >= 0.0 && t.lambda <= 1.0, ErrorKind::kConfig, "train.lambda must lie in [0, 1]");
  t.ablation = training::ParseAblation(c.Get("train.ablation"));
  t.mle_epochs = c.GetSize("train.mle_epochs");
  t.d_pretrain_epochs = c.GetSize("train.d_pretrain_epochs");
  t.se_pretrain_epochs = c.GetSize("train.se_pretrain_epochs");
  t.adversarial_epochs = c.GetSize("train.adversarial_epochs");
  t.batch_size = c.GetSize("train.batch_size");
  Require(t.batch_size >= 1, ErrorKind::kConfig, "train.batch_size must be at least 1");
  t.learning_rate = c.GetReal("train.learning_rate");
  t.d_learning_rate = c.GetReal("train.d_learning_rate");
  Require(t.learning_rate > 0.0 && t.d_learning_rate >= 0.0, ErrorKind::kConfig,
          "learning rates must be positive (d_learning_rate 0 means learning_rate)");
  t.seed = c.GetSeed("run.seed");
  t.normalize_cider = c.GetBool("train.normalize_cider");
  t.se_margin = c.GetReal("train.se_margin");
  t.eval_every = c.GetSize("train.eval_every");
  t.eval_beam = c.GetSize("train.eval_beam");
  return t;
}

models::GeneratorConfig ToGeneratorConfig(const RunConfig& c, std::size_t vocab_size, std::size_t feat_dim) {
  models::GeneratorConfig g;
  g.vocab_size = vocab_size;
  g.feat_dim = feat_dim;
  g.d_model = c.GetSize("model.d_model");
  g.layers = c.GetSize("model.layers");
  g.heads = c.GetSize("model.heads");
  g.ff_dim = c.GetSize("model.ff_dim");
  g.noise_dim = c.GetSize("model.noise_dim");
  g.max_length = c.GetSize("model.max_length");
  g.conv_kernel = c.GetSize("model.conv_kernel");
  g.dropout = c.GetReal("model.dropout");
  Require(g.dropout >= 0.0 && g.dropout < 1.0, ErrorKind::kConfig, "model.dropout must lie in [0, 1)");
  return g;
}

models::DiscriminatorConfig ToDiscriminatorConfig(const RunConfig& c, std::size_t vocab_size) {
  return {vocab_size, c.GetSize("model.d_embed_dim"), c.GetSize("model.d_hidden_dim")};
}

models::SemanticConfig ToSemanticConfig(const RunConfig& c, std::size_t vocab_size, std::size_t feat_dim) {
  return {vocab_size, feat_dim, c.GetSize("model.se_conv_channels"), c.GetSize("model.se_word_dim"),
          c.GetSize("model.se_embed_dim")};
}

std::vector<double> ParseLambdaList(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<double> out;
  for (std::string& p : parts) {
    boost::trim(p);
    const double v = Convert<double>("train.lambda_sweep", p, "comma-separated numbers");
    Require(v >= 0.0 && v <= 1.0, ErrorKind::kConfig, "lambda values must lie in [0, 1], got " + p);
    out.push_back(v);
  }
  return out;
}

}  // namespace capgan::app
