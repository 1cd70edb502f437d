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

#include "capgan.h"

#include <exception>
#include <string>

#include <json.hpp>

#include "app/commands.hpp"
#include "app/run_config.hpp"
#include "common/error.hpp"
#include "models/checkpoint.hpp"

struct capgan_config {
  capgan::app::RunConfig config;
  std::string scratch;
};

struct capgan_generator {
  capgan::models::Generator model;
  capgan::text::Vocabulary vocab;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_output;

capgan_status StatusOf(capgan::ErrorKind kind) {
  using capgan::ErrorKind;
  switch (kind) {
    case ErrorKind::kDimension: return CAPGAN_ERR_DIMENSION;
    case ErrorKind::kDomain: return CAPGAN_ERR_DOMAIN;
    case ErrorKind::kContract: return CAPGAN_ERR_CONTRACT;
    case ErrorKind::kDegenerate: return CAPGAN_ERR_DEGENERATE;
    case ErrorKind::kRange: return CAPGAN_ERR_RANGE;
    case ErrorKind::kLoad: return CAPGAN_ERR_LOAD;
    case ErrorKind::kIo: return CAPGAN_ERR_IO;
    case ErrorKind::kNumeric: return CAPGAN_ERR_NUMERIC;
    case ErrorKind::kConfig: return CAPGAN_ERR_CONFIG;
    case ErrorKind::kExists: return CAPGAN_ERR_EXISTS;
    case ErrorKind::kNotFound: return CAPGAN_ERR_NOT_FOUND;
  }
  return CAPGAN_ERR_INTERNAL;
}

// Runs body, mapping exceptions onto status codes and a one-line message.
template <typename F>
capgan_status Guard(F&& body) {
  try {
    body();
    g_error.clear();
    return CAPGAN_OK;
  } catch (const capgan::Error& e) {
    g_error = e.what();
    return StatusOf(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    g_error = e.what();
    return CAPGAN_ERR_IO;
  } catch (const std::exception& e) {
    g_error = e.what();
    return CAPGAN_ERR_INTERNAL;
  } catch (...) {
    g_error = "unknown failure";
    return CAPGAN_ERR_INTERNAL;
  }
}

void RequireArg(const void* p, const char* name) {
  capgan::Require(p != nullptr, capgan::ErrorKind::kContract, std::string(name) + " is NULL");
}

capgan::app::RunFlags Flags(unsigned flags, capgan_progress_fn progress, void* user) {
  capgan::app::RunFlags f;
  f.force = (flags & CAPGAN_FORCE) != 0;
  f.resume = (flags & CAPGAN_RESUME) != 0;
  if (progress != nullptr) f.progress = [progress, user](const std::string& line) { progress(line.c_str(), user); };
  return f;
}

using Command = std::string (*)(const capgan::app::RunConfig&, const capgan::app::RunFlags&);

capgan_status RunCommand(Command cmd, const capgan_config* config, unsigned flags, capgan_progress_fn progress,
                         void* user, const char** report) {
  return Guard([&] {
    RequireArg(config, "config");
    g_output = cmd(config->config, Flags(flags, progress, user));
    if (report != nullptr) *report = g_output.c_str();
  });
}

}  // namespace

extern "C" {

const char* capgan_version(void) { return "0.1.0"; }

const char* capgan_status_name(capgan_status status) {
  using capgan::ErrorKind;
  switch (status) {
    case CAPGAN_OK: return "ok";
    case CAPGAN_ERR_DIMENSION: return capgan::ErrorKindName(ErrorKind::kDimension);
    case CAPGAN_ERR_DOMAIN: return capgan::ErrorKindName(ErrorKind::kDomain);
    case CAPGAN_ERR_CONTRACT: return capgan::ErrorKindName(ErrorKind::kContract);
    case CAPGAN_ERR_DEGENERATE: return capgan::ErrorKindName(ErrorKind::kDegenerate);
    case CAPGAN_ERR_RANGE: return capgan::ErrorKindName(ErrorKind::kRange);
    case CAPGAN_ERR_LOAD: return capgan::ErrorKindName(ErrorKind::kLoad);
    case CAPGAN_ERR_IO: return capgan::ErrorKindName(ErrorKind::kIo);
    case CAPGAN_ERR_NUMERIC: return capgan::ErrorKindName(ErrorKind::kNumeric);
    case CAPGAN_ERR_CONFIG: return capgan::ErrorKindName(ErrorKind::kConfig);
    case CAPGAN_ERR_EXISTS: return capgan::ErrorKindName(ErrorKind::kExists);
    case CAPGAN_ERR_NOT_FOUND: return capgan::ErrorKindName(ErrorKind::kNotFound);
    case CAPGAN_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* capgan_last_error(void) { return g_error.c_str(); }

capgan_status capgan_config_new(capgan_config** out) {
  return Guard([&] {
    RequireArg(out, "out");
    *out = new capgan_config();
  });
}

void capgan_config_free(capgan_config* config) { delete config; }

capgan_status capgan_config_load(capgan_config* config, const char* ini_path) {
  return Guard([&] {
    RequireArg(config, "config");
    RequireArg(ini_path, "ini_path");
    capgan::Require(std::filesystem::is_regular_file(ini_path), capgan::ErrorKind::kNotFound,
                    std::string("missing config file: ") + ini_path);
    config->config.LoadIni(ini_path);
  });
}

capgan_status capgan_config_set(capgan_config* config, const char* key, const char* value) {
  return Guard([&] {
    RequireArg(config, "config");
    RequireArg(key, "key");
    RequireArg(value, "value");
    config->config.Set(key, value);
  });
}

capgan_status capgan_config_get(const capgan_config* config, const char* key, const char** value) {
  return Guard([&] {
    RequireArg(config, "config");
    RequireArg(key, "key");
    RequireArg(value, "value");
    g_output = config->config.Get(key);
    *value = g_output.c_str();
  });
}

capgan_status capgan_config_to_ini(const capgan_config* config, const char** text) {
  return Guard([&] {
    RequireArg(config, "config");
    RequireArg(text, "text");
    g_output = config->config.ToIni();
    *text = g_output.c_str();
  });
}

capgan_status capgan_prepare_data(const capgan_config* config, unsigned flags, const char** report) {
  return RunCommand(capgan::app::PrepareData, config, flags, nullptr, nullptr, report);
}

capgan_status capgan_pretrain(const capgan_config* config, unsigned flags, capgan_progress_fn progress, void* user,
                              const char** report) {
  return RunCommand(capgan::app::Pretrain, config, flags, progress, user, report);
}

capgan_status capgan_pretrain_d(const capgan_config* config, unsigned flags, capgan_progress_fn progress, void* user,
                                const char** report) {
  return RunCommand(capgan::app::PretrainD, config, flags, progress, user, report);
}

capgan_status capgan_pretrain_se(const capgan_config* config, unsigned flags, capgan_progress_fn progress, void* user,
                                 const char** report) {
  return RunCommand(capgan::app::PretrainSe, config, flags, progress, user, report);
}

capgan_status capgan_train_gan(const capgan_config* config, unsigned flags, capgan_progress_fn progress, void* user,
                               const char** report) {
  return RunCommand(capgan::app::TrainGan, config, flags, progress, user, report);
}

capgan_status capgan_generate(const capgan_config* config, unsigned flags, const char** report) {
  return RunCommand(capgan::app::Generate, config, flags, nullptr, nullptr, report);
}

capgan_status capgan_evaluate(const capgan_config* config, unsigned flags, const char** report) {
  return RunCommand(capgan::app::EvaluateCaptions, config, flags, nullptr, nullptr, report);
}

capgan_status capgan_generator_load(const char* checkpoint_path, const char* vocab_path, capgan_generator** out) {
  return Guard([&] {
    RequireArg(checkpoint_path, "checkpoint_path");
    RequireArg(vocab_path, "vocab_path");
    RequireArg(out, "out");
    auto model = capgan::models::LoadModel<capgan::models::Generator>(checkpoint_path);
    auto vocab = capgan::text::Vocabulary::Load(vocab_path);
    capgan::Require(vocab.size() == model.config().vocab_size, capgan::ErrorKind::kLoad,
                    "vocabulary size does not match the generator checkpoint");
    *out = new capgan_generator{std::move(model), std::move(vocab)};
  });
}

void capgan_generator_free(capgan_generator* generator) { delete generator; }

capgan_status capgan_generator_caption(const capgan_generator* generator, const float* features, size_t frames,
                                       size_t feat_dim, const char* mode, size_t n, size_t beam_size, uint64_t seed,
                                       const char* clip_id, const char** captions_json) {
  return Guard([&] {
    RequireArg(generator, "generator");
    RequireArg(features, "features");
    RequireArg(mode, "mode");
    RequireArg(clip_id, "clip_id");
    RequireArg(captions_json, "captions_json");
    const std::string m = mode;
    capgan::Require(m == "mle" || m == "gan", capgan::ErrorKind::kConfig, "mode must be mle or gan");
    capgan::Tensor f({frames, feat_dim});
    for (size_t i = 0; i < frames * feat_dim; ++i) f[i] = features[i];
    const auto set = capgan::decoding::GenerateDiverseSet(
        generator->model, f, m == "mle" ? capgan::decoding::DiverseMode::kMle : capgan::decoding::DiverseMode::kGan,
        n, beam_size, seed, clip_id);
    nlohmann::ordered_json j;
    j["captions"] = nlohmann::json::array();
    j["scores"] = nlohmann::json::array();
    for (const auto& h : set.captions) {
      j["captions"].push_back(capgan::text::JoinWords(generator->vocab.Decode(h.ids)));
      j["scores"].push_back(h.score);
    }
    g_output = j.dump();
    *captions_json = g_output.c_str();
  });
}

}  // extern "C"
