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

/* C interface to the capgan captioning library. Every call returns a status
 * code; on failure capgan_last_error() holds a one-line message for the
 * calling thread. Strings returned through out-parameters stay valid until
 * the next call on the same thread. */

#ifndef CAPGAN_H_
#define CAPGAN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CAPGAN_API __declspec(dllexport)
#else
#define CAPGAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum capgan_status {
  CAPGAN_OK = 0,
  CAPGAN_ERR_DIMENSION = 1,
  CAPGAN_ERR_DOMAIN = 2,
  CAPGAN_ERR_CONTRACT = 3,
  CAPGAN_ERR_DEGENERATE = 4,
  CAPGAN_ERR_RANGE = 5,
  CAPGAN_ERR_LOAD = 6,
  CAPGAN_ERR_IO = 7,
  CAPGAN_ERR_NUMERIC = 8,
  CAPGAN_ERR_CONFIG = 9,
  CAPGAN_ERR_EXISTS = 10,
  CAPGAN_ERR_NOT_FOUND = 11,
  CAPGAN_ERR_INTERNAL = 12
} capgan_status;

/* Command flags. */
#define CAPGAN_FORCE 1u
#define CAPGAN_RESUME 2u

typedef struct capgan_config capgan_config;
typedef struct capgan_generator capgan_generator;

typedef void (*capgan_progress_fn)(const char* line, void* user);

CAPGAN_API const char* capgan_version(void);
/* Short category name ("config", "not-found", ...) used on error lines. */
CAPGAN_API const char* capgan_status_name(capgan_status status);
CAPGAN_API const char* capgan_last_error(void);

/* Run configuration: defaults, then an INI file, then individual keys. Keys
 * are "section.name"; unknown keys fail with CAPGAN_ERR_CONFIG. */
CAPGAN_API capgan_status capgan_config_new(capgan_config** out);
CAPGAN_API void capgan_config_free(capgan_config* config);
CAPGAN_API capgan_status capgan_config_load(capgan_config* config, const char* ini_path);
CAPGAN_API capgan_status capgan_config_set(capgan_config* config, const char* key, const char* value);
CAPGAN_API capgan_status capgan_config_get(const capgan_config* config, const char* key, const char** value);
CAPGAN_API capgan_status capgan_config_to_ini(const capgan_config* config, const char** text);

/* Pipeline commands. *report receives the text the command prints; pass
 * NULL to ignore it. progress may be NULL. */
CAPGAN_API capgan_status capgan_prepare_data(const capgan_config* config, unsigned flags, const char** report);
CAPGAN_API capgan_status capgan_pretrain(const capgan_config* config, unsigned flags, capgan_progress_fn progress,
                                         void* user, const char** report);
CAPGAN_API capgan_status capgan_pretrain_d(const capgan_config* config, unsigned flags, capgan_progress_fn progress,
                                           void* user, const char** report);
CAPGAN_API capgan_status capgan_pretrain_se(const capgan_config* config, unsigned flags, capgan_progress_fn progress,
                                            void* user, const char** report);
CAPGAN_API capgan_status capgan_train_gan(const capgan_config* config, unsigned flags, capgan_progress_fn progress,
                                          void* user, const char** report);
CAPGAN_API capgan_status capgan_generate(const capgan_config* config, unsigned flags, const char** report);
CAPGAN_API capgan_status capgan_evaluate(const capgan_config* config, unsigned flags, const char** report);

/* A loaded generator for captioning feature matrices directly. */
CAPGAN_API capgan_status capgan_generator_load(const char* checkpoint_path, const char* vocab_path,
                                               capgan_generator** out);
CAPGAN_API void capgan_generator_free(capgan_generator* generator);
/* features: frames x feat_dim row-major floats. mode: "mle" or "gan".
 * *captions_json receives {"captions": [...], "scores": [...]}. */
CAPGAN_API capgan_status capgan_generator_caption(const capgan_generator* generator, const float* features,
                                                  size_t frames, size_t feat_dim, const char* mode, size_t n,
                                                  size_t beam_size, uint64_t seed, const char* clip_id,
                                                  const char** captions_json);

#ifdef __cplusplus
}
#endif

#endif /* CAPGAN_H_ */
