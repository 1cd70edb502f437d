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

// capgan command-line front end. Talks to the library only through capgan.h.

#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "capgan.h"

namespace {

// Flag values destined for config keys; only options actually given on the
// command line are applied, so they override the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option*, std::string>> bound;

  CLI::Option* Add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    CLI::Option* opt = app->add_option(flag, values[key], help);
    bound.emplace_back(opt, key);
    return opt;
  }
  CLI::Option* AddFlag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, help);
    bound.emplace_back(opt, key);
    values[key] = "true";
    return opt;
  }
};

int Report(capgan_status status) {
  if (status == CAPGAN_OK) return 0;
  std::string msg = capgan_last_error();
  for (char& ch : msg)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::fprintf(stderr, "error: %s: %s\n", capgan_status_name(status), msg.c_str());
  return static_cast<int>(status);
}

void PrintProgress(const char* line, void* user) {
  if (user == nullptr) std::fprintf(stderr, "%s\n", line);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capgan: conditional-GAN audio captioning"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", capgan_version());

  std::string config_path;
  std::vector<std::string> sets;
  bool force = false, resume = false, quiet = false;
  Overrides ov;
  app.add_option("--config", config_path, "INI config file (flags override it)")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "override any config key: section.key=value");
  app.add_flag("--force", force, "overwrite existing outputs");
  app.add_flag("--resume", resume, "continue a stage from its last checkpoint");
  app.add_flag("--quiet", quiet, "no per-epoch progress on stderr");
  ov.Add(&app, "--seed", "run.seed", "root seed for every random substream");

  auto* prep = app.add_subcommand("prepare-data", "write a corpus (manifests, features, vocabulary)");
  ov.AddFlag(prep, "--synthetic", "data.synthetic", "generate the synthetic corpus");
  ov.Add(prep, "--import", "paths.import_dir", "directory with train.csv, eval.csv and features/");
  ov.Add(prep, "--out", "paths.data_dir", "output corpus directory");
  ov.Add(prep, "--clips", "data.clips", "synthetic clip count");
  ov.Add(prep, "--classes", "data.classes", "synthetic sound classes");
  ov.Add(prep, "--feat-dim", "data.feat_dim", "synthetic feature dimension");

  std::map<std::string, CLI::App*> stages;
  stages["pretrain"] = app.add_subcommand("pretrain", "MLE pretraining of the generator");
  stages["pretrain-d"] = app.add_subcommand("pretrain-d", "discriminator pretraining against the MLE generator");
  stages["pretrain-se"] = app.add_subcommand("pretrain-se", "semantic evaluator pretraining");
  stages["train-gan"] = app.add_subcommand("train-gan", "adversarial SCST training");
  const std::map<std::string, std::string> epoch_key = {{"pretrain", "train.mle_epochs"},
                                                        {"pretrain-d", "train.d_pretrain_epochs"},
                                                        {"pretrain-se", "train.se_pretrain_epochs"},
                                                        {"train-gan", "train.adversarial_epochs"}};
  std::map<std::string, std::string> epochs;
  for (auto& [name, sub] : stages) {
    ov.Add(sub, "--data", "paths.data_dir", "prepared corpus directory");
    ov.Add(sub, "--run-dir", "paths.run_dir", "experiment directory");
    ov.Add(sub, "--batch-size", "train.batch_size", "clips per batch");
    ov.Add(sub, "--lr", "train.learning_rate", "Adam learning rate");
    sub->add_option("--epochs", epochs[name], "epochs for this stage");
  }
  for (const char* s : {"pretrain-d", "train-gan"})
    ov.Add(stages[s], "--generator", "paths.generator", "generator checkpoint (default: <run-dir>/mle)");
  ov.Add(stages["pretrain-d"], "--d-lr", "train.d_learning_rate", "discriminator learning rate");
  auto* gan = stages["train-gan"];
  ov.Add(gan, "--discriminator", "paths.discriminator", "discriminator checkpoint");
  ov.Add(gan, "--semantic", "paths.semantic", "semantic evaluator checkpoint");
  ov.Add(gan, "--lambda", "train.lambda", "reward mix between n + s and CIDEr");
  ov.Add(gan, "--lambda-sweep", "train.lambda_sweep", "comma-separated lambdas, one run directory each");
  ov.Add(gan, "--ablation", "train.ablation", "nd | se | le");
  ov.Add(gan, "--d-lr", "train.d_learning_rate", "discriminator learning rate");

  auto* gen = app.add_subcommand("generate", "caption a split");
  ov.Add(gen, "--data", "paths.data_dir", "prepared corpus directory");
  ov.Add(gen, "--checkpoint", "paths.generator", "generator checkpoint");
  ov.Add(gen, "--out", "paths.captions", "output caption file (JSON lines)");
  ov.Add(gen, "--mode", "decode.mode", "mle | gan | references");
  ov.Add(gen, "--n", "decode.n", "captions per clip");
  ov.Add(gen, "--beam", "decode.beam_size", "beam size");
  ov.Add(gen, "--split", "data.split", "train | eval");

  auto* ev = app.add_subcommand("evaluate", "score a caption file");
  ov.Add(ev, "--data", "paths.data_dir", "prepared corpus directory");
  ov.Add(ev, "--captions", "paths.captions", "caption file");
  ov.Add(ev, "--out", "paths.report_dir", "report directory (default: <captions stem>_report)");
  ov.Add(ev, "--split", "data.split", "train | eval");
  ov.AddFlag(ev, "--per-clip-csv", "report.per_clip_csv", "also write per_clip.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::fprintf(stderr, "error: usage: %s\n", msg.c_str());
    return 64;
  }

  capgan_config* cfg = nullptr;
  if (int rc = Report(capgan_config_new(&cfg))) return rc;
  auto apply = [&]() -> capgan_status {
    if (!config_path.empty())
      if (capgan_status s = capgan_config_load(cfg, config_path.c_str())) return s;
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      const std::string key = kv.substr(0, eq), value = eq == std::string::npos ? "" : kv.substr(eq + 1);
      if (capgan_status s = capgan_config_set(cfg, key.c_str(), value.c_str())) return s;
    }
    for (const auto& [opt, key] : ov.bound)
      if (opt->count() > 0)
        if (capgan_status s = capgan_config_set(cfg, key.c_str(), ov.values[key].c_str())) return s;
    for (const auto& [name, sub] : stages)
      if (sub->parsed() && !epochs[name].empty())
        if (capgan_status s = capgan_config_set(cfg, epoch_key.at(name).c_str(), epochs[name].c_str())) return s;
    if (prep->parsed() && prep->get_option("--import")->count() > 0)
      return capgan_config_set(cfg, "data.synthetic", "false");
    return CAPGAN_OK;
  };
  capgan_status status = apply();
  const unsigned flags = (force ? CAPGAN_FORCE : 0u) | (resume ? CAPGAN_RESUME : 0u);
  void* progress_user = quiet ? reinterpret_cast<void*>(1) : nullptr;
  const char* out = nullptr;
  if (status == CAPGAN_OK) {
    if (prep->parsed()) status = capgan_prepare_data(cfg, flags, &out);
    else if (stages["pretrain"]->parsed()) status = capgan_pretrain(cfg, flags, PrintProgress, progress_user, &out);
    else if (stages["pretrain-d"]->parsed()) status = capgan_pretrain_d(cfg, flags, PrintProgress, progress_user, &out);
    else if (stages["pretrain-se"]->parsed()) status = capgan_pretrain_se(cfg, flags, PrintProgress, progress_user, &out);
    else if (gan->parsed()) status = capgan_train_gan(cfg, flags, PrintProgress, progress_user, &out);
    else if (gen->parsed()) status = capgan_generate(cfg, flags, &out);
    else if (ev->parsed()) status = capgan_evaluate(cfg, flags, &out);
  }
  if (status == CAPGAN_OK && out != nullptr) std::fputs(out, stdout);
  const int rc = Report(status);
  capgan_config_free(cfg);
  return rc;
}
