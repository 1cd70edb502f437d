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

#include "app/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/tokenizer.hpp>
#include <json.hpp>

#include "common/error.hpp"
#include "decoding/captions.hpp"
#include "models/checkpoint.hpp"

namespace capgan::app {

namespace fs = std::filesystem;

namespace {

std::string Join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorKind::kIo, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(out.good(), ErrorKind::kIo, "cannot write " + path);
  out << text;
}

std::string RequirePath(const RunConfig& c, const std::string& key, const std::string& flag) {
  const std::string& p = c.Get(key);
  Require(!p.empty(), ErrorKind::kConfig, key + " is not set (use " + flag + ")");
  return p;
}

void RequireFile(const std::string& path, const std::string& what) {
  Require(fs::is_regular_file(path), ErrorKind::kNotFound, "missing " + what + ": " + path);
}

struct Corpus {
  corpus::DatasetSplit train;
  corpus::DatasetSplit eval;
  text::Vocabulary vocab;
};

Corpus LoadCorpus(const RunConfig& c) {
  const fs::path dir = RequirePath(c, "paths.data_dir", "--data");
  for (const char* f : {"train.json", "eval.json", "vocab.txt"})
    RequireFile(Join(dir, f), "prepared corpus file (run prepare-data first)");
  return {corpus::LoadDataset(Join(dir, "train.json")), corpus::LoadDataset(Join(dir, "eval.json")),
          text::Vocabulary::Load(Join(dir, "vocab.txt"))};
}

corpus::DatasetSplit LoadSplit(const RunConfig& c) {
  const std::string split = c.Get("data.split");
  Require(split == "train" || split == "eval", ErrorKind::kConfig, "data.split must be train or eval");
  const std::string path = Join(RequirePath(c, "paths.data_dir", "--data"), split + ".json");
  RequireFile(path, "split manifest");
  return corpus::LoadDataset(path);
}

// Output file guard shared by generate and evaluate.
void GuardOutput(const std::string& path, const RunFlags& f) {
  Require(f.force || !fs::exists(path), ErrorKind::kExists, path + " exists; pass --force to overwrite");
}

void TruncateLogs(const fs::path& dir, std::size_t last_epoch) {
  const std::string log_path = Join(dir, "train_log.jsonl");
  if (fs::exists(log_path)) {
    std::istringstream in(ReadText(log_path));
    std::string kept;
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      if (nlohmann::json::parse(line).at("epoch").get<std::size_t>() <= last_epoch) kept += line + "\n";
    }
    WriteText(log_path, kept);
  }
  const std::string csv_path = Join(dir, "rewards.csv");
  if (fs::exists(csv_path)) {
    std::istringstream in(ReadText(csv_path));
    std::string kept, line;
    std::getline(in, line);
    kept = line + "\n";
    while (std::getline(in, line))
      if (!line.empty() && std::stoul(line.substr(0, line.find(','))) <= last_epoch) kept += line + "\n";
    WriteText(csv_path, kept);
  }
}

bool IsEpochKey(const std::string& key) { return boost::starts_with(key, "train.") && boost::ends_with(key, "_epochs"); }

// Creates or reopens a stage directory and records the config. Returns the
// last completed epoch (0 for a fresh run).
std::size_t OpenStage(const fs::path& dir, const RunConfig& c, const RunFlags& f, const std::string& epoch_ckpt) {
  std::size_t start = 0;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (f.resume) {
      const std::string prev_path = Join(dir, "config.ini");
      RequireFile(prev_path, "config of the run to resume");
      RunConfig prev;
      prev.LoadIni(prev_path);
      std::vector<std::string> changed;
      for (const std::string& k : prev.Diff(c))
        if (!IsEpochKey(k)) changed.push_back(k);
      Require(changed.empty(), ErrorKind::kConfig,
              "cannot resume " + dir.string() + ": config differs in " + boost::join(changed, ", "));
      if (fs::exists(Join(dir, epoch_ckpt))) start = models::ReadCheckpoint(Join(dir, epoch_ckpt)).meta.epoch;
      TruncateLogs(dir, start);
    } else {
      Require(f.force, ErrorKind::kExists,
              dir.string() + " already exists; pass --force to overwrite or --resume to continue");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
  c.WriteIni(Join(dir, "config.ini"));
  return start;
}

training::StageIo Io(const fs::path& dir, std::size_t start, const RunFlags& f) {
  training::StageIo io;
  io.run_dir = dir.string();
  io.start_epoch = start;
  io.progress = f.progress;
  return io;
}

std::string LastRecord(const training::TrainLog& log) {
  return log.records().empty() ? std::string("(no epochs run)") : log.records().back().dump();
}

void WriteReport(const fs::path& dir, const metrics::MetricReport& report, bool per_clip_csv) {
  WriteText(Join(dir, "report.json"), metrics::ReportToJson(report).dump(2) + "\n");
  WriteText(Join(dir, "report.txt"), metrics::ReportToText(report));
  if (per_clip_csv) WriteText(Join(dir, "per_clip.csv"), metrics::ReportToCsv(report));
}

std::string FormatLambda(double lambda) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), lambda == static_cast<int>(lambda) ? "%.1f" : "%g", lambda);
  return buf;
}

std::string CheckpointArg(const RunConfig& c, const std::string& key, const std::string& fallback,
                          const std::string& what) {
  const std::string path = c.Get(key).empty() ? fallback : c.Get(key);
  RequireFile(path, what + " checkpoint");
  return path;
}

// --- import ---------------------------------------------------------------

corpus::DatasetSplit ImportSplit(const fs::path& root, const std::string& name) {
  const std::string csv = Join(root, name + ".csv");
  RequireFile(csv, "import caption table");
  std::istringstream in(ReadText(csv));
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::string line;
  Require(static_cast<bool>(std::getline(in, line)), ErrorKind::kLoad, csv + ": empty file");
  boost::trim_right_if(line, boost::is_any_of("\r"));
  const std::vector<std::string> header(Tokenizer(line).begin(), Tokenizer(line).end());
  Require(!header.empty() && header[0] == "file_name", ErrorKind::kLoad,
          csv + ": header must start with file_name followed by caption_1..caption_5");
  corpus::DatasetSplit split;
  split.name = name;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    boost::trim_right_if(line, boost::is_any_of("\r"));
    if (line.empty()) continue;
    std::vector<std::string> cells;
    try {
      Tokenizer tok(line);
      cells.assign(tok.begin(), tok.end());
    } catch (const boost::escaped_list_error& e) {
      Fail(ErrorKind::kLoad, csv + ":" + std::to_string(line_no) + ": " + e.what());
    }
    corpus::ClipRecord rec;
    rec.clip_id = fs::path(cells.at(0)).stem().string();
    std::vector<std::string> captions;
    for (std::size_t i = 1; i < cells.size(); ++i)
      if (!boost::trim_copy(cells[i]).empty()) captions.push_back(cells[i]);
    Require(captions.size() == corpus::kReferencesPerClip, ErrorKind::kLoad,
            csv + ":" + std::to_string(line_no) + ": clip '" + cells[0] + "': expected 5 captions, found " + std::to_string(captions.size()));
    for (std::size_t k = 0; k < captions.size(); ++k) {
      try {
        rec.references[k] = text::NormalizeAndTokenize(captions[k]);
      } catch (const Error& e) {
        Fail(ErrorKind::kLoad, csv + ":" + std::to_string(line_no) + ": clip '" + cells[0] + "': caption " + std::to_string(k + 1) + ": " + e.what());
      }
    }
    const std::string feat = Join(root / "features", rec.clip_id + ".dcfeat");
    Require(fs::is_regular_file(feat), ErrorKind::kLoad, "clip '" + rec.clip_id + "': missing feature file " + feat);
    rec.features = corpus::ReadFeatureFile(feat);
    corpus::ValidateRecord(rec);
    split.records.push_back(std::move(rec));
  }
  corpus::ValidateSplit(split);
  return split;
}

}  // namespace

std::string StageDir(const RunConfig& config, const std::string& stage) {
  return Join(RequirePath(config, "paths.run_dir", "--run-dir"), stage);
}

std::string GanRunName(double lambda, training::Ablation ablation) {
  if (ablation != training::Ablation::kNone) return "ablation_" + training::AblationName(ablation);
  return "lambda_" + FormatLambda(lambda);
}

metrics::MetricReport EvaluateGenerator(const models::Generator& g, const corpus::DatasetSplit& split,
                                        const text::Vocabulary& vocab, decoding::DiverseMode mode, std::size_t n,
                                        std::size_t beam_size, std::uint64_t seed) {
  std::vector<metrics::ClipCaptions> clips;
  for (const auto& rec : split.records) {
    const auto set = decoding::GenerateDiverseSet(g, rec.features, mode, n, beam_size, seed, rec.clip_id);
    metrics::ClipCaptions c;
    c.clip_id = rec.clip_id;
    for (const auto& h : set.captions) c.generated.push_back(vocab.Decode(h.ids));
    c.references.assign(rec.references.begin(), rec.references.end());
    clips.push_back(std::move(c));
  }
  return metrics::Evaluate(clips);
}

std::string PrepareData(const RunConfig& c, const RunFlags& f) {
  const fs::path out = RequirePath(c, "paths.data_dir", "--out");
  if (fs::exists(out) && !fs::is_empty(out)) {
    Require(f.force, ErrorKind::kExists, out.string() + " already exists; pass --force to overwrite");
    fs::remove_all(out);
  }
  corpus::DatasetSplit train, eval;
  std::string source;
  if (!c.Get("paths.import_dir").empty()) {
    const fs::path root = c.Get("paths.import_dir");
    Require(fs::is_directory(root), ErrorKind::kNotFound, "missing import directory: " + root.string());
    train = ImportSplit(root, "train");
    eval = ImportSplit(root, "eval");
    Require(train.feat_dim() == eval.feat_dim(), ErrorKind::kLoad, "train and eval feature dimensions differ");
    source = "import " + root.string();
  } else {
    Require(c.GetBool("data.synthetic"), ErrorKind::kConfig, "prepare-data needs --synthetic or --import");
    corpus::SyntheticOptions o;
    o.seed = c.GetSeed("run.seed");
    o.n_clips = c.GetSize("data.clips");
    o.n_classes = c.GetSize("data.classes");
    o.feat_dim = c.GetSize("data.feat_dim");
    auto corpus = corpus::GenerateSyntheticCorpus(o);
    train = std::move(corpus.train);
    eval = std::move(corpus.eval);
    source = "synthetic seed " + c.Get("run.seed");
  }
  fs::create_directories(out);
  corpus::SaveDataset(train, Join(out, "train.json"));
  corpus::SaveDataset(eval, Join(out, "eval.json"));
  const text::Vocabulary vocab = text::Vocabulary::Build(train.AllReferences(), c.GetSize("data.min_count"));
  vocab.Save(Join(out, "vocab.txt"));
  c.WriteIni(Join(out, "config.ini"));

  auto stats = [](const corpus::DatasetSplit& s) {
    std::size_t words = 0, frames = 0;
    for (const auto& r : s.records) {
      frames += r.frames();
      for (const auto& ref : r.references) words += ref.size();
    }
    const double n = static_cast<double>(std::max<std::size_t>(s.records.size(), 1));
    return nlohmann::ordered_json{{"clips", s.records.size()},
                                  {"mean_frames", static_cast<double>(frames) / n},
                                  {"mean_caption_words", static_cast<double>(words) / (5.0 * n)}};
  };
  nlohmann::ordered_json j;
  j["source"] = source;
  j["feat_dim"] = train.feat_dim();
  j["vocab_size"] = vocab.size();
  j["train"] = stats(train);
  j["eval"] = stats(eval);
  WriteText(Join(out, "stats.json"), j.dump(2) + "\n");
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "corpus %s (%s)\n  train clips %zu, eval clips %zu, feat_dim %zu, vocab size %zu\n"
                "  mean caption words %.2f (train), mean frames %.1f (train)\n",
                out.string().c_str(), source.c_str(), train.records.size(), eval.records.size(), train.feat_dim(),
                vocab.size(), j["train"]["mean_caption_words"].get<double>(), j["train"]["mean_frames"].get<double>());
  return buf;
}

std::string Pretrain(const RunConfig& c, const RunFlags& f) {
  Corpus corp = LoadCorpus(c);
  const fs::path dir = StageDir(c, "mle");
  const std::size_t start = OpenStage(dir, c, f, "generator_final.ckpt");
  const training::TrainConfig cfg = ToTrainConfig(c);
  Rng init = SubstreamRng(cfg.seed, "init/generator");
  models::Generator g = start > 0 ? models::LoadModel<models::Generator>(Join(dir, "generator_final.ckpt"))
                                  : models::Generator(ToGeneratorConfig(c, corp.vocab.size(), corp.train.feat_dim()), init);
  const auto log = training::MlePretrain(g, {&corp.train, &corp.eval, &corp.vocab}, cfg, Io(dir, start, f));
  const auto report = EvaluateGenerator(g, corp.eval, corp.vocab, decoding::DiverseMode::kMle, c.GetSize("decode.n"),
                                        c.GetSize("decode.beam_size"), cfg.seed);
  WriteReport(dir, report, c.GetBool("report.per_clip_csv"));
  return "mle: " + LastRecord(log) + "\ncheckpoint " + Join(dir, "generator_final.ckpt") +
         "\neval split, MLE protocol:\n" + metrics::ReportToText(report);
}

std::string PretrainD(const RunConfig& c, const RunFlags& f) {
  Corpus corp = LoadCorpus(c);
  const std::string gpath =
      CheckpointArg(c, "paths.generator", Join(StageDir(c, "mle"), "generator_final.ckpt"), "generator");
  const fs::path dir = StageDir(c, "discriminator");
  const std::size_t start = OpenStage(dir, c, f, "discriminator.ckpt");
  const training::TrainConfig cfg = ToTrainConfig(c);
  const auto g = models::LoadModel<models::Generator>(gpath);
  Rng init = SubstreamRng(cfg.seed, "init/discriminator");
  models::Discriminator d = start > 0 ? models::LoadModel<models::Discriminator>(Join(dir, "discriminator.ckpt"))
                                      : models::Discriminator(ToDiscriminatorConfig(c, corp.vocab.size()), init);
  const auto log = training::PretrainDiscriminator(d, g, {&corp.train, &corp.eval, &corp.vocab}, cfg, Io(dir, start, f));
  return "discriminator: " + LastRecord(log) + "\ncheckpoint " + Join(dir, "discriminator.ckpt") + "\n";
}

std::string PretrainSe(const RunConfig& c, const RunFlags& f) {
  Corpus corp = LoadCorpus(c);
  const fs::path dir = StageDir(c, "semantic");
  const std::size_t start = OpenStage(dir, c, f, "semantic.ckpt");
  const training::TrainConfig cfg = ToTrainConfig(c);
  Rng init = SubstreamRng(cfg.seed, "init/semantic");
  models::SemanticEvaluator se =
      start > 0 ? models::LoadModel<models::SemanticEvaluator>(Join(dir, "semantic.ckpt"))
                : models::SemanticEvaluator(ToSemanticConfig(c, corp.vocab.size(), corp.train.feat_dim()), init);
  const auto log = training::PretrainSemantic(se, {&corp.train, &corp.eval, &corp.vocab}, cfg, Io(dir, start, f));
  return "semantic: " + LastRecord(log) + "\ncheckpoint " + Join(dir, "semantic.ckpt") + "\n";
}

std::string TrainGan(const RunConfig& c, const RunFlags& f) {
  Corpus corp = LoadCorpus(c);
  const std::string gpath =
      CheckpointArg(c, "paths.generator", Join(StageDir(c, "mle"), "generator_final.ckpt"), "generator");
  const std::string dpath = CheckpointArg(c, "paths.discriminator",
                                          Join(StageDir(c, "discriminator"), "discriminator.ckpt"), "discriminator");
  const std::string spath =
      CheckpointArg(c, "paths.semantic", Join(StageDir(c, "semantic"), "semantic.ckpt"), "semantic evaluator");
  const std::vector<double> lambdas = c.Get("train.lambda_sweep").empty()
                                          ? std::vector<double>{c.GetReal("train.lambda")}
                                          : ParseLambdaList(c.Get("train.lambda_sweep"));
  const training::Ablation ablation = training::ParseAblation(c.Get("train.ablation"));
  Require(ablation == training::Ablation::kNone || lambdas.size() == 1, ErrorKind::kConfig,
          "an ablation fixes lambda; it cannot be combined with a lambda sweep");
  const auto se = models::LoadModel<models::SemanticEvaluator>(spath);
  std::string out;
  for (double lambda : lambdas) {
    RunConfig rc = c;
    rc.Set("train.lambda", FormatLambda(lambda));
    rc.Set("train.lambda_sweep", "");
    const fs::path dir = Join(StageDir(c, "gan"), GanRunName(lambda, ablation));
    const std::size_t start = OpenStage(dir, rc, f, "generator_last.ckpt");
    const training::TrainConfig cfg = ToTrainConfig(rc);
    auto g = models::LoadModel<models::Generator>(start > 0 ? Join(dir, "generator_last.ckpt") : gpath);
    auto d = models::LoadModel<models::Discriminator>(start > 0 ? Join(dir, "discriminator_last.ckpt") : dpath);
    const auto log = training::AdversarialTrain(g, d, se, {&corp.train, &corp.eval, &corp.vocab}, cfg, Io(dir, start, f));
    const auto report = EvaluateGenerator(g, corp.eval, corp.vocab, decoding::DiverseMode::kGan,
                                          c.GetSize("decode.n"), c.GetSize("decode.beam_size"), cfg.seed);
    WriteReport(dir, report, c.GetBool("report.per_clip_csv"));
    out += dir.string() + ": " + LastRecord(log) + "\n";
    const training::RewardOptions ro = cfg.reward_options();
    if (!ro.uses_discriminator() && !ro.uses_semantic()) {
      const std::string note = "conventional RL mode (lambda 0): discriminator and semantic evaluator never queried";
      WriteText(Join(dir, "run.log"), note + "\n");
      out += "  " + note + "\n";
    }
    out += metrics::ReportToText(report);
  }
  return out;
}

std::string Generate(const RunConfig& c, const RunFlags& f) {
  const std::string out = RequirePath(c, "paths.captions", "--out");
  GuardOutput(out, f);
  const std::string& mode_name = c.Get("decode.mode");
  Require(mode_name == "mle" || mode_name == "gan" || mode_name == "references", ErrorKind::kConfig,
          "decode.mode must be mle, gan or references");
  const corpus::DatasetSplit split = LoadSplit(c);
  std::vector<decoding::CaptionRecord> records;
  if (mode_name == "references") {
    // The split's own references as a caption file; a sanity baseline for evaluate.
    for (const auto& rec : split.records) {
      decoding::CaptionRecord cr;
      cr.clip_id = rec.clip_id;
      for (const auto& ref : rec.references) {
        cr.captions.push_back(text::JoinWords(ref));
        cr.scores.push_back(0.0);
      }
      records.push_back(std::move(cr));
    }
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    decoding::WriteCaptionFile(out, records);
    c.WriteIni(out + ".config.ini");
    return "wrote " + std::to_string(records.size()) + " clips (references) to " + out + "\n";
  }
  const std::string gpath = RequirePath(c, "paths.generator", "--checkpoint");
  RequireFile(gpath, "generator checkpoint");
  const auto mode = mode_name == "mle" ? decoding::DiverseMode::kMle : decoding::DiverseMode::kGan;
  const text::Vocabulary vocab = text::Vocabulary::Load(Join(c.Get("paths.data_dir"), "vocab.txt"));
  const auto g = models::LoadModel<models::Generator>(gpath);
  const std::size_t n = c.GetSize("decode.n"), beam = c.GetSize("decode.beam_size");
  const std::uint64_t seed = c.GetSeed("run.seed");
  std::size_t short_sets = 0;
  for (const auto& rec : split.records) {
    const auto set = decoding::GenerateDiverseSet(g, rec.features, mode, n, beam, seed, rec.clip_id);
    decoding::CaptionRecord cr;
    cr.clip_id = rec.clip_id;
    for (const auto& h : set.captions) {
      cr.captions.push_back(text::JoinWords(vocab.Decode(h.ids)));
      cr.scores.push_back(h.score);
    }
    short_sets += set.short_of_n;
    records.push_back(std::move(cr));
  }
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  decoding::WriteCaptionFile(out, records);
  c.WriteIni(out + ".config.ini");
  std::string msg = "wrote " + std::to_string(records.size()) + " clips (" + mode_name + " mode, n " +
                    std::to_string(n) + ") to " + out + "\n";
  if (short_sets > 0) msg += "  " + std::to_string(short_sets) + " clips had fewer than n distinct beam captions\n";
  return msg;
}

std::string EvaluateCaptions(const RunConfig& c, const RunFlags& f) {
  const std::string cap_path = RequirePath(c, "paths.captions", "--captions");
  RequireFile(cap_path, "caption file");
  const corpus::DatasetSplit split = LoadSplit(c);
  const auto records = decoding::ReadCaptionFile(cap_path);
  std::map<std::string, const decoding::CaptionRecord*> by_id;
  for (const auto& r : records) {
    Require(by_id.emplace(r.clip_id, &r).second, ErrorKind::kLoad, cap_path + ": duplicate clip id " + r.clip_id);
  }
  std::vector<std::string> missing, unknown;
  std::set<std::string> split_ids;
  for (const auto& rec : split.records) {
    split_ids.insert(rec.clip_id);
    if (!by_id.count(rec.clip_id)) missing.push_back(rec.clip_id);
  }
  for (const auto& r : records)
    if (!split_ids.count(r.clip_id)) unknown.push_back(r.clip_id);
  if (!missing.empty() || !unknown.empty()) {
    std::string msg = "caption/reference clip ids differ;";
    if (!missing.empty()) msg += " missing captions for: " + boost::join(missing, ", ") + ";";
    if (!unknown.empty()) msg += " not in the " + split.name + " split: " + boost::join(unknown, ", ") + ";";
    Fail(ErrorKind::kNotFound, msg);
  }
  std::vector<metrics::ClipCaptions> clips;
  for (const auto& rec : split.records) {
    metrics::ClipCaptions cc;
    cc.clip_id = rec.clip_id;
    for (const std::string& s : by_id.at(rec.clip_id)->captions)
      cc.generated.push_back(boost::trim_copy(s).empty() ? text::Words{} : text::NormalizeAndTokenize(s));
    cc.references.assign(rec.references.begin(), rec.references.end());
    clips.push_back(std::move(cc));
  }
  const auto report = metrics::Evaluate(clips);
  const fs::path cap(cap_path);
  const fs::path dir = c.Get("paths.report_dir").empty() ? cap.parent_path() / (cap.stem().string() + "_report")
                                                         : fs::path(c.Get("paths.report_dir"));
  GuardOutput(Join(dir, "report.json"), f);
  fs::create_directories(dir);
  WriteReport(dir, report, c.GetBool("report.per_clip_csv"));
  c.WriteIni(Join(dir, "config.ini"));
  return metrics::ReportToText(report);
}

}  // namespace capgan::app
