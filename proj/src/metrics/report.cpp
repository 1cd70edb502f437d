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

#include "metrics/report.hpp"

#include <cstdio>

#include "common/error.hpp"

namespace capgan::metrics {

MetricReport Evaluate(const std::vector<ClipCaptions>& clips) {
  Require(!clips.empty(), ErrorKind::kContract, "nothing to evaluate");
  const std::size_t n = clips.front().generated.size();
  Require(n >= 1, ErrorKind::kContract, "clip " + clips.front().clip_id + " has no generated captions");
  std::vector<ReferenceSet> refs;
  std::vector<std::vector<Words>> sets;
  for (const ClipCaptions& c : clips) {
    Require(c.generated.size() == n, ErrorKind::kContract,
            "clip " + c.clip_id + " has " + std::to_string(c.generated.size()) + " captions, expected " +
                std::to_string(n));
    refs.push_back(c.references);
    sets.push_back(c.generated);
  }
  const DocFreqTable df = DocFreqTable::Build(refs);

  MetricReport r;
  r.n_clips = clips.size();
  r.captions_per_clip = n;
  std::vector<std::vector<double>> cider_by_rank(n, std::vector<double>(clips.size()));
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<Words> cands;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      cands.push_back(clips[i].generated[k]);
      cider_by_rank[k][i] = Cider(clips[i].generated[k], refs[i], df);
    }
    double cider = 0.0;
    for (double v : cider_by_rank[k]) cider += v;
    cider /= static_cast<double>(clips.size());
    for (int o = 1; o <= kMaxOrder; ++o) {
      const double b = Bleu(cands, refs, o);
      if (k == 0) r.top1.bleu[o - 1] = b;
      r.mean5.bleu[o - 1] += b / static_cast<double>(n);
    }
    if (k == 0) r.top1.cider = cider;
    r.mean5.cider += cider / static_cast<double>(n);
  }

  std::vector<Words> firsts, all;
  for (const auto& s : sets) {
    firsts.push_back(s.front());
    all.insert(all.end(), s.begin(), s.end());
  }
  r.top1.vocab_size = VocabSize(firsts);
  r.mean5.vocab_size = VocabSize(all);
  const double mb = n >= 2 ? MBleu(sets) : 0.0;
  const double d1 = DivN(sets, 1);
  const double d2 = DivN(sets, 2);
  for (MetricRow* row : {&r.top1, &r.mean5}) {
    row->mbleu_4 = mb;
    row->div_1 = d1;
    row->div_2 = d2;
  }

  for (std::size_t i = 0; i < clips.size(); ++i) {
    ClipMetrics m;
    m.clip_id = clips[i].clip_id;
    m.bleu_4_top1 = SentenceBleu(sets[i].front(), refs[i], 4);
    m.cider_top1 = cider_by_rank[0][i];
    for (std::size_t k = 0; k < n; ++k) m.cider_mean += cider_by_rank[k][i] / static_cast<double>(n);
    m.mbleu_4 = n >= 2 ? MBleuSet(sets[i]) : 0.0;
    m.div_1 = DivNSet(sets[i], 1);
    m.div_2 = DivNSet(sets[i], 2);
    r.per_clip.push_back(std::move(m));
  }
  return r;
}

namespace {

// Column order follows the results table.
nlohmann::ordered_json RowOrdered(const MetricRow& row) {
  nlohmann::ordered_json j;
  j["BLEU_4"] = row.bleu[3];
  j["CIDEr"] = row.cider;
  j["SPIDEr"] = nullptr;
  j["vocab_size"] = row.vocab_size;
  j["mBLEU_4"] = row.mbleu_4;
  j["div_1"] = row.div_1;
  j["div_2"] = row.div_2;
  j["BLEU_1"] = row.bleu[0];
  j["BLEU_2"] = row.bleu[1];
  j["BLEU_3"] = row.bleu[2];
  return j;
}

}  // namespace

nlohmann::ordered_json ReportToJson(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["n_clips"] = report.n_clips;
  j["captions_per_clip"] = report.captions_per_clip;
  j["cider_variant"] = "CIDEr";
  j["mbleu_smoothing"] = "none";
  j["top1"] = RowOrdered(report.top1);
  j["mean_over_captions"] = RowOrdered(report.mean5);
  return j;
}

std::string ReportToText(const MetricReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s %8s %8s %8s %8s\n", "protocol", "BLEU_4", "CIDEr", "SPIDEr",
                "vocab", "mBLEU_4", "div-1", "div-2");
  out += line;
  auto row = [&](const char* name, const MetricRow& r) {
    std::snprintf(line, sizeof(line), "%-10s %8.4f %8.4f %8s %8zu %8.4f %8.4f %8.4f\n", name, r.bleu[3], r.cider,
                  "-", r.vocab_size, r.mbleu_4, r.div_1, r.div_2);
    out += line;
  };
  row("top-1", report.top1);
  row("mean-5", report.mean5);
  return out;
}

std::string ReportToCsv(const MetricReport& report) {
  std::string out = "clip_id,bleu_4_top1,cider_top1,cider_mean,mbleu_4,div_1,div_2\n";
  char buf[512];
  for (const ClipMetrics& m : report.per_clip) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.clip_id.c_str(), m.bleu_4_top1,
                  m.cider_top1, m.cider_mean, m.mbleu_4, m.div_1, m.div_2);
    out += buf;
  }
  return out;
}

}  // namespace capgan::metrics
