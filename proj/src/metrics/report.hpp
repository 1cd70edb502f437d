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

#ifndef CAPGAN_METRICS_REPORT_HPP_
#define CAPGAN_METRICS_REPORT_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "metrics/metrics.hpp"

namespace capgan::metrics {

struct ClipCaptions {
  std::string clip_id;
  std::vector<Words> generated;  // ranked, best first
  ReferenceSet references;
};

// One row of the results table. BLEU and CIDEr depend on the protocol; the
// set-diversity columns (mBLEU_4, div-n) are computed once over the full sets.
struct MetricRow {
  std::array<double, kMaxOrder> bleu{};  // BLEU_1..4
  double cider = 0.0;
  std::size_t vocab_size = 0;
  double mbleu_4 = 0.0;
  double div_1 = 0.0;
  double div_2 = 0.0;
};

struct ClipMetrics {
  std::string clip_id;
  double bleu_4_top1 = 0.0;  // sentence level
  double cider_top1 = 0.0;
  double cider_mean = 0.0;
  double mbleu_4 = 0.0;
  double div_1 = 0.0;
  double div_2 = 0.0;
};

struct MetricReport {
  std::size_t n_clips = 0;
  std::size_t captions_per_clip = 0;
  MetricRow top1;   // first caption of each clip
  MetricRow mean5;  // BLEU/CIDEr averaged over caption ranks; vocab over all captions
  std::vector<ClipMetrics> per_clip;
};

// CIDEr document frequencies come from the clips' own references.
MetricReport Evaluate(const std::vector<ClipCaptions>& clips);

nlohmann::ordered_json ReportToJson(const MetricReport& report);
std::string ReportToText(const MetricReport& report);
std::string ReportToCsv(const MetricReport& report);

}  // namespace capgan::metrics

#endif  // CAPGAN_METRICS_REPORT_HPP_
