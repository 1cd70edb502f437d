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

#include "training/train_log.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace capgan::training {

void TrainLog::Append(nlohmann::ordered_json record) {
  Require(record.contains("stage") && record.contains("epoch"), ErrorKind::kContract,
          "train log records need a stage and an epoch");
  const std::string stage = record["stage"];
  const std::size_t epoch = record["epoch"];
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if ((*it)["stage"] == stage) {
      Require(epoch > (*it)["epoch"].get<std::size_t>(), ErrorKind::kContract,
              "train log epochs must increase within a stage");
      break;
    }
  }
  records_.push_back(std::move(record));
}

void TrainLog::Merge(const TrainLog& other) {
  for (const auto& r : other.records_) Append(r);
  rewards_.insert(rewards_.end(), other.rewards_.begin(), other.rewards_.end());
}

std::string TrainLog::ToJsonl() const {
  std::string out;
  for (const auto& r : records_) out += r.dump() + "\n";
  return out;
}

std::string TrainLog::RewardsCsv() const {
  std::string out;
  char buf[512];
  for (const RewardRow& r : rewards_) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%s,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.batch,
                  r.clip_id.c_str(), r.rollout.c_str(), r.reward.n, r.reward.s, r.reward.c, r.reward.lambda,
                  r.reward.total);
    out += buf;
  }
  return out;
}

void TrainLog::AppendToFiles(const std::string& jsonl_path, const std::string& csv_path) const {
  std::ofstream j(jsonl_path, std::ios::binary | std::ios::app);
  Require(j.good(), ErrorKind::kIo, "cannot append to " + jsonl_path);
  j << ToJsonl();
  if (csv_path.empty()) return;
  const bool fresh_csv = !std::filesystem::exists(csv_path);
  std::ofstream c(csv_path, std::ios::binary | std::ios::app);
  Require(c.good(), ErrorKind::kIo, "cannot append to " + csv_path);
  if (fresh_csv) c << kRewardCsvHeader;
  c << RewardsCsv();
}

std::vector<RewardRow> ParseRewardsCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  Require(line + "\n" == kRewardCsvHeader, ErrorKind::kLoad, "reward CSV has an unexpected header");
  std::vector<RewardRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    Require(f.size() == 9, ErrorKind::kLoad, "malformed reward CSV line: " + line);
    RewardRow r;
    r.epoch = std::stoul(f[0]);
    r.batch = std::stoul(f[1]);
    r.clip_id = f[2];
    r.rollout = f[3];
    r.reward = {std::stod(f[4]), std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8])};
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace capgan::training
