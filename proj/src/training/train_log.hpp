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

#ifndef CAPGAN_TRAINING_TRAIN_LOG_HPP_
#define CAPGAN_TRAINING_TRAIN_LOG_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "training/reward.hpp"

namespace capgan::training {

// One scored caption from an adversarial step.
struct RewardRow {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::string clip_id;
  std::string rollout;  // "sample" or "greedy"
  RewardBreakdown reward;
};

// Per-epoch records (JSON lines) plus every reward breakdown (CSV).
class TrainLog {
 public:
  // record must carry "stage" and "epoch"; epochs increase within a stage.
  void Append(nlohmann::ordered_json record);
  void AddReward(RewardRow row) { rewards_.push_back(std::move(row)); }
  void Merge(const TrainLog& other);

  const std::vector<nlohmann::ordered_json>& records() const { return records_; }
  const std::vector<RewardRow>& rewards() const { return rewards_; }

  std::string ToJsonl() const;
  std::string RewardsCsv() const;
  // Appends to existing files so resumed runs keep earlier epochs. An empty
  // csv_path skips the reward rows.
  void AppendToFiles(const std::string& jsonl_path, const std::string& csv_path) const;

 private:
  std::vector<nlohmann::ordered_json> records_;
  std::vector<RewardRow> rewards_;
};

inline constexpr const char* kRewardCsvHeader = "epoch,batch,clip_id,rollout,n,s,c,lambda,total\n";

std::vector<RewardRow> ParseRewardsCsv(const std::string& text);

}  // namespace capgan::training

#endif  // CAPGAN_TRAINING_TRAIN_LOG_HPP_
