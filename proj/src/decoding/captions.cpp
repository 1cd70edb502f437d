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

#include "decoding/captions.hpp"

#include <sstream>

#include <json.hpp>

#include "common/binary_io.hpp"
#include "common/error.hpp"

namespace capgan::decoding {

std::string FormatCaptionLines(const std::vector<CaptionRecord>& records) {
  std::string out;
  for (const CaptionRecord& r : records) {
    Require(r.captions.size() == r.scores.size(), ErrorKind::kContract,
            r.clip_id + ": caption and score counts differ");
    const nlohmann::json j{{"clip_id", r.clip_id}, {"captions", r.captions}, {"scores", r.scores}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void WriteCaptionFile(const std::string& path, const std::vector<CaptionRecord>& records) {
  io::WriteTextFile(path, FormatCaptionLines(records));
}

std::vector<CaptionRecord> ReadCaptionFile(const std::string& path) {
  std::istringstream in(io::ReadTextFile(path));
  std::vector<CaptionRecord> records;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CaptionRecord r;
      j.at("clip_id").get_to(r.clip_id);
      j.at("captions").get_to(r.captions);
      j.at("scores").get_to(r.scores);
      Require(r.captions.size() == r.scores.size(), ErrorKind::kLoad, "caption and score counts differ");
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kLoad, path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      Fail(ErrorKind::kLoad, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace capgan::decoding
