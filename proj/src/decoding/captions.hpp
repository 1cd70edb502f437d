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

#ifndef CAPGAN_DECODING_CAPTIONS_HPP_
#define CAPGAN_DECODING_CAPTIONS_HPP_

#include <string>
#include <vector>

namespace capgan::decoding {

// One line of a caption output file.
struct CaptionRecord {
  std::string clip_id;
  std::vector<std::string> captions;
  std::vector<double> scores;

  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

std::string FormatCaptionLines(const std::vector<CaptionRecord>& records);
void WriteCaptionFile(const std::string& path, const std::vector<CaptionRecord>& records);
// kLoad with the line number on malformed input.
std::vector<CaptionRecord> ReadCaptionFile(const std::string& path);

}  // namespace capgan::decoding

#endif  // CAPGAN_DECODING_CAPTIONS_HPP_
