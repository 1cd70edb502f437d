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

// Little-endian byte encoding helpers shared by the feature and checkpoint
// formats.

#ifndef CAPGAN_COMMON_BINARY_IO_HPP_
#define CAPGAN_COMMON_BINARY_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace capgan::io {

std::vector<unsigned char> ReadFile(const std::string& path);
std::string ReadTextFile(const std::string& path);
// Writes to <path>.tmp and renames, so readers never see a partial file.
void WriteFileAtomic(const std::string& path, const std::vector<unsigned char>& bytes);
void WriteTextFile(const std::string& path, const std::string& text);

class ByteWriter {
 public:
  void Bytes(const void* data, std::size_t n);
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F32(float v);
  void String(const std::string& s);  // u32 length + bytes

  const std::vector<unsigned char>& bytes() const { return buf_; }
  void WriteFile(const std::string& path) const { WriteFileAtomic(path, buf_); }

 private:
  std::vector<unsigned char> buf_;
};

// Bounds-checked reader; throws kLoad (naming `source`) on truncation.
class ByteReader {
 public:
  ByteReader(std::vector<unsigned char> bytes, std::string source)
      : buf_(std::move(bytes)), source_(std::move(source)) {}

  void Bytes(void* out, std::size_t n);
  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  std::string String(std::size_t max_len = 1 << 20);

  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  void Need(std::size_t n) const;

  std::vector<unsigned char> buf_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace capgan::io

#endif  // CAPGAN_COMMON_BINARY_IO_HPP_
