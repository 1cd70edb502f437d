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

#include "models/checkpoint.hpp"

#include <cstring>

#include "common/binary_io.hpp"

namespace capgan::models {

namespace {

constexpr std::uint32_t kMaxRank = 8;

}  // namespace

std::vector<unsigned char> SerializeCheckpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.Bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.U32(kCheckpointVersion);
  w.String(ckpt.kind);
  w.U32(ckpt.meta.epoch);
  w.U64(ckpt.meta.seed);
  w.U64(ckpt.meta.config_hash);
  w.String(ckpt.hparams.dump());
  w.U32(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const CheckpointEntry& e : ckpt.entries) {
    w.String(e.name);
    w.U32(static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) w.U32(static_cast<std::uint32_t>(d));
    for (double v : e.value.data()) w.F32(static_cast<float>(v));
  }
  return w.bytes();
}

Checkpoint ParseCheckpoint(std::vector<unsigned char> bytes, const std::string& source) {
  io::ByteReader r(std::move(bytes), source);
  char magic[8];
  r.Bytes(magic, sizeof(magic));
  Require(std::memcmp(magic, kCheckpointMagic, sizeof(magic)) == 0, ErrorKind::kLoad,
          source + ": not a checkpoint (bad magic)");
  const std::uint32_t version = r.U32();
  Require(version == kCheckpointVersion, ErrorKind::kLoad,
          source + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.kind = r.String(256);
  ckpt.meta.epoch = r.U32();
  ckpt.meta.seed = r.U64();
  ckpt.meta.config_hash = r.U64();
  try {
    ckpt.hparams = nlohmann::json::parse(r.String());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kLoad, source + ": corrupt config block: " + e.what());
  }
  const std::uint32_t n = r.U32();
  for (std::uint32_t i = 0; i < n; ++i) {
    CheckpointEntry e;
    e.name = r.String(4096);
    const std::uint32_t rank = r.U32();
    Require(rank >= 1 && rank <= kMaxRank, ErrorKind::kLoad, source + ": bad rank for '" + e.name + "'");
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = r.U32();
      Require(d > 0, ErrorKind::kLoad, source + ": zero dimension in '" + e.name + "'");
      numel *= d;
    }
    Require(numel * 4 <= r.remaining(), ErrorKind::kLoad, source + ": truncated file");
    std::vector<double> values(numel);
    for (double& v : values) v = r.F32();
    e.value = Tensor(std::move(shape), std::move(values));
    ckpt.entries.push_back(std::move(e));
  }
  Require(r.remaining() == 0, ErrorKind::kLoad, source + ": trailing bytes after checkpoint");
  return ckpt;
}

void WriteCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  io::WriteFileAtomic(path, SerializeCheckpoint(ckpt));
}

Checkpoint ReadCheckpoint(const std::string& path) { return ParseCheckpoint(io::ReadFile(path), path); }

std::uint64_t ConfigHash(const nlohmann::json& hparams) { return Fnv1a(hparams.dump()); }

Checkpoint CaptureParameters(const std::string& kind, const ParameterSet& ps, const nlohmann::json& hparams,
                             const CheckpointMeta& meta) {
  Checkpoint ckpt;
  ckpt.kind = kind;
  ckpt.meta = meta;
  ckpt.hparams = hparams;
  for (const Parameter& p : ps.all()) ckpt.entries.push_back({p.name, p.value});
  return ckpt;
}

void RestoreParameters(const Checkpoint& ckpt, ParameterSet& ps) {
  Require(ckpt.entries.size() == ps.size(), ErrorKind::kLoad,
          "checkpoint has " + std::to_string(ckpt.entries.size()) + " tensors, model expects " +
              std::to_string(ps.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const CheckpointEntry& e = ckpt.entries[i];
    Require(e.name == ps[i].name, ErrorKind::kLoad, "checkpoint tensor '" + e.name + "' where '" + ps[i].name +
                                                        "' was expected");
    Require(e.value.shape() == ps[i].value.shape(), ErrorKind::kLoad,
            "checkpoint tensor '" + e.name + "' has shape " + ShapeString(e.value.shape()));
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i].value = ckpt.entries[i].value;
    ps[i].ZeroGrad();
  }
}

}  // namespace capgan::models
