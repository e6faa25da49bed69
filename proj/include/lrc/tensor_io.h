// include/lrc/tensor_io.h

// Copyright 2026  The lrcnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LRC_TENSOR_IO_H_
#define LRC_TENSOR_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lrc/numerics.h"

namespace lrc {

// One LRCT v1 tensor file:
//   "LRCT" | u32 version=1 | u32 rank | u32 reserved=0 | u32 dims[rank] |
//   float32 payload, row-major, little endian.
struct Blob {
  std::vector<uint32_t> dims;
  std::vector<float> data;

  size_t NumElements() const;
};

inline constexpr uint32_t kBlobVersion = 1;

std::vector<uint8_t> EncodeBlob(const Blob& blob);
// Errors: MagicError, VersionError, TruncatedError, ShapeMismatchError
// (payload longer than the dims announce).
Blob DecodeBlob(std::span<const uint8_t> bytes, const std::string& name);

void WriteBlob(const std::filesystem::path& path, const Blob& blob);
Blob ReadBlob(const std::filesystem::path& path);

// Rank-2 blob <-> matrix (row-major on disk).  Values are rounded to float32.
Blob MatrixToBlob(const Matrix& m);
Matrix BlobToMatrix(const Blob& blob, const std::string& name);
// Rank-1 blob <-> vector.
Blob VectorToBlob(const Vector& v);
Vector BlobToVector(const Blob& blob, const std::string& name);

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const uint8_t> bytes);

// Little-endian byte stream helpers shared by the binary formats.
class ByteWriter {
 public:
  void U8(uint8_t v) { bytes_.push_back(v); }
  void U32(uint32_t v);
  void U64(uint64_t v);
  void F32(float v);
  void Raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const uint8_t> bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}
  uint8_t U8();
  uint32_t U32();
  uint64_t U64();
  float F32();
  std::string Raw(size_t n);
  size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& name() const { return name_; }

 private:
  void Need(size_t n);
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  std::string name_;
};

}  // namespace lrc

#endif  // LRC_TENSOR_IO_H_
