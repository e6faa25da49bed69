// src/tensor_io.cc

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

#include "lrc/tensor_io.h"

#include <bit>
#include <fstream>
#include <iterator>

#include "lrc/error.h"

namespace lrc {

size_t Blob::NumElements() const {
  size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

void ByteWriter::U32(uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::U64(uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::F32(float v) { U32(std::bit_cast<uint32_t>(v)); }

void ByteReader::Need(size_t n) {
  if (remaining() < n)
    throw TruncatedError(name_ + ": truncated (needed " + std::to_string(n) +
                         " more bytes at offset " + std::to_string(pos_) +
                         ", have " + std::to_string(remaining()) + ")");
}

uint8_t ByteReader::U8() {
  Need(1);
  return bytes_[pos_++];
}

uint32_t ByteReader::U32() {
  Need(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

uint64_t ByteReader::U64() {
  Need(8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::F32() { return std::bit_cast<float>(U32()); }

std::string ByteReader::Raw(size_t n) {
  Need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<uint8_t> EncodeBlob(const Blob& blob) {
  if (blob.data.size() != blob.NumElements())
    throw ShapeError("EncodeBlob: payload has " + std::to_string(blob.data.size()) +
                     " values, dims announce " + std::to_string(blob.NumElements()));
  ByteWriter w;
  w.Raw("LRCT");
  w.U32(kBlobVersion);
  w.U32(static_cast<uint32_t>(blob.dims.size()));
  w.U32(0);
  for (uint32_t d : blob.dims) w.U32(d);
  for (float v : blob.data) w.F32(v);
  return std::move(w.bytes());
}

Blob DecodeBlob(std::span<const uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  if (bytes.size() < 4 || r.Raw(4) != "LRCT")
    throw MagicError(name + ": bad magic, expected \"LRCT\"");
  const uint32_t version = r.U32();
  if (version != kBlobVersion)
    throw VersionError(name + ": unsupported LRCT version " + std::to_string(version));
  const uint32_t rank = r.U32();
  r.U32();  // reserved
  if (rank > 8) throw FormatError(name + ": implausible rank " + std::to_string(rank));
  Blob blob;
  for (uint32_t i = 0; i < rank; ++i) blob.dims.push_back(r.U32());
  const size_t n = blob.NumElements();
  if (r.remaining() < n * 4)
    throw TruncatedError(name + ": payload truncated (dims announce " +
                         std::to_string(n) + " floats, file holds " +
                         std::to_string(r.remaining() / 4) + ")");
  if (r.remaining() > n * 4)
    throw ShapeMismatchError(name + ": payload holds " +
                             std::to_string(r.remaining() / 4) +
                             " floats, dims announce " + std::to_string(n));
  blob.data.resize(n);
  for (size_t i = 0; i < n; ++i) blob.data[i] = r.F32();
  return blob;
}

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::filesystem::path& path,
                    std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

void WriteBlob(const std::filesystem::path& path, const Blob& blob) {
  WriteFileBytes(path, EncodeBlob(blob));
}

Blob ReadBlob(const std::filesystem::path& path) {
  return DecodeBlob(ReadFileBytes(path), path.string());
}

Blob MatrixToBlob(const Matrix& m) {
  Blob b;
  b.dims = {static_cast<uint32_t>(m.rows()), static_cast<uint32_t>(m.cols())};
  b.data.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      b.data.push_back(static_cast<float>(m(i, j)));
  return b;
}

Matrix BlobToMatrix(const Blob& blob, const std::string& name) {
  if (blob.dims.size() != 2)
    throw ShapeMismatchError(name + ": expected a rank-2 tensor, got rank " +
                             std::to_string(blob.dims.size()));
  Matrix m(blob.dims[0], blob.dims[1]);
  size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = blob.data[k++];
  return m;
}

Blob VectorToBlob(const Vector& v) {
  Blob b;
  b.dims = {static_cast<uint32_t>(v.size())};
  for (Eigen::Index i = 0; i < v.size(); ++i) b.data.push_back(static_cast<float>(v(i)));
  return b;
}

Vector BlobToVector(const Blob& blob, const std::string& name) {
  if (blob.dims.size() != 1)
    throw ShapeMismatchError(name + ": expected a rank-1 tensor, got rank " +
                             std::to_string(blob.dims.size()));
  Vector v(blob.dims[0]);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = blob.data[i];
  return v;
}

}  // namespace lrc
