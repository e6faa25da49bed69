// tests/tensor_io_test.cc

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

#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "lrc/error.h"
#include "lrc/tensor_io.h"
#include "test_util.h"

namespace lrc {
namespace {

TEST(BlobTest, HeaderLayout) {
  Blob b;
  b.dims = {2, 3};
  b.data = {1, 2, 3, 4, 5, 6};
  const auto bytes = EncodeBlob(b);
  ASSERT_EQ(bytes.size(), 16u + 2 * 4 + 6 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LRCT");
  EXPECT_EQ(bytes[4], 1);  // version, little endian
  EXPECT_EQ(bytes[8], 2);  // rank
  EXPECT_EQ(bytes[12] | bytes[13] | bytes[14] | bytes[15], 0);  // reserved
  EXPECT_EQ(bytes[16], 2);
  EXPECT_EQ(bytes[20], 3);
  float first;
  std::memcpy(&first, bytes.data() + 24, 4);
  EXPECT_EQ(first, 1.0f);
}

TEST(BlobTest, RoundTrip) {
  Blob b;
  b.dims = {3, 1, 2};
  b.data = {0.5f, -1.25f, 3e-8f, 7.0f, -0.0f, 1e30f};
  const Blob back = DecodeBlob(EncodeBlob(b), "mem");
  EXPECT_EQ(back.dims, b.dims);
  EXPECT_EQ(back.data, b.data);
}

TEST(BlobTest, MatrixIsRowMajorOnDisk) {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Blob b = MatrixToBlob(m);
  EXPECT_EQ(b.data, (std::vector<float>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(BlobToMatrix(b, "m"), m);
}

TEST(BlobTest, DistinctLoadErrors) {
  Blob b;
  b.dims = {10};
  b.data.assign(10, 1.0f);
  const auto good = EncodeBlob(b);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(DecodeBlob(bad_magic, "x"), MagicError);

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(DecodeBlob(bad_version, "x"), VersionError);

  auto truncated = good;
  truncated.resize(truncated.size() - 4);  // 9 floats where 10 are declared
  EXPECT_THROW(DecodeBlob(truncated, "x"), TruncatedError);

  auto header_only = good;
  header_only.resize(10);
  EXPECT_THROW(DecodeBlob(header_only, "x"), TruncatedError);

  auto extra = good;
  extra.insert(extra.end(), {0, 0, 0, 0});
  EXPECT_THROW(DecodeBlob(extra, "x"), ShapeMismatchError);

  EXPECT_THROW(DecodeBlob(std::vector<uint8_t>{}, "x"), MagicError);
}

TEST(BlobTest, ErrorNamesTheSource) {
  std::vector<uint8_t> junk = {'J', 'U', 'N', 'K'};
  try {
    DecodeBlob(junk, "weights.bin");
    FAIL();
  } catch (const MagicError& e) {
    EXPECT_NE(std::string(e.what()).find("weights.bin"), std::string::npos);
  }
}

TEST(BlobTest, FileRoundTrip) {
  testing::TempDir dir("blob");
  Vector v(3);
  v << 1, 2, 3;
  WriteBlob(dir / "v.bin", VectorToBlob(v));
  EXPECT_EQ(BlobToVector(ReadBlob(dir / "v.bin"), "v"), v);
  EXPECT_THROW(ReadBlob(dir / "missing.bin"), ValidationError);
}

TEST(ByteReaderTest, Truncation) {
  const std::vector<uint8_t> bytes = {1, 0, 0};
  ByteReader r(bytes, "short");
  EXPECT_THROW(r.U32(), TruncatedError);
}

}  // namespace
}  // namespace lrc
