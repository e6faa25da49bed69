// tests/dataset_test.cc

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

#include <algorithm>
#include <vector>

#include <gtest/gtest.h>

#include "lrc/dataset.h"
#include "lrc/error.h"
#include "lrc/tensor_io.h"
#include "test_util.h"

namespace lrc {
namespace {

TEST(ToyDatasetTest, DeterministicBytes) {
  const ToyDataset a = GenerateToyDataset(1, 10, 2, 16);
  const ToyDataset b = GenerateToyDataset(1, 10, 2, 16);
  EXPECT_EQ(EncodeDataset(a), EncodeDataset(b));
  EXPECT_FALSE(GenerateToyDataset(2, 10, 2, 16) == a);
}

TEST(ToyDatasetTest, BalancedLabels) {
  for (int classes : {2, 5, 10, 16}) {
    const ToyDataset d = GenerateToyDataset(3, 1000, classes, 16);
    std::vector<int> counts(classes, 0);
    for (uint8_t l : d.labels) {
      ASSERT_LT(l, classes);
      ++counts[l];
    }
    const double expected = 1000.0 / classes;
    for (int c : counts) {
      EXPECT_GE(c, 0.8 * expected);
      EXPECT_LE(c, 1.2 * expected);
    }
  }
}

TEST(ToyDatasetTest, PixelRange) {
  for (int hw : {16, 32}) {
    const ToyDataset d = GenerateToyDataset(4, 50, 16, hw);
    EXPECT_EQ(d.shape, (Shape{hw, hw, kToyChannels}));
    EXPECT_EQ(d.images.size(), 50u * hw * hw * kToyChannels);
    EXPECT_GE(*std::min_element(d.images.begin(), d.images.end()), 0.0f);
    EXPECT_LE(*std::max_element(d.images.begin(), d.images.end()), 1.0f);
  }
}

TEST(ToyDatasetTest, ClassesDiffer) {
  const ToyDataset d = GenerateToyDataset(5, 400, 16, 16);
  std::vector<Matrix> mean(16, Matrix::Zero(3, 256));
  std::vector<int> count(16, 0);
  for (size_t i = 0; i < d.size(); ++i) {
    mean[d.labels[i]] += d.Image(i).data;
    ++count[d.labels[i]];
  }
  for (int a = 0; a < 16; ++a)
    for (int b = a + 1; b < 16; ++b)
      EXPECT_GT((mean[a] / count[a] - mean[b] / count[b]).norm(), 1.0) << a << " vs " << b;
}

TEST(ToyDatasetTest, RejectsBadArguments) {
  EXPECT_THROW(GenerateToyDataset(1, 10, 1, 16), ValidationError);
  EXPECT_THROW(GenerateToyDataset(1, 10, 17, 16), ValidationError);
  EXPECT_THROW(GenerateToyDataset(1, 10, 4, 24), ValidationError);
}

TEST(ToyDatasetTest, FileRoundTrip) {
  testing::TempDir dir("toyd");
  const ToyDataset d = GenerateToyDataset(6, 20, 3, 16);
  SaveDataset(d, dir / "d.toyd");
  EXPECT_EQ(LoadDataset(dir / "d.toyd"), d);
}

TEST(ToyDatasetTest, DecodeErrors) {
  const auto good = EncodeDataset(GenerateToyDataset(7, 5, 3, 16));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(DecodeDataset(bad, "d"), MagicError);
  bad = good;
  bad[4] = 9;
  EXPECT_THROW(DecodeDataset(bad, "d"), VersionError);
  bad = good;
  bad.pop_back();
  EXPECT_THROW(DecodeDataset(bad, "d"), TruncatedError);
  bad = good;
  bad.push_back(0);
  EXPECT_THROW(DecodeDataset(bad, "d"), ShapeMismatchError);
  bad = good;
  bad.back() = 3;  // label == num_classes
  EXPECT_THROW(DecodeDataset(bad, "d"), FormatError);
}

}  // namespace
}  // namespace lrc
