// include/lrc/dataset.h

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

#ifndef LRC_DATASET_H_
#define LRC_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lrc/model.h"

namespace lrc {

// Procedurally generated image classification set standing in for a real
// training corpus.  Images are hw x hw x 3 with values in [0, 1], stored
// contiguously in (row, col, channel) order, channel fastest.
struct ToyDataset {
  Shape shape;
  std::vector<float> images;
  std::vector<uint8_t> labels;
  int num_classes = 0;
  uint64_t seed = 0;

  size_t size() const { return labels.size(); }
  Tensor Image(size_t i) const;
  bool operator==(const ToyDataset&) const = default;
};

inline constexpr int kToyChannels = 3;
inline constexpr int kMaxToyClasses = 16;

// Classes are geometric patterns (stripes in four orientations, cross, disk,
// ring, checkers, square outline, filled square, X, triangle, dot grid,
// corner, concentric rings, twin blobs) with random placement, scale,
// colours and additive Gaussian noise.  Labels are balanced (i mod classes)
// and shuffled.  num_classes in [2, 16], hw in {16, 32}.
ToyDataset GenerateToyDataset(uint64_t seed, size_t n, int num_classes, int hw);

// TOYD v1: "TOYD" | u32 version | u32 n | u32 H | u32 W | u32 C |
// u32 num_classes | u64 seed | float32 images | u8 labels.
std::vector<uint8_t> EncodeDataset(const ToyDataset& data);
ToyDataset DecodeDataset(std::span<const uint8_t> bytes, const std::string& name);
void SaveDataset(const ToyDataset& data, const std::filesystem::path& path);
ToyDataset LoadDataset(const std::filesystem::path& path);

}  // namespace lrc

#endif  // LRC_DATASET_H_
