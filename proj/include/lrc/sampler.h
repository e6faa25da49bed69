// include/lrc/sampler.h

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

#ifndef LRC_SAMPLER_H_
#define LRC_SAMPLER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lrc/dataset.h"
#include "lrc/model.h"

namespace lrc {

// Where a response column came from: image index and output-map position.
struct SamplePosition {
  uint32_t image = 0;
  int row = 0;
  int col = 0;
  bool operator==(const SamplePosition&) const = default;
};

// Pre-ReLU responses y = W x of one conv layer, one column per sample.
struct ResponseSet {
  size_t layer_idx = 0;
  Matrix y;     // d x n
  Vector mean;  // row means of y
  std::vector<SamplePosition> provenance;
  uint64_t seed = 0;
};

// y from the original network and y_hat = W x_hat, where x_hat is the
// approximated network's input to the same layer and W the original
// weights, sampled at identical positions.
struct PairedResponseSet {
  ResponseSet base;
  Matrix y_hat;
};

inline constexpr int kDefaultPositionsPerImage = 4;

// Picks n sample positions.  Images are visited round-robin in a seeded
// shuffled order; each image contributes up to positions_per_image
// positions per pass, drawn without replacement from a per-image seeded
// permutation.  Throws ValidationError if n exceeds images * positions.
std::vector<SamplePosition> SampleSchedule(size_t num_images, int out_height,
                                           int out_width, size_t n,
                                           int positions_per_image, uint64_t seed);

ResponseSet SampleResponses(const Network& net, const ToyDataset& data, size_t layer_idx,
                            size_t n, uint64_t seed,
                            int positions_per_image = kDefaultPositionsPerImage);

// layer_idx indexes `orig`; the matching layer in `approx` is found with
// AlignedIndex and must hold the same conv weights.
PairedResponseSet SampleResponsePairs(const Network& orig, const Network& approx,
                                      const ToyDataset& data, size_t layer_idx, size_t n,
                                      uint64_t seed,
                                      int positions_per_image = kDefaultPositionsPerImage);

// Responses of `net`'s conv layer at explicit positions (no sampling).  Used
// to re-evaluate networks at a fixed set of positions.
Matrix ResponsesAt(const Network& net, const ToyDataset& data, size_t layer_idx,
                   const std::vector<SamplePosition>& positions);

// Persists <dir>/<stem>_y.bin, <stem>_mean.bin (and <stem>_yhat.bin for
// pairs) as LRCT blobs plus <stem>.json with layer_idx, seed and provenance.
void SaveResponseSet(const ResponseSet& rs, const std::filesystem::path& dir,
                     const std::string& stem);
ResponseSet LoadResponseSet(const std::filesystem::path& dir, const std::string& stem);
void SavePairedResponseSet(const PairedResponseSet& rs, const std::filesystem::path& dir,
                           const std::string& stem);
PairedResponseSet LoadPairedResponseSet(const std::filesystem::path& dir,
                                        const std::string& stem);

}  // namespace lrc

#endif  // LRC_SAMPLER_H_
