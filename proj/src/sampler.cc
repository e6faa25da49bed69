// src/sampler.cc

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

#include "lrc/sampler.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "json.hpp"
#include "lrc/error.h"
#include "lrc/tensor_io.h"

namespace lrc {

namespace {

template <class T>
void SeededShuffle(std::vector<T>* v, std::mt19937_64* rng) {
  for (size_t i = v->size(); i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap((*v)[i - 1], (*v)[pick(*rng)]);
  }
}

// Input feature map of layer `layer_idx` for every image mentioned in
// `positions`, then W x at each position.
Matrix ComputeResponses(const Network& net, const ToyDataset& data, size_t layer_idx,
                        const Matrix& w, int k, int stride,
                        const std::vector<SamplePosition>& positions) {
  Matrix y(w.rows(), static_cast<Eigen::Index>(positions.size()));
  std::map<uint32_t, std::vector<size_t>> by_image;
  for (size_t i = 0; i < positions.size(); ++i) by_image[positions[i].image].push_back(i);
  for (const auto& [image, slots] : by_image) {
    const Tensor x = ForwardRange(net, data.Image(image), 0, layer_idx);
    for (size_t slot : slots) {
      const auto& p = positions[slot];
      y.col(static_cast<Eigen::Index>(slot)) = w * ExtractPatch(x, k, stride, p.row, p.col);
    }
  }
  return y;
}

Shape ConvOutputShape(const Network& net, size_t layer_idx) {
  return net.InferShapes().at(layer_idx);
}

nlohmann::json ProvenanceJson(const ResponseSet& rs) {
  nlohmann::json prov = nlohmann::json::array();
  for (const auto& p : rs.provenance) prov.push_back({p.image, p.row, p.col});
  return {{"layer_idx", rs.layer_idx}, {"seed", rs.seed},
          {"n", rs.provenance.size()}, {"provenance", prov}};
}

}  // namespace

std::vector<SamplePosition> SampleSchedule(size_t num_images, int out_height,
                                           int out_width, size_t n,
                                           int positions_per_image, uint64_t seed) {
  if (positions_per_image < 1)
    throw ValidationError("sampler: positions_per_image must be >= 1");
  if (n == 0) throw ValidationError("sampler: n must be >= 1");
  const size_t per_image = static_cast<size_t>(out_height) * out_width;
  if (n > num_images * per_image)
    throw ValidationError("sampler: n = " + std::to_string(n) + " exceeds the " +
                          std::to_string(num_images * per_image) +
                          " available positions (" + std::to_string(num_images) +
                          " images x " + std::to_string(per_image) + ")");
  std::mt19937_64 rng(seed);
  std::vector<uint32_t> images(num_images);
  std::iota(images.begin(), images.end(), 0u);
  SeededShuffle(&images, &rng);

  std::vector<std::vector<int>> perms(num_images);
  std::vector<SamplePosition> out;
  out.reserve(n);
  for (size_t pass = 0; out.size() < n; ++pass) {
    const size_t begin = pass * positions_per_image;
    if (begin >= per_image) break;
    for (uint32_t img : images) {
      auto& perm = perms[img];
      if (perm.empty()) {
        perm.resize(per_image);
        std::iota(perm.begin(), perm.end(), 0);
        SeededShuffle(&perm, &rng);
      }
      const size_t end = std::min(per_image, begin + positions_per_image);
      for (size_t k = begin; k < end && out.size() < n; ++k)
        out.push_back({img, perm[k] / out_width, perm[k] % out_width});
      if (out.size() == n) break;
    }
  }
  return out;
}

ResponseSet SampleResponses(const Network& net, const ToyDataset& data, size_t layer_idx,
                            size_t n, uint64_t seed, int positions_per_image) {
  const ConvLayer& conv = net.Conv(layer_idx);
  if (!(data.shape == net.input_shape))
    throw ShapeError("sampler: dataset images are " + ToString(data.shape) +
                     ", network expects " + ToString(net.input_shape));
  const Shape out = ConvOutputShape(net, layer_idx);
  ResponseSet rs;
  rs.layer_idx = layer_idx;
  rs.seed = seed;
  rs.provenance =
      SampleSchedule(data.size(), out.height, out.width, n, positions_per_image, seed);
  rs.y = ComputeResponses(net, data, layer_idx, conv.WeightsD(), conv.k, conv.stride,
                          rs.provenance);
  rs.mean = RowMean(rs.y);
  return rs;
}

PairedResponseSet SampleResponsePairs(const Network& orig, const Network& approx,
                                      const ToyDataset& data, size_t layer_idx, size_t n,
                                      uint64_t seed, int positions_per_image) {
  const ConvLayer& conv = orig.Conv(layer_idx);
  if (!(orig.input_shape == approx.input_shape))
    throw ValidationError("sampler: original and approximated networks differ in input shape");
  const size_t approx_idx = AlignedIndex(approx, layer_idx);
  if (!approx.IsConv(approx_idx) || !(approx.Conv(approx_idx) == conv))
    throw ValidationError("sampler: layer " + std::to_string(layer_idx) +
                          " of the original network has no identical counterpart (index " +
                          std::to_string(approx_idx) + ") in the approximated network");
  if (!(approx.InferShapes()[approx_idx] == orig.InferShapes()[layer_idx]))
    throw ValidationError("sampler: layer " + std::to_string(layer_idx) +
                          " output shapes differ between networks");

  PairedResponseSet out;
  out.base = SampleResponses(orig, data, layer_idx, n, seed, positions_per_image);
  out.y_hat = ComputeResponses(approx, data, approx_idx, conv.WeightsD(), conv.k,
                               conv.stride, out.base.provenance);
  return out;
}

Matrix ResponsesAt(const Network& net, const ToyDataset& data, size_t layer_idx,
                   const std::vector<SamplePosition>& positions) {
  const ConvLayer& conv = net.Conv(layer_idx);
  return ComputeResponses(net, data, layer_idx, conv.WeightsD(), conv.k, conv.stride,
                          positions);
}

void SaveResponseSet(const ResponseSet& rs, const std::filesystem::path& dir,
                     const std::string& stem) {
  std::filesystem::create_directories(dir);
  WriteBlob(dir / (stem + "_y.bin"), MatrixToBlob(rs.y));
  WriteBlob(dir / (stem + "_mean.bin"), VectorToBlob(rs.mean));
  const std::string text = ProvenanceJson(rs).dump() + "\n";
  WriteFileBytes(dir / (stem + ".json"),
                 std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

ResponseSet LoadResponseSet(const std::filesystem::path& dir, const std::string& stem) {
  const auto json_path = dir / (stem + ".json");
  const auto bytes = ReadFileBytes(json_path);
  ResponseSet rs;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    rs.layer_idx = j.at("layer_idx").get<size_t>();
    rs.seed = j.at("seed").get<uint64_t>();
    for (const auto& p : j.at("provenance"))
      rs.provenance.push_back({p.at(0).get<uint32_t>(), p.at(1).get<int>(), p.at(2).get<int>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json_path.string() + ": " + e.what());
  }
  rs.y = BlobToMatrix(ReadBlob(dir / (stem + "_y.bin")), stem + "_y.bin");
  rs.mean = BlobToVector(ReadBlob(dir / (stem + "_mean.bin")), stem + "_mean.bin");
  if (static_cast<size_t>(rs.y.cols()) != rs.provenance.size() || rs.mean.size() != rs.y.rows())
    throw ShapeMismatchError(json_path.string() + ": provenance has " +
                             std::to_string(rs.provenance.size()) + " entries but y is " +
                             std::to_string(rs.y.rows()) + "x" + std::to_string(rs.y.cols()));
  return rs;
}

void SavePairedResponseSet(const PairedResponseSet& rs, const std::filesystem::path& dir,
                           const std::string& stem) {
  SaveResponseSet(rs.base, dir, stem);
  WriteBlob(dir / (stem + "_yhat.bin"), MatrixToBlob(rs.y_hat));
}

PairedResponseSet LoadPairedResponseSet(const std::filesystem::path& dir,
                                        const std::string& stem) {
  PairedResponseSet rs;
  rs.base = LoadResponseSet(dir, stem);
  rs.y_hat = BlobToMatrix(ReadBlob(dir / (stem + "_yhat.bin")), stem + "_yhat.bin");
  if (rs.y_hat.rows() != rs.base.y.rows() || rs.y_hat.cols() != rs.base.y.cols())
    throw ShapeMismatchError(stem + "_yhat.bin: shape differs from " + stem + "_y.bin");
  return rs;
}

}  // namespace lrc
