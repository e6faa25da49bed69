// src/dataset.cc

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

#include "lrc/dataset.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lrc/error.h"
#include "lrc/tensor_io.h"

namespace lrc {

namespace {

constexpr uint32_t kDatasetVersion = 1;

struct PatternParams {
  double cx, cy;     // centre, in [0, 1] image coordinates
  double scale;      // overall size
  double freq;       // stripe frequency (cycles per image)
  double phase;
  double thickness;
};

double Stripe(double t, const PatternParams& p) {
  return std::sin(2 * std::numbers::pi * p.freq * t + p.phase) > 0 ? 1.0 : 0.0;
}

// Foreground mask in [0, 1] for class `cls` at normalised coordinates (x, y).
double PatternMask(int cls, double x, double y, const PatternParams& p) {
  const double dx = x - p.cx;
  const double dy = y - p.cy;
  const double r = std::hypot(dx, dy);
  const double half = 0.3 * p.scale;
  const double t = p.thickness;
  switch (cls) {
    case 0: return Stripe(y, p);
    case 1: return Stripe(x, p);
    case 2: return Stripe((x + y) / std::numbers::sqrt2, p);
    case 3: return Stripe((x - y) / std::numbers::sqrt2, p);
    case 4:
      return (std::abs(dx) < t || std::abs(dy) < t) && std::max(std::abs(dx), std::abs(dy)) < half + t
                 ? 1.0 : 0.0;
    case 5: return r < half ? 1.0 : 0.0;
    case 6: return std::abs(r - half) < t ? 1.0 : 0.0;
    case 7:
      return std::sin(2 * std::numbers::pi * p.freq * x + p.phase) *
                         std::sin(2 * std::numbers::pi * p.freq * y + p.phase) > 0
                 ? 1.0 : 0.0;
    case 8: {
      const double m = std::max(std::abs(dx), std::abs(dy));
      return std::abs(m - half) < t ? 1.0 : 0.0;
    }
    case 9: return std::max(std::abs(dx), std::abs(dy)) < half ? 1.0 : 0.0;
    case 10:
      return (std::abs(dx - dy) < t || std::abs(dx + dy) < t) && r < half * 1.4 ? 1.0 : 0.0;
    case 11: return (dy < half && dy > -half && std::abs(dx) < (dy + half) * 0.6) ? 1.0 : 0.0;
    case 12:
      return std::sin(2 * std::numbers::pi * p.freq * x + p.phase) > 0.5 &&
                     std::sin(2 * std::numbers::pi * p.freq * y + p.phase) > 0.5
                 ? 1.0 : 0.0;
    case 13:
      return ((std::abs(dx + half) < t && std::abs(dy) < half) ||
              (std::abs(dy - half) < t && std::abs(dx) < half))
                 ? 1.0 : 0.0;
    case 14: return Stripe(r, p);
    default: {
      const double a = std::hypot(dx - half * 0.6, dy);
      const double b = std::hypot(dx + half * 0.6, dy);
      return (a < half * 0.45 || b < half * 0.45) ? 1.0 : 0.0;
    }
  }
}

}  // namespace

Tensor ToyDataset::Image(size_t i) const {
  if (i >= size()) throw ValidationError("dataset image index out of range");
  const size_t per = static_cast<size_t>(shape.Positions()) * shape.channels;
  Matrix m(shape.channels, shape.Positions());
  const float* src = images.data() + i * per;
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = src[k];
  return Tensor(shape, std::move(m));
}

ToyDataset GenerateToyDataset(uint64_t seed, size_t n, int num_classes, int hw) {
  if (num_classes < 2 || num_classes > kMaxToyClasses)
    throw ValidationError("toy dataset: num_classes " + std::to_string(num_classes) +
                          " outside [2, 16]");
  if (hw != 16 && hw != 32)
    throw ValidationError("toy dataset: hw " + std::to_string(hw) +
                          " unsupported (use 16 or 32)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.08);

  ToyDataset data;
  data.shape = Shape{hw, hw, kToyChannels};
  data.num_classes = num_classes;
  data.seed = seed;
  data.labels.resize(n);
  for (size_t i = 0; i < n; ++i) data.labels[i] = static_cast<uint8_t>(i % num_classes);
  for (size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(data.labels[i - 1], data.labels[pick(rng)]);
  }

  const size_t per = static_cast<size_t>(hw) * hw * kToyChannels;
  data.images.resize(n * per);
  for (size_t i = 0; i < n; ++i) {
    PatternParams p;
    p.cx = 0.35 + 0.3 * unit(rng);
    p.cy = 0.35 + 0.3 * unit(rng);
    p.scale = 0.7 + 0.4 * unit(rng);
    p.freq = 2.5 + 1.5 * unit(rng);
    p.phase = 2 * std::numbers::pi * unit(rng);
    p.thickness = 0.06 + 0.05 * unit(rng);
    double fg[kToyChannels], bg[kToyChannels];
    for (int ch = 0; ch < kToyChannels; ++ch) {
      fg[ch] = 0.55 + 0.45 * unit(rng);
      bg[ch] = 0.35 * unit(rng);
    }
    float* dst = data.images.data() + i * per;
    for (int r = 0; r < hw; ++r)
      for (int c = 0; c < hw; ++c) {
        const double mask =
            PatternMask(data.labels[i], (c + 0.5) / hw, (r + 0.5) / hw, p);
        for (int ch = 0; ch < kToyChannels; ++ch) {
          const double v = bg[ch] + (fg[ch] - bg[ch]) * mask + noise(rng);
          dst[(r * hw + c) * kToyChannels + ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
  }
  return data;
}

std::vector<uint8_t> EncodeDataset(const ToyDataset& data) {
  ByteWriter w;
  w.Raw("TOYD");
  w.U32(kDatasetVersion);
  w.U32(static_cast<uint32_t>(data.size()));
  w.U32(static_cast<uint32_t>(data.shape.height));
  w.U32(static_cast<uint32_t>(data.shape.width));
  w.U32(static_cast<uint32_t>(data.shape.channels));
  w.U32(static_cast<uint32_t>(data.num_classes));
  w.U64(data.seed);
  for (float v : data.images) w.F32(v);
  for (uint8_t l : data.labels) w.U8(l);
  return std::move(w.bytes());
}

ToyDataset DecodeDataset(std::span<const uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  if (bytes.size() < 4 || r.Raw(4) != "TOYD")
    throw MagicError(name + ": bad magic, expected \"TOYD\"");
  const uint32_t version = r.U32();
  if (version != kDatasetVersion)
    throw VersionError(name + ": unsupported TOYD version " + std::to_string(version));
  ToyDataset data;
  const uint32_t n = r.U32();
  data.shape.height = static_cast<int>(r.U32());
  data.shape.width = static_cast<int>(r.U32());
  data.shape.channels = static_cast<int>(r.U32());
  data.num_classes = static_cast<int>(r.U32());
  data.seed = r.U64();
  const size_t count = static_cast<size_t>(n) * data.shape.Positions() * data.shape.channels;
  if (r.remaining() < count * 4 + n)
    throw TruncatedError(name + ": expected " + std::to_string(count * 4 + n) +
                         " payload bytes, found " + std::to_string(r.remaining()));
  if (r.remaining() > count * 4 + n)
    throw ShapeMismatchError(name + ": " + std::to_string(r.remaining() - count * 4 - n) +
                             " trailing bytes after the declared payload");
  data.images.resize(count);
  for (size_t i = 0; i < count; ++i) data.images[i] = r.F32();
  data.labels.resize(n);
  for (size_t i = 0; i < n; ++i) {
    data.labels[i] = r.U8();
    if (data.labels[i] >= data.num_classes)
      throw FormatError(name + ": label " + std::to_string(data.labels[i]) +
                        " at index " + std::to_string(i) + " >= num_classes " +
                        std::to_string(data.num_classes));
  }
  return data;
}

void SaveDataset(const ToyDataset& data, const std::filesystem::path& path) {
  WriteFileBytes(path, EncodeDataset(data));
}

ToyDataset LoadDataset(const std::filesystem::path& path) {
  return DecodeDataset(ReadFileBytes(path), path.string());
}

}  // namespace lrc
