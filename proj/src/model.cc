// src/model.cc

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

#include "lrc/model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "lrc/error.h"
#include "lrc/tensor_io.h"

namespace lrc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::string LayerLabel(size_t idx, const Layer& layer) {
  return "layer " + std::to_string(idx) + " (" + LayerTypeName(layer) + ")";
}

const char* PartName(ConvPart p) {
  switch (p) {
    case ConvPart::kWhole: return "whole";
    case ConvPart::kReduce: return "reduce";
    case ConvPart::kRestore: return "restore";
  }
  return "whole";
}

ConvPart ParsePart(const std::string& s, const std::string& where) {
  if (s == "whole") return ConvPart::kWhole;
  if (s == "reduce") return ConvPart::kReduce;
  if (s == "restore") return ConvPart::kRestore;
  throw FormatError(where + ": unknown conv part \"" + s + "\"");
}

Shape LayerOutputShape(const Layer& layer, const Shape& in, size_t idx) {
  return std::visit(
      Overloaded{
          [&](const ConvLayer& l) {
            if (l.k < 1 || l.c < 1 || l.d < 1 || l.stride < 1)
              throw ShapeError(LayerLabel(idx, layer) + ": invalid k/c/d/stride");
            if (l.weights.rows() != l.d || l.weights.cols() != l.PatchSize() + 1)
              throw ShapeError(LayerLabel(idx, layer) + ": weights are " +
                               std::to_string(l.weights.rows()) + "x" +
                               std::to_string(l.weights.cols()) + ", expected " +
                               std::to_string(l.d) + "x" +
                               std::to_string(l.PatchSize() + 1));
            if (in.channels != l.c)
              throw ShapeError(LayerLabel(idx, layer) + ": input has " +
                               std::to_string(in.channels) + " channels, layer expects " +
                               std::to_string(l.c));
            if (in.height < l.k || in.width < l.k)
              throw ShapeError(LayerLabel(idx, layer) + ": input " + ToString(in) +
                               " smaller than filter " + std::to_string(l.k));
            return Shape{OutputSize(in.height, l.k, l.stride),
                         OutputSize(in.width, l.k, l.stride), l.d};
          },
          [&](const ReluLayer&) { return in; },
          [&](const MaxPoolLayer& l) {
            if (l.size < 1 || l.stride < 1)
              throw ShapeError(LayerLabel(idx, layer) + ": invalid pool size/stride");
            if (in.height < l.size || in.width < l.size)
              throw ShapeError(LayerLabel(idx, layer) + ": input " + ToString(in) +
                               " smaller than pool window");
            return Shape{OutputSize(in.height, l.size, l.stride),
                         OutputSize(in.width, l.size, l.stride), in.channels};
          },
          [&](const FlattenLayer&) {
            return Shape{1, 1, in.height * in.width * in.channels};
          },
          [&](const FullyConnectedLayer& l) {
            if (in.height != 1 || in.width != 1)
              throw ShapeError(LayerLabel(idx, layer) + ": input " + ToString(in) +
                               " is not flat");
            if (l.weights.cols() != in.channels + 1)
              throw ShapeError(LayerLabel(idx, layer) + ": weights expect " +
                               std::to_string(l.weights.cols() - 1) +
                               " inputs, got " + std::to_string(in.channels));
            return Shape{1, 1, static_cast<int>(l.weights.rows())};
          },
          [&](const SoftmaxLayer&) {
            if (in.height != 1 || in.width != 1)
              throw ShapeError(LayerLabel(idx, layer) + ": input " + ToString(in) +
                               " is not flat");
            return in;
          },
      },
      layer);
}

Tensor MaxPoolForward(const MaxPoolLayer& l, const Tensor& in) {
  const Shape out_shape{OutputSize(in.shape.height, l.size, l.stride),
                        OutputSize(in.shape.width, l.size, l.stride),
                        in.shape.channels};
  Tensor out = Tensor::Zeros(out_shape);
  for (int r = 0; r < out_shape.height; ++r) {
    for (int c = 0; c < out_shape.width; ++c) {
      auto dst = out.data.col(r * out_shape.width + c);
      dst = in.data.col((r * l.stride) * in.shape.width + c * l.stride);
      for (int i = 0; i < l.size; ++i)
        for (int j = 0; j < l.size; ++j)
          dst = dst.cwiseMax(
              in.data.col((r * l.stride + i) * in.shape.width + c * l.stride + j));
    }
  }
  return out;
}

Tensor SoftmaxForward(const Tensor& in) {
  Tensor out = in;
  auto v = out.data.col(0);
  v.array() -= v.maxCoeff();
  v = v.array().exp().matrix();
  v /= v.sum();
  return out;
}

nlohmann::json DimsJson(const WeightMatrix& w) {
  return nlohmann::json::array({w.rows(), w.cols()});
}

Blob WeightsToBlob(const WeightMatrix& w) {
  Blob b;
  b.dims = {static_cast<uint32_t>(w.rows()), static_cast<uint32_t>(w.cols())};
  b.data.reserve(w.size());
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) b.data.push_back(w(i, j));
  return b;
}

WeightMatrix LoadWeights(const std::filesystem::path& dir, const nlohmann::json& ref,
                         const std::string& where) {
  if (!ref.contains("file") || !ref.contains("dims"))
    throw FormatError(where + ": tensor reference needs \"file\" and \"dims\"");
  const auto dims = ref.at("dims").get<std::vector<uint32_t>>();
  const auto path = dir / ref.at("file").get<std::string>();
  const Blob blob = ReadBlob(path);
  if (blob.dims != dims || dims.size() != 2) {
    size_t declared = 1;
    for (auto d : dims) declared *= d;
    throw ShapeMismatchError(where + ": manifest declares " + std::to_string(declared) +
                             " floats (" + std::to_string(dims.size()) +
                             "-d), blob " + path.string() + " has " +
                             std::to_string(blob.NumElements()));
  }
  WeightMatrix w(dims[0], dims[1]);
  size_t k = 0;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = blob.data[k++];
  return w;
}

}  // namespace

std::string ToString(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

Tensor::Tensor(Shape s, Matrix m) : shape(s), data(std::move(m)) {
  if (data.rows() != s.channels || data.cols() != s.Positions())
    throw ShapeError("Tensor: data is " + std::to_string(data.rows()) + "x" +
                     std::to_string(data.cols()) + " for shape " + ToString(s));
}

Tensor Tensor::Zeros(Shape s) { return Tensor(s, Matrix::Zero(s.channels, s.Positions())); }

std::string LayerTypeName(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const ConvLayer&) { return "conv"; },
                        [](const ReluLayer&) { return "relu"; },
                        [](const MaxPoolLayer&) { return "maxpool"; },
                        [](const FlattenLayer&) { return "flatten"; },
                        [](const FullyConnectedLayer&) { return "fc"; },
                        [](const SoftmaxLayer&) { return "softmax"; },
                    },
                    layer);
}

bool operator==(const ConvLayer& a, const ConvLayer& b) {
  return a.k == b.k && a.c == b.c && a.d == b.d && a.stride == b.stride &&
         a.part == b.part && a.weights.rows() == b.weights.rows() &&
         a.weights.cols() == b.weights.cols() && a.weights == b.weights;
}

bool operator==(const FullyConnectedLayer& a, const FullyConnectedLayer& b) {
  return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
         a.weights == b.weights;
}

std::vector<Shape> Network::InferShapes() const {
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape cur = input_shape;
  if (cur.height < 1 || cur.width < 1 || cur.channels < 1)
    throw ShapeError("network input shape " + ToString(cur) + " is empty");
  for (size_t i = 0; i < layers.size(); ++i) {
    if (std::holds_alternative<SoftmaxLayer>(layers[i]) && i + 1 != layers.size())
      throw ShapeError(LayerLabel(i, layers[i]) + ": softmax must be the last layer");
    cur = LayerOutputShape(layers[i], cur, i);
    shapes.push_back(cur);
  }
  return shapes;
}

Shape Network::OutputShape() const {
  const auto shapes = InferShapes();
  return shapes.empty() ? input_shape : shapes.back();
}

bool Network::IsConv(size_t layer_idx) const {
  return layer_idx < layers.size() && std::holds_alternative<ConvLayer>(layers[layer_idx]);
}

const ConvLayer& Network::Conv(size_t layer_idx) const {
  if (!IsConv(layer_idx))
    throw ValidationError("layer " + std::to_string(layer_idx) +
                          " is not a conv layer");
  return std::get<ConvLayer>(layers[layer_idx]);
}

std::vector<size_t> Network::ConvIndices() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < layers.size(); ++i)
    if (IsConv(i)) out.push_back(i);
  return out;
}

bool Network::operator==(const Network& other) const {
  return input_shape == other.input_shape && name == other.name &&
         seed == other.seed && layers == other.layers;
}

int OutputSize(int in, int k, int stride) { return (in - k) / stride + 1; }

Vector ExtractPatch(const Tensor& input, int k, int stride, int row, int col) {
  const int c = input.shape.channels;
  Vector x(k * k * c + 1);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      x.segment((i * k + j) * c, c) =
          input.data.col((row * stride + i) * input.shape.width + col * stride + j);
  x(k * k * c) = 1.0;
  return x;
}

Matrix Im2Col(const Tensor& input, int k, int stride) {
  const int c = input.shape.channels;
  const int oh = OutputSize(input.shape.height, k, stride);
  const int ow = OutputSize(input.shape.width, k, stride);
  Matrix cols(k * k * c, oh * ow);
  for (int r = 0; r < oh; ++r)
    for (int q = 0; q < ow; ++q) {
      auto dst = cols.col(r * ow + q);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          dst.segment((i * k + j) * c, c) =
              input.data.col((r * stride + i) * input.shape.width + q * stride + j);
    }
  return cols;
}

Tensor ConvForward(const ConvLayer& layer, const Tensor& input) {
  if (input.shape.channels != layer.c)
    throw ShapeError("conv: input has " + std::to_string(input.shape.channels) +
                     " channels, layer expects " + std::to_string(layer.c));
  if (input.shape.height < layer.k || input.shape.width < layer.k)
    throw ShapeError("conv: input " + ToString(input.shape) +
                     " smaller than filter size " + std::to_string(layer.k));
  const Shape out_shape{OutputSize(input.shape.height, layer.k, layer.stride),
                        OutputSize(input.shape.width, layer.k, layer.stride), layer.d};
  const Matrix w = layer.WeightsD();
  const auto lin = w.leftCols(layer.PatchSize());
  Matrix out;
  if (layer.k == 1 && layer.stride == 1)
    out.noalias() = lin * input.data;
  else
    out.noalias() = lin * Im2Col(input, layer.k, layer.stride);
  out.colwise() += w.col(layer.PatchSize());
  return Tensor(out_shape, std::move(out));
}

Tensor ApplyLayer(const Layer& layer, const Tensor& input, size_t layer_idx) {
  // Validates the shape first so mismatches name the layer.
  LayerOutputShape(layer, input.shape, layer_idx);
  return std::visit(
      Overloaded{
          [&](const ConvLayer& l) { return ConvForward(l, input); },
          [&](const ReluLayer&) {
            return Tensor(input.shape, input.data.cwiseMax(0.0));
          },
          [&](const MaxPoolLayer& l) { return MaxPoolForward(l, input); },
          [&](const FlattenLayer&) {
            const int n = static_cast<int>(input.data.size());
            return Tensor(Shape{1, 1, n},
                          Eigen::Map<const Matrix>(input.data.data(), n, 1));
          },
          [&](const FullyConnectedLayer& l) {
            const Matrix w = l.weights.cast<double>();
            const auto in_dim = w.cols() - 1;
            Matrix out = w.leftCols(in_dim) * input.data + w.col(in_dim);
            return Tensor(Shape{1, 1, static_cast<int>(w.rows())}, std::move(out));
          },
          [&](const SoftmaxLayer&) { return SoftmaxForward(input); },
      },
      layer);
}

Tensor ForwardRange(const Network& net, const Tensor& input, size_t begin,
                    size_t end, std::vector<Tensor>* activations) {
  if (end > net.layers.size() || begin > end)
    throw ValidationError("ForwardRange: bad layer range [" + std::to_string(begin) +
                          ", " + std::to_string(end) + ")");
  if (begin == 0 && !(input.shape == net.input_shape))
    throw ShapeError("forward: input shape " + ToString(input.shape) +
                     " does not match network input " + ToString(net.input_shape));
  if (activations != nullptr) activations->resize(net.layers.size());
  Tensor cur = input;
  for (size_t i = begin; i < end; ++i) {
    cur = ApplyLayer(net.layers[i], cur, i);
    if (activations != nullptr) (*activations)[i] = cur;
  }
  return cur;
}

Tensor Forward(const Network& net, const Tensor& input, std::vector<Tensor>* activations) {
  return ForwardRange(net, input, 0, net.layers.size(), activations);
}

int Predict(const Network& net, const Tensor& input) {
  const Tensor out = Forward(net, input);
  Eigen::Index arg = 0;
  out.data.col(0).maxCoeff(&arg);
  return static_cast<int>(arg);
}

ArchSpec ToyArch(int hw, int channels, int num_classes) {
  ArchSpec a;
  a.input = Shape{hw, hw, channels};
  a.num_classes = num_classes;
  if (hw >= 32)
    a.convs = {{5, 16, 1, 2}, {3, 32, 1, 2}, {3, 32, 1, 0}};
  else
    a.convs = {{3, 16, 1, 0}, {3, 32, 1, 2}, {3, 32, 1, 0}};
  return a;
}

Network BuildNetwork(const ArchSpec& arch, uint64_t seed, std::string name) {
  std::mt19937_64 rng(seed);
  Network net;
  net.input_shape = arch.input;
  net.name = std::move(name);
  net.seed = seed;
  int channels = arch.input.channels;
  for (const ConvSpec& s : arch.convs) {
    ConvLayer conv;
    conv.k = s.k;
    conv.c = channels;
    conv.d = s.d;
    conv.stride = s.stride;
    conv.weights = WeightMatrix::Zero(s.d, conv.PatchSize() + 1);
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / conv.PatchSize()));
    for (int i = 0; i < s.d; ++i)
      for (int j = 0; j < conv.PatchSize(); ++j)
        conv.weights(i, j) = static_cast<float>(init(rng));
    net.layers.emplace_back(std::move(conv));
    net.layers.emplace_back(ReluLayer{});
    if (s.pool > 0) net.layers.emplace_back(MaxPoolLayer{s.pool, s.pool});
    channels = s.d;
  }
  net.layers.emplace_back(FlattenLayer{});
  const Shape flat = net.OutputShape();
  FullyConnectedLayer fc;
  fc.weights = WeightMatrix::Zero(arch.num_classes, flat.channels + 1);
  std::normal_distribution<double> init(0.0, std::sqrt(1.0 / flat.channels));
  for (int i = 0; i < arch.num_classes; ++i)
    for (int j = 0; j < flat.channels; ++j) fc.weights(i, j) = static_cast<float>(init(rng));
  net.layers.emplace_back(std::move(fc));
  net.layers.emplace_back(SoftmaxLayer{});
  net.InferShapes();
  return net;
}

Network ReplaceConv(const Network& net, size_t layer_idx, const Matrix& w_prime,
                    const Matrix& p, const Vector& b) {
  const ConvLayer& orig = net.Conv(layer_idx);
  const int d_prime = static_cast<int>(w_prime.rows());
  if (d_prime < 1 || d_prime > orig.d)
    throw ValidationError("ReplaceConv: rank " + std::to_string(d_prime) +
                          " outside [1, " + std::to_string(orig.d) + "] at layer " +
                          std::to_string(layer_idx));
  if (w_prime.cols() != orig.PatchSize() + 1)
    throw ShapeError("ReplaceConv: W' has " + std::to_string(w_prime.cols()) +
                     " columns, layer " + std::to_string(layer_idx) + " needs " +
                     std::to_string(orig.PatchSize() + 1));
  if (p.rows() != orig.d || p.cols() != d_prime)
    throw ShapeError("ReplaceConv: P is " + std::to_string(p.rows()) + "x" +
                     std::to_string(p.cols()) + ", expected " + std::to_string(orig.d) +
                     "x" + std::to_string(d_prime));
  if (b.size() != orig.d)
    throw ShapeError("ReplaceConv: bias has " + std::to_string(b.size()) +
                     " entries, expected " + std::to_string(orig.d));
  CheckFinite(w_prime, "ReplaceConv(W')");
  CheckFinite(p, "ReplaceConv(P)");
  CheckFinite(b, "ReplaceConv(b)");

  ConvLayer reduce;
  reduce.k = orig.k;
  reduce.c = orig.c;
  reduce.d = d_prime;
  reduce.stride = orig.stride;
  reduce.weights = w_prime.cast<float>();
  reduce.part = ConvPart::kReduce;

  ConvLayer restore;
  restore.k = 1;
  restore.c = d_prime;
  restore.d = orig.d;
  restore.stride = 1;
  restore.weights.resize(orig.d, d_prime + 1);
  restore.weights.leftCols(d_prime) = p.cast<float>();
  restore.weights.col(d_prime) = b.cast<float>();
  restore.part = ConvPart::kRestore;

  Network out = net;
  out.layers.erase(out.layers.begin() + static_cast<std::ptrdiff_t>(layer_idx));
  out.layers.insert(out.layers.begin() + static_cast<std::ptrdiff_t>(layer_idx),
                    {Layer(std::move(reduce)), Layer(std::move(restore))});
  out.InferShapes();
  return out;
}

size_t AlignedIndex(const Network& approx, size_t original_idx) {
  size_t orig = 0;
  for (size_t j = 0; j < approx.layers.size(); ++j) {
    const bool reduce = approx.IsConv(j) && approx.Conv(j).part == ConvPart::kReduce;
    if (orig == original_idx) return j;
    if (!reduce) ++orig;
  }
  throw ValidationError("layer " + std::to_string(original_idx) +
                        " has no counterpart in network \"" + approx.name + "\"");
}

std::vector<double> ConvMultiplies(const Network& net) {
  const auto shapes = net.InferShapes();
  std::vector<double> out(net.layers.size(), 0.0);
  for (size_t i = 0; i < net.layers.size(); ++i)
    if (net.IsConv(i)) {
      const ConvLayer& l = net.Conv(i);
      out[i] = static_cast<double>(l.d) * l.PatchSize() * shapes[i].Positions();
    }
  return out;
}

void SaveNetwork(const Network& net, const std::filesystem::path& dir) {
  net.InferShapes();
  std::filesystem::create_directories(dir);
  nlohmann::json layers = nlohmann::json::array();
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const std::string file = "layer" + std::to_string(i) + "_weights.bin";
    nlohmann::json j;
    j["type"] = LayerTypeName(net.layers[i]);
    std::visit(Overloaded{
                   [&](const ConvLayer& l) {
                     j["k"] = l.k;
                     j["c"] = l.c;
                     j["d"] = l.d;
                     j["stride"] = l.stride;
                     j["part"] = PartName(l.part);
                     j["weights"] = {{"file", file}, {"dims", DimsJson(l.weights)}};
                     WriteBlob(dir / file, WeightsToBlob(l.weights));
                   },
                   [&](const MaxPoolLayer& l) {
                     j["size"] = l.size;
                     j["stride"] = l.stride;
                   },
                   [&](const FullyConnectedLayer& l) {
                     j["weights"] = {{"file", file}, {"dims", DimsJson(l.weights)}};
                     WriteBlob(dir / file, WeightsToBlob(l.weights));
                   },
                   [](const auto&) {},
               },
               net.layers[i]);
    layers.push_back(std::move(j));
  }
  nlohmann::json manifest;
  manifest["format"] = "LRCM";
  manifest["format_version"] = 1;
  manifest["name"] = net.name;
  manifest["seed"] = net.seed;
  manifest["input_shape"] = {net.input_shape.height, net.input_shape.width,
                             net.input_shape.channels};
  manifest["layers"] = std::move(layers);
  const std::string text = manifest.dump(2) + "\n";
  WriteFileBytes(dir / "manifest.json",
                 std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

Network LoadNetwork(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path))
    throw ValidationError("model directory " + dir.string() + " has no manifest.json");
  const auto bytes = ReadFileBytes(manifest_path);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  try {
    if (m.value("format", std::string("LRCM")) != "LRCM")
      throw MagicError(manifest_path.string() + ": not an LRCM manifest");
    const int version = m.at("format_version").get<int>();
    if (version != 1)
      throw VersionError(manifest_path.string() + ": unsupported format_version " +
                         std::to_string(version));
    Network net;
    net.name = m.value("name", std::string());
    net.seed = m.value("seed", uint64_t{0});
    const auto shape = m.at("input_shape").get<std::vector<int>>();
    if (shape.size() != 3)
      throw FormatError(manifest_path.string() + ": input_shape must have 3 entries");
    net.input_shape = Shape{shape[0], shape[1], shape[2]};
    const auto& layers = m.at("layers");
    for (size_t i = 0; i < layers.size(); ++i) {
      const auto& j = layers[i];
      const std::string where = manifest_path.string() + " layer " + std::to_string(i);
      const std::string type = j.at("type").get<std::string>();
      if (type == "conv") {
        ConvLayer l;
        l.k = j.at("k").get<int>();
        l.c = j.at("c").get<int>();
        l.d = j.at("d").get<int>();
        l.stride = j.at("stride").get<int>();
        l.part = ParsePart(j.value("part", std::string("whole")), where);
        l.weights = LoadWeights(dir, j.at("weights"), where);
        net.layers.emplace_back(std::move(l));
      } else if (type == "relu") {
        net.layers.emplace_back(ReluLayer{});
      } else if (type == "maxpool") {
        net.layers.emplace_back(MaxPoolLayer{j.at("size").get<int>(), j.at("stride").get<int>()});
      } else if (type == "flatten") {
        net.layers.emplace_back(FlattenLayer{});
      } else if (type == "fc") {
        net.layers.emplace_back(FullyConnectedLayer{LoadWeights(dir, j.at("weights"), where)});
      } else if (type == "softmax") {
        net.layers.emplace_back(SoftmaxLayer{});
      } else {
        throw FormatError(where + ": unknown layer type \"" + type + "\"");
      }
    }
    try {
      net.InferShapes();
    } catch (const ShapeError& e) {
      throw ShapeMismatchError(manifest_path.string() + ": " + e.what());
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace lrc
