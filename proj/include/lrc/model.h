// include/lrc/model.h

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

#ifndef LRC_MODEL_H_
#define LRC_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lrc/numerics.h"

namespace lrc {

// Weights are held in float32, the precision they are stored in on disk.
// Forward passes and solvers promote to double.
using WeightMatrix = Eigen::MatrixXf;

struct Shape {
  int height = 0;
  int width = 0;
  int channels = 0;

  int Positions() const { return height * width; }
  bool operator==(const Shape&) const = default;
};

std::string ToString(const Shape& s);

// A height x width x channels feature map.  `data` is channels x positions,
// position p = row * width + col, so each column is the channel vector at
// one spatial location.
struct Tensor {
  Shape shape;
  Matrix data;

  Tensor() = default;
  Tensor(Shape s, Matrix m);
  static Tensor Zeros(Shape s);

  double& at(int row, int col, int ch) { return data(ch, row * shape.width + col); }
  double at(int row, int col, int ch) const {
    return data(ch, row * shape.width + col);
  }
};

// A decomposed conv layer is a kReduce (W', k x k x c -> d') followed by a
// kRestore (P, 1 x 1 x d' -> d).
enum class ConvPart { kWhole, kReduce, kRestore };

// A k x k x c -> d convolution with valid padding.  weights is
// d x (k*k*c + 1); row j is filter j flattened in (kernel_row, kernel_col,
// channel) order with channel fastest, followed by the bias.
struct ConvLayer {
  int k = 1;
  int c = 1;
  int d = 1;
  int stride = 1;
  WeightMatrix weights;
  ConvPart part = ConvPart::kWhole;

  int PatchSize() const { return k * k * c; }
  Matrix WeightsD() const { return weights.cast<double>(); }
};

struct ReluLayer {};

struct MaxPoolLayer {
  int size = 2;
  int stride = 2;
};

struct FlattenLayer {};

// weights is out x (in + 1), bias in the last column.
struct FullyConnectedLayer {
  WeightMatrix weights;
};

struct SoftmaxLayer {};

using Layer = std::variant<ConvLayer, ReluLayer, MaxPoolLayer, FlattenLayer,
                           FullyConnectedLayer, SoftmaxLayer>;

std::string LayerTypeName(const Layer& layer);

bool operator==(const ConvLayer& a, const ConvLayer& b);
bool operator==(const FullyConnectedLayer& a, const FullyConnectedLayer& b);
inline bool operator==(const ReluLayer&, const ReluLayer&) { return true; }
inline bool operator==(const MaxPoolLayer& a, const MaxPoolLayer& b) {
  return a.size == b.size && a.stride == b.stride;
}
inline bool operator==(const FlattenLayer&, const FlattenLayer&) { return true; }
inline bool operator==(const SoftmaxLayer&, const SoftmaxLayer&) { return true; }

struct Network {
  Shape input_shape;
  std::vector<Layer> layers;
  std::string name;
  uint64_t seed = 0;

  // Output shape of every layer; throws ShapeError naming the first layer
  // that does not compose.  Also enforces the softmax-last rule.
  std::vector<Shape> InferShapes() const;
  Shape OutputShape() const;

  const ConvLayer& Conv(size_t layer_idx) const;
  bool IsConv(size_t layer_idx) const;
  std::vector<size_t> ConvIndices() const;

  bool operator==(const Network& other) const;
};

// ---- Inference ------------------------------------------------------------

// Output spatial size of a valid window: floor((in - k) / stride) + 1.
int OutputSize(int in, int k, int stride);

// The k*k*c input volume feeding output position (row, col), flattened in
// the layer's weight order with a trailing 1 for the bias.
Vector ExtractPatch(const Tensor& input, int k, int stride, int row, int col);

// All patches as columns, (k*k*c) x positions, without the bias row.
Matrix Im2Col(const Tensor& input, int k, int stride);

Tensor ConvForward(const ConvLayer& layer, const Tensor& input);
Tensor ApplyLayer(const Layer& layer, const Tensor& input, size_t layer_idx);

// Runs layers [begin, end).  If `activations` is non-null it receives the
// output of each layer run, indexed by layer index (entries outside the
// range are left empty).
Tensor ForwardRange(const Network& net, const Tensor& input, size_t begin,
                    size_t end, std::vector<Tensor>* activations = nullptr);
Tensor Forward(const Network& net, const Tensor& input,
               std::vector<Tensor>* activations = nullptr);

int Predict(const Network& net, const Tensor& input);

// ---- Construction and surgery ---------------------------------------------

struct ConvSpec {
  int k = 3;
  int d = 16;
  int stride = 1;
  int pool = 0;  // max-pool size (and stride) after the ReLU; 0 = none
};

struct ArchSpec {
  Shape input;
  std::vector<ConvSpec> convs;
  int num_classes = 2;
};

// The default three-conv toy architecture for hw x hw x channels inputs.
ArchSpec ToyArch(int hw, int channels, int num_classes);

// conv -> relu [-> pool] per ConvSpec, then flatten -> fc -> softmax.
// He-normal weights, zero biases, drawn from `seed`.
Network BuildNetwork(const ArchSpec& arch, uint64_t seed, std::string name);

// Replaces conv layer `layer_idx` (weights W, d filters) by two conv layers:
//   reduce:  d' filters k x k x c, weights w_prime (d' x (k*k*c+1));
//   restore: d filters 1 x 1 x d', weights [p | b].
// With w_prime = Q^T W this computes P Q^T W x + b.
Network ReplaceConv(const Network& net, size_t layer_idx,
                    const Matrix& w_prime, const Matrix& p, const Vector& b);

// Maps the index of a layer in the original network to its index in a
// network where some earlier conv layers were replaced (each replacement
// adds one layer).
size_t AlignedIndex(const Network& approx, size_t original_idx);

// Multiplies (bias excluded) spent by each conv layer in one forward pass,
// indexed by layer (0 for non-conv layers).
std::vector<double> ConvMultiplies(const Network& net);

// ---- LRCM v1 directory format ---------------------------------------------

void SaveNetwork(const Network& net, const std::filesystem::path& dir);
Network LoadNetwork(const std::filesystem::path& dir);

}  // namespace lrc

#endif  // LRC_MODEL_H_
