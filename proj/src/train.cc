// src/train.cc

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

#include "lrc/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "lrc/error.h"

namespace lrc {

namespace {

// Scatter-add of patch gradients back onto the input map (inverse of Im2Col).
void Col2ImAdd(const Matrix& dcols, int k, int stride, Tensor* dinput) {
  const int c = dinput->shape.channels;
  const int oh = OutputSize(dinput->shape.height, k, stride);
  const int ow = OutputSize(dinput->shape.width, k, stride);
  for (int r = 0; r < oh; ++r)
    for (int q = 0; q < ow; ++q) {
      const auto src = dcols.col(r * ow + q);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          dinput->data.col((r * stride + i) * dinput->shape.width + q * stride + j) +=
              src.segment((i * k + j) * c, c);
    }
}

class Trainer {
 public:
  explicit Trainer(const Network& net) : net_(net) {
    params_.resize(net.layers.size());
    grads_.resize(net.layers.size());
    for (size_t i = 0; i < net.layers.size(); ++i) {
      if (const auto* conv = std::get_if<ConvLayer>(&net.layers[i]))
        params_[i] = conv->weights.cast<double>();
      else if (const auto* fc = std::get_if<FullyConnectedLayer>(&net.layers[i]))
        params_[i] = fc->weights.cast<double>();
      grads_[i] = Matrix::Zero(params_[i].rows(), params_[i].cols());
    }
    inputs_.resize(net.layers.size());
    cols_.resize(net.layers.size());
  }

  // Accumulates the gradient of one sample; returns (loss, correct).
  std::pair<double, bool> Accumulate(const Tensor& image, int label) {
    const size_t n_layers = net_.layers.size();
    Tensor cur = image;
    for (size_t i = 0; i + 1 < n_layers; ++i) {
      inputs_[i] = cur;
      cur = ForwardLayer(i, cur);
    }
    const Vector logits = cur.data.col(0);
    const double m = logits.maxCoeff();
    const Vector e = (logits.array() - m).exp().matrix();
    const double z = e.sum();
    const Vector prob = e / z;
    const double loss = -(logits(label) - m - std::log(z));
    Eigen::Index arg = 0;
    logits.maxCoeff(&arg);

    Matrix g = prob;
    g(label) -= 1.0;
    for (size_t i = n_layers - 1; i-- > 0;) g = BackwardLayer(i, g);
    return {loss, arg == label};
  }

  void Step(double lr, int batch) {
    const double scale = lr / batch;
    for (size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].size() == 0) continue;
      params_[i] -= scale * grads_[i];
      grads_[i].setZero();
    }
  }

  Network Export() const {
    Network out = net_;
    for (size_t i = 0; i < out.layers.size(); ++i) {
      if (auto* conv = std::get_if<ConvLayer>(&out.layers[i]))
        conv->weights = params_[i].cast<float>();
      else if (auto* fc = std::get_if<FullyConnectedLayer>(&out.layers[i]))
        fc->weights = params_[i].cast<float>();
    }
    return out;
  }

 private:
  Tensor ForwardLayer(size_t i, const Tensor& in) {
    const Layer& layer = net_.layers[i];
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      const Matrix& w = params_[i];
      const int p = conv->PatchSize();
      cols_[i] = (conv->k == 1 && conv->stride == 1) ? in.data
                                                     : Im2Col(in, conv->k, conv->stride);
      Matrix out = w.leftCols(p) * cols_[i];
      out.colwise() += w.col(p);
      return Tensor(Shape{OutputSize(in.shape.height, conv->k, conv->stride),
                          OutputSize(in.shape.width, conv->k, conv->stride), conv->d},
                    std::move(out));
    }
    if (std::holds_alternative<FullyConnectedLayer>(layer)) {
      const Matrix& w = params_[i];
      const auto in_dim = w.cols() - 1;
      Matrix out = w.leftCols(in_dim) * in.data + w.col(in_dim);
      return Tensor(Shape{1, 1, static_cast<int>(w.rows())}, std::move(out));
    }
    return ApplyLayer(layer, in, i);
  }

  // g is the gradient w.r.t. the output of layer i; returns the gradient
  // w.r.t. its input.
  Matrix BackwardLayer(size_t i, const Matrix& g) {
    const Layer& layer = net_.layers[i];
    const Tensor& in = inputs_[i];
    if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      const int p = conv->PatchSize();
      grads_[i].leftCols(p).noalias() += g * cols_[i].transpose();
      grads_[i].col(p) += g.rowwise().sum();
      if (i == 0) return Matrix();
      const Matrix dcols = params_[i].leftCols(p).transpose() * g;
      if (conv->k == 1 && conv->stride == 1) return dcols;
      Tensor din = Tensor::Zeros(in.shape);
      Col2ImAdd(dcols, conv->k, conv->stride, &din);
      return std::move(din.data);
    }
    if (std::holds_alternative<FullyConnectedLayer>(layer)) {
      const auto in_dim = params_[i].cols() - 1;
      grads_[i].leftCols(in_dim).noalias() += g * in.data.transpose();
      grads_[i].col(in_dim) += g;
      return params_[i].leftCols(in_dim).transpose() * g;
    }
    if (std::holds_alternative<ReluLayer>(layer))
      return (in.data.array() > 0).select(g, 0.0);
    if (std::holds_alternative<FlattenLayer>(layer))
      return Eigen::Map<const Matrix>(g.data(), in.data.rows(), in.data.cols());
    if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
      Matrix din = Matrix::Zero(in.data.rows(), in.data.cols());
      const int oh = OutputSize(in.shape.height, pool->size, pool->stride);
      const int ow = OutputSize(in.shape.width, pool->size, pool->stride);
      for (int r = 0; r < oh; ++r)
        for (int q = 0; q < ow; ++q)
          for (Eigen::Index ch = 0; ch < in.data.rows(); ++ch) {
            Eigen::Index best = (r * pool->stride) * in.shape.width + q * pool->stride;
            for (int a = 0; a < pool->size; ++a)
              for (int b = 0; b < pool->size; ++b) {
                const Eigen::Index idx =
                    (r * pool->stride + a) * in.shape.width + q * pool->stride + b;
                if (in.data(ch, idx) > in.data(ch, best)) best = idx;
              }
            din(ch, best) += g(ch, r * ow + q);
          }
      return din;
    }
    throw ValidationError("training: unsupported layer " + std::to_string(i));
  }

  const Network& net_;
  std::vector<Matrix> params_;
  std::vector<Matrix> grads_;
  std::vector<Tensor> inputs_;
  std::vector<Matrix> cols_;
};

}  // namespace

Network TrainToy(const Network& net, const ToyDataset& data, const TrainOptions& opts,
                 std::vector<EpochStats>* log) {
  if (net.layers.empty() || !std::holds_alternative<SoftmaxLayer>(net.layers.back()))
    throw ValidationError("train: network must end with a softmax layer");
  if (data.size() == 0) throw ValidationError("train: dataset is empty");
  if (!(data.shape == net.input_shape))
    throw ShapeError("train: dataset images are " + ToString(data.shape) +
                     ", network expects " + ToString(net.input_shape));
  if (net.OutputShape().channels < data.num_classes)
    throw ShapeError("train: network has fewer outputs than dataset classes");
  if (opts.epochs < 0 || opts.batch_size < 1 || !(opts.lr > 0))
    throw ValidationError("train: epochs >= 0, batch_size >= 1 and lr > 0 required");
  if (opts.epochs == 0) return net;

  Trainer trainer(net);
  std::mt19937_64 rng(opts.seed);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    double loss_sum = 0;
    size_t correct = 0;
    for (size_t start = 0; start < order.size(); start += opts.batch_size) {
      const size_t end = std::min(order.size(), start + opts.batch_size);
      for (size_t s = start; s < end; ++s) {
        const auto [loss, ok] =
            trainer.Accumulate(data.Image(order[s]), data.labels[order[s]]);
        loss_sum += loss;
        correct += ok;
      }
      if (!std::isfinite(loss_sum))
        throw TrainingError("train: loss became non-finite in epoch " +
                            std::to_string(epoch) + " (lr " + std::to_string(opts.lr) +
                            " too large?)");
      trainer.Step(opts.lr, static_cast<int>(end - start));
    }
    const EpochStats stats{loss_sum / data.size(),
                           static_cast<double>(correct) / data.size()};
    spdlog::debug("epoch {}: loss {:.4f} accuracy {:.3f}", epoch, stats.mean_loss,
                  stats.accuracy);
    if (log != nullptr) log->push_back(stats);
  }
  return trainer.Export();
}

}  // namespace lrc
