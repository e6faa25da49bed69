// include/lrc/pipeline.h

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

#ifndef LRC_PIPELINE_H_
#define LRC_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrc/approx.h"
#include "lrc/dataset.h"
#include "lrc/model.h"
#include "lrc/rank_select.h"

namespace lrc {

// How many responses to draw per layer: `images` images times
// `positions_per_image` positions each.
struct SampleBudget {
  size_t images = 300;
  int positions_per_image = kDefaultPositionsPerImage;
  uint64_t seed = 1;

  size_t Samples() const { return images * positions_per_image; }
};

struct LayerReport {
  size_t layer_idx = 0;  // conv layer index in the original network
  int d = 0;
  int d_prime = 0;
  bool replaced = false;
  // ||r(Y_orig) - r(Y_comp)||_F / ||r(Y_orig)||_F on evaluation samples.
  double reconstruction_error = 0;
  double sparsity = 0;             // zeros after ReLU, original network
  double sparsity_compressed = 0;  // same positions, compressed network
};

struct EvalReport {
  std::vector<LayerReport> layers;
  double accuracy_before = 0;
  double accuracy_after = 0;
  double predicted_speedup = 1;
  double multiplies_before = 0;
  double multiplies_after = 0;
  std::optional<double> measured_speedup;  // wall clock, only when benchmarked
  double energy_objective = 1;

  double AccuracyDelta() const { return accuracy_after - accuracy_before; }
};

nlohmann::json ReportToJson(const EvalReport& report);
std::string ReportTable(const EvalReport& report);

struct CompressOptions {
  // Exactly one of `ranks` (conv layer index -> d'; absent layers are kept)
  // and `target_speedup` (greedy rank selection) must be set.
  std::optional<std::map<size_t, int>> ranks;
  std::optional<double> target_speedup;
  std::map<size_t, int> pinned;  // only with target_speedup
  SolverConfig solver;
  SampleBudget budget;
  int threads = 1;
};

struct CompressionResult {
  Network network;
  RankPlan plan;
  EvalReport report;  // on the compression data, fresh sample positions
  std::map<size_t, LowRankResult> solutions;
};

// Sequential shallow-to-deep compression.  For each conv layer with a rank
// that reduces its cost: draw fresh samples (paired with the current
// partially compressed network in asymmetric mode), solve, factorize
// M = P Q^T and replace the layer by W' = Q^T W and the 1x1 restore layer
// [P | b].
CompressionResult Compress(const Network& orig, const ToyDataset& data,
                           const CompressOptions& opts);

// Per-layer spectra of the original network's pre-ReLU responses.
std::vector<LayerSpectrum> ComputeSpectra(const Network& net, const ToyDataset& data,
                                          const SampleBudget& budget);

EvalReport Evaluate(const Network& orig, const Network& compressed, const ToyDataset& data,
                    const SampleBudget& budget, int threads = 1);

double TopOneAccuracy(const Network& net, const ToyDataset& data, int threads = 1);

// Fraction of exactly-zero activations after the ReLU that follows conv
// layer `layer_idx`, over `samples` sampled positions.
double MeasureSparsity(const Network& net, const ToyDataset& data, size_t layer_idx,
                       const SampleBudget& samples);

struct BenchResult {
  double median_seconds = 0;  // per forward pass
  double min_seconds = 0;
  double max_seconds = 0;
  int repetitions = 0;
};

// Single-threaded wall clock of forward passes over up to 16 images of
// `data`, repeated `repetitions` (>= 3) times.
BenchResult Benchmark(const Network& net, const ToyDataset& data, int repetitions);

struct CompressionJob {
  std::filesystem::path model_path;
  std::filesystem::path dataset_path;
  std::optional<RankPlan> plan;
  std::optional<double> target_speedup;
  std::map<size_t, int> pinned;
  SolverConfig solver;
  SampleBudget budget;
  std::filesystem::path output_path;
  int threads = 1;
};

// Loads the inputs, runs Compress and saves the network to output_path.
CompressionResult RunCompressionJob(const CompressionJob& job);

}  // namespace lrc

#endif  // LRC_PIPELINE_H_
