// src/pipeline.cc

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

#include "lrc/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "lrc/error.h"

namespace lrc {

namespace {

enum class SeedPurpose : uint64_t { kSolve = 1, kSpectra = 2, kEval = 3 };

// splitmix64 finaliser over (seed, purpose, layer) so solver, spectrum and
// evaluation samples never share a stream.
uint64_t DeriveSeed(uint64_t seed, SeedPurpose purpose, size_t layer) {
  uint64_t x = seed ^ (static_cast<uint64_t>(purpose) << 56) ^ (layer * 0x9E3779B97F4A7C15ull);
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

size_t CappedSamples(const Network& net, const ToyDataset& data, size_t layer_idx,
                     const SampleBudget& budget) {
  const size_t available =
      data.size() * static_cast<size_t>(net.InferShapes()[layer_idx].Positions());
  return std::min(budget.Samples(), available);
}

// Output of layers [0, last] of `net` at the given output positions.
Matrix OutputsAt(const Network& net, const ToyDataset& data, size_t last,
                 const std::vector<SamplePosition>& positions) {
  const Shape out_shape = net.InferShapes()[last];
  Matrix out(out_shape.channels, static_cast<Eigen::Index>(positions.size()));
  std::map<uint32_t, std::vector<size_t>> by_image;
  for (size_t i = 0; i < positions.size(); ++i) by_image[positions[i].image].push_back(i);
  for (const auto& [image, slots] : by_image) {
    const Tensor t = ForwardRange(net, data.Image(image), 0, last + 1);
    for (size_t s : slots)
      out.col(static_cast<Eigen::Index>(s)) =
          t.data.col(positions[s].row * out_shape.width + positions[s].col);
  }
  return out;
}

double ZeroFraction(const Matrix& pre_relu) {
  if (pre_relu.size() == 0) return 0.0;
  return static_cast<double>((pre_relu.array() <= 0).count()) /
         static_cast<double>(pre_relu.size());
}

// Compressed-network counterpart of original conv layer `idx`: the index of
// its last layer (restore when replaced) and its rank.
struct Counterpart {
  size_t last = 0;
  int d_prime = 0;
  bool replaced = false;
};

Counterpart FindCounterpart(const Network& compressed, size_t idx) {
  const size_t j = AlignedIndex(compressed, idx);
  const ConvLayer& conv = compressed.Conv(j);
  if (conv.part == ConvPart::kReduce) return {j + 1, conv.d, true};
  return {j, conv.d, false};
}

std::string WithLayer(size_t idx, const char* what) {
  return "compress: layer " + std::to_string(idx) + ": " + what;
}

}  // namespace

nlohmann::json ReportToJson(const EvalReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : report.layers)
    layers.push_back({{"layer_idx", l.layer_idx},
                      {"d", l.d},
                      {"d_prime", l.d_prime},
                      {"replaced", l.replaced},
                      {"reconstruction_error", l.reconstruction_error},
                      {"sparsity", l.sparsity},
                      {"sparsity_compressed", l.sparsity_compressed}});
  return {{"layers", layers},
          {"accuracy_before", report.accuracy_before},
          {"accuracy_after", report.accuracy_after},
          {"accuracy_delta", report.AccuracyDelta()},
          {"predicted_speedup", report.predicted_speedup},
          {"multiplies_before", report.multiplies_before},
          {"multiplies_after", report.multiplies_after},
          {"measured_speedup", report.measured_speedup ? nlohmann::json(*report.measured_speedup)
                                                       : nlohmann::json()},
          {"energy_objective", report.energy_objective}};
}

std::string ReportTable(const EvalReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << "layer      d     d'  replaced  recon_err   sparsity\n";
  for (const auto& l : report.layers) {
    os.width(5);
    os << l.layer_idx << "  ";
    os.width(5);
    os << l.d << "  ";
    os.width(5);
    os << l.d_prime << "  " << (l.replaced ? "     yes" : "      no") << "  ";
    os.width(9);
    os << l.reconstruction_error << "  ";
    os.width(9);
    os << l.sparsity << "\n";
  }
  os << "top-1 accuracy: " << report.accuracy_before << " -> " << report.accuracy_after
     << " (delta " << report.AccuracyDelta() << ")\n";
  os << "predicted speedup: " << report.predicted_speedup
     << "x  (multiplies " << report.multiplies_before << " -> " << report.multiplies_after
     << ")\n";
  if (report.measured_speedup)
    os << "measured speedup: " << *report.measured_speedup << "x\n";
  os << "energy objective: " << report.energy_objective << "\n";
  return os.str();
}

double TopOneAccuracy(const Network& net, const ToyDataset& data, int threads) {
  if (data.size() == 0) return 0.0;
  std::vector<uint8_t> correct(data.size(), 0);
  auto work = [&](size_t begin, size_t step) {
    for (size_t i = begin; i < data.size(); i += step)
      correct[i] = Predict(net, data.Image(i)) == data.labels[i];
  };
  const size_t workers = static_cast<size_t>(std::max(1, threads));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
    for (auto& th : pool) th.join();
  }
  size_t hits = 0;
  for (uint8_t c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double MeasureSparsity(const Network& net, const ToyDataset& data, size_t layer_idx,
                       const SampleBudget& samples) {
  net.Conv(layer_idx);
  if (layer_idx + 1 >= net.layers.size() ||
      !std::holds_alternative<ReluLayer>(net.layers[layer_idx + 1]))
    throw ValidationError("sparsity: layer " + std::to_string(layer_idx) +
                          " is not followed by a ReLU");
  const ResponseSet rs = SampleResponses(net, data, layer_idx,
                                         CappedSamples(net, data, layer_idx, samples),
                                         samples.seed, samples.positions_per_image);
  return ZeroFraction(rs.y);
}

std::vector<LayerSpectrum> ComputeSpectra(const Network& net, const ToyDataset& data,
                                          const SampleBudget& budget) {
  std::vector<LayerSpectrum> out;
  for (size_t idx : net.ConvIndices()) {
    const ResponseSet rs =
        SampleResponses(net, data, idx, CappedSamples(net, data, idx, budget),
                        DeriveSeed(budget.seed, SeedPurpose::kSpectra, idx),
                        budget.positions_per_image);
    out.push_back(PcaEnergy(rs));
  }
  return out;
}

EvalReport Evaluate(const Network& orig, const Network& compressed, const ToyDataset& data,
                    const SampleBudget& budget, int threads) {
  if (!(orig.input_shape == compressed.input_shape))
    throw ShapeError("evaluate: networks have different input shapes (" +
                     ToString(orig.input_shape) + " vs " + ToString(compressed.input_shape) + ")");
  EvalReport report;
  report.accuracy_before = TopOneAccuracy(orig, data, threads);
  report.accuracy_after = TopOneAccuracy(compressed, data, threads);

  const ComplexityModel model = ComplexityModel::FromNetwork(orig);
  std::map<size_t, int> ranks;
  std::vector<LayerSpectrum> spectra;
  const auto shapes = orig.InferShapes();
  for (size_t idx : orig.ConvIndices()) {
    const Counterpart cp = FindCounterpart(compressed, idx);
    const ConvLayer& conv = orig.Conv(idx);
    LayerReport lr;
    lr.layer_idx = idx;
    lr.d = conv.d;
    lr.d_prime = cp.replaced ? cp.d_prime : conv.d;
    lr.replaced = cp.replaced;
    ranks[idx] = lr.d_prime;

    const auto positions = SampleSchedule(
        data.size(), shapes[idx].height, shapes[idx].width,
        CappedSamples(orig, data, idx, budget),
        budget.positions_per_image, DeriveSeed(budget.seed, SeedPurpose::kEval, idx));
    ResponseSet rs;
    rs.layer_idx = idx;
    rs.provenance = positions;
    rs.y = ResponsesAt(orig, data, idx, positions);
    rs.mean = RowMean(rs.y);
    const Matrix y_comp = OutputsAt(compressed, data, cp.last, positions);
    const Matrix act_orig = rs.y.cwiseMax(0.0);
    const double denom = act_orig.norm();
    const double num = (act_orig - y_comp.cwiseMax(0.0)).norm();
    lr.reconstruction_error = denom > 0 ? num / denom : num;
    lr.sparsity = ZeroFraction(rs.y);
    lr.sparsity_compressed = ZeroFraction(y_comp);
    if (rs.y.cols() >= 2) spectra.push_back(PcaEnergy(rs));
    report.layers.push_back(lr);
  }
  report.predicted_speedup = PredictedSpeedup(ranks, model);
  for (double m : ConvMultiplies(orig)) report.multiplies_before += m;
  for (double m : ConvMultiplies(compressed)) report.multiplies_after += m;
  if (spectra.size() == ranks.size()) report.energy_objective = EnergyObjective(spectra, ranks);
  return report;
}

CompressionResult Compress(const Network& orig, const ToyDataset& data,
                           const CompressOptions& opts) {
  if (opts.ranks.has_value() == opts.target_speedup.has_value())
    throw ValidationError("compress: give exactly one of a rank plan or a target speedup");
  if (opts.ranks && !opts.pinned.empty())
    throw ValidationError("compress: pinned ranks need a target speedup");
  opts.solver.Validate();
  if (!(data.shape == orig.input_shape))
    throw ShapeError("compress: dataset images are " + ToString(data.shape) +
                     ", network expects " + ToString(orig.input_shape));
  if (opts.budget.images == 0 || opts.budget.positions_per_image < 1)
    throw ValidationError("compress: sample budget must be positive");

  const ComplexityModel model = ComplexityModel::FromNetwork(orig);
  CompressionResult result;
  if (opts.target_speedup) {
    const auto spectra = ComputeSpectra(orig, data, opts.budget);
    result.plan = GreedySelect(spectra, model, *opts.target_speedup, opts.pinned);
  } else {
    for (const auto& [idx, r] : *opts.ranks) {
      const ConvLayer& conv = orig.Conv(idx);
      if (r < 1 || r > conv.d)
        throw ValidationError("compress: rank " + std::to_string(r) + " for layer " +
                              std::to_string(idx) + " outside [1, " + std::to_string(conv.d) +
                              "]");
    }
    result.plan.ranks = *opts.ranks;
    result.plan.predicted_speedup = PredictedSpeedup(result.plan.ranks, model);
  }

  Network work = orig;
  bool upstream_replaced = false;
  for (size_t idx : orig.ConvIndices()) {
    const auto it = result.plan.ranks.find(idx);
    if (it == result.plan.ranks.end()) continue;
    const int d_prime = it->second;
    if (!model.Layer(idx).Replaced(d_prime, true)) {
      spdlog::info("compress: layer {} kept (rank {} does not reduce cost)", idx, d_prime);
      continue;
    }
    const ConvLayer& conv = orig.Conv(idx);
    const size_t n = CappedSamples(orig, data, idx, opts.budget);
    const uint64_t seed = DeriveSeed(opts.budget.seed, SeedPurpose::kSolve, idx);
    LowRankResult sol;
    try {
      if (opts.solver.mode == SolverMode::kLinear) {
        const ResponseSet rs = SampleResponses(orig, data, idx, n, seed,
                                               opts.budget.positions_per_image);
        sol = SolveLinear(rs, d_prime);
      } else if (opts.solver.mode == SolverMode::kNonlinearSymmetric || !upstream_replaced) {
        const ResponseSet rs = SampleResponses(orig, data, idx, n, seed,
                                               opts.budget.positions_per_image);
        sol = SolveNonlinear(rs.y, rs.y, d_prime, opts.solver);
      } else {
        const PairedResponseSet pr = SampleResponsePairs(
            orig, work, data, idx, n, seed, opts.budget.positions_per_image);
        sol = SolveNonlinear(pr.base.y, pr.y_hat, d_prime, opts.solver);
      }
    } catch (const NumericalError& e) {
      throw NumericalError(WithLayer(idx, e.what()));
    }
    const Matrix w_prime = sol.q.transpose() * conv.WeightsD();
    work = ReplaceConv(work, AlignedIndex(work, idx), w_prime, sol.p, sol.b);
    upstream_replaced = true;
    spdlog::info("compress: layer {} d={} -> d'={} (objective {:.6g})", idx, conv.d, d_prime,
                 sol.final_nonlinear_objective);
    result.solutions.emplace(idx, std::move(sol));
  }
  result.network = std::move(work);
  result.report = Evaluate(orig, result.network, data, opts.budget, opts.threads);
  if (!opts.target_speedup) result.plan.energy_objective = result.report.energy_objective;
  return result;
}

BenchResult Benchmark(const Network& net, const ToyDataset& data, int repetitions) {
  if (repetitions < 3) throw ValidationError("bench: repetitions must be >= 3");
  if (data.size() == 0) throw ValidationError("bench: dataset is empty");
  const size_t count = std::min<size_t>(16, data.size());
  std::vector<Tensor> images;
  for (size_t i = 0; i < count; ++i) images.push_back(data.Image(i));
  Forward(net, images[0]);  // warm-up
  std::vector<double> times;
  double sink = 0;
  for (int r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    for (const Tensor& img : images) sink += Forward(net, img).data(0, 0);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count() /
                    static_cast<double>(count));
  }
  if (!std::isfinite(sink)) spdlog::warn("bench: non-finite network output");
  std::sort(times.begin(), times.end());
  BenchResult out;
  out.repetitions = repetitions;
  out.median_seconds = times[times.size() / 2];
  out.min_seconds = times.front();
  out.max_seconds = times.back();
  return out;
}

CompressionResult RunCompressionJob(const CompressionJob& job) {
  if (job.plan.has_value() == job.target_speedup.has_value())
    throw ValidationError("compress: give exactly one of --plan/--ranks or --target-speedup");
  const Network orig = LoadNetwork(job.model_path);
  const ToyDataset data = LoadDataset(job.dataset_path);
  CompressOptions opts;
  if (job.plan) opts.ranks = job.plan->ranks;
  opts.target_speedup = job.target_speedup;
  opts.pinned = job.pinned;
  opts.solver = job.solver;
  opts.budget = job.budget;
  opts.threads = job.threads;
  CompressionResult result = Compress(orig, data, opts);
  if (job.plan) {
    result.plan.pinned = job.plan->pinned;
    result.plan.energy_objective = job.plan->energy_objective;
  }
  SaveNetwork(result.network, job.output_path);
  return result;
}

}  // namespace lrc
