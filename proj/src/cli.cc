// src/cli.cc

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

#include "lrc/cli.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrc/dataset.h"
#include "lrc/error.h"
#include "lrc/pipeline.h"
#include "lrc/rank_select.h"
#include "lrc/tensor_io.h"
#include "lrc/train.h"

namespace lrc {

namespace {

struct GlobalFlags {
  uint64_t seed = 1;
  int threads = 1;
  bool verbose = false;
};

// "3=12" -> {3, 12}
std::pair<size_t, int> ParseLayerRank(const std::string& text, const std::string& flag) {
  const auto eq = text.find('=');
  try {
    if (eq == std::string::npos) throw std::invalid_argument(text);
    size_t pos = 0;
    const unsigned long layer = std::stoul(text.substr(0, eq), &pos);
    if (pos != eq) throw std::invalid_argument(text);
    const std::string r = text.substr(eq + 1);
    const int rank = std::stoi(r, &pos);
    if (pos != r.size()) throw std::invalid_argument(text);
    return {static_cast<size_t>(layer), rank};
  } catch (const std::logic_error&) {
    throw ValidationError(flag + ": expected LAYER=RANK, got \"" + text + "\"");
  }
}

std::map<size_t, int> ParseRankList(const std::string& text, const std::string& flag) {
  std::map<size_t, int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto [layer, rank] = ParseLayerRank(item, flag);
    out[layer] = rank;
  }
  if (out.empty()) throw ValidationError(flag + ": empty rank list");
  return out;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  WriteFileBytes(path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

void RequirePositive(double v, const std::string& flag) {
  if (!(v > 0)) throw ValidationError(flag + " must be > 0");
}

SampleBudget MakeBudget(size_t images, int positions, uint64_t seed) {
  if (images == 0) throw ValidationError("--images must be >= 1");
  if (positions < 1) throw ValidationError("--positions must be >= 1");
  return SampleBudget{images, positions, seed};
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank compression of convolutional networks", "lrcnn"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for evaluation")
      ->capture_default_str()
      ->check(CLI::Range(1, 256));
  app.add_flag("--verbose,-v", g.verbose, "Log progress to stderr");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a toy dataset (TOYD file)");
  std::string gen_out;
  size_t gen_n = 1000;
  int gen_classes = 4, gen_hw = 16;
  gen->add_option("--out", gen_out, "Output .toyd file")->required();
  gen->add_option("--n", gen_n, "Number of images")->capture_default_str();
  gen->add_option("--classes", gen_classes, "Number of classes [2, 16]")->capture_default_str();
  gen->add_option("--hw", gen_hw, "Image size (16 or 32)")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train the toy network (LRCM directory)");
  std::string train_data, train_out;
  TrainOptions topts;
  train->add_option("--data", train_data, "Training dataset")->required();
  train->add_option("--out", train_out, "Output model directory")->required();
  train->add_option("--epochs", topts.epochs)->capture_default_str();
  train->add_option("--lr", topts.lr)->capture_default_str();
  train->add_option("--batch", topts.batch_size)->capture_default_str();

  // spectra
  auto* spectra = app.add_subcommand("spectra", "PCA eigenvalue spectra of every conv layer");
  std::string sp_model, sp_data, sp_out;
  size_t sp_images = 300;
  int sp_positions = kDefaultPositionsPerImage;
  spectra->add_option("--model", sp_model)->required();
  spectra->add_option("--data", sp_data)->required();
  spectra->add_option("--out", sp_out, "Output JSON")->required();
  spectra->add_option("--images", sp_images)->capture_default_str();
  spectra->add_option("--positions", sp_positions, "Positions per image")->capture_default_str();

  // plan
  auto* plan = app.add_subcommand("plan", "Greedy whole-model rank selection");
  std::string pl_spectra, pl_out;
  double pl_target = 0;
  std::vector<std::string> pl_pins;
  bool pl_no_restore = false;
  plan->add_option("--spectra", pl_spectra, "Spectra JSON from `spectra`")->required();
  plan->add_option("--out", pl_out, "Output plan JSON")->required();
  plan->add_option("--target-speedup", pl_target)->required();
  plan->add_option("--pin", pl_pins, "Fix a layer's rank, LAYER=RANK (repeatable)");
  plan->add_flag("--no-restore-cost", pl_no_restore,
                 "Ignore the d*d' cost of the 1x1 restore layer");

  // compress
  auto* comp = app.add_subcommand("compress", "Compress a model layer by layer");
  std::string c_model, c_data, c_out, c_mode = "asymmetric", c_ranks, c_plan, c_report;
  std::optional<double> c_target, c_ridge;
  std::vector<std::string> c_pins;
  SolverConfig c_cfg;
  size_t c_images = 300;
  int c_positions = kDefaultPositionsPerImage;
  comp->add_option("--model", c_model)->required();
  comp->add_option("--data", c_data)->required();
  comp->add_option("--out", c_out, "Output model directory")->required();
  comp->add_option("--mode", c_mode, "linear | nonlinear | asymmetric")->capture_default_str();
  comp->add_option("--lambda-warm", c_cfg.lambda_warm)->capture_default_str();
  comp->add_option("--lambda-final", c_cfg.lambda_final)->capture_default_str();
  comp->add_option("--iters", c_cfg.iters_per_phase, "Iterations per lambda phase")
      ->capture_default_str();
  comp->add_option("--ridge", c_ridge, "Ridge on YY^T (default 1e-6 trace/d)");
  auto* ranks_opt = comp->add_option("--ranks", c_ranks, "\"full\" or LAYER=RANK,...");
  auto* plan_opt = comp->add_option("--plan", c_plan, "Plan JSON from `plan`");
  auto* target_opt = comp->add_option("--target-speedup", c_target);
  comp->add_option("--pin", c_pins, "With --target-speedup: LAYER=RANK (repeatable)");
  comp->add_option("--images", c_images)->capture_default_str();
  comp->add_option("--positions", c_positions)->capture_default_str();
  comp->add_option("--report", c_report, "Write the evaluation report JSON here");
  ranks_opt->excludes(plan_opt)->excludes(target_opt);
  plan_opt->excludes(target_opt);

  // eval
  auto* ev = app.add_subcommand("eval", "Compare a compressed model with its original");
  std::string e_orig, e_comp, e_data, e_out;
  size_t e_images = 300;
  int e_positions = kDefaultPositionsPerImage, e_bench = 0;
  ev->add_option("--original", e_orig)->required();
  ev->add_option("--compressed", e_comp)->required();
  ev->add_option("--data", e_data, "Evaluation dataset (held out)")->required();
  ev->add_option("--out", e_out, "Report JSON");
  ev->add_option("--images", e_images)->capture_default_str();
  ev->add_option("--positions", e_positions)->capture_default_str();
  ev->add_option("--bench-reps", e_bench, "Also measure wall-clock speedup (>= 3)")
      ->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "Wall-clock forward time (single thread)");
  std::string b_model, b_data, b_compare;
  int b_reps = 5;
  bench->add_option("--model", b_model)->required();
  bench->add_option("--data", b_data)->required();
  bench->add_option("--compare", b_compare, "Second model to time against --model");
  bench->add_option("--reps", b_reps)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("lrcnn", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(g.verbose ? spdlog::level::info : spdlog::level::warn);
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> p;
    ~Restore() { spdlog::set_default_logger(p); }
  } restore{previous};

  try {
    if (*gen) {
      const ToyDataset data = GenerateToyDataset(g.seed, gen_n, gen_classes, gen_hw);
      SaveDataset(data, gen_out);
      out << "wrote " << data.size() << " images (" << ToString(data.shape) << ", "
          << data.num_classes << " classes) to " << gen_out << "\n";
    } else if (*train) {
      topts.seed = g.seed;
      if (topts.epochs < 0) throw ValidationError("--epochs must be >= 0");
      RequirePositive(topts.lr, "--lr");
      if (topts.batch_size < 1) throw ValidationError("--batch must be >= 1");
      const ToyDataset data = LoadDataset(train_data);
      const Network init = BuildNetwork(
          ToyArch(data.shape.height, data.shape.channels, data.num_classes), g.seed, "toy3");
      std::vector<EpochStats> log;
      const Network net = TrainToy(init, data, topts, &log);
      SaveNetwork(net, train_out);
      const double acc = TopOneAccuracy(net, data, g.threads);
      out << "trained " << topts.epochs << " epochs; train accuracy " << acc << "\n";
    } else if (*spectra) {
      const SampleBudget budget = MakeBudget(sp_images, sp_positions, g.seed);
      const Network net = LoadNetwork(sp_model);
      const ToyDataset data = LoadDataset(sp_data);
      const auto sp = ComputeSpectra(net, data, budget);
      SaveSpectra(sp, ComplexityModel::FromNetwork(net), sp_out);
      for (const auto& s : sp) {
        const int half = std::max(1, s.d() / 2);
        out << "layer " << s.layer_idx << ": d=" << s.d() << ", energy at d/2 = "
            << s.EnergyFraction(half) << "\n";
      }
    } else if (*plan) {
      std::map<size_t, int> pinned;
      for (const auto& p : pl_pins) pinned.insert(ParseLayerRank(p, "--pin"));
      if (!(pl_target >= 1.0)) throw ValidationError("--target-speedup must be >= 1");
      auto [sp, model] = LoadSpectra(pl_spectra);
      model.count_restore = !pl_no_restore;
      const RankPlan rp = GreedySelect(sp, model, pl_target, pinned);
      SavePlan(rp, pl_out);
      for (const auto& [idx, r] : rp.ranks) out << "layer " << idx << ": d'=" << r << "\n";
      out << "predicted speedup " << rp.predicted_speedup << ", energy objective "
          << rp.energy_objective << "\n";
    } else if (*comp) {
      CompressionJob job;
      job.model_path = c_model;
      job.dataset_path = c_data;
      job.output_path = c_out;
      job.threads = g.threads;
      job.budget = MakeBudget(c_images, c_positions, g.seed);
      c_cfg.mode = ParseSolverMode(c_mode);
      c_cfg.ridge = c_ridge;
      c_cfg.Validate();
      for (const auto& p : c_pins) job.pinned.insert(ParseLayerRank(p, "--pin"));
      if (!c_pins.empty() && !c_target)
        throw ValidationError("--pin requires --target-speedup");
      job.solver = c_cfg;
      if (c_target) {
        if (!(*c_target >= 1.0)) throw ValidationError("--target-speedup must be >= 1");
        job.target_speedup = c_target;
      } else if (!c_plan.empty()) {
        job.plan = LoadPlan(c_plan);
      } else if (!c_ranks.empty()) {
        RankPlan rp;
        if (c_ranks == "full") {
          const Network net = LoadNetwork(c_model);
          for (size_t idx : net.ConvIndices()) rp.ranks[idx] = net.Conv(idx).d;
        } else {
          rp.ranks = ParseRankList(c_ranks, "--ranks");
        }
        job.plan = rp;
      } else {
        throw ValidationError("compress: one of --ranks, --plan or --target-speedup is required");
      }
      const CompressionResult result = RunCompressionJob(job);
      if (!c_report.empty()) WriteText(c_report, ReportToJson(result.report).dump(2) + "\n");
      out << ReportTable(result.report);
    } else if (*ev) {
      if (e_bench != 0 && e_bench < 3) throw ValidationError("--bench-reps must be 0 or >= 3");
      const SampleBudget budget = MakeBudget(e_images, e_positions, g.seed);
      const Network orig = LoadNetwork(e_orig);
      const Network compressed = LoadNetwork(e_comp);
      const ToyDataset data = LoadDataset(e_data);
      EvalReport report = Evaluate(orig, compressed, data, budget, g.threads);
      if (e_bench > 0)
        report.measured_speedup = Benchmark(orig, data, e_bench).median_seconds /
                                  Benchmark(compressed, data, e_bench).median_seconds;
      if (!e_out.empty()) WriteText(e_out, ReportToJson(report).dump(2) + "\n");
      out << ReportTable(report);
    } else if (*bench) {
      if (b_reps < 3) throw ValidationError("--reps must be >= 3");
      const Network net = LoadNetwork(b_model);
      const ToyDataset data = LoadDataset(b_data);
      const BenchResult r = Benchmark(net, data, b_reps);
      out << "median " << r.median_seconds * 1e3 << " ms per forward pass (min "
          << r.min_seconds * 1e3 << ", max " << r.max_seconds * 1e3 << ")\n";
      if (!b_compare.empty()) {
        const BenchResult r2 = Benchmark(LoadNetwork(b_compare), data, b_reps);
        out << "compare: median " << r2.median_seconds * 1e3 << " ms; speedup "
            << r.median_seconds / r2.median_seconds << "x\n";
      }
    }
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace lrc
