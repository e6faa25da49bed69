// src/rank_select.cc

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

#include "lrc/rank_select.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "lrc/error.h"
#include "lrc/tensor_io.h"

namespace lrc {

namespace {

const LayerSpectrum& FindSpectrum(const std::vector<LayerSpectrum>& spectra, size_t idx) {
  for (const auto& s : spectra)
    if (s.layer_idx == idx) return s;
  throw ValidationError("no spectrum for layer " + std::to_string(idx));
}

// Starting ranks: full rank, pinned layers at their pinned value.
std::map<size_t, int> InitialRanks(const ComplexityModel& model,
                                   const std::map<size_t, int>& pinned) {
  std::map<size_t, int> ranks;
  for (const auto& l : model.layers) ranks[l.layer_idx] = l.d;
  for (const auto& [idx, r] : pinned) {
    const LayerCost& l = model.Layer(idx);
    if (r < 1 || r > l.d)
      throw ValidationError("pinned rank " + std::to_string(r) + " for layer " +
                            std::to_string(idx) + " outside [1, " + std::to_string(l.d) + "]");
    ranks[idx] = r;
  }
  return ranks;
}

void CheckTarget(double target_speedup) {
  if (!(target_speedup >= 1.0) || !std::isfinite(target_speedup))
    throw ValidationError("target speedup must be finite and >= 1, got " +
                          std::to_string(target_speedup));
}

void CheckSpectra(const std::vector<LayerSpectrum>& spectra, const ComplexityModel& model) {
  for (const auto& l : model.layers)
    if (FindSpectrum(spectra, l.layer_idx).d() != l.d)
      throw ValidationError("spectrum of layer " + std::to_string(l.layer_idx) + " has " +
                            std::to_string(FindSpectrum(spectra, l.layer_idx).d()) +
                            " eigenvalues, layer has d = " + std::to_string(l.d));
}

RankPlan Finish(std::map<size_t, int> ranks, const std::map<size_t, int>& pinned,
                const std::vector<LayerSpectrum>& spectra, const ComplexityModel& model) {
  // A rank that would not reduce the layer's cost keeps the layer whole.
  for (auto& [idx, r] : ranks) {
    const LayerCost& l = model.Layer(idx);
    if (!pinned.contains(idx) && !l.Replaced(r, model.count_restore)) r = l.d;
  }
  RankPlan plan;
  plan.ranks = std::move(ranks);
  for (const auto& [idx, r] : pinned) plan.pinned.insert(idx);
  plan.predicted_speedup = PredictedSpeedup(plan.ranks, model);
  plan.energy_objective = EnergyObjective(spectra, plan.ranks);
  return plan;
}

void WriteJson(const nlohmann::json& j, const std::filesystem::path& path) {
  const std::string text = j.dump(2) + "\n";
  WriteFileBytes(path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

nlohmann::json ReadJson(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

double LayerSpectrum::EnergyFraction(int d_prime) const {
  const double total = Total();
  if (total <= 0) return 1.0;
  const int r = std::clamp(d_prime, 0, d());
  return eigenvalues.head(r).sum() / total;
}

LayerSpectrum PcaEnergy(const ResponseSet& responses) {
  const Eigen::Index n = responses.y.cols();
  if (n < 2) throw ValidationError("PcaEnergy: need at least 2 samples");
  const Matrix yc = CenterRows(responses.y, RowMean(responses.y));
  const Matrix cov = yc * yc.transpose() / static_cast<double>(n);
  LayerSpectrum s;
  s.layer_idx = responses.layer_idx;
  s.eigenvalues = SymEig(cov).eigenvalues.cwiseMax(0.0);
  return s;
}

double LayerCost::Formula(int d_prime, bool count_restore) const {
  return d_prime * PatchSize() * positions +
         (count_restore ? static_cast<double>(d) * d_prime * positions : 0.0);
}

bool LayerCost::Replaced(int d_prime, bool count_restore) const {
  return d_prime < d && Formula(d_prime, count_restore) < Original();
}

double LayerCost::Approximated(int d_prime, bool count_restore) const {
  return Replaced(d_prime, count_restore) ? Formula(d_prime, count_restore) : Original();
}

double LayerCost::RankStep(bool count_restore) const {
  return PatchSize() * positions + (count_restore ? d * positions : 0.0);
}

ComplexityModel ComplexityModel::FromNetwork(const Network& net) {
  const auto shapes = net.InferShapes();
  ComplexityModel model;
  for (size_t i : net.ConvIndices()) {
    const ConvLayer& l = net.Conv(i);
    model.layers.push_back({i, l.d, l.k, l.c, static_cast<double>(shapes[i].Positions())});
  }
  return model;
}

const LayerCost& ComplexityModel::Layer(size_t layer_idx) const {
  for (const auto& l : layers)
    if (l.layer_idx == layer_idx) return l;
  throw ValidationError("layer " + std::to_string(layer_idx) +
                        " is not in the complexity model");
}

double ComplexityModel::OriginalTotal() const {
  double total = 0;
  for (const auto& l : layers) total += l.Original();
  return total;
}

double ComplexityModel::ApproximatedTotal(const std::map<size_t, int>& ranks) const {
  for (const auto& [idx, r] : ranks) Layer(idx);
  double total = 0;
  for (const auto& l : layers) {
    const auto it = ranks.find(l.layer_idx);
    total += it == ranks.end() ? l.Original() : l.Approximated(it->second, count_restore);
  }
  return total;
}

double PredictedSpeedup(const std::map<size_t, int>& ranks, const ComplexityModel& model) {
  return model.OriginalTotal() / model.ApproximatedTotal(ranks);
}

double EnergyObjective(const std::vector<LayerSpectrum>& spectra,
                       const std::map<size_t, int>& ranks) {
  double e = 1.0;
  for (const auto& [idx, r] : ranks) e *= FindSpectrum(spectra, idx).EnergyFraction(r);
  return e;
}

RankPlan GreedySelect(const std::vector<LayerSpectrum>& spectra,
                      const ComplexityModel& model, double target_speedup,
                      const std::map<size_t, int>& pinned) {
  CheckTarget(target_speedup);
  CheckSpectra(spectra, model);
  const double budget = model.OriginalTotal() / target_speedup;
  auto ranks = InitialRanks(model, pinned);

  auto floor_ranks = ranks;
  for (auto& [idx, r] : floor_ranks)
    if (!pinned.contains(idx)) r = 1;
  if (model.ApproximatedTotal(floor_ranks) > budget)
    throw InfeasibleError("target speedup " + std::to_string(target_speedup) +
                          " is infeasible: even rank 1 on every unpinned layer gives " +
                          std::to_string(PredictedSpeedup(floor_ranks, model)) + "x");

  // Running partial sums of each layer's kept eigenvalues.
  std::map<size_t, double> kept;
  for (const auto& [idx, r] : ranks) kept[idx] = FindSpectrum(spectra, idx).eigenvalues.head(r).sum();

  while (model.ApproximatedTotal(ranks) > budget) {
    size_t best = 0;
    double best_measure = 0, best_step = 0;
    bool found = false;
    for (const auto& l : model.layers) {
      const size_t idx = l.layer_idx;
      if (pinned.contains(idx) || ranks[idx] <= 1) continue;
      const double sigma = FindSpectrum(spectra, idx).eigenvalues(ranks[idx] - 1);
      const double rel = kept[idx] > 0 ? sigma / kept[idx] : 0.0;
      const double step = l.RankStep(model.count_restore);
      const double measure = rel / step;
      if (!found || measure < best_measure ||
          (measure == best_measure && step > best_step)) {
        found = true;
        best = idx;
        best_measure = measure;
        best_step = step;
      }
    }
    if (!found) throw InfeasibleError("greedy rank selection ran out of eigenvalues");
    kept[best] -= FindSpectrum(spectra, best).eigenvalues(ranks[best] - 1);
    --ranks[best];
  }
  return Finish(std::move(ranks), pinned, spectra, model);
}

RankPlan UniformPlan(const std::vector<LayerSpectrum>& spectra,
                     const ComplexityModel& model, double target_speedup,
                     const std::map<size_t, int>& pinned) {
  CheckTarget(target_speedup);
  CheckSpectra(spectra, model);
  const double budget = model.OriginalTotal() / target_speedup;
  const auto base = InitialRanks(model, pinned);
  auto ranks_for = [&](double s) {
    auto ranks = base;
    for (const auto& l : model.layers) {
      if (pinned.contains(l.layer_idx)) continue;
      const double per_rank = l.PatchSize() + (model.count_restore ? l.d : 0);
      const int r = static_cast<int>(std::floor(l.d * l.PatchSize() / (s * per_rank)));
      ranks[l.layer_idx] = std::clamp(r, 1, l.d);
    }
    return ranks;
  };
  if (model.ApproximatedTotal(base) <= budget) return Finish(base, pinned, spectra, model);
  double lo = 1.0, hi = 2.0;
  while (model.ApproximatedTotal(ranks_for(hi)) > budget) {
    hi *= 2;
    if (hi > 1e12)
      throw InfeasibleError("target speedup " + std::to_string(target_speedup) +
                            " is infeasible with a uniform per-layer ratio");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (model.ApproximatedTotal(ranks_for(mid)) > budget)
      lo = mid;
    else
      hi = mid;
  }
  return Finish(ranks_for(hi), pinned, spectra, model);
}

void SaveSpectra(const std::vector<LayerSpectrum>& spectra, const ComplexityModel& model,
                 const std::filesystem::path& path) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers) {
    const auto& s = FindSpectrum(spectra, l.layer_idx);
    std::vector<double> eig(s.eigenvalues.data(), s.eigenvalues.data() + s.d());
    std::vector<double> cumulative;
    for (int r = 1; r <= s.d(); ++r) cumulative.push_back(s.EnergyFraction(r));
    layers.push_back({{"layer_idx", l.layer_idx},
                      {"d", l.d},
                      {"k", l.k},
                      {"c", l.c},
                      {"positions", l.positions},
                      {"eigenvalues", eig},
                      {"cumulative_energy", cumulative}});
  }
  WriteJson({{"count_restore", model.count_restore}, {"layers", layers}}, path);
}

std::pair<std::vector<LayerSpectrum>, ComplexityModel> LoadSpectra(
    const std::filesystem::path& path) {
  const auto j = ReadJson(path);
  std::vector<LayerSpectrum> spectra;
  ComplexityModel model;
  try {
    model.count_restore = j.value("count_restore", true);
    for (const auto& l : j.at("layers")) {
      LayerCost cost{l.at("layer_idx").get<size_t>(), l.at("d").get<int>(), l.at("k").get<int>(),
                     l.at("c").get<int>(), l.at("positions").get<double>()};
      const auto eig = l.at("eigenvalues").get<std::vector<double>>();
      if (static_cast<int>(eig.size()) != cost.d)
        throw ShapeMismatchError(path.string() + ": layer " + std::to_string(cost.layer_idx) +
                                 " has " + std::to_string(eig.size()) +
                                 " eigenvalues for d = " + std::to_string(cost.d));
      LayerSpectrum s;
      s.layer_idx = cost.layer_idx;
      s.eigenvalues = Eigen::Map<const Vector>(eig.data(), static_cast<Eigen::Index>(eig.size()));
      spectra.push_back(std::move(s));
      model.layers.push_back(cost);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return {std::move(spectra), std::move(model)};
}

void SavePlan(const RankPlan& plan, const std::filesystem::path& path) {
  nlohmann::json ranks = nlohmann::json::object();
  for (const auto& [idx, r] : plan.ranks) ranks[std::to_string(idx)] = r;
  WriteJson({{"ranks", ranks},
             {"pinned", std::vector<size_t>(plan.pinned.begin(), plan.pinned.end())},
             {"predicted_speedup", plan.predicted_speedup},
             {"energy_objective", plan.energy_objective}},
            path);
}

RankPlan LoadPlan(const std::filesystem::path& path) {
  const auto j = ReadJson(path);
  RankPlan plan;
  try {
    for (const auto& [key, value] : j.at("ranks").items())
      plan.ranks[std::stoul(key)] = value.get<int>();
    for (size_t idx : j.at("pinned").get<std::vector<size_t>>()) plan.pinned.insert(idx);
    plan.predicted_speedup = j.at("predicted_speedup").get<double>();
    plan.energy_objective = j.at("energy_objective").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError(path.string() + ": bad layer index in ranks");
  }
  return plan;
}

}  // namespace lrc
