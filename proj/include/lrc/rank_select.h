// include/lrc/rank_select.h

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

#ifndef LRC_RANK_SELECT_H_
#define LRC_RANK_SELECT_H_

#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "lrc/model.h"
#include "lrc/sampler.h"

namespace lrc {

// Descending eigenvalues of the centred response covariance Yc Yc^T / n.
struct LayerSpectrum {
  size_t layer_idx = 0;
  Vector eigenvalues;

  int d() const { return static_cast<int>(eigenvalues.size()); }
  double Total() const { return eigenvalues.sum(); }
  // Sum of the largest d_prime eigenvalues over the total (1 if the total
  // is zero).
  double EnergyFraction(int d_prime) const;
};

LayerSpectrum PcaEnergy(const ResponseSet& responses);

// Multiply count of one conv layer.  Original cost C = d k^2 c positions;
// a rank-d' replacement costs d' k^2 c positions plus, when the 1x1 restore
// layer is counted, d d' positions.  A rank is only worth applying when it
// is strictly cheaper than the original; otherwise the layer is left intact
// and costs C.
struct LayerCost {
  size_t layer_idx = 0;
  int d = 0;
  int k = 0;
  int c = 0;
  double positions = 0;

  double PatchSize() const { return static_cast<double>(k) * k * c; }
  double Original() const { return d * PatchSize() * positions; }
  double Formula(int d_prime, bool count_restore) const;
  bool Replaced(int d_prime, bool count_restore) const;
  double Approximated(int d_prime, bool count_restore) const;
  // Cost removed per unit of rank: C/d (+ C/(k^2 c) with the restore term).
  double RankStep(bool count_restore) const;
};

struct ComplexityModel {
  std::vector<LayerCost> layers;
  bool count_restore = true;

  // One entry per conv layer of `net` (layer indices of `net`).
  static ComplexityModel FromNetwork(const Network& net);
  const LayerCost& Layer(size_t layer_idx) const;
  double OriginalTotal() const;
  // Layers absent from `ranks` count at their original cost.
  double ApproximatedTotal(const std::map<size_t, int>& ranks) const;
};

struct RankPlan {
  std::map<size_t, int> ranks;  // layer index -> d'
  std::set<size_t> pinned;
  double predicted_speedup = 1.0;
  double energy_objective = 1.0;  // product of per-layer energy fractions
};

double PredictedSpeedup(const std::map<size_t, int>& ranks, const ComplexityModel& model);
double EnergyObjective(const std::vector<LayerSpectrum>& spectra,
                       const std::map<size_t, int>& ranks);

// Greedy rank allocation.  Starts from full rank (pinned layers at their
// pinned rank) and repeatedly drops the trailing eigenvalue of the unpinned
// layer minimising (sigma_{l,d'} / sum_{a<=d'} sigma_{l,a}) / RankStep_l,
// until the total cost is within OriginalTotal / target_speedup.  Ties go to
// the layer with the larger RankStep, then the lower layer index.  Ranks
// never drop below 1.  Throws InfeasibleError if the budget cannot be met.
RankPlan GreedySelect(const std::vector<LayerSpectrum>& spectra,
                      const ComplexityModel& model, double target_speedup,
                      const std::map<size_t, int>& pinned = {});

// Baseline without rank selection: every unpinned layer gets the same
// single-layer speedup s, d'_l = floor(d_l k^2 c / (s (k^2 c [+ d_l]))),
// with the smallest s that meets the budget.
RankPlan UniformPlan(const std::vector<LayerSpectrum>& spectra,
                     const ComplexityModel& model, double target_speedup,
                     const std::map<size_t, int>& pinned = {});

// JSON handoff formats.
void SaveSpectra(const std::vector<LayerSpectrum>& spectra, const ComplexityModel& model,
                 const std::filesystem::path& path);
std::pair<std::vector<LayerSpectrum>, ComplexityModel> LoadSpectra(
    const std::filesystem::path& path);
void SavePlan(const RankPlan& plan, const std::filesystem::path& path);
RankPlan LoadPlan(const std::filesystem::path& path);

}  // namespace lrc

#endif  // LRC_RANK_SELECT_H_
