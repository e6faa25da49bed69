// tests/rank_select_test.cc

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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lrc/error.h"
#include "lrc/rank_select.h"
#include "lrc/tensor_io.h"
#include "test_util.h"

namespace lrc {
namespace {

using testing::RandomMatrix;

LayerSpectrum Spectrum(size_t idx, std::vector<double> eig) {
  LayerSpectrum s;
  s.layer_idx = idx;
  s.eigenvalues = Eigen::Map<Vector>(eig.data(), static_cast<Eigen::Index>(eig.size()));
  return s;
}

// Conv1..Conv7 of the reference architecture: (d, k, c, output side, share of
// the total convolutional cost in percent).
struct RefLayer {
  int d, k, c, side;
  double share;
};
const RefLayer kRef[] = {{96, 7, 3, 109, 3.8},   {256, 5, 96, 35, 17.3},
                         {512, 3, 256, 18, 8.8}, {512, 3, 512, 18, 17.5},
                         {512, 3, 512, 18, 17.5}, {512, 3, 512, 18, 17.5},
                         {512, 3, 512, 18, 17.5}};

// Positions scaled so that each layer's original cost equals its share.
ComplexityModel RelativeModel() {
  ComplexityModel m;
  for (size_t i = 0; i < 7; ++i) {
    const RefLayer& r = kRef[i];
    m.layers.push_back({i, r.d, r.k, r.c, r.share / (double(r.d) * r.k * r.k * r.c)});
  }
  return m;
}

ComplexityModel ShapeModel() {
  ComplexityModel m;
  for (size_t i = 0; i < 7; ++i) {
    const RefLayer& r = kRef[i];
    m.layers.push_back({i, r.d, r.k, r.c, double(r.side) * r.side});
  }
  return m;
}

TEST(LayerCostTest, ConvTwoSingleLayerSpeedup) {
  const LayerCost l{0, 256, 5, 96, 1.0};
  EXPECT_NEAR(l.Original() / l.Approximated(110, true), 2.10, 0.01);
  EXPECT_DOUBLE_EQ(l.Original() / l.Approximated(110, true),
                   (256.0 * 2400) / (110.0 * 2400 + 256.0 * 110));
}

TEST(LayerCostTest, ReplacementOnlyWhenCheaper) {
  const LayerCost l{0, 16, 3, 3, 100.0};  // k^2 c = 27
  // 16 * 27 = 432; d'(27 + 16) < 432 needs d' <= 10.
  EXPECT_TRUE(l.Replaced(10, true));
  EXPECT_FALSE(l.Replaced(11, true));
  EXPECT_EQ(l.Approximated(11, true), l.Original());
  EXPECT_FALSE(l.Replaced(16, false));
  EXPECT_TRUE(l.Replaced(15, false));
}

TEST(PredictedSpeedupTest, PublishedUniformRankRows) {
  const ComplexityModel model = RelativeModel();
  const std::vector<std::pair<double, std::vector<int>>> rows = {
      {2.0, {32, 110, 199, 219, 219, 219, 219}},
      {2.4, {32, 96, 174, 191, 191, 191, 191}},
      {3.0, {32, 77, 139, 153, 153, 153, 153}},
      {4.0, {32, 57, 104, 115, 115, 115, 115}},
      {5.0, {32, 46, 83, 92, 92, 92, 92}}};
  for (const auto& [label, ranks] : rows) {
    std::map<size_t, int> plan;
    double approx = 0, total = 0;
    for (size_t i = 0; i < 7; ++i) {
      plan[i] = ranks[i];
      const RefLayer& r = kRef[i];
      approx += r.share * (double(ranks[i]) / r.d + double(ranks[i]) / (r.k * r.k * r.c));
      total += r.share;
    }
    const double speedup = PredictedSpeedup(plan, model);
    EXPECT_NEAR(speedup, total / approx, 1e-9);
    EXPECT_LE(std::abs(speedup - label) / label, 0.10) << label << "x row gives " << speedup;
  }
}

TEST(PredictedSpeedupTest, FullRanksWithoutRestoreTermIsOne) {
  ComplexityModel model = ShapeModel();
  model.count_restore = false;
  std::map<size_t, int> ranks;
  for (const auto& l : model.layers) ranks[l.layer_idx] = l.d;
  EXPECT_EQ(PredictedSpeedup(ranks, model), 1.0);
  model.count_restore = true;
  EXPECT_EQ(PredictedSpeedup(ranks, model), 1.0);
  EXPECT_EQ(PredictedSpeedup({}, model), 1.0);
}

TEST(PredictedSpeedupTest, MonotoneInRanks) {
  std::mt19937_64 rng(1);
  const ComplexityModel model = ShapeModel();
  for (int trial = 0; trial < 200; ++trial) {
    std::map<size_t, int> ranks;
    for (const auto& l : model.layers)
      ranks[l.layer_idx] = std::uniform_int_distribution<int>(1, l.d)(rng);
    const size_t idx = std::uniform_int_distribution<size_t>(0, 6)(rng);
    if (ranks[idx] == 1) continue;
    auto lower = ranks;
    --lower[idx];
    EXPECT_GE(PredictedSpeedup(lower, model), PredictedSpeedup(ranks, model));
  }
}

TEST(GreedySelectTest, SpikedLayerGoesFirst) {
  // Two layers with identical cost, no restore term.
  ComplexityModel model;
  model.count_restore = false;
  model.layers = {{0, 4, 1, 8, 1.0}, {1, 4, 1, 8, 1.0}};
  const std::vector<LayerSpectrum> spectra = {Spectrum(0, {1, 1, 1, 1}),
                                              Spectrum(1, {1, 1e-3, 1e-3, 1e-3})};
  // 1.6x: total 64 -> 40, reachable by the spiked layer alone (32 -> 8).
  RankPlan p = GreedySelect(spectra, model, 1.6);
  EXPECT_EQ(p.ranks.at(0), 4);
  EXPECT_EQ(p.ranks.at(1), 1);
  EXPECT_DOUBLE_EQ(p.predicted_speedup, 1.6);
  EXPECT_DOUBLE_EQ(p.energy_objective, 1.0 / 1.003);
  // 2x needs 32: the spiked layer is exhausted, then one flat eigenvalue goes.
  p = GreedySelect(spectra, model, 2.0);
  EXPECT_EQ(p.ranks.at(0), 3);
  EXPECT_EQ(p.ranks.at(1), 1);
  EXPECT_DOUBLE_EQ(p.energy_objective, 0.75 / 1.003);
}

TEST(GreedySelectTest, TiesPreferLargerStepThenLowerIndex) {
  ComplexityModel model;
  model.count_restore = false;
  model.layers = {{0, 4, 1, 4, 1.0}, {1, 4, 1, 8, 1.0}, {2, 4, 1, 8, 1.0}};
  const std::vector<LayerSpectrum> spectra = {
      Spectrum(0, {1, 1, 1, 1}), Spectrum(1, {2, 2, 2, 2}), Spectrum(2, {1, 1, 1, 1})};
  // Relative measures: layer 0 (1/4)/4, layers 1 and 2 (1/4)/8 -> tie between
  // 1 and 2, broken toward layer 1.  Total 80, one step of 8 reaches 72.
  const RankPlan p = GreedySelect(spectra, model, 80.0 / 72.0);
  EXPECT_EQ(p.ranks.at(0), 4);
  EXPECT_EQ(p.ranks.at(1), 3);
  EXPECT_EQ(p.ranks.at(2), 4);
}

TEST(GreedySelectTest, IdentityPlanWithoutBudget) {
  const ComplexityModel model = ShapeModel();
  std::vector<LayerSpectrum> spectra;
  for (const auto& l : model.layers) spectra.push_back(Spectrum(l.layer_idx, std::vector<double>(l.d, 1.0)));
  const RankPlan p = GreedySelect(spectra, model, 1.0);
  for (const auto& l : model.layers) EXPECT_EQ(p.ranks.at(l.layer_idx), l.d);
  EXPECT_EQ(p.energy_objective, 1.0);
  EXPECT_EQ(p.predicted_speedup, 1.0);
}

TEST(GreedySelectTest, ConvOnePinnedFlatSpectra) {
  const ComplexityModel model = ShapeModel();
  std::vector<LayerSpectrum> spectra;
  for (const auto& l : model.layers)
    spectra.push_back(Spectrum(l.layer_idx, std::vector<double>(l.d, 1.0)));
  for (double target : {2.0, 2.4, 3.0, 4.0, 5.0}) {
    const RankPlan p = GreedySelect(spectra, model, target, {{0, 32}});
    EXPECT_EQ(p.ranks.at(0), 32);
    EXPECT_EQ(p.pinned, (std::set<size_t>{0}));
    EXPECT_GE(p.predicted_speedup, target);
    // Conv4-7 share one shape, so flat spectra give them one rank.
    for (size_t i = 4; i < 7; ++i) EXPECT_LE(std::abs(p.ranks.at(i) - p.ranks.at(3)), 1);
    const RankPlan u = UniformPlan(spectra, model, target, {{0, 32}});
    for (size_t i = 4; i < 7; ++i) EXPECT_EQ(u.ranks.at(i), u.ranks.at(3));
    EXPECT_GE(u.predicted_speedup, target);
  }
}

struct RandomInstance {
  std::vector<LayerSpectrum> spectra;
  ComplexityModel model;
};

RandomInstance MakeInstance(std::mt19937_64& rng) {
  RandomInstance inst;
  const int layers = std::uniform_int_distribution<int>(2, 6)(rng);
  std::uniform_int_distribution<int> dd(4, 64), kk(1, 5), cc(3, 128), side(4, 40);
  std::uniform_real_distribution<double> decay(0.5, 0.99);
  for (int i = 0; i < layers; ++i) {
    const int d = dd(rng), k = kk(rng) | 1, s = side(rng);
    inst.model.layers.push_back({size_t(i), d, k, cc(rng), double(s) * s});
    std::vector<double> eig(d);
    const double rate = decay(rng);
    for (int a = 0; a < d; ++a) eig[a] = std::pow(rate, a);
    inst.spectra.push_back(Spectrum(i, eig));
  }
  return inst;
}

TEST(GreedySelectTest, BudgetAlwaysMet) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const RandomInstance inst = MakeInstance(rng);
    const double target = std::uniform_real_distribution<double>(1.0, 3.0)(rng);
    try {
      const RankPlan p = GreedySelect(inst.spectra, inst.model, target);
      EXPECT_LE(inst.model.ApproximatedTotal(p.ranks), inst.model.OriginalTotal() / target);
      EXPECT_NEAR(p.predicted_speedup, PredictedSpeedup(p.ranks, inst.model), 1e-12);
      EXPECT_NEAR(p.energy_objective, EnergyObjective(inst.spectra, p.ranks), 1e-12);
      for (const auto& l : inst.model.layers) {
        EXPECT_GE(p.ranks.at(l.layer_idx), 1);
        EXPECT_LE(p.ranks.at(l.layer_idx), l.d);
      }
    } catch (const InfeasibleError&) {
      std::map<size_t, int> ones;
      for (const auto& l : inst.model.layers) ones[l.layer_idx] = 1;
      EXPECT_LT(PredictedSpeedup(ones, inst.model), target);
    }
  }
}

TEST(GreedySelectTest, DominatesUniformRatio) {
  std::mt19937_64 rng(3);
  int compared = 0;
  for (int trial = 0; compared < 20 && trial < 200; ++trial) {
    const RandomInstance inst = MakeInstance(rng);
    const double target = std::uniform_real_distribution<double>(1.2, 2.5)(rng);
    RankPlan g, u;
    try {
      g = GreedySelect(inst.spectra, inst.model, target);
      u = UniformPlan(inst.spectra, inst.model, target);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++compared;
    EXPECT_GE(g.energy_objective, u.energy_objective - 1e-12) << "trial " << trial;
  }
  EXPECT_EQ(compared, 20);
}

TEST(GreedySelectTest, Errors) {
  ComplexityModel model;
  model.layers = {{0, 4, 3, 3, 10.0}};
  const std::vector<LayerSpectrum> spectra = {Spectrum(0, {4, 3, 2, 1})};
  EXPECT_THROW(GreedySelect(spectra, model, 100.0), InfeasibleError);
  EXPECT_THROW(GreedySelect(spectra, model, 0.5), ValidationError);
  EXPECT_THROW(GreedySelect(spectra, model, 2.0, {{0, 5}}), ValidationError);
  EXPECT_THROW(GreedySelect(spectra, model, 2.0, {{3, 1}}), ValidationError);
  EXPECT_THROW(GreedySelect({Spectrum(0, {1, 1})}, model, 2.0), ValidationError);
}

TEST(PcaEnergyTest, ExactSubspace) {
  std::mt19937_64 rng(4);
  ResponseSet rs;
  rs.y = RandomMatrix(6, 2, rng) * RandomMatrix(2, 100, rng);
  rs.y.colwise() += Vector(RandomMatrix(6, 1, rng));
  const LayerSpectrum s = PcaEnergy(rs);
  for (int i = 2; i < 6; ++i) EXPECT_LE(s.eigenvalues(i), 1e-10);
  for (int i = 0; i < 6; ++i) EXPECT_GE(s.eigenvalues(i), 0.0);
  EXPECT_EQ(s.EnergyFraction(6), 1.0);
  EXPECT_NEAR(s.EnergyFraction(2), 1.0, 1e-10);
}

TEST(PcaEnergyTest, IsotropicSamples) {
  std::mt19937_64 rng(5);
  const int d = 8;
  // With aspect ratio q = d/n the extreme sample eigenvalues approach
  // (1 +- sqrt(q))^2, so max/min tends to about 1.76 at n = 50 d.
  for (int mult : {50, 200}) {
    ResponseSet rs;
    rs.y = RandomMatrix(d, mult * d, rng);
    const LayerSpectrum s = PcaEnergy(rs);
    const double q = 1.0 / mult;
    const double edge = std::pow((1 + std::sqrt(q)) / (1 - std::sqrt(q)), 2);
    EXPECT_LT(s.eigenvalues(0) / s.eigenvalues(d - 1), 1.1 * edge) << "n = " << mult << " d";
    if (mult == 200) {
      EXPECT_LT(s.eigenvalues(0) / s.eigenvalues(d - 1), 1.5);
    }
    // Divided by n: the trace approximates d.
    EXPECT_NEAR(s.Total(), d, 1.0);
  }
}

TEST(PcaEnergyTest, NeedsTwoSamples) {
  ResponseSet rs;
  rs.y = Matrix::Ones(3, 1);
  EXPECT_THROW(PcaEnergy(rs), ValidationError);
}

TEST(SerializationTest, SpectraAndPlanRoundTrip) {
  testing::TempDir dir("plan");
  const ComplexityModel model = ShapeModel();
  std::vector<LayerSpectrum> spectra;
  for (const auto& l : model.layers) {
    std::vector<double> eig(l.d);
    for (int a = 0; a < l.d; ++a) eig[a] = 1.0 / (1 + a);
    spectra.push_back(Spectrum(l.layer_idx, eig));
  }
  SaveSpectra(spectra, model, dir / "s.json");
  const auto [sp, m] = LoadSpectra(dir / "s.json");
  ASSERT_EQ(sp.size(), 7u);
  for (size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(sp[i].eigenvalues, spectra[i].eigenvalues);
    EXPECT_EQ(m.layers[i].positions, model.layers[i].positions);
  }
  const RankPlan p = GreedySelect(sp, m, 3.0, {{0, 32}});
  SavePlan(p, dir / "p.json");
  const RankPlan back = LoadPlan(dir / "p.json");
  EXPECT_EQ(back.ranks, p.ranks);
  EXPECT_EQ(back.pinned, p.pinned);
  EXPECT_EQ(back.predicted_speedup, p.predicted_speedup);
  EXPECT_EQ(back.energy_objective, p.energy_objective);
  const std::string junk = "{not json";
  WriteFileBytes(dir / "bad.json",
                 std::span(reinterpret_cast<const uint8_t*>(junk.data()), junk.size()));
  EXPECT_THROW(LoadPlan(dir / "bad.json"), FormatError);
}

}  // namespace
}  // namespace lrc
