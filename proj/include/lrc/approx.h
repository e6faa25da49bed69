// include/lrc/approx.h

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

#ifndef LRC_APPROX_H_
#define LRC_APPROX_H_

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrc/numerics.h"
#include "lrc/sampler.h"

namespace lrc {

enum class SolverMode { kLinear, kNonlinearSymmetric, kNonlinearAsymmetric };

// kIdentity replaces r(.) by the identity; only meant for tests that check
// the nonlinear solver degenerates to PCA.
enum class Nonlinearity { kRelu, kIdentity };

std::string ToString(SolverMode mode);
SolverMode ParseSolverMode(const std::string& s);

struct SolverConfig {
  double lambda_warm = 0.01;
  double lambda_final = 1.0;
  int iters_per_phase = 25;
  // Unset: DefaultRidge() of the centred input matrix.
  std::optional<double> ridge;
  SolverMode mode = SolverMode::kNonlinearAsymmetric;
  Nonlinearity nonlinearity = Nonlinearity::kRelu;

  void Validate() const;
};

enum class HalfStep { kInit, kZ, kM };

struct TraceEntry {
  double lambda = 0;
  HalfStep step = HalfStep::kInit;
  double value = 0;  // relaxed objective after this half-step
};

struct LowRankResult {
  Matrix m;  // d x d, rank <= d_prime
  Vector b;
  Matrix p;  // d x d_prime
  Matrix q;  // d x d_prime, m = p q^T
  int d_prime = 0;
  std::vector<TraceEntry> objective_trace;
  double final_nonlinear_objective = 0;
};

// PCA on the centred responses: M = U U^T from the top d_prime eigenvectors
// of Yc Yc^T, b = mean - M mean, P = Q = U.
LowRankResult SolveLinear(const Matrix& y, int d_prime);
LowRankResult SolveLinear(const ResponseSet& responses, int d_prime);

// argmin_z (r(y_target) - r(z))^2 + lambda (z - y_linear)^2 for r = ReLU.
// Candidates z' = min(0, y_linear) and
// z'' = max(0, (lambda y_linear + r(y_target)) / (lambda + 1)); z'' wins ties.
double SolveZ(double y_target, double y_linear, double lambda);

// Alternating solver for the relaxed nonlinear reconstruction problem
//   sum_i ||r(y_i) - r(z_i)||^2 + lambda ||z_i - (M yhat_i + b)||^2
// with targets y and inputs yhat (yhat = y for the symmetric problem).
// Starts from SolveLinear(inputs); each iteration runs the z-step, then the
// (M, b)-step (centred reduced-rank regression, b = mean(z) - M mean(yhat)),
// iters_per_phase times at lambda_warm and again at lambda_final.
LowRankResult SolveNonlinear(const Matrix& targets, const Matrix& inputs, int d_prime,
                             const SolverConfig& config);

// M ~= P Q^T with P = U S^{1/2}, Q = V S^{1/2} from the rank-d_prime SVD.
std::pair<Matrix, Matrix> Factorize(const Matrix& m, int d_prime);

// sum_i ||r(y_i) - r(M yhat_i + b)||^2
double NonlinearObjective(const Matrix& m, const Vector& b, const Matrix& targets,
                          const Matrix& inputs,
                          Nonlinearity nl = Nonlinearity::kRelu);
// sum_i ||r(y_i) - r(z_i)||^2 + lambda ||z_i - (M yhat_i + b)||^2
double RelaxedObjective(const Matrix& m, const Vector& b, const Matrix& z,
                        const Matrix& targets, const Matrix& inputs, double lambda,
                        Nonlinearity nl = Nonlinearity::kRelu);

// <dir>/<stem>_{m,b,p,q}.bin plus <stem>.json (config, d_prime, trace).
void SaveLowRankResult(const LowRankResult& r, const SolverConfig& config,
                       const std::filesystem::path& dir, const std::string& stem);
LowRankResult LoadLowRankResult(const std::filesystem::path& dir, const std::string& stem);

}  // namespace lrc

#endif  // LRC_APPROX_H_
