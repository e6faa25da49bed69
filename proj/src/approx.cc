// src/approx.cc

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

#include "lrc/approx.h"

#include <cmath>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "lrc/error.h"
#include "lrc/tensor_io.h"

namespace lrc {

namespace {

double Relu(double v) { return v > 0 ? v : 0.0; }

Matrix Apply(Nonlinearity nl, const Matrix& a) {
  return nl == Nonlinearity::kRelu ? Matrix(a.cwiseMax(0.0)) : a;
}

Matrix Predict(const Matrix& m, const Vector& b, const Matrix& inputs) {
  Matrix out = m * inputs;
  out.colwise() += b;
  return out;
}

void CheckShapes(const Matrix& targets, const Matrix& inputs, int d_prime,
                 const char* who) {
  if (targets.rows() != inputs.rows() || targets.cols() != inputs.cols())
    throw ShapeError(std::string(who) + ": targets are " + std::to_string(targets.rows()) +
                     "x" + std::to_string(targets.cols()) + ", inputs " +
                     std::to_string(inputs.rows()) + "x" + std::to_string(inputs.cols()));
  if (targets.size() == 0) throw ValidationError(std::string(who) + ": no samples");
  if (d_prime < 1 || d_prime > targets.rows())
    throw ValidationError(std::string(who) + ": rank " + std::to_string(d_prime) +
                          " outside [1, " + std::to_string(targets.rows()) + "]");
}

const char* StepName(HalfStep s) {
  switch (s) {
    case HalfStep::kInit: return "init";
    case HalfStep::kZ: return "z";
    case HalfStep::kM: return "m";
  }
  return "init";
}

}  // namespace

std::string ToString(SolverMode mode) {
  switch (mode) {
    case SolverMode::kLinear: return "linear";
    case SolverMode::kNonlinearSymmetric: return "nonlinear";
    case SolverMode::kNonlinearAsymmetric: return "asymmetric";
  }
  return "asymmetric";
}

SolverMode ParseSolverMode(const std::string& s) {
  if (s == "linear") return SolverMode::kLinear;
  if (s == "nonlinear") return SolverMode::kNonlinearSymmetric;
  if (s == "asymmetric") return SolverMode::kNonlinearAsymmetric;
  throw ValidationError("unknown solver mode \"" + s +
                        "\" (expected linear, nonlinear or asymmetric)");
}

void SolverConfig::Validate() const {
  if (!(lambda_warm > 0) || !(lambda_final > 0) || !std::isfinite(lambda_warm) ||
      !std::isfinite(lambda_final))
    throw ValidationError("solver: lambdas must be finite and > 0");
  if (iters_per_phase < 1) throw ValidationError("solver: iters_per_phase must be >= 1");
  if (ridge && (*ridge < 0 || !std::isfinite(*ridge)))
    throw ValidationError("solver: ridge must be finite and >= 0");
}

LowRankResult SolveLinear(const Matrix& y, int d_prime) {
  CheckShapes(y, y, d_prime, "SolveLinear");
  CheckFinite(y, "SolveLinear");
  const Vector mean = RowMean(y);
  const Matrix yc = CenterRows(y, mean);
  const EigResult eig = SymEig(yc * yc.transpose());
  if (eig.eigenvalues(0) <= 1e-300)
    spdlog::warn("SolveLinear: responses have zero variance; projector is arbitrary");
  LowRankResult r;
  r.d_prime = d_prime;
  r.p = eig.eigenvectors.leftCols(d_prime);
  r.q = r.p;
  r.m = r.p * r.p.transpose();
  r.b = mean - r.m * mean;
  r.final_nonlinear_objective = NonlinearObjective(r.m, r.b, y, y);
  return r;
}

LowRankResult SolveLinear(const ResponseSet& responses, int d_prime) {
  return SolveLinear(responses.y, d_prime);
}

double SolveZ(double y_target, double y_linear, double lambda) {
  const double ry = Relu(y_target);
  auto objective = [&](double z) {
    const double e = ry - Relu(z);
    return e * e + lambda * (z - y_linear) * (z - y_linear);
  };
  const double z1 = std::min(0.0, y_linear);
  const double z2 = std::max(0.0, (lambda * y_linear + ry) / (lambda + 1.0));
  return objective(z1) < objective(z2) ? z1 : z2;
}

double NonlinearObjective(const Matrix& m, const Vector& b, const Matrix& targets,
                          const Matrix& inputs, Nonlinearity nl) {
  return (Apply(nl, targets) - Apply(nl, Predict(m, b, inputs))).squaredNorm();
}

double RelaxedObjective(const Matrix& m, const Vector& b, const Matrix& z,
                        const Matrix& targets, const Matrix& inputs, double lambda,
                        Nonlinearity nl) {
  return (Apply(nl, targets) - Apply(nl, z)).squaredNorm() +
         lambda * (z - Predict(m, b, inputs)).squaredNorm();
}

LowRankResult SolveNonlinear(const Matrix& targets, const Matrix& inputs, int d_prime,
                             const SolverConfig& config) {
  config.Validate();
  CheckShapes(targets, inputs, d_prime, "SolveNonlinear");
  CheckFinite(targets, "SolveNonlinear(targets)");
  CheckFinite(inputs, "SolveNonlinear(inputs)");

  const Vector in_mean = RowMean(inputs);
  const Matrix in_c = CenterRows(inputs, in_mean);
  const double ridge = config.ridge ? *config.ridge : DefaultRidge(in_c);
  const Nonlinearity nl = config.nonlinearity;

  LowRankResult r = SolveLinear(inputs, d_prime);
  Matrix z = Predict(r.m, r.b, inputs);
  const Matrix target_act = Apply(nl, targets);
  r.objective_trace.push_back(
      {config.lambda_warm, HalfStep::kInit,
       RelaxedObjective(r.m, r.b, z, targets, inputs, config.lambda_warm, nl)});

  for (const double lambda : {config.lambda_warm, config.lambda_final}) {
    for (int it = 0; it < config.iters_per_phase; ++it) {
      // (ii) elementwise z-step with M, b fixed.
      const Matrix linear = Predict(r.m, r.b, inputs);
      if (nl == Nonlinearity::kRelu) {
        for (Eigen::Index j = 0; j < z.cols(); ++j)
          for (Eigen::Index i = 0; i < z.rows(); ++i)
            z(i, j) = SolveZ(targets(i, j), linear(i, j), lambda);
      } else {
        z = (target_act + lambda * linear) / (1.0 + lambda);
      }
      const double z_value = RelaxedObjective(r.m, r.b, z, targets, inputs, lambda, nl);
      r.objective_trace.push_back({lambda, HalfStep::kZ, z_value});

      // (i) M, b with z fixed.  The ridge makes this step minimise a slightly
      // different objective, so near convergence it can nudge the relaxed
      // objective up; the previous M, b is kept in that case.
      const Vector z_mean = RowMean(z);
      Matrix m = Rrr(CenterRows(z, z_mean), in_c, d_prime, ridge);
      Vector b = z_mean - m * in_mean;
      const double value = RelaxedObjective(m, b, z, targets, inputs, lambda, nl);
      if (!std::isfinite(value))
        throw DivergenceError("SolveNonlinear: objective became non-finite at lambda " +
                              std::to_string(lambda) + ", iteration " + std::to_string(it));
      if (value <= z_value) {
        r.m = std::move(m);
        r.b = std::move(b);
      }
      r.objective_trace.push_back({lambda, HalfStep::kM, std::min(value, z_value)});
    }
  }
  std::tie(r.p, r.q) = Factorize(r.m, d_prime);
  r.final_nonlinear_objective = NonlinearObjective(r.m, r.b, targets, inputs, nl);
  return r;
}

std::pair<Matrix, Matrix> Factorize(const Matrix& m, int d_prime) {
  if (m.rows() != m.cols()) throw ShapeError("Factorize: M must be square");
  if (d_prime < 1 || d_prime > m.rows())
    throw ValidationError("Factorize: rank " + std::to_string(d_prime) + " outside [1, " +
                          std::to_string(m.rows()) + "]");
  const SvdResult s = Svd(m);
  if (d_prime < s.singular_values.size() && s.singular_values(0) > 0 &&
      s.singular_values(d_prime) > 1e-8 * s.singular_values(0))
    spdlog::warn("Factorize: M has rank > {}; truncating", d_prime);
  const Vector root = s.singular_values.head(d_prime).cwiseSqrt();
  return {s.u.leftCols(d_prime) * root.asDiagonal(), s.v.leftCols(d_prime) * root.asDiagonal()};
}

void SaveLowRankResult(const LowRankResult& r, const SolverConfig& config,
                       const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  WriteBlob(dir / (stem + "_m.bin"), MatrixToBlob(r.m));
  WriteBlob(dir / (stem + "_b.bin"), VectorToBlob(r.b));
  WriteBlob(dir / (stem + "_p.bin"), MatrixToBlob(r.p));
  WriteBlob(dir / (stem + "_q.bin"), MatrixToBlob(r.q));
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : r.objective_trace)
    trace.push_back({{"lambda", t.lambda}, {"step", StepName(t.step)}, {"value", t.value}});
  nlohmann::json j;
  j["d_prime"] = r.d_prime;
  j["final_nonlinear_objective"] = r.final_nonlinear_objective;
  j["config"] = {{"lambda_warm", config.lambda_warm},
                 {"lambda_final", config.lambda_final},
                 {"iters_per_phase", config.iters_per_phase},
                 {"ridge", config.ridge ? nlohmann::json(*config.ridge) : nlohmann::json()},
                 {"mode", ToString(config.mode)}};
  j["trace"] = std::move(trace);
  const std::string text = j.dump(2) + "\n";
  WriteFileBytes(dir / (stem + ".json"),
                 std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

LowRankResult LoadLowRankResult(const std::filesystem::path& dir, const std::string& stem) {
  const auto json_path = dir / (stem + ".json");
  const auto bytes = ReadFileBytes(json_path);
  LowRankResult r;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    r.d_prime = j.at("d_prime").get<int>();
    r.final_nonlinear_objective = j.at("final_nonlinear_objective").get<double>();
    for (const auto& t : j.at("trace")) {
      const std::string step = t.at("step").get<std::string>();
      r.objective_trace.push_back(
          {t.at("lambda").get<double>(),
           step == "z" ? HalfStep::kZ : (step == "m" ? HalfStep::kM : HalfStep::kInit),
           t.at("value").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(json_path.string() + ": " + e.what());
  }
  r.m = BlobToMatrix(ReadBlob(dir / (stem + "_m.bin")), stem + "_m.bin");
  r.b = BlobToVector(ReadBlob(dir / (stem + "_b.bin")), stem + "_b.bin");
  r.p = BlobToMatrix(ReadBlob(dir / (stem + "_p.bin")), stem + "_p.bin");
  r.q = BlobToMatrix(ReadBlob(dir / (stem + "_q.bin")), stem + "_q.bin");
  if (r.p.cols() != r.d_prime || r.q.cols() != r.d_prime || r.m.rows() != r.p.rows())
    throw ShapeMismatchError(json_path.string() + ": factor shapes disagree with d_prime " +
                             std::to_string(r.d_prime));
  return r;
}

}  // namespace lrc
