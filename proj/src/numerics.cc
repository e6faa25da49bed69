// src/numerics.cc

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

#include "lrc/numerics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "lrc/error.h"

namespace lrc {

namespace {

// Stable descending order of values.
std::vector<Eigen::Index> DescendingOrder(const Vector& values) {
  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return values(a) > values(b);
                   });
  return order;
}

// Flip the sign of column j of `a` (and of `b`, if given) so that the
// largest-magnitude entry of a.col(j) is positive.
void CanonicalizeSigns(Matrix* a, Matrix* b) {
  for (Eigen::Index j = 0; j < a->cols(); ++j) {
    Eigen::Index arg = 0;
    a->col(j).cwiseAbs().maxCoeff(&arg);
    if ((*a)(arg, j) < 0) {
      a->col(j) *= -1.0;
      if (b != nullptr) b->col(j) *= -1.0;
    }
  }
}

}  // namespace

void CheckFinite(const Matrix& a, std::string_view what) {
  if (!a.allFinite())
    throw ValidationError(std::string(what) + ": matrix has non-finite entries");
}

EigResult SymEig(const Matrix& a) {
  if (a.rows() != a.cols())
    throw ShapeError("SymEig: matrix is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ", expected square");
  if (a.size() == 0) throw ValidationError("SymEig: empty matrix");
  CheckFinite(a, "SymEig");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ShapeError("SymEig: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success)
    throw NumericalError("SymEig: eigensolver did not converge");

  // Eigen returns ascending order; reverse before the stable sort so that
  // exact ties come out in a fixed order.
  const Vector values = solver.eigenvalues().reverse();
  const Matrix vectors = solver.eigenvectors().rowwise().reverse();
  const auto order = DescendingOrder(values);

  EigResult out;
  out.eigenvalues.resize(values.size());
  out.eigenvectors.resize(a.rows(), a.cols());
  for (size_t i = 0; i < order.size(); ++i) {
    out.eigenvalues(i) = values(order[i]);
    out.eigenvectors.col(i) = vectors.col(order[i]);
  }
  CanonicalizeSigns(&out.eigenvectors, nullptr);
  return out;
}

SvdResult Svd(const Matrix& a) {
  if (a.size() == 0) throw ValidationError("Svd: empty matrix");
  CheckFinite(a, "Svd");
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // JacobiSVD already sorts descending; keep the explicit stable sort so the
  // contract does not depend on that.
  const Vector values = solver.singularValues();
  const auto order = DescendingOrder(values);
  SvdResult out;
  out.singular_values.resize(values.size());
  out.u.resize(a.rows(), values.size());
  out.v.resize(a.cols(), values.size());
  for (size_t i = 0; i < order.size(); ++i) {
    out.singular_values(i) = values(order[i]);
    out.u.col(i) = solver.matrixU().col(order[i]);
    out.v.col(i) = solver.matrixV().col(order[i]);
  }
  CanonicalizeSigns(&out.u, &out.v);
  return out;
}

double DefaultRidge(const Matrix& y) {
  if (y.rows() == 0) return 0.0;
  return 1e-6 * y.squaredNorm() / static_cast<double>(y.rows());
}

Matrix Rrr(const Matrix& z, const Matrix& y, int d_prime, double ridge) {
  const Eigen::Index d = y.rows();
  if (z.rows() != d || z.cols() != y.cols())
    throw ShapeError("Rrr: z is " + std::to_string(z.rows()) + "x" +
                     std::to_string(z.cols()) + " but y is " +
                     std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  if (d == 0) throw ValidationError("Rrr: empty response matrix");
  if (d_prime < 1 || d_prime > d)
    throw ValidationError("Rrr: rank " + std::to_string(d_prime) +
                          " outside [1, " + std::to_string(d) + "]");
  if (ridge < 0 || !std::isfinite(ridge))
    throw ValidationError("Rrr: ridge must be finite and >= 0");
  CheckFinite(z, "Rrr(z)");
  CheckFinite(y, "Rrr(y)");
  if (y.cols() < d)
    spdlog::warn("Rrr: only {} samples for {} dimensions", y.cols(), d);

  Matrix gram = y * y.transpose();
  gram.diagonal().array() += ridge;
  const EigResult eig = SymEig(gram);
  const double lmax = std::max(eig.eigenvalues(0), 0.0);
  const double tol = 1e-12 * std::max(lmax, 1e-300) * static_cast<double>(d);
  int rank = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (eig.eigenvalues(i) > tol) ++rank;
  if (rank < d)
    throw SingularityError("Rrr: y y^T + ridge I is singular (rank " +
                               std::to_string(rank) + " of " +
                               std::to_string(d) + "); use ridge > 0",
                           rank, static_cast<int>(d));

  const Matrix& e = eig.eigenvectors;
  const Vector sqrt_l = eig.eigenvalues.cwiseSqrt();
  const Matrix g_half = e * sqrt_l.asDiagonal() * e.transpose();
  const Matrix g_inv_half = e * sqrt_l.cwiseInverse().asDiagonal() * e.transpose();

  // M_hat G^{1/2} = z y^T G^{-1} G^{1/2} = z y^T G^{-1/2}.
  const Matrix t = z * y.transpose() * g_inv_half;
  if (d_prime == d) return t * g_inv_half;
  return TruncateRank(t, d_prime) * g_inv_half;
}

int NumericalRank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  const SvdResult s = Svd(a);
  if (s.singular_values(0) <= 0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.singular_values.size(); ++i)
    if (s.singular_values(i) > rel_tol * s.singular_values(0)) ++r;
  return r;
}

Matrix TruncateRank(const Matrix& a, int k) {
  const SvdResult s = Svd(a);
  const int r = std::min<int>(k, static_cast<int>(s.singular_values.size()));
  return s.u.leftCols(r) * s.singular_values.head(r).asDiagonal() *
         s.v.leftCols(r).transpose();
}

Vector RowMean(const Matrix& a) {
  if (a.cols() == 0) return Vector::Zero(a.rows());
  return a.rowwise().mean();
}

Matrix CenterRows(const Matrix& a, const Vector& mean) {
  return a.colwise() - mean;
}

}  // namespace lrc
