// include/lrc/numerics.h

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

#ifndef LRC_NUMERICS_H_
#define LRC_NUMERICS_H_

#include <string_view>

#include <Eigen/Dense>

namespace lrc {

// All solver math runs in double precision.  Response matrices are d x n with
// one sample per column.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws ValidationError if any entry is NaN or infinite.
void CheckFinite(const Matrix& a, std::string_view what);

struct EigResult {
  Vector eigenvalues;   // non-increasing
  Matrix eigenvectors;  // column i pairs with eigenvalues(i)
};

struct SvdResult {
  Matrix u;                // m x r, r = min(m, n)
  Vector singular_values;  // non-increasing
  Matrix v;                // n x r
};

// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.
// Ties keep the solver's order (stable sort); each eigenvector is signed so
// that its largest-magnitude entry is positive.
EigResult SymEig(const Matrix& a);

// Thin SVD, singular values descending, same sign convention on u.
SvdResult Svd(const Matrix& a);

// Default ridge for Rrr: 1e-6 * trace(y y^T) / d.
double DefaultRidge(const Matrix& y);

// Reduced-rank regression: the M with rank(M) <= d_prime minimising
//   ||z - M y||_F^2 + ridge * ||M||_F^2.
// Solved by whitening with G = y y^T + ridge I = E L E^T, truncating the SVD
// of (z y^T G^-1) G^{1/2} to d_prime terms, and mapping back through
// G^{-1/2}.  This is the generalized-orthogonality solution (V^T G V = I).
// Throws SingularityError when G is rank deficient (only possible with
// ridge == 0).
Matrix Rrr(const Matrix& z, const Matrix& y, int d_prime, double ridge);

// Number of singular values above rel_tol * sigma_max.
int NumericalRank(const Matrix& a, double rel_tol = 1e-8);

// Best rank-k approximation of a (SVD truncation).
Matrix TruncateRank(const Matrix& a, int k);

// Row means of a d x n matrix, and the matrix with them subtracted.
Vector RowMean(const Matrix& a);
Matrix CenterRows(const Matrix& a, const Vector& mean);

}  // namespace lrc

#endif  // LRC_NUMERICS_H_
