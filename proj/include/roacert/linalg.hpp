#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "roacert/errors.hpp"

namespace roacert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kSqrt2 = 1.41421356237309504880;

/// Length of the packed upper triangle of an n x n symmetric matrix.
constexpr int svec_size(int n) { return n * (n + 1) / 2; }

/// Scaled vectorization: upper triangle row by row, off-diagonals times
/// sqrt(2), so that <svec(A), svec(B)> = trace(A B). The ordering coincides
/// with SCS's lower-triangle column-major convention.
inline VectorXd svec(const MatrixXd& S) {
  const int n = static_cast<int>(S.rows());
  VectorXd out(svec_size(n));
  int k = 0;
  for (int i = 0; i < n; ++i) {
    out(k++) = S(i, i);
    for (int j = i + 1; j < n; ++j) out(k++) = kSqrt2 * 0.5 * (S(i, j) + S(j, i));
  }
  return out;
}

/// Inverse of svec.
inline MatrixXd smat(const VectorXd& v, int n) {
  if (v.size() != svec_size(n)) throw DimensionError("smat: packed length does not match dimension");
  MatrixXd S(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    S(i, i) = v(k++);
    for (int j = i + 1; j < n; ++j) {
      S(i, j) = S(j, i) = v(k++) / kSqrt2;
    }
  }
  return S;
}

/// Position of entry (i, j), i <= j, inside svec.
constexpr int svec_index(int n, int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  // rows 0..i-1 contribute n, n-1, ..., n-i+1 entries
  return i * n - i * (i - 1) / 2 + (j - i);
}

inline MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

inline double min_eigenvalue(const MatrixXd& S) {
  if (S.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eigenvalue(const MatrixXd& S) {
  if (S.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(S.rows() - 1);
}

inline double spectral_radius(const MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Schur stability with a safety margin.
inline bool is_schur(const MatrixXd& A, double margin = 1e-9) { return spectral_radius(A) < 1.0 - margin; }

/// Block-diagonal concatenation.
inline MatrixXd blkdiag(const std::vector<MatrixXd>& blocks) {
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  MatrixXd out = MatrixXd::Zero(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

/// Solves the discrete algebraic Riccati equation by fixed-point iteration on
/// the Riccati difference equation. Returns the stabilizing solution X and
/// the gain K with u = -K x.
struct DareSolution {
  MatrixXd X;
  MatrixXd K;
};

inline DareSolution solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                               int max_iter = 100000, double tol = 1e-12) {
  MatrixXd X = Q;
  for (int it = 0; it < max_iter; ++it) {
    const MatrixXd S = R + B.transpose() * X * B;
    const MatrixXd K = S.ldlt().solve(B.transpose() * X * A);
    MatrixXd Xn = A.transpose() * X * A - A.transpose() * X * B * K + Q;
    Xn = symmetrize(Xn);
    const double diff = (Xn - X).lpNorm<Eigen::Infinity>();
    X = Xn;
    if (diff <= tol * (1.0 + X.lpNorm<Eigen::Infinity>())) break;
  }
  const MatrixXd K = (R + B.transpose() * X * B).ldlt().solve(B.transpose() * X * A);
  return {X, K};
}

}  // namespace roacert
