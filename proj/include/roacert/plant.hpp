#pragma once

#include <string>

#include "roacert/linalg.hpp"

namespace roacert {

/// Discrete-time LTI plant in uncertain (LFT) form:
///
///   x(k+1) = A x + B1 q + B2 u
///   p(k)   = C x + D1 q + D2 u,      q = Delta(p)
///
/// The nominal plant x(k+1) = A x + B u is the special case n_p = n_q = 0
/// with B2 = B.
struct LtiPlant {
  MatrixXd A;
  MatrixXd B1;
  MatrixXd B2;
  MatrixXd C;
  MatrixXd D1;
  MatrixXd D2;

  static LtiPlant nominal(const MatrixXd& A, const MatrixXd& B) {
    LtiPlant p;
    p.A = A;
    p.B2 = B;
    const auto n = A.rows();
    p.B1 = MatrixXd::Zero(n, 0);
    p.C = MatrixXd::Zero(0, n);
    p.D1 = MatrixXd::Zero(0, 0);
    p.D2 = MatrixXd::Zero(0, B.cols());
    p.validate();
    return p;
  }

  static LtiPlant uncertain(const MatrixXd& A, const MatrixXd& B1, const MatrixXd& B2, const MatrixXd& C,
                            const MatrixXd& D1, const MatrixXd& D2) {
    LtiPlant p{A, B1, B2, C, D1, D2};
    p.validate();
    return p;
  }

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B2.cols()); }
  int np() const { return static_cast<int>(C.rows()); }
  int nq() const { return static_cast<int>(B1.cols()); }
  bool is_nominal() const { return np() == 0 && nq() == 0; }

  /// Nominal input matrix.
  const MatrixXd& B() const { return B2; }

  void validate() const {
    auto require = [](bool ok, const std::string& what) {
      if (!ok) throw DimensionError("plant: " + what);
    };
    require(A.rows() == A.cols(), "A must be square");
    require(B1.rows() == A.rows(), "B1 rows must equal state dimension");
    require(B2.rows() == A.rows(), "B2 rows must equal state dimension");
    require(C.cols() == A.rows(), "C columns must equal state dimension");
    require(D1.rows() == C.rows() && D1.cols() == B1.cols(), "D1 must be n_p x n_q");
    require(D2.rows() == C.rows() && D2.cols() == B2.cols(), "D2 must be n_p x n_u");
  }
};

}  // namespace roacert
