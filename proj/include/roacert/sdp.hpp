#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "roacert/errors.hpp"
#include "roacert/linalg.hpp"
#include "roacert/lmi.hpp"

namespace roacert {

using SparseMatrixXd = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// min c^T x  s.t.  b - A x in K, K = R_+^{n_nonneg} x S_+^{d_1} x ... (PSD
/// blocks in svec form).
struct ConicProgram {
  int n = 0;
  VectorXd c;
  SparseMatrixXd A;
  VectorXd b;
  int n_nonneg = 0;
  std::vector<int> psd_dims;
  std::vector<int> constraint_row;  // first cone row of each LMI constraint

  int rows() const { return static_cast<int>(b.size()); }
};

/// 1x1 constraints go to the nonnegative cone, the rest to PSD cones.
inline ConicProgram lower(const LmiProblem& prob, bool feasibility_only = false) {
  const int n = prob.layout.num_vars;
  ConicProgram cp;
  cp.n = n;
  cp.c = feasibility_only ? VectorXd::Zero(n) : prob.objective;
  if (cp.c.size() != n) throw Error("lower: objective length does not match variable count (assembly bug)");

  std::vector<int> scalar, matrix;
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    const auto& F = prob.constraints[i].F;
    if (F.constant.rows() != F.constant.cols()) throw Error("lower: non-square constraint (assembly bug)");
    for (const auto& [k, C] : F.terms) {
      if (k < 0 || k >= n) throw Error("lower: variable index out of range in '" + prob.constraints[i].name + "'");
      if (C.rows() != F.dim() || C.cols() != F.dim())
        throw Error("lower: non-affine or malformed term in '" + prob.constraints[i].name + "' (assembly bug)");
    }
    (F.dim() == 1 ? scalar : matrix).push_back(static_cast<int>(i));
  }
  int m = static_cast<int>(scalar.size());
  for (int i : matrix) m += svec_size(prob.constraints[i].F.dim());

  cp.b = VectorXd::Zero(m);
  cp.constraint_row.assign(prob.constraints.size(), 0);
  std::vector<Eigen::Triplet<double, int>> trip;
  int row = 0;
  for (int i : scalar) {
    const auto& F = prob.constraints[i].F;
    cp.constraint_row[i] = row;
    cp.b(row) = F.constant(0, 0);
    for (const auto& [k, C] : F.terms) trip.emplace_back(row, k, -C(0, 0));
    ++row;
  }
  cp.n_nonneg = static_cast<int>(scalar.size());
  for (int i : matrix) {
    const auto& F = prob.constraints[i].F;
    const int d = F.dim(), s = svec_size(d);
    cp.constraint_row[i] = row;
    cp.psd_dims.push_back(d);
    cp.b.segment(row, s) = svec(F.constant);
    for (const auto& [k, C] : F.terms) {
      const VectorXd v = svec(C);
      for (int t = 0; t < s; ++t)
        if (v(t) != 0.0) trip.emplace_back(row + t, k, -v(t));
    }
    row += s;
  }
  cp.A.resize(m, n);
  cp.A.setFromTriplets(trip.begin(), trip.end());
  cp.A.makeCompressed();
  return cp;
}

enum class SolveStatus { Optimal, Infeasible, NumericalTrouble };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalTrouble: return "numerical-trouble";
  }
  return "unknown";
}

struct SolverOptions {
  double eps = 1e-9;
  int max_iters = 200000;
  double time_limit_s = 0.0;  // 0 = none
  bool verbose = false;
  bool feasibility_only = false;
};

struct SolverResult {
  SolveStatus status = SolveStatus::NumericalTrouble;
  VectorXd x;
  std::string backend;
  std::string raw_status;
  int iterations = 0;
  double setup_ms = 0.0, solve_ms = 0.0;
  double primal_objective = 0.0, dual_objective = 0.0;
  double primal_residual = 0.0, dual_residual = 0.0;
};

/// Conic solver interface. Instances are used from one thread at a time.
class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual std::string name() const = 0;
  virtual SolverResult solve(const ConicProgram& cp, const SolverOptions& opts) = 0;
};

struct ConstraintCheck {
  std::string name;
  double min_eig = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<ConstraintCheck> checks;
  double p_min_eig = 0.0;
  double lambda_min = 0.0;
  double objective_error = 0.0;
  bool pass = false;

  std::string first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return c.name;
    return "";
  }
};

struct RoaCertificate {
  SolveStatus status = SolveStatus::NumericalTrouble;
  MatrixXd P, P_x;
  VectorXd lambda;
  VectorXd eta;  // parameters of activation-channel blocks
  std::vector<VectorXd> multiplier_params;
  std::vector<std::string> block_labels;
  double objective = 0.0;
  VectorXd x_star;
  double epsilon = 0.0;
  SolverResult stats;
  VerificationReport verification;

  bool certified() const { return status == SolveStatus::Optimal && verification.pass; }
};

inline constexpr double kVerifyTol = 1e-7;

/// Re-substitutes the certificate into every constraint and checks
/// eigenvalues independently of the solver.
inline VerificationReport verify_certificate(const LmiProblem& prob, const RoaCertificate& cert,
                                             double tol = kVerifyTol) {
  VerificationReport rep;
  VectorXd x;
  try {
    x = prob.pack(cert.P, cert.lambda, cert.multiplier_params);
  } catch (const DimensionError& e) {
    rep.checks.push_back({std::string("shape: ") + e.what(), 0.0, false});
    return rep;
  }
  bool ok = true;
  for (const auto& c : prob.constraints) {
    const double e = min_eigenvalue(c.F.evaluate(x));
    // with a zero margin the strict inequality must hold with room to spare
    const bool pass = (c.strict && c.margin == 0.0) ? e > tol : e >= -tol;
    rep.checks.push_back({c.name, e, pass});
    ok = ok && pass;
  }
  rep.p_min_eig = min_eigenvalue(cert.P);
  const bool p_ok = rep.p_min_eig > 1e-9;
  rep.checks.push_back({"P_min_eigenvalue", rep.p_min_eig, p_ok});
  rep.lambda_min = cert.lambda.size() ? cert.lambda.minCoeff() : 0.0;
  const bool l_ok = rep.lambda_min >= -1e-9;
  rep.checks.push_back({"lambda_nonneg", rep.lambda_min, l_ok});
  rep.objective_error = std::abs(cert.objective - cert.P.topLeftCorner(prob.layout.n_x, prob.layout.n_x).trace());
  const bool o_ok = rep.objective_error <= 1e-9 * std::max(1.0, std::abs(cert.objective));
  rep.checks.push_back({"objective_consistency", rep.objective_error, o_ok});
  rep.pass = ok && p_ok && l_ok && o_ok;
  return rep;
}

inline RoaCertificate certificate_from_solution(const LmiProblem& prob, const VectorXd& x) {
  RoaCertificate cert;
  cert.P = symmetrize(prob.P(x));
  cert.P_x = cert.P.topLeftCorner(prob.layout.n_x, prob.layout.n_x);
  cert.lambda = prob.lambda(x);
  cert.block_labels = prob.block_labels;
  std::vector<double> eta;
  for (std::size_t b = 0; b < prob.layout.block_offset.size(); ++b) {
    cert.multiplier_params.push_back(prob.block_params(x, static_cast<int>(b)));
    if (prob.layout.block_activation[b])
      for (Eigen::Index t = 0; t < cert.multiplier_params.back().size(); ++t)
        eta.push_back(cert.multiplier_params.back()(t));
  }
  cert.eta = Eigen::Map<VectorXd>(eta.data(), static_cast<Eigen::Index>(eta.size()));
  cert.objective = cert.P_x.trace();
  return cert;
}

/// Lower, solve and audit. The certificate is only stamped optimal when the
/// independent verification passes.
inline RoaCertificate solve(const LmiProblem& prob, SdpBackend& backend, const SolverOptions& opts = {}) {
  const ConicProgram cp = lower(prob, opts.feasibility_only);
  SolverResult res = backend.solve(cp, opts);
  RoaCertificate cert;
  if (res.x.size() == prob.layout.num_vars) cert = certificate_from_solution(prob, res.x);
  cert.epsilon = prob.constraints.empty() ? 0.0 : prob.constraints.front().margin;
  cert.status = res.status;
  if (res.status == SolveStatus::Optimal) {
    cert.verification = verify_certificate(prob, cert);
    if (!cert.verification.pass) cert.status = SolveStatus::NumericalTrouble;
  }
  cert.stats = std::move(res);
  return cert;
}

}  // namespace roacert
