#include <random>

#include <gtest/gtest.h>

#include "roacert/backends.hpp"

using namespace roacert;

namespace {

// min P s.t. a^2 P - P <= -1, P >= 1 for scalar a.
LmiProblem scalar_lyapunov(double a) {
  LmiProblem prob;
  prob.layout.n_zeta = 1;
  prob.layout.n_x = 1;
  prob.layout.lambda_offset = 1;
  prob.layout.num_vars = 1;
  LmiConstraint dec{"decrease", AffineMatrix(1), true, 1.0};
  dec.F.constant(0, 0) = -1.0;
  dec.F.add(0, MatrixXd::Constant(1, 1, 1.0 - a * a));
  prob.add_constraint(dec);
  LmiConstraint lb{"P_ge_1", AffineMatrix(1), false, 0.0};
  lb.F.constant(0, 0) = -1.0;
  lb.F.add(0, MatrixXd::Ones(1, 1));
  prob.add_constraint(lb);
  prob.objective = VectorXd::Ones(1);
  return prob;
}

// Double integrator with a small tanh controller: a realistic nominal instance.
LmiProblem double_integrator(double delta) {
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 0.1, 0, 1;
  B << 0.005, 0.1;
  MatrixXd W1(2, 2), W2(1, 2);
  W1 << 1.0, 0.5, -0.3, 1.2;
  W2 << -1.2, -1.5;
  const NeuralNetwork nn({{W1, VectorXd::Zero(2), Activation::tanh()}}, W2, VectorXd::Zero(1));
  const Equilibrium eq = propagate_equilibrium(nn, VectorXd::Zero(2));
  return assemble_nominal(LtiPlant::nominal(A, B), nn, build_lft(nn), eq, propagate_bounds(nn, eq, delta));
}

class Backends : public ::testing::TestWithParam<std::string> {};

}  // namespace

TEST_P(Backends, ClosedFormScalar) {
  auto backend = make_backend(GetParam());
  const RoaCertificate c = solve(scalar_lyapunov(0.5), *backend);
  ASSERT_EQ(c.status, SolveStatus::Optimal);
  EXPECT_NEAR(c.objective, 4.0 / 3.0, 1e-6);
  EXPECT_NEAR(c.P(0, 0), 4.0 / 3.0, 1e-6);
  EXPECT_TRUE(c.verification.pass);
  EXPECT_EQ(c.stats.backend, GetParam());
}

TEST_P(Backends, InfeasibleScalar) {
  auto backend = make_backend(GetParam());
  EXPECT_EQ(solve(scalar_lyapunov(2.0), *backend).status, SolveStatus::Infeasible);
}

TEST_P(Backends, FeasibilityOnly) {
  auto backend = make_backend(GetParam());
  SolverOptions o;
  o.feasibility_only = true;
  const LmiProblem p = double_integrator(0.5);
  const RoaCertificate c = solve(p, *backend, o);
  ASSERT_EQ(c.status, SolveStatus::Optimal);
  EXPECT_TRUE(verify_certificate(p, c).pass);
}

TEST_P(Backends, OptimalCertificatesPassIndependentAudit) {
  auto backend = make_backend(GetParam());
  // first-order SCS stalls on the ill-conditioned small-delta instance
  const std::vector<double> deltas = GetParam() == "scs" ? std::vector<double>{0.5, 1.0} : std::vector<double>{0.2, 0.5, 1.0};
  for (double d : deltas) {
    const LmiProblem p = double_integrator(d);
    const RoaCertificate c = solve(p, *backend);
    ASSERT_EQ(c.status, SolveStatus::Optimal) << d;
    const VerificationReport r = verify_certificate(p, c, 1e-7);
    EXPECT_TRUE(r.pass) << r.first_failure();
    EXPECT_GT(min_eigenvalue(c.P), 1e-9);
    EXPECT_GE(c.lambda.minCoeff(), -1e-9);
    EXPECT_NEAR(c.objective, c.P_x.trace(), 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(All, Backends, ::testing::Values("clarabel", "scs"));

TEST(Backend, SelectionByNameAndEnv) {
  EXPECT_EQ(make_backend("scs")->name(), "scs");
  EXPECT_THROW(make_backend("mosek"), ConfigError);
  setenv("ROACERT_SOLVER", "scs", 1);
  EXPECT_EQ(make_backend()->name(), "scs");
  unsetenv("ROACERT_SOLVER");
  EXPECT_EQ(make_backend()->name(), "clarabel");
}

TEST(Backends, AgreeOnOptimum) {
  const LmiProblem p = double_integrator(0.5);
  auto a = make_backend("clarabel");
  auto b = make_backend("scs");
  const RoaCertificate ca = solve(p, *a), cb = solve(p, *b);
  ASSERT_EQ(ca.status, SolveStatus::Optimal);
  ASSERT_EQ(cb.status, SolveStatus::Optimal);
  EXPECT_NEAR(ca.objective, cb.objective, 1e-4 * ca.objective);
}

TEST(Lower, ScalarConstraintGoesToNonnegCone) {
  LmiProblem prob;
  prob.layout.num_vars = 1;
  LmiConstraint c{"P_minus_2", AffineMatrix(1), false, 0.0};
  c.F.constant(0, 0) = -2.0;
  c.F.add(0, MatrixXd::Ones(1, 1));
  prob.add_constraint(c);
  prob.objective = VectorXd::Ones(1);
  const ConicProgram cp = lower(prob);
  EXPECT_EQ(cp.n_nonneg, 1);
  EXPECT_TRUE(cp.psd_dims.empty());
  // b - A x = -2 + P
  EXPECT_EQ(cp.b(0), -2.0);
  EXPECT_EQ(cp.A.coeff(0, 0), -1.0);
}

TEST(Lower, SvecRoundTripAndInnerProduct) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int n = 1; n <= 6; ++n) {
    MatrixXd X(n, n), Y(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        X(i, j) = N(rng);
        Y(i, j) = N(rng);
      }
    X = symmetrize(X);
    Y = symmetrize(Y);
    EXPECT_EQ(svec(X).size(), svec_size(n));
    EXPECT_LE((smat(svec(X), n) - X).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(svec(X).dot(svec(Y)), (X * Y).trace(), 1e-12);
  }
  MatrixXd S(2, 2);
  S << 1, 2, 2, 3;
  EXPECT_EQ(svec(S).size(), 3);
  EXPECT_NEAR(svec(S)(svec_index(2, 0, 1)), 2.0 * kSqrt2, 1e-15);
}

TEST(Lower, ContainmentBecomesTwoByTwoCone) {
  const NeuralNetwork nn({{MatrixXd::Constant(1, 1, 0.1), VectorXd::Zero(1), Activation::tanh()}},
                         MatrixXd::Constant(1, 1, -1.0), VectorXd::Zero(1));
  const Equilibrium eq = propagate_equilibrium(nn, VectorXd::Zero(1));
  const LmiProblem p = assemble_nominal(LtiPlant::nominal(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Ones(1, 1)), nn,
                                        build_lft(nn), eq, propagate_bounds(nn, eq, 0.1));
  const ConicProgram cp = lower(p);
  EXPECT_EQ(cp.psd_dims, (std::vector<int>{2, 2}));  // decrease, containment
  EXPECT_EQ(cp.n_nonneg, 2);                         // P_positive (1x1), lambda_nonneg
  EXPECT_EQ(cp.rows(), 2 + 3 + 3);
}

TEST(Lower, RejectsMalformedTerms) {
  LmiProblem prob;
  prob.layout.num_vars = 1;
  LmiConstraint c{"bad", AffineMatrix(2), false, 0.0};
  c.F.terms.emplace_back(3, MatrixXd::Identity(2, 2));
  prob.constraints.push_back(c);
  prob.objective = VectorXd::Zero(1);
  EXPECT_THROW(lower(prob), Error);
}

TEST(Verify, DetectsTampering) {
  const LmiProblem p = double_integrator(0.5);
  auto be = make_backend();
  const RoaCertificate c = solve(p, *be);
  ASSERT_EQ(c.status, SolveStatus::Optimal);
  ASSERT_TRUE(verify_certificate(p, c).pass);

  RoaCertificate off = c;
  const double big = 10.0 * std::sqrt(c.P(0, 0) * c.P(1, 1));
  off.P(0, 1) += big;
  off.P(1, 0) += big;
  off.P_x = off.P;
  const VerificationReport r1 = verify_certificate(p, off);
  EXPECT_FALSE(r1.pass);
  EXPECT_FALSE(r1.first_failure().empty());

  RoaCertificate small = c;
  small.P(0, 1) += 0.1;
  small.P(1, 0) += 0.1;
  small.P_x = small.P;
  EXPECT_FALSE(verify_certificate(p, small).pass);

  RoaCertificate neg = c;
  neg.lambda(0) = -1.0;
  const VerificationReport r2 = verify_certificate(p, neg);
  EXPECT_FALSE(r2.pass);
  bool lam_failed = false;
  for (const auto& ck : r2.checks)
    if (ck.name == "lambda_nonneg" || ck.name == "lambda_nonneg[0]") lam_failed = lam_failed || !ck.pass;
  EXPECT_TRUE(lam_failed);

  RoaCertificate obj = c;
  obj.objective += 1.0;
  EXPECT_FALSE(verify_certificate(p, obj).pass);
}
