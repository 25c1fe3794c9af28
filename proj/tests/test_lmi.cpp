#include <random>

#include <gtest/gtest.h>

#include "roacert/backends.hpp"
#include "roacert/iqc.hpp"
#include "roacert/lmi.hpp"
#include "roacert/sweep.hpp"
#include "scalar_oracle.hpp"

using namespace roacert;

namespace {

MatrixXd randn(int r, int c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> N(0.0, s);
  MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = N(rng);
  return M;
}

struct Scalar {
  LtiPlant plant;
  NeuralNetwork nn;
  NnLft lft;
  Equilibrium eq;
  ActivationBounds bounds;
};

Scalar scalar_case(double a, double w1, double w2, double delta) {
  Scalar s;
  s.plant = LtiPlant::nominal(MatrixXd::Constant(1, 1, a), MatrixXd::Ones(1, 1));
  s.nn = NeuralNetwork({{MatrixXd::Constant(1, 1, w1), VectorXd::Zero(1), Activation::tanh()}},
                       MatrixXd::Constant(1, 1, w2), VectorXd::Zero(1));
  s.lft = build_lft(s.nn);
  s.eq = propagate_equilibrium(s.nn, VectorXd::Zero(1));
  s.bounds = propagate_bounds(s.nn, s.eq, delta);
  return s;
}

const LmiConstraint& find(const LmiProblem& p, const std::string& name) {
  for (const auto& c : p.constraints)
    if (c.name == name) return c;
  throw std::runtime_error("no constraint " + name);
}

double max_asymmetry(const LmiProblem& p) {
  double m = 0.0;
  for (const auto& c : p.constraints) {
    m = std::max(m, (c.F.constant - c.F.constant.transpose()).cwiseAbs().maxCoeff());
    for (const auto& [k, C] : c.F.terms) m = std::max(m, (C - C.transpose()).cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace

TEST(SectorForm, UnitSector) {
  const MatrixXd M = sector_quadratic_form(VectorXd::Zero(1), VectorXd::Ones(1), VectorXd::Ones(1));
  EXPECT_EQ(M, (MatrixXd(2, 2) << 0, 1, 1, -2).finished());
  EXPECT_EQ(sector_quadratic_form(VectorXd::Zero(1), VectorXd::Ones(1), VectorXd::Zero(1)), MatrixXd::Zero(2, 2));
  EXPECT_THROW(sector_quadratic_form(VectorXd::Zero(1), VectorXd::Ones(1), VectorXd::Constant(1, -1.0)), ParameterError);
}

TEST(SectorForm, MatchesProductSum) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int n = 2;
    VectorXd al(n), be(n), la(n), dv(n), dw(n);
    for (int i = 0; i < n; ++i) {
      al(i) = U(rng);
      be(i) = al(i) + U(rng);
      la(i) = 3.0 * U(rng);
      dv(i) = 2.0 * U(rng) - 1.0;
      dw(i) = 2.0 * U(rng) - 1.0;
    }
    const MatrixXd M = sector_quadratic_form(al, be, la);
    VectorXd z(2 * n);
    z << dv, dw;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += 2.0 * la(i) * (dw(i) - al(i) * dv(i)) * (be(i) * dv(i) - dw(i));
    EXPECT_NEAR(z.dot(M * z), sum, 1e-12);
  }
}

TEST(AssembleNominal, ScalarStructure) {
  const Scalar s = scalar_case(0.5, 0.1, -1.0, 0.1);
  const LmiProblem p = assemble_nominal(s.plant, s.nn, s.lft, s.eq, s.bounds);
  EXPECT_EQ(p.layout.num_vars, 2);  // P, lambda
  EXPECT_EQ(p.layout.p_count(), 1);
  EXPECT_EQ(p.layout.lambda_offset, 1);
  const LmiConstraint& dec = find(p, "decrease");
  EXPECT_EQ(dec.F.dim(), 2);
  EXPECT_TRUE(dec.strict);
  EXPECT_EQ(dec.margin, 1e-6);
  EXPECT_EQ(find(p, "containment[0]").F.dim(), 2);
  int strict = 0, two_by_two = 0;
  for (const auto& c : p.constraints) {
    strict += c.strict;
    two_by_two += c.F.dim() == 2;
  }
  EXPECT_EQ(strict, 1);
  EXPECT_EQ(two_by_two, 2);
  EXPECT_EQ(p.objective, (VectorXd(2) << 1, 0).finished());
  EXPECT_LE(max_asymmetry(p), 1e-14);
}

TEST(AssembleNominal, LambdaZeroReducesToLyapunov) {
  const Scalar s = scalar_case(0.5, 0.1, -1.0, 0.1);
  const LmiProblem p = assemble_nominal(s.plant, s.nn, s.lft, s.eq, s.bounds);
  const VectorXd x = p.pack(MatrixXd::Ones(1, 1), VectorXd::Zero(1), {});
  // F = -eps I - (decrease form); the x-block of the form is a^2 P - P
  const MatrixXd F = find(p, "decrease").F.evaluate(x);
  EXPECT_NEAR(F(0, 0), -1e-6 - (0.25 - 1.0), 1e-15);
  EXPECT_GT(F(0, 0), 0.0);
}

TEST(AssembleNominal, MatchesHandDerivedDecreaseMatrix) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const oracle::ScalarInstance si = oracle::random_instance(rng);
    const LtiPlant plant = LtiPlant::nominal(MatrixXd::Constant(1, 1, si.a), MatrixXd::Constant(1, 1, si.b));
    const NeuralNetwork nn = oracle::network(si);
    const Equilibrium eq = propagate_equilibrium(nn, VectorXd::Zero(1));
    const LmiProblem p = assemble_nominal(plant, nn, build_lft(nn), eq, propagate_bounds(nn, eq, si.delta));
    for (double P : {0.3, 2.0, 7.5})
      for (double lam : {0.0, 0.4, 3.0}) {
        const VectorXd x = p.pack(MatrixXd::Constant(1, 1, P), VectorXd::Constant(1, lam), {});
        const bool lib = min_eigenvalue(find(p, "decrease").F.evaluate(x)) >= 0.0 &&
                         min_eigenvalue(find(p, "containment[0]").F.evaluate(x)) >= 0.0;
        const double al = std::tanh(si.delta) / si.delta;
        EXPECT_EQ(lib, oracle::pair_feasible(si, P, lam, 1e-6, al, 1.0)) << "P=" << P << " lambda=" << lam;
      }
  }
}

TEST(AssembleNominal, UnstableUncontrolledIsInfeasible) {
  const Scalar s = scalar_case(2.0, 1.0, 0.0, 0.5);
  auto be = make_backend();
  const RoaCertificate c = solve(assemble_nominal(s.plant, s.nn, s.lft, s.eq, s.bounds), *be);
  EXPECT_EQ(c.status, SolveStatus::Infeasible);
  oracle::ScalarInstance si;
  si.a = 2.0;
  si.w1 = 1.0;
  si.w2 = 0.0;
  si.delta = 0.5;
  EXPECT_FALSE(oracle::grid_feasible(si, 1e-6));
}

TEST(AssembleNominal, DimensionMismatch) {
  const Scalar s = scalar_case(0.5, 0.1, -1.0, 0.1);
  MatrixXd A = MatrixXd::Identity(2, 2) * 0.5;
  EXPECT_THROW(assemble_nominal(LtiPlant::nominal(A, MatrixXd::Ones(2, 1)), s.nn, s.lft, s.eq, s.bounds), DimensionError);
}

TEST(AssembleRobust, NoBlocksMatchesNominal) {
  std::mt19937_64 rng(3);
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 0.1, 0, 1;
  B << 0.005, 0.1;
  const NeuralNetwork nn({{randn(4, 2, rng), VectorXd::Zero(4), Activation::tanh()}}, randn(1, 4, rng), VectorXd::Zero(1));
  const LtiPlant plant = LtiPlant::nominal(A, B);
  const NnLft lft = build_lft(nn);
  const Equilibrium eq = propagate_equilibrium(nn, VectorXd::Zero(2));
  const ActivationBounds b = propagate_bounds(nn, eq, 0.5);
  const LmiProblem pn = assemble_nominal(plant, nn, lft, eq, b);
  const LmiProblem pr = assemble_robust(extend_system(plant, {}, &lft), nn, lft, eq, b, {});
  ASSERT_EQ(pn.constraints.size(), pr.constraints.size());
  EXPECT_EQ(pn.objective, pr.objective);
  EXPECT_EQ(pn.dump(), pr.dump());
}

TEST(AssembleRobust, BlockDimensions) {
  std::mt19937_64 rng(4);
  const NeuralNetwork nn({{randn(3, 2, rng), VectorXd::Zero(3), Activation::tanh()}}, randn(1, 3, rng), VectorXd::Zero(1));
  const NnLft lft = build_lft(nn);
  const Equilibrium eq = propagate_equilibrium(nn, VectorXd::Zero(2));
  const ActivationBounds b = propagate_bounds(nn, eq, 0.5);
  const LtiPlant G = LtiPlant::uncertain(0.5 * MatrixXd::Identity(2, 2), randn(2, 1, rng), randn(2, 1, rng),
                                         randn(1, 2, rng), MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1));
  IqcBlock sec = static_sector_iqc(VectorXd::Zero(1), VectorXd::Constant(1, 0.2));
  const LmiProblem p1 = assemble_robust(extend_system(G, {sec}, &lft), nn, lft, eq, b, {sec});
  EXPECT_EQ(find(p1, "decrease").F.dim(), 2 + 3 + 1);
  EXPECT_EQ(p1.layout.n_zeta, 2);

  IqcBlock obo = off_by_one_iqc(b.slope_lo, b.slope_hi);
  obo.channel.kind = ChannelKind::Activation;
  const LmiProblem p2 = assemble_robust(extend_system(G, {sec, obo}, &lft), nn, lft, eq, b, {sec, obo});
  EXPECT_EQ(p2.layout.n_zeta, 2 + 3);
  EXPECT_EQ(find(p2, "decrease").F.dim(), 5 + 3 + 1);
  // variable order: P, lambda, activation-block params, plant-block params
  EXPECT_EQ(p2.layout.lambda_offset, svec_size(5));
  EXPECT_EQ(p2.layout.block_offset[1], svec_size(5) + 3);
  EXPECT_EQ(p2.layout.block_offset[0], svec_size(5) + 3 + 3);
  EXPECT_TRUE(p2.layout.block_activation[1]);
  EXPECT_LE(max_asymmetry(p2), 1e-14);
  // objective reads the plant block only
  double tr = 0.0;
  for (int i = 0; i < 5; ++i) tr += p2.objective(svec_index(5, i, i));
  EXPECT_EQ(tr, 2.0);
}

TEST(AssembleRobust, NonzeroEquilibriumRejected) {
  const Scalar s = scalar_case(0.5, 0.1, -1.0, 0.1);
  Equilibrium eq = propagate_equilibrium(s.nn, VectorXd::Constant(1, 0.2));
  EXPECT_THROW(assemble_robust(extend_system(s.plant, {}, &s.lft), s.nn, s.lft, eq, s.bounds, {}),
               UnsupportedEquilibriumError);
}

TEST(AssembleNominal, LambdaCapAndDump) {
  const Scalar s = scalar_case(0.5, 0.1, -1.0, 0.1);
  AssemblyOptions ao;
  ao.lambda_cap = 5.0;
  const LmiProblem p = assemble_nominal(s.plant, s.nn, s.lft, s.eq, s.bounds, ao);
  const LmiConstraint& cap = find(p, "lambda_cap[0]");
  EXPECT_EQ(cap.F.evaluate(p.pack(MatrixXd::Ones(1, 1), VectorXd::Constant(1, 6.0), {}))(0, 0), -1.0);
  const std::string d = p.dump();
  EXPECT_NE(d.find("variables 2"), std::string::npos);
  EXPECT_NE(d.find("lmi decrease dim 2 strict"), std::string::npos);
  EXPECT_NE(d.find("lmi containment[0] dim 2"), std::string::npos);
}

TEST(Sweep, RowsAndVolume) {
  const Scalar s = scalar_case(0.5, 0.1, -1.0, 0.1);
  auto be = make_backend();
  auto at = [&](double d) {
    const ActivationBounds b = propagate_bounds(s.nn, s.eq, d);
    return solve(assemble_nominal(s.plant, s.nn, s.lft, s.eq, b), *be);
  };
  const SweepResult one = sweep_delta_v({0.1}, at);
  ASSERT_EQ(one.rows.size(), 1u);
  EXPECT_TRUE(one.rows[0].feasible);
  EXPECT_NEAR(one.rows[0].det_inv, 1.0 / one.rows[0].trace, 1e-12);

  const SweepResult grid = sweep_delta_v({0.05, 0.1, 0.5, 1.0, 2.0}, at);
  for (const auto& r : grid.rows) EXPECT_TRUE(r.feasible) << r.delta_v;
  // scalar P: det(P^-1) = 1/P, so the largest volume is the smallest trace
  int best_trace = 0;
  for (int i = 1; i < 5; ++i)
    if (grid.rows[i].trace < grid.rows[best_trace].trace) best_trace = i;
  EXPECT_EQ(grid.best_volume, best_trace);
  EXPECT_EQ(grid.largest_feasible, 2.0);
  EXPECT_THROW(sweep_delta_v({}, at), ParameterError);
}
