#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "roacert/bounds.hpp"

using namespace roacert;

namespace {

double sech2(double v) {
  const double t = std::tanh(v);
  return 1.0 - t * t;
}

MatrixXd randn(int r, int c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> N(0.0, s);
  MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = N(rng);
  return M;
}

}  // namespace

TEST(LocalSector, TanhSymmetric) {
  const SectorBound s = local_sector(Activation::tanh(), -0.1, 0.1, 0.0);
  EXPECT_NEAR(s.alpha, std::tanh(0.1) / 0.1, 1e-15);
  EXPECT_NEAR(s.alpha, 0.99668, 1e-5);
  EXPECT_EQ(s.beta, 1.0);
  EXPECT_EQ(local_sector(Activation::tanh(), -0.1, 0.1, 0.0, SectorUpper::Global).beta, 1.0);
}

TEST(LocalSector, TanhOffsetInterval) {
  // The infimum of chord slopes from v* = 1 is attained at the right endpoint
  // (tanh is concave there); the upper bound is the largest derivative.
  const SectorBound s = local_sector(Activation::tanh(), 0.5, 1.5, 1.0);
  const double right = (std::tanh(1.5) - std::tanh(1.0)) / 0.5;
  const double left = (std::tanh(1.0) - std::tanh(0.5)) / 0.5;
  EXPECT_NEAR(s.alpha, std::min({right, left, sech2(1.0)}), 1e-15);
  EXPECT_NEAR(s.alpha, right, 1e-15);
  EXPECT_NEAR(s.beta, sech2(0.5), 1e-15);
  EXPECT_LE(s.beta, 0.78645 + 1e-5);
}

TEST(LocalSector, PiecewiseLinearAndErrors) {
  const SectorBound r = local_sector(Activation::relu(), -1.0, 1.0, 0.0);
  EXPECT_EQ(r.alpha, 0.0);
  EXPECT_EQ(r.beta, 1.0);
  const SectorBound l = local_sector(Activation::leaky_relu(0.1), -1.0, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(l.alpha, 0.1);
  EXPECT_EQ(l.beta, 1.0);
  EXPECT_THROW(local_sector(Activation::tanh(), 1.0, -1.0, 0.0), InvalidIntervalError);
  EXPECT_THROW(local_sector(Activation::tanh(), 0.0, 1.0, 2.0), InvalidIntervalError);
}

TEST(LocalSlope, Examples) {
  const SlopeBound t = local_slope(Activation::tanh(), -0.73, 0.73);
  EXPECT_NEAR(t.lo, sech2(0.73), 1e-15);
  EXPECT_NEAR(t.lo, 0.61247, 1e-3);
  EXPECT_EQ(t.hi, 1.0);
  const SlopeBound wide = local_slope(Activation::tanh(), -20.0, 20.0);
  EXPECT_LT(wide.lo, 1e-15);
  EXPECT_EQ(wide.hi, 1.0);
  const SlopeBound lk = local_slope(Activation::leaky_relu(0.1), -2.0, 3.0);
  EXPECT_DOUBLE_EQ(lk.lo, 0.1);
  EXPECT_EQ(lk.hi, 1.0);
  const SlopeBound sg = local_slope(Activation::sigmoid(), -1.0, 2.0);
  EXPECT_EQ(sg.hi, 0.25);
  const double s2 = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(sg.lo, s2 * (1.0 - s2), 1e-15);
  EXPECT_THROW(local_slope(Activation::tanh(), 1.0, 0.0), InvalidIntervalError);
}

TEST(LocalSector, SoundnessAndSlopeSoundness) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const Activation& act : {Activation::tanh(), Activation::sigmoid(), Activation::relu(), Activation::leaky_relu(0.05)}) {
    for (int trial = 0; trial < 50; ++trial) {
      const double lo = -3.0 * U(rng) - 0.01 * (trial % 2), hi = lo + 4.0 * U(rng) + 1e-3;
      const double vs = lo + (hi - lo) * U(rng);
      const SectorBound s = local_sector(act, lo, hi, vs);
      const SlopeBound sl = local_slope(act, lo, hi);
      ASSERT_LE(s.alpha, s.beta);
      ASSERT_LE(sl.lo, sl.hi);
      for (int k = 0; k < 10000; ++k) {
        const double nu = lo + (hi - lo) * U(rng);
        const double dv = nu - vs, dp = act(nu) - act(vs);
        EXPECT_GE((dp - s.alpha * dv) * (s.beta * dv - dp), -1e-12);
        const double n2 = lo + (hi - lo) * U(rng);
        if (std::abs(n2 - nu) > 1e-6) {
          // rounding in the quotient is ~1e-16 / |nu - n2|
          const double q = (act(nu) - act(n2)) / (nu - n2);
          EXPECT_GE(q, sl.lo - 1e-9);
          EXPECT_LE(q, sl.hi + 1e-9);
        }
      }
    }
  }
}

TEST(LocalSector, MonotoneRefinement) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const Activation& act : {Activation::tanh(), Activation::sigmoid(), Activation::relu(), Activation::leaky_relu(0.2)}) {
    for (int trial = 0; trial < 200; ++trial) {
      const double vs = 4.0 * U(rng) - 2.0;
      double lo = vs - 3.0 * U(rng), hi = vs + 3.0 * U(rng);
      SectorBound prev = local_sector(act, lo, hi, vs);
      for (int step = 0; step < 5; ++step) {
        lo = vs - (vs - lo) * U(rng);
        hi = vs + (hi - vs) * U(rng);
        const SectorBound s = local_sector(act, lo, hi, vs);
        EXPECT_GE(s.alpha, prev.alpha - 1e-15);
        EXPECT_LE(s.beta, prev.beta + 1e-15);
        prev = s;
      }
    }
  }
}

TEST(Ibp, FootnoteExample) {
  // Layer 1: two tanh neurons with first-layer box [-0.1, 0.1]; layer 2: W = [1 1].
  const NeuralNetwork nn({{MatrixXd::Identity(2, 2), VectorXd::Zero(2), Activation::tanh()},
                          {MatrixXd::Ones(1, 2), VectorXd::Zero(1), Activation::tanh()}},
                         MatrixXd::Ones(1, 1), VectorXd::Zero(1));
  const Equilibrium eq = propagate_equilibrium(nn, VectorXd::Zero(2));
  BoundOptions exact;
  exact.outward = 0.0;
  const ActivationBounds b = propagate_bounds(nn, eq, 0.1, exact);
  EXPECT_NEAR(b.w_hi(0), std::tanh(0.1), 1e-15);
  EXPECT_NEAR(b.w_lo(1), -0.09967, 1e-5);
  EXPECT_NEAR(b.v_hi(2), 2.0 * std::tanh(0.1), 1e-15);
  EXPECT_NEAR(b.v_lo(2), -0.19934, 1e-5);
  EXPECT_EQ(b.delta_v, 0.1);
  EXPECT_EQ(b.v_hi(0) - eq.v(0), 0.1);
  EXPECT_EQ(eq.v(1) - b.v_lo(1), 0.1);
  EXPECT_NEAR(b.u_bar(0), std::tanh(2.0 * std::tanh(0.1)), 1e-15);
  EXPECT_THROW(propagate_bounds(nn, eq, 0.0), ParameterError);
}

TEST(Ibp, ZeroWidthCollapses) {
  std::mt19937_64 rng(29);
  const NeuralNetwork nn({{randn(4, 2, rng), randn(4, 1, rng), Activation::tanh()},
                          {randn(3, 4, rng), randn(3, 1, rng), Activation::sigmoid()}},
                         randn(1, 3, rng), randn(1, 1, rng));
  const Equilibrium eq = propagate_equilibrium(nn, randn(2, 1, rng));
  const ActivationBounds b = propagate_bounds(nn, eq, 1e-12);
  // only the 1e-9 outward rounding guard survives
  EXPECT_LE((b.v_hi - eq.v).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE((eq.v - b.v_lo).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE((b.w_hi - eq.w).lpNorm<Eigen::Infinity>(), 1e-8);
  EXPECT_LE((b.u_hi - eq.u).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Ibp, MonteCarloSoundnessTwoLayer) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const NeuralNetwork nn({{randn(6, 3, rng), randn(6, 1, rng, 0.3), Activation::tanh()},
                          {randn(5, 6, rng), randn(5, 1, rng, 0.3), Activation::tanh()}},
                         randn(2, 5, rng), randn(2, 1, rng));
  const Equilibrium eq = propagate_equilibrium(nn, randn(3, 1, rng, 0.2));
  const ActivationBounds b = propagate_bounds(nn, eq, 0.4);
  for (int j = 0; j < nn.num_neurons(); ++j) {
    EXPECT_LE(b.v_lo(j), eq.v(j));
    EXPECT_GE(b.v_hi(j), eq.v(j));
    EXPECT_LE(b.w_lo(j), eq.w(j));
    EXPECT_GE(b.w_hi(j), eq.w(j));
    EXPECT_LE(b.alpha(j), b.beta(j));
    EXPECT_LE(b.slope_lo(j), b.slope_hi(j));
  }
  long bad = 0;
  for (int s = 0; s < 100000; ++s) {
    VectorXd v1(6);
    for (int i = 0; i < 6; ++i) v1(i) = eq.v(i) + 0.4 * U(rng);
    const VectorXd w1 = v1.array().tanh();
    const VectorXd v2 = nn.layers()[1].W * w1 + nn.layers()[1].b;
    const VectorXd w2 = v2.array().tanh();
    const VectorXd u = nn.output_weight() * w2 + nn.output_bias();
    for (int i = 0; i < 5; ++i) bad += v2(i) < b.v_lo(6 + i) || v2(i) > b.v_hi(6 + i);
    for (int i = 0; i < 2; ++i) bad += u(i) < b.u_lo(i) || u(i) > b.u_hi(i);
  }
  EXPECT_EQ(bad, 0);
}

TEST(ScalarNonlinearity, ThetaMinusSin) {
  const ScalarBounds b = bound_scalar_nonlinearity(theta_minus_sin(), -0.73, 0.73, 0.0);
  EXPECT_NEAR(b.sector.alpha, 0.0, 1e-3);
  EXPECT_NEAR(b.sector.beta, 0.087, 1e-3);
  EXPECT_NEAR(b.slope.lo, 0.0, 1e-3);
  EXPECT_NEAR(b.slope.hi, 0.2548, 1e-3);
  // closed forms: chord at the endpoint and derivative at the endpoint
  EXPECT_NEAR(b.sector.beta, 1.0 - std::sin(0.73) / 0.73, 1e-9);
  EXPECT_NEAR(b.slope.hi, 1.0 - std::cos(0.73), 1e-9);
  EXPECT_GE(b.sector.beta, 1.0 - std::sin(0.73) / 0.73);
  EXPECT_LE(b.sector.alpha, 0.0);
}

TEST(ScalarNonlinearity, SaturationAndIdentity) {
  const ScalarBounds s = bound_scalar_nonlinearity(saturation(0.7), -1.0, 1.0, 0.0);
  EXPECT_NEAR(s.sector.alpha, 0.7, 1e-8);
  EXPECT_NEAR(s.sector.beta, 1.0, 1e-8);
  const SectorBound c = saturation_sector(0.7, 1.0);
  EXPECT_EQ(c.alpha, 0.7);
  EXPECT_EQ(c.beta, 1.0);
  EXPECT_EQ(saturation_sector(0.7, 0.5).alpha, 1.0);
  EXPECT_THROW(saturation_sector(0.0, 1.0), ParameterError);

  const ScalarBounds id = bound_scalar_nonlinearity(identity_map(), -3.0, 5.0, 1.0);
  EXPECT_NEAR(id.sector.alpha, 1.0, 1e-8);
  EXPECT_NEAR(id.sector.beta, 1.0, 1e-8);
  EXPECT_NEAR(id.slope.lo, 1.0, 1e-8);
  EXPECT_NEAR(id.slope.hi, 1.0, 1e-8);
}

TEST(ScalarNonlinearity, DifferenceQuotientsWithoutDerivative) {
  ScalarNonlinearity nl{[](double t) { return t * t * t; }, {}, "cube"};
  const ScalarBounds b = bound_scalar_nonlinearity(nl, -1.0, 1.0, 0.0);
  EXPECT_NEAR(b.slope.hi, 3.0, 1e-3);
  EXPECT_NEAR(b.slope.lo, 0.0, 1e-6);
  EXPECT_NEAR(b.sector.beta, 1.0, 1e-8);
}

TEST(ScalarNonlinearity, Errors) {
  ScalarNonlinearity bad{[](double t) { return std::log(t + 0.5); }, {}, "log"};
  EXPECT_THROW(bound_scalar_nonlinearity(bad, -1.0, 1.0, 0.5), ParameterError);
  EXPECT_THROW(bound_scalar_nonlinearity(identity_map(), 1.0, -1.0, 0.0), InvalidIntervalError);
  EXPECT_THROW(bound_scalar_nonlinearity(identity_map(), -1.0, 1.0, 0.0, 1), ParameterError);
}
