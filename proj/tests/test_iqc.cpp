#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "roacert/iqc.hpp"
#include "roacert/simulate.hpp"

using namespace roacert;

namespace {

MatrixXd randn(int r, int c, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> N(0.0, s);
  MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = N(rng);
  return M;
}

std::vector<VectorXd> scalar_signal(const std::vector<double>& s) {
  std::vector<VectorXd> out;
  for (double v : s) out.push_back(VectorXd::Constant(1, v));
  return out;
}

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST(OffByOne, ScalarRealization) {
  const IqcBlock b = off_by_one_iqc(VectorXd::Zero(1), VectorXd::Ones(1));
  EXPECT_EQ(b.filter.A, m1(0.0));
  EXPECT_EQ(b.filter.B1, m1(-1.0));
  EXPECT_EQ(b.filter.B2, m1(1.0));
  EXPECT_EQ(b.filter.C, (MatrixXd(2, 1) << 1, 0).finished());
  EXPECT_EQ(b.filter.D1, (MatrixXd(2, 1) << 1, 0).finished());
  EXPECT_EQ(b.filter.D2, (MatrixXd(2, 1) << -1, 1).finished());
  EXPECT_EQ(b.multipliers.evaluate(VectorXd::Constant(1, 2.0)), (MatrixXd(2, 2) << 0, 2, 2, 0).finished());
  EXPECT_THROW(off_by_one_iqc(VectorXd::Ones(1), VectorXd::Zero(1)), ParameterError);
}

TEST(OffByOne, ZeroMultiplierAndZeroSignals) {
  const IqcBlock b = off_by_one_iqc(VectorXd::Constant(1, 0.2), VectorXd::Ones(1));
  std::mt19937_64 rng(1);
  std::vector<VectorXd> p, q;
  for (int k = 0; k < 100; ++k) {
    p.push_back(randn(1, 1, rng));
    q.push_back(randn(1, 1, rng));
  }
  EXPECT_EQ(check_iqc_accumulation(b, p, q, VectorXd::Zero(1)), 0.0);
  const std::vector<VectorXd> z(50, VectorXd::Zero(1));
  EXPECT_EQ(check_iqc_accumulation(b, z, z, VectorXd::Ones(1)), 0.0);
}

TEST(OffByOne, TanhSignalAccumulates) {
  std::vector<double> v, w;
  for (int k = 0; k <= 500; ++k) {
    v.push_back(0.5 * std::sin(0.3 * k));
    w.push_back(std::tanh(v.back()));
  }
  const double m = 1.0 - std::tanh(0.5) * std::tanh(0.5);
  const IqcBlock b = off_by_one_iqc(VectorXd::Constant(1, m), VectorXd::Ones(1));
  EXPECT_GE(check_iqc_accumulation(b, scalar_signal(v), scalar_signal(w), VectorXd::Ones(1)), -1e-12);
}

TEST(OffByOne, SlopeViolationDetected) {
  std::mt19937_64 rng(2);
  std::vector<double> p, q;
  for (int k = 0; k < 200; ++k) {
    p.push_back(randn(1, 1, rng)(0));
    q.push_back(2.0 * p.back());
  }
  const IqcBlock b = off_by_one_iqc(VectorXd::Zero(1), VectorXd::Ones(1));
  EXPECT_LT(check_iqc_accumulation(b, scalar_signal(p), scalar_signal(q), VectorXd::Ones(1)), 0.0);
}

TEST(NormBounded, StaticMultiplier) {
  const IqcBlock b = norm_bounded_lti_iqc(0.1, 1, 1, 0);
  EXPECT_EQ(b.filter.n_psi(), 0);
  EXPECT_EQ(b.multipliers.param_count(), 1);
  const MatrixXd M = b.multipliers.evaluate(VectorXd::Constant(1, 3.0));
  EXPECT_NEAR(M(0, 0), 0.03, 1e-15);
  EXPECT_EQ(M(1, 1), -3.0);
  EXPECT_EQ(M(0, 1), 0.0);
  EXPECT_EQ(b.filter.D1, (MatrixXd(2, 1) << 1, 0).finished());
  EXPECT_EQ(b.filter.D2, (MatrixXd(2, 1) << 0, 1).finished());
}

TEST(NormBounded, DynamicBasisStructure) {
  const IqcBlock b = norm_bounded_lti_iqc(0.1, 2, 2, 2, 0.5);
  EXPECT_EQ(b.filter.n_psi(), 2 * 2 + 2 * 2);
  EXPECT_EQ(b.filter.n_r(), 3 * 2 + 3 * 2);
  EXPECT_EQ(b.multipliers.param_count(), 6);
  EXPECT_LT(spectral_radius(b.filter.A), 1.0);
  // Impulse on p[0]: first basis output is 1, then 1/(z-rho) gives rho^(k-1), 1/(z-rho)^2 gives (k-1) rho^(k-2).
  std::vector<VectorXd> p(6, VectorXd::Zero(2)), q(6, VectorXd::Zero(2));
  p[0](0) = 1.0;
  const auto r = b.filter.simulate(p, q);
  EXPECT_EQ(r[0](0), 1.0);
  for (int k = 1; k < 6; ++k) {
    EXPECT_NEAR(r[k](2), std::pow(0.5, k - 1), 1e-15);
    EXPECT_NEAR(r[k](4), (k - 1) * std::pow(0.5, std::max(0, k - 2)), 1e-15);
    EXPECT_EQ(r[k](3), 0.0);
  }
  EXPECT_THROW(norm_bounded_lti_iqc(0.1, 1, 1, 1, 1.0), ParameterError);
  EXPECT_THROW(norm_bounded_lti_iqc(-0.1, 1, 1), ParameterError);
}

TEST(NormBounded, GainBelowBoundAndDelay) {
  std::mt19937_64 rng(3);
  std::vector<double> p, q_gain, q_delay;
  double prev = 0.0;
  for (int k = 0; k < 500; ++k) {
    p.push_back(randn(1, 1, rng)(0));
    q_gain.push_back(0.05 * p.back());
    q_delay.push_back(0.1 * prev);
    prev = p.back();
  }
  for (int nu : {0, 1, 2}) {
    const IqcBlock b = norm_bounded_lti_iqc(0.1, 1, 1, nu);
    for (int t = 0; t < 20; ++t) {
      const VectorXd theta = b.multipliers.sample(rng);
      ASSERT_TRUE(b.multipliers.admissible(theta));
      EXPECT_GE(check_iqc_accumulation(b, scalar_signal(p), scalar_signal(q_gain), theta), -1e-12);
      EXPECT_GE(check_iqc_accumulation(b, scalar_signal(p), scalar_signal(q_delay), theta), -1e-12);
    }
  }
  // static form: lambda * sum (0.01 - 0.0025) p^2
  const IqcBlock s = norm_bounded_lti_iqc(0.1, 1, 1, 0);
  const auto r = s.filter.simulate(scalar_signal(p), scalar_signal(q_gain));
  double acc = 0.0;
  for (double v : p) acc += 0.0075 * v * v;
  double got = 0.0;
  const MatrixXd M = s.multipliers.evaluate(VectorXd::Ones(1));
  for (const auto& rk : r) got += rk.dot(M * rk);
  EXPECT_NEAR(got, acc, 1e-12 * acc);
}

TEST(StaticSector, Realizations) {
  const IqcBlock sat = static_sector_iqc(VectorXd::Constant(1, 0.7), VectorXd::Ones(1));
  EXPECT_EQ(sat.filter.n_psi(), 0);
  EXPECT_EQ(sat.filter.D1, (MatrixXd(2, 1) << 1, -0.7).finished());
  EXPECT_EQ(sat.filter.D2, (MatrixXd(2, 1) << -1, 1).finished());
  const IqcBlock tms = static_sector_iqc(VectorXd::Zero(1), VectorXd::Constant(1, 0.087));
  EXPECT_EQ(tms.filter.D1, (MatrixXd(2, 1) << 0.087, 0).finished());
  EXPECT_THROW(static_sector_iqc(VectorXd::Ones(1), VectorXd::Zero(1)), ParameterError);

  // identity sector: r^T M r = -2 lambda (q - p)^2
  const IqcBlock id = static_sector_iqc(VectorXd::Ones(1), VectorXd::Ones(1));
  const auto r = id.filter.simulate(scalar_signal({0.3}), scalar_signal({-0.2}));
  EXPECT_NEAR(r[0].dot(id.multipliers.evaluate(VectorXd::Ones(1)) * r[0]), -2.0 * 0.25, 1e-15);
}

TEST(Filter, SimulationMatchesDirectRecursion) {
  std::mt19937_64 rng(4);
  IqcFilter f;
  f.A = 0.4 * randn(3, 3, rng);
  f.A /= std::max(1.0, 1.5 * spectral_radius(f.A));
  f.B1 = randn(3, 2, rng);
  f.B2 = randn(3, 1, rng);
  f.C = randn(4, 3, rng);
  f.D1 = randn(4, 2, rng);
  f.D2 = randn(4, 1, rng);
  f.validate();
  std::vector<VectorXd> p, q;
  for (int k = 0; k < 200; ++k) {
    p.push_back(randn(2, 1, rng));
    q.push_back(randn(1, 1, rng));
  }
  const auto r = f.simulate(p, q);
  Eigen::Vector3d psi = Eigen::Vector3d::Zero();
  for (int k = 0; k < 200; ++k) {
    const VectorXd rk = f.C * psi + f.D1 * p[k] + f.D2 * q[k];
    EXPECT_LE((rk - r[k]).lpNorm<Eigen::Infinity>(), 1e-12);
    psi = f.A * psi + f.B1 * p[k] + f.B2 * q[k];
  }
  IqcFilter unstable = f;
  unstable.A = 1.5 * MatrixXd::Identity(3, 3);
  EXPECT_THROW(unstable.validate(), ParameterError);
  IqcFilter wrong = f;
  wrong.B1 = randn(2, 2, rng);
  EXPECT_THROW(wrong.validate(), DimensionError);
}

TEST(ExtendSystem, NoBlocksIsThePlant) {
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 0.1, 0, 1;
  B << 0, 0.1;
  const ExtendedSystem e = extend_system(LtiPlant::nominal(A, B), {});
  EXPECT_EQ(e.A, A);
  EXPECT_EQ(e.B, B);
  EXPECT_EQ(e.r_dim, 0);
  EXPECT_EQ(e.n_zeta, 2);
}

TEST(ExtendSystem, SingleBlockFormulas) {
  std::mt19937_64 rng(5);
  const LtiPlant G = LtiPlant::uncertain(0.5 * randn(3, 3, rng), randn(3, 2, rng), randn(3, 1, rng), randn(2, 3, rng),
                                         randn(2, 2, rng), randn(2, 1, rng));
  IqcBlock blk;
  blk.label = "generic";
  blk.filter.A = 0.3 * MatrixXd::Identity(2, 2);
  blk.filter.B1 = randn(2, 2, rng);
  blk.filter.B2 = randn(2, 2, rng);
  blk.filter.C = randn(4, 2, rng);
  blk.filter.D1 = randn(4, 2, rng);
  blk.filter.D2 = randn(4, 2, rng);
  blk.multipliers.dim_r = 4;
  blk.channel.p = {0, 1};
  blk.channel.q = {0, 1};
  const ExtendedSystem e = extend_system(G, {blk});
  const auto& f = blk.filter;
  MatrixXd A(5, 5), B(5, 3), C(4, 5), D(4, 3);
  A << G.A, MatrixXd::Zero(3, 2), f.B1 * G.C, f.A;
  B << G.B1, G.B2, f.B1 * G.D1 + f.B2, f.B1 * G.D2;
  C << f.D1 * G.C, f.C;
  D << f.D1 * G.D1 + f.D2, f.D1 * G.D2;
  EXPECT_LT((e.A - A).norm(), 1e-14);
  EXPECT_LT((e.B - B).norm(), 1e-14);
  EXPECT_LT((e.C - C).norm(), 1e-14);
  EXPECT_LT((e.D - D).norm(), 1e-14);
}

TEST(ExtendSystem, OffByOneOnActivationsAddsStates) {
  std::mt19937_64 rng(6);
  const NeuralNetwork nn({{randn(4, 2, rng), VectorXd::Zero(4), Activation::tanh()},
                          {randn(3, 4, rng), VectorXd::Zero(3), Activation::tanh()}},
                         randn(1, 3, rng), VectorXd::Zero(1));
  const NnLft lft = build_lft(nn);
  IqcBlock obo = off_by_one_iqc(VectorXd::Zero(7), VectorXd::Ones(7));
  obo.channel.kind = ChannelKind::Activation;
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 0.1, 0, 1;
  B << 0, 0.1;
  const ExtendedSystem e = extend_system(LtiPlant::nominal(A, B), {obo}, &lft);
  EXPECT_EQ(e.n_zeta, 2 + 7);
  EXPECT_THROW(extend_system(LtiPlant::nominal(A, B), {obo}), InterconnectionError);
}

TEST(ExtendSystem, ChannelErrors) {
  std::mt19937_64 rng(7);
  const LtiPlant G = LtiPlant::uncertain(0.5 * randn(2, 2, rng), randn(2, 2, rng), randn(2, 1, rng), randn(2, 2, rng),
                                         MatrixXd::Zero(2, 2), randn(2, 1, rng));
  IqcBlock a = static_sector_iqc(VectorXd::Zero(1), VectorXd::Ones(1));
  IqcBlock b = static_sector_iqc(VectorXd::Zero(1), VectorXd::Ones(1));
  a.channel.p = a.channel.q = {0};
  b.channel.p = b.channel.q = {1};
  EXPECT_NO_THROW(extend_system(G, {a, b}));
  EXPECT_THROW(extend_system(G, {a}), InterconnectionError);  // q[1] uncovered
  IqcBlock c = static_sector_iqc(VectorXd::Zero(2), VectorXd::Ones(2));
  c.channel.p = c.channel.q = {0, 1};
  EXPECT_THROW(extend_system(G, {a, c}), InterconnectionError);  // overlap
  IqcBlock d = b;
  d.channel.p = d.channel.q = {2};
  EXPECT_THROW(extend_system(G, {a, d}), InterconnectionError);  // out of range
  // several blocks on identical channels are allowed (sector + off-by-one on one nonlinearity)
  IqcBlock o = off_by_one_iqc(VectorXd::Zero(1), VectorXd::Ones(1));
  o.channel.p = o.channel.q = {0};
  EXPECT_NO_THROW(extend_system(G, {a, o, b}));
}

TEST(ExtendSystem, TrajectoriesMatchRawInterconnection) {
  // With the Delta loop closed by a static gain, the plant block of the
  // extended system reproduces the raw plant trajectory; filter states follow
  // the filter driven by (p, q).
  std::mt19937_64 rng(8);
  const LtiPlant G = LtiPlant::uncertain(0.5 * randn(2, 2, rng), randn(2, 1, rng), randn(2, 1, rng), randn(1, 2, rng),
                                         MatrixXd::Zero(1, 1), randn(1, 1, rng));
  IqcBlock blk = norm_bounded_lti_iqc(0.5, 1, 1, 2, 0.3);
  const ExtendedSystem e = extend_system(G, {blk});
  VectorXd x = randn(2, 1, rng), z(e.n_zeta);
  z.setZero();
  z.head(2) = x;
  VectorXd psi = VectorXd::Zero(blk.filter.n_psi());
  for (int k = 0; k < 100; ++k) {
    const VectorXd u = randn(1, 1, rng);
    const VectorXd p = G.C * x + G.D2 * u;
    const VectorXd q = 0.3 * p;
    VectorXd qu(2);
    qu << q, u;
    const VectorXd r = e.C * z + e.D * qu;
    const VectorXd r_direct = blk.filter.C * psi + blk.filter.D1 * p + blk.filter.D2 * q;
    EXPECT_LE((r - r_direct).lpNorm<Eigen::Infinity>(), 1e-12);
    z = e.A * z + e.B * qu;
    x = G.A * x + G.B1 * q + G.B2 * u;
    psi = blk.filter.A * psi + blk.filter.B1 * p + blk.filter.B2 * q;
    EXPECT_LE((z.head(2) - x).lpNorm<Eigen::Infinity>(), 1e-12 * std::max(1.0, x.norm()));
    EXPECT_LE((z.tail(psi.size()) - psi).lpNorm<Eigen::Infinity>(), 1e-12 * std::max(1.0, psi.norm()));
  }
}
