#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "roacert/pipeline.hpp"

using namespace roacert;

namespace {

std::string cfg_path(const std::string& name) { return std::string(ROACERT_SOURCE_DIR) + "/configs/" + name; }

NeuralNetwork zero_controller(int nx, int width = 3) {
  return NeuralNetwork({{MatrixXd::Ones(width, nx), VectorXd::Zero(width), Activation::tanh()}},
                       MatrixXd::Zero(1, width), VectorXd::Zero(1));
}

// Certified nominal run without the built-in checks.
RunResult certify_only(const std::string& cfg, bool robust = false) {
  ScenarioConfig c = load_config(cfg_path(cfg));
  c.validate = false;
  return certify(prepare(c), robust);
}

}  // namespace

TEST(Simulate, PendulumRestsAtUprightZero) {
  const Scenario s = pendulum_scenario(PendulumParams{}, zero_controller(2));
  const Trajectory tr = simulate(s, VectorXd::Zero(2), 200);
  ASSERT_EQ(tr.x.size(), 201u);
  for (const auto& x : tr.x) EXPECT_EQ(x.norm(), 0.0);
  EXPECT_TRUE(tr.converged);
}

TEST(Simulate, UncontrolledPendulumFalls) {
  const PendulumParams p;
  const Scenario s = pendulum_scenario(p, zero_controller(2));
  const Trajectory tr = simulate(s, (VectorXd(2) << 0.01, 0.0).finished(), 100);
  EXPECT_GT(std::abs(tr.x.back()(0)), 0.01);
  // first step matches the Euler update by hand
  EXPECT_NEAR(tr.x[1](0), 0.01, 1e-15);
  EXPECT_NEAR(tr.x[1](1), p.dt * p.g / p.l * std::sin(0.01), 1e-15);
  EXPECT_FALSE(tr.converged);
}

TEST(Simulate, ScalarLtiDecay) {
  const LtiPlant plant = LtiPlant::nominal(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Zero(1, 1));
  const Scenario s = nominal_scenario(plant, zero_controller(1), VectorXd::Zero(1));
  const Trajectory tr = simulate(s, VectorXd::Ones(1), 10);
  ASSERT_GE(tr.x.size(), 11u);
  EXPECT_NEAR(tr.x[10](0), std::pow(0.5, 10), 1e-15);
}

TEST(Simulate, VehicleOperatorsArePureSaturationWithZeroLtiPart) {
  const VehicleParams vp;
  const Scenario s = vehicle_scenario(vp, zero_controller(4));
  EXPECT_EQ(s.nominal.size(), 2u);
  EXPECT_NEAR(s.nominal[0]->output(10.0), vp.u_max, 1e-15);
  EXPECT_NEAR(s.nominal[0]->output(-0.1 * vp.u_max), -0.1 * vp.u_max, 1e-15);
  EXPECT_EQ(s.nominal[1]->output(3.0), 0.0);
}

TEST(Validate, ZeroSamplesGiveEmptyReport) {
  RoaCertificate c;
  c.P = c.P_x = MatrixXd::Identity(1, 1);
  const LtiPlant plant = LtiPlant::nominal(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Zero(1, 1));
  ValidationOptions o;
  o.samples = 0;
  const ValidationReport r = validate_roa(c, nominal_scenario(plant, zero_controller(1), VectorXd::Zero(1)), o);
  EXPECT_EQ(r.trajectories, 0);
  EXPECT_FALSE(r.pass());
}

TEST(Validate, SchurPlantWithZeroControllerConverges) {
  RoaCertificate c;
  c.P = c.P_x = MatrixXd::Identity(2, 2) * 4.0;
  MatrixXd A(2, 2);
  A << 0.5, 0.1, 0.0, 0.4;
  const LtiPlant plant = LtiPlant::nominal(A, MatrixXd::Zero(2, 1));
  ValidationOptions o;
  o.samples = 100;
  o.steps = 500;
  o.threads = 1;
  const ValidationReport r = validate_roa(c, nominal_scenario(plant, zero_controller(2), VectorXd::Zero(2)), o);
  EXPECT_EQ(r.trajectories, 100);
  EXPECT_EQ(r.converged, 100);
}

TEST(Validate, CertifiedLinearizedPendulum) {
  const RunResult r = certify_only("pendulum_linearized.json");
  ASSERT_TRUE(r.cert.certified());
  ScenarioConfig c = load_config(cfg_path("pendulum_linearized.json"));
  const PreparedModel pm = prepare(c);
  const Scenario scn = build_scenario(pm, r.instance);
  ValidationOptions o;
  o.samples = 200;
  o.steps = 5000;
  o.interior_fraction = 0.5;
  const ValidationReport rep = validate_roa(r.cert, scn, o, nullptr, &r.instance.bounds);
  EXPECT_TRUE(rep.pass()) << rep.fraction;
  EXPECT_LE(rep.worst_dissipation, 1e-9);
  EXPECT_LE(rep.worst_V, 1.0 + 1e-6);

  const LyapunovReport ly = check_lyapunov_decrease(r.cert, pm.model, pm.nn, pm.eq, r.instance.bounds, 2000, 3);
  EXPECT_TRUE(ly.pass());
  EXPECT_EQ(ly.violations, 0);
}

TEST(Validate, FarOutsideTheEllipsoidSomeTrajectoriesFail) {
  const RunResult r = certify_only("pendulum_robust.json", true);
  ASSERT_TRUE(r.cert.certified());
  const PreparedModel pm = prepare(load_config(cfg_path("pendulum_robust.json")));
  const Scenario scn = build_scenario(pm, r.instance);
  ValidationOptions o;
  o.samples = 100;
  o.steps = 2000;
  o.radius_scale = 3.0;
  const ValidationReport rep = validate_roa(r.cert, scn, o, &r.instance.blocks);
  EXPECT_LT(rep.passed, rep.trajectories);
  EXPECT_FALSE(rep.failures.empty());
  EXPECT_FALSE(rep.pass());
}

TEST(Validate, DeterministicAcrossThreadCounts) {
  const RunResult r = certify_only("pendulum_robust.json", true);
  ASSERT_TRUE(r.cert.certified());
  const PreparedModel pm = prepare(load_config(cfg_path("pendulum_robust.json")));
  const Scenario scn = build_scenario(pm, r.instance);
  ValidationOptions o;
  o.samples = 40;
  o.steps = 1500;
  o.realizations = 3;
  o.radius_scale = 2.0;
  o.threads = 1;
  const ValidationReport a = validate_roa(r.cert, scn, o, &r.instance.blocks, &r.instance.bounds);
  o.threads = 4;
  const ValidationReport b = validate_roa(r.cert, scn, o, &r.instance.blocks, &r.instance.bounds);
  EXPECT_EQ(a.trajectories, 120);
  EXPECT_EQ(a.passed, b.passed);
  EXPECT_EQ(a.converged, b.converged);
  EXPECT_EQ(a.worst_V, b.worst_V);
  EXPECT_EQ(a.worst_dissipation, b.worst_dissipation);
  ASSERT_EQ(a.failures.size(), b.failures.size());
  for (std::size_t i = 0; i < a.failures.size(); ++i) EXPECT_EQ(a.failures[i].task, b.failures[i].task);
}

TEST(Lyapunov, DistortedMatrixShowsViolations) {
  const RunResult r = certify_only("double_integrator.json");
  ASSERT_TRUE(r.cert.certified());
  const PreparedModel pm = prepare(load_config(cfg_path("double_integrator.json")));
  RoaCertificate bad = r.cert;
  // V ~ position^2 only: a pure velocity offset makes V grow
  MatrixXd D = MatrixXd::Zero(2, 2);
  D(0, 0) = r.cert.P(0, 0);
  D(1, 1) = 1e-6 * r.cert.P(0, 0);
  bad.P = bad.P_x = D;
  const LyapunovReport ly = check_lyapunov_decrease(bad, pm.model, pm.nn, pm.eq, r.instance.bounds, 2000, 5);
  EXPECT_GT(ly.violations, 0);
  EXPECT_FALSE(ly.pass());
}

TEST(Operators, RandomLtiNormBound) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto op = random_lti_operator(0.3, rng);
    const auto* f = dynamic_cast<const FirstOrderOperator*>(op.get());
    ASSERT_NE(f, nullptr);
    EXPECT_LE(f->hinf_norm(), 0.3 * (1.0 + 1e-12));
    // frequency sweep of c/(z - a) + d
    for (int k = 0; k <= 64; ++k) {
      const std::complex<double> z = std::polar(1.0, std::numbers::pi * k / 64);
      EXPECT_LE(std::abs(f->c() / (z - f->a()) + f->d()), 0.3 * (1.0 + 1e-9));
    }
  }
}

TEST(Operators, RandomSlopeMapIsAdmissible) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto g = random_slope_map(0.0, 0.27, 0.0, 0.27, 1.0, rng);
    EXPECT_EQ(g(0.0), 0.0);
    for (int k = 0; k < 200; ++k) {
      const double a = U(rng), b = U(rng);
      if (std::abs(a - b) < 1e-6) continue;
      const double q = (g(a) - g(b)) / (a - b);
      EXPECT_GE(q, -1e-9);
      EXPECT_LE(q, 0.27 + 1e-9);
      if (std::abs(a) > 1e-6) {
        EXPECT_GE(g(a) / a, -1e-9);
        EXPECT_LE(g(a) / a, 0.27 + 1e-9);
      }
    }
  }
  EXPECT_THROW(random_slope_map(0.5, 0.2, 0.0, 1.0, 1.0, rng), ParameterError);
}

TEST(Operators, DynamicUncertaintySatisfiesNormBoundedIqc) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N(0.0, 1.0);
  const double b = 0.2;
  const IqcBlock blk = norm_bounded_lti_iqc(b, 1, 1, 2, 0.5);
  for (int i = 0; i < 50; ++i) {
    auto op = random_lti_operator(b, rng)->clone();
    std::vector<VectorXd> p, q;
    for (int k = 0; k < 1000; ++k) {
      const double pk = N(rng);
      p.push_back(VectorXd::Constant(1, pk));
      q.push_back(VectorXd::Constant(1, op->output(pk)));
      op->advance(pk);
    }
    const VectorXd theta = blk.multipliers.sample(rng);
    ASSERT_TRUE(blk.multipliers.admissible(theta));
    EXPECT_GE(check_iqc_accumulation(blk, p, q, theta), -1e-9 * (1.0 + theta.norm()));
  }
}

TEST(Ellipse, SlicePointsLieOnBoundary) {
  MatrixXd P(3, 3);
  P << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const VectorXd xs = (VectorXd(3) << 0.1, -0.2, 0.3).finished();
  const auto pts = ellipse_slice(P, xs, 0, 2, 100);
  EXPECT_EQ(pts.size(), 101u);
  for (const auto& [a, c] : pts) {
    const double d0 = a - xs(0), d2 = c - xs(2);
    EXPECT_NEAR(P(0, 0) * d0 * d0 + 2.0 * P(0, 2) * d0 * d2 + P(2, 2) * d2 * d2, 1.0, 1e-12);
  }
  EXPECT_THROW(ellipse_slice(P, xs, 1, 1), ParameterError);
  EXPECT_THROW(ellipse_slice(P, xs, 0, 3), ParameterError);
}

TEST(Pipeline, LyapunovAlongTrajectoryIsMonotoneForCertifiedStart) {
  const RunResult r = certify_only("double_integrator.json");
  ASSERT_TRUE(r.cert.certified());
  const PreparedModel pm = prepare(load_config(cfg_path("double_integrator.json")));
  const Scenario scn = build_scenario(pm, r.instance);
  std::mt19937_64 rng(8);
  const VectorXd x0 = detail::ellipsoid_point(r.cert.P_x, detail::random_direction(2, rng), 0.99);
  const Trajectory tr = simulate(scn, x0, 3000);
  const auto V = lyapunov_along(tr, r.cert, r.instance, pm.eq.x);
  ASSERT_EQ(V.size(), tr.x.size());
  EXPECT_NEAR(V.front(), 0.99 * 0.99, 1e-9);
  for (std::size_t k = 1; k < V.size(); ++k) EXPECT_LE(V[k], V[k - 1] + 1e-12);
  EXPECT_TRUE(tr.converged);
  const std::string csv = trajectory_csv(tr, V);
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("V"), csv.substr(0, csv.find('\n')).size() - 1);
}
