#pragma once

// Brute-force reference for 1-state / 1-neuron nominal instances
//   x+ = a x + b w2 tanh(w1 x),
// written directly from the inequalities (no library assembly): a pair
// (P, lambda) is feasible when, on xi = (x, w),
//   M = [a, b w2]^T P [a, b w2] - diag(P, 0) + lambda Q  <=  -eps I,
//   Q = [-2 al be w1^2, (al + be) w1; (al + be) w1, -2],
// and the containment P >= w1^2 / delta^2 holds.

#include <cmath>
#include <random>

#include "roacert/backends.hpp"
#include "roacert/bounds.hpp"
#include "roacert/lmi.hpp"
#include "roacert/network.hpp"

namespace oracle {

struct ScalarInstance {
  double a = 0.5, b = 1.0, w1 = 0.1, w2 = -1.0, delta = 0.1;
};

inline double max_eig2(double p, double q, double r) {
  return 0.5 * (p + r) + std::sqrt(0.25 * (p - r) * (p - r) + q * q);
}

inline bool pair_feasible(const ScalarInstance& s, double P, double lam, double eps, double alpha, double beta) {
  if (P < s.w1 * s.w1 / (s.delta * s.delta)) return false;
  const double g0 = s.a, g1 = s.b * s.w2;
  const double m00 = g0 * g0 * P - P - 2.0 * lam * alpha * beta * s.w1 * s.w1;
  const double m01 = g0 * g1 * P + lam * (alpha + beta) * s.w1;
  const double m11 = g1 * g1 * P - 2.0 * lam;
  return max_eig2(m00, m01, m11) <= -eps;
}

/// Grid over (P, lambda) in (0, cap] x [0, cap] with step h.
inline bool grid_feasible(const ScalarInstance& s, double eps, double cap = 10.0, double h = 1e-2) {
  const double alpha = std::tanh(s.delta) / s.delta, beta = 1.0;
  const int n = static_cast<int>(std::lround(cap / h));
  for (int i = 1; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      if (pair_feasible(s, i * h, j * h, eps, alpha, beta)) return true;
  return false;
}

inline roacert::NeuralNetwork network(const ScalarInstance& s) {
  using namespace roacert;
  return NeuralNetwork({{MatrixXd::Constant(1, 1, s.w1), VectorXd::Zero(1), Activation::tanh()}},
                       MatrixXd::Constant(1, 1, s.w2), VectorXd::Zero(1));
}

/// Library pipeline on the same instance with the same box on (P, lambda).
inline roacert::RoaCertificate sdp_solve(const ScalarInstance& s, roacert::SdpBackend& be, double cap = 10.0) {
  using namespace roacert;
  const LtiPlant plant = LtiPlant::nominal(MatrixXd::Constant(1, 1, s.a), MatrixXd::Constant(1, 1, s.b));
  const NeuralNetwork nn = network(s);
  const Equilibrium eq = propagate_equilibrium(nn, VectorXd::Zero(1));
  const ActivationBounds bounds = propagate_bounds(nn, eq, s.delta);
  AssemblyOptions ao;
  ao.lambda_cap = cap;
  LmiProblem prob = assemble_nominal(plant, nn, build_lft(nn), eq, bounds, ao);
  LmiConstraint pcap{"P_cap", AffineMatrix(1), false, 0.0};
  pcap.F.constant(0, 0) = cap;
  pcap.F.add(0, -MatrixXd::Ones(1, 1));
  prob.add_constraint(pcap);
  return solve(prob, be);
}

inline ScalarInstance random_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ScalarInstance s;
  s.a = -1.6 + 3.2 * U(rng);
  s.b = 0.3 + 1.2 * U(rng);
  s.w1 = (U(rng) < 0.5 ? -1.0 : 1.0) * (0.2 + 1.8 * U(rng));
  s.w2 = -2.5 * U(rng) / (s.b * s.w1) + 0.3 * (U(rng) - 0.5);
  s.delta = 0.2 + 2.0 * U(rng);
  return s;
}

}  // namespace oracle
