#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "roacert/activation.hpp"
#include "roacert/errors.hpp"
#include "roacert/linalg.hpp"
#include "roacert/network.hpp"

namespace roacert {

struct SynthOptions {
  std::vector<int> widths{16};
  Activation activation = Activation::tanh();
  double first_layer_scale = 1.0;  // std. dev. of W^1 entries
  std::uint64_t seed = 7;
  MatrixXd Q, R;  // LQR weights (identity when empty)
  // weight of the normalized LQR gain rows mixed into every first-layer row
  double gain_alignment = 0.0;
};

/// Zero-bias network whose linearization at the origin equals the discrete
/// LQR gain u = -K x: random hidden layers, output layer -K M^+ with
/// M = W^l ... W^1 (activations have unit slope at 0 for tanh and leaky/relu
/// on the positive side; sigmoid is not supported here).
inline NeuralNetwork lqr_like_network(const MatrixXd& A, const MatrixXd& B, const SynthOptions& opts) {
  if (opts.widths.empty()) throw ParameterError("lqr_like_network: need at least one hidden layer");
  if (opts.activation.kind() != ActivationKind::Tanh)
    throw ParameterError("lqr_like_network: only tanh networks are synthesized");
  const int nx = static_cast<int>(A.rows()), nu = static_cast<int>(B.cols());
  const MatrixXd Q = opts.Q.size() ? opts.Q : MatrixXd::Identity(nx, nx);
  const MatrixXd R = opts.R.size() ? opts.R : MatrixXd::Identity(nu, nu);
  const DareSolution lqr = solve_dare(A, B, Q, R);

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<Layer> layers;
  int prev = nx;
  MatrixXd M = MatrixXd::Identity(nx, nx);
  for (std::size_t i = 0; i < opts.widths.size(); ++i) {
    const int n = opts.widths[i];
    if (n < nx) throw ParameterError("lqr_like_network: hidden widths must be at least the state dimension");
    const double s = i == 0 ? opts.first_layer_scale : 1.0 / std::sqrt(static_cast<double>(prev));
    MatrixXd W(n, prev);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < prev; ++c) W(r, c) = s * N(rng);
    if (i == 0 && opts.gain_alignment != 0.0)
      for (int r = 0; r < n; ++r)
        W.row(r) += s * opts.gain_alignment * std::sqrt(static_cast<double>(nx)) * lqr.K.row(r % nu).normalized();
    layers.push_back({W, VectorXd::Zero(n), opts.activation});
    M = (W * M).eval();
    prev = n;
  }
  const MatrixXd Mp = M.completeOrthogonalDecomposition().pseudoInverse();
  const MatrixXd W_out = -lqr.K * Mp;
  return NeuralNetwork(std::move(layers), W_out, VectorXd::Zero(nu));
}

}  // namespace roacert
