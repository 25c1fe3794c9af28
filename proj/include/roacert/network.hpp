#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roacert/activation.hpp"
#include "roacert/linalg.hpp"
#include "roacert/plant.hpp"

namespace roacert {

struct Layer {
  MatrixXd W;
  VectorXd b;
  Activation activation;
};

/// Feed-forward controller
///
///   w^0 = x (or C x),  w^i = phi^i(W^i w^{i-1} + b^i),  u = W^{l+1} w^l + b^{l+1}.
///
/// Each hidden layer carries its own activation; the weight file format
/// shares one activation across layers unless a layer overrides it.
class NeuralNetwork {
 public:
  NeuralNetwork() = default;

  NeuralNetwork(std::vector<Layer> hidden, MatrixXd W_out, VectorXd b_out,
                std::optional<MatrixXd> output_map = std::nullopt)
      : layers_(std::move(hidden)), W_out_(std::move(W_out)), b_out_(std::move(b_out)), C_(std::move(output_map)) {
    validate();
  }

  const std::vector<Layer>& layers() const { return layers_; }
  const MatrixXd& output_weight() const { return W_out_; }
  const VectorXd& output_bias() const { return b_out_; }
  const std::optional<MatrixXd>& output_map() const { return C_; }

  int num_layers() const { return static_cast<int>(layers_.size()); }

  /// Plant state dimension n_G.
  int input_dim() const {
    if (C_) return static_cast<int>(C_->cols());
    return static_cast<int>(layers_.front().W.cols());
  }
  int output_dim() const { return static_cast<int>(W_out_.rows()); }

  /// n_phi: total number of neurons.
  int num_neurons() const {
    int n = 0;
    for (const auto& l : layers_) n += static_cast<int>(l.W.rows());
    return n;
  }

  /// Offset of layer i inside the stacked v_phi / w_phi vectors.
  int layer_offset(int i) const {
    int n = 0;
    for (int k = 0; k < i; ++k) n += static_cast<int>(layers_[k].W.rows());
    return n;
  }

  int layer_size(int i) const { return static_cast<int>(layers_[i].W.rows()); }

  /// Activation of the neuron at stacked index j.
  const Activation& activation_of(int j) const {
    for (const auto& l : layers_) {
      if (j < l.W.rows()) return l.activation;
      j -= static_cast<int>(l.W.rows());
    }
    throw DimensionError("neuron index out of range");
  }

  /// First-layer weight acting on the plant state (W^1 C under output feedback).
  MatrixXd first_layer_state_weight() const {
    if (C_) return layers_.front().W * (*C_);
    return layers_.front().W;
  }

  /// Direct layer recursion.
  VectorXd eval(const VectorXd& x) const {
    if (x.size() != input_dim()) {
      throw DimensionError("eval: state has length " + std::to_string(x.size()) + ", network expects " +
                           std::to_string(input_dim()));
    }
    VectorXd w = C_ ? VectorXd((*C_) * x) : x;
    for (const auto& l : layers_) {
      VectorXd v = l.W * w + l.b;
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = l.activation(v(i));
      w = std::move(v);
    }
    return W_out_ * w + b_out_;
  }

  /// Jacobian du/dx at x.
  MatrixXd jacobian(const VectorXd& x) const {
    VectorXd w = C_ ? VectorXd((*C_) * x) : x;
    MatrixXd J = C_ ? *C_ : MatrixXd::Identity(x.size(), x.size());
    for (const auto& l : layers_) {
      VectorXd v = l.W * w + l.b;
      VectorXd d(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        d(i) = l.activation.derivative(v(i));
        v(i) = l.activation(v(i));
      }
      J = d.asDiagonal() * (l.W * J);
      w = std::move(v);
    }
    return W_out_ * J;
  }

 private:
  void validate() const {
    if (layers_.empty()) throw DimensionError("network needs at least one hidden layer");
    if (C_ && C_->rows() != layers_.front().W.cols()) {
      throw DimensionError("output map C has " + std::to_string(C_->rows()) + " rows but layer 1 expects " +
                           std::to_string(layers_.front().W.cols()) + " inputs");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      const std::string name = "layer " + std::to_string(i + 1);
      if (l.b.size() != l.W.rows()) throw DimensionError(name + ": bias length does not match W rows");
      if (i > 0 && l.W.cols() != layers_[i - 1].W.rows()) {
        throw DimensionError(name + ": W has " + std::to_string(l.W.cols()) + " columns but layer " +
                             std::to_string(i) + " has " + std::to_string(layers_[i - 1].W.rows()) + " neurons");
      }
    }
    if (W_out_.cols() != layers_.back().W.rows()) {
      throw DimensionError("output layer: W has " + std::to_string(W_out_.cols()) + " columns but last hidden layer has " +
                           std::to_string(layers_.back().W.rows()) + " neurons");
    }
    if (b_out_.size() != W_out_.rows()) throw DimensionError("output layer: bias length does not match W rows");
  }

  std::vector<Layer> layers_;
  MatrixXd W_out_;
  VectorXd b_out_;
  std::optional<MatrixXd> C_;
};

/// Block partition of N in [u; v_phi] = N [x; w_phi; 1].
struct NnLft {
  MatrixXd ux, uw;
  VectorXd ub;
  MatrixXd vx, vw;
  VectorXd vb;

  MatrixXd full() const {
    const auto nu = ux.rows(), nphi = vx.rows();
    const auto nx = ux.cols();
    MatrixXd N(nu + nphi, nx + nphi + 1);
    N << ux, uw, ub, vx, vw, vb;
    return N;
  }
};

inline NnLft build_lft(const NeuralNetwork& nn) {
  const int nx = nn.input_dim();
  const int nu = nn.output_dim();
  const int nphi = nn.num_neurons();
  const int ell = nn.num_layers();
  NnLft lft;
  lft.ux = MatrixXd::Zero(nu, nx);
  lft.uw = MatrixXd::Zero(nu, nphi);
  lft.uw.rightCols(nn.layer_size(ell - 1)) = nn.output_weight();
  lft.ub = nn.output_bias();
  lft.vx = MatrixXd::Zero(nphi, nx);
  lft.vx.topRows(nn.layer_size(0)) = nn.first_layer_state_weight();
  lft.vw = MatrixXd::Zero(nphi, nphi);
  lft.vb = VectorXd::Zero(nphi);
  for (int i = 0; i < ell; ++i) {
    const auto& l = nn.layers()[i];
    const int off = nn.layer_offset(i);
    if (i > 0) lft.vw.block(off, nn.layer_offset(i - 1), l.W.rows(), l.W.cols()) = l.W;
    lft.vb.segment(off, l.W.rows()) = l.b;
  }
  return lft;
}

/// Evaluates the controller through its LFT: w_phi is filled layer by layer
/// using the strictly block-lower-triangular N_vw.
inline VectorXd eval_lft(const NeuralNetwork& nn, const NnLft& lft, const VectorXd& x) {
  VectorXd w = VectorXd::Zero(nn.num_neurons());
  for (int i = 0; i < nn.num_layers(); ++i) {
    const int off = nn.layer_offset(i), n = nn.layer_size(i);
    const VectorXd v = lft.vx.middleRows(off, n) * x + lft.vw.middleRows(off, n) * w + lft.vb.segment(off, n);
    const auto& act = nn.layers()[i].activation;
    for (int j = 0; j < n; ++j) w(off + j) = act(v(j));
  }
  return lft.ux * x + lft.uw * w + lft.ub;
}

/// Equilibrium tuple (x*, u*, v*, w*).
struct Equilibrium {
  VectorXd x;
  VectorXd u;
  VectorXd v;
  VectorXd w;

  bool is_origin(double tol = 0.0) const {
    auto small = [tol](const VectorXd& z) { return z.size() == 0 || z.lpNorm<Eigen::Infinity>() <= tol; };
    return small(x) && small(u) && small(v) && small(w);
  }
};

/// Pushes x* through the layers; w* = phi(v*) holds by construction.
inline Equilibrium propagate_equilibrium(const NeuralNetwork& nn, const VectorXd& x_star) {
  if (x_star.size() != nn.input_dim()) throw DimensionError("propagate_equilibrium: x_star has wrong length");
  Equilibrium eq;
  eq.x = x_star;
  eq.v.resize(nn.num_neurons());
  eq.w.resize(nn.num_neurons());
  VectorXd w = nn.output_map() ? VectorXd((*nn.output_map()) * x_star) : x_star;
  for (int i = 0; i < nn.num_layers(); ++i) {
    const auto& l = nn.layers()[i];
    const VectorXd v = l.W * w + l.b;
    VectorXd out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) out(j) = l.activation(v(j));
    eq.v.segment(nn.layer_offset(i), v.size()) = v;
    eq.w.segment(nn.layer_offset(i), v.size()) = out;
    w = std::move(out);
  }
  eq.u = nn.output_weight() * w + nn.output_bias();
  return eq;
}

struct EquilibriumResidual {
  double state = 0.0;       // |x* - A x* - B u*|_inf
  double lft = 0.0;         // |[u*; v*] - N [x*; w*; 1]|_inf
  double activation = 0.0;  // |w* - phi(v*)|_inf
  bool pass = false;

  double max() const { return std::max({state, lft, activation}); }
};

inline EquilibriumResidual verify_equilibrium(const LtiPlant& plant, const NeuralNetwork& nn, const Equilibrium& eq,
                                              double tol) {
  if (plant.nx() != nn.input_dim() || plant.nu() != nn.output_dim()) {
    throw DimensionError("verify_equilibrium: plant and network dimensions differ");
  }
  const NnLft lft = build_lft(nn);
  EquilibriumResidual r;
  r.state = (eq.x - plant.A * eq.x - plant.B2 * eq.u).lpNorm<Eigen::Infinity>();
  VectorXd z(eq.x.size() + eq.w.size() + 1);
  z << eq.x, eq.w, 1.0;
  VectorXd uv(eq.u.size() + eq.v.size());
  uv << eq.u, eq.v;
  r.lft = (uv - lft.full() * z).lpNorm<Eigen::Infinity>();
  double act = 0.0;
  for (Eigen::Index j = 0; j < eq.v.size(); ++j) {
    act = std::max(act, std::abs(eq.w(j) - nn.activation_of(static_cast<int>(j))(eq.v(j))));
  }
  r.activation = act;
  r.pass = r.max() <= tol;
  return r;
}

struct EquilibriumSearchOptions {
  int max_iter = 500;
  double tol = 1e-12;
  double damping = 0.5;  // fixed-point relaxation factor
};

/// Best-effort search for x = A x + B pi(x): damped fixed-point iteration
/// followed by Newton polishing. Returns nullopt on failure; callers must still
/// verify the result.
inline std::optional<Equilibrium> solve_equilibrium(const LtiPlant& plant, const NeuralNetwork& nn,
                                                    const VectorXd& x0,
                                                    const EquilibriumSearchOptions& opts = {}) {
  const auto residual = [&](const VectorXd& x) -> VectorXd { return x - plant.A * x - plant.B2 * nn.eval(x); };
  VectorXd x = x0;
  for (int it = 0; it < opts.max_iter && residual(x).lpNorm<Eigen::Infinity>() > 1e-6; ++it) {
    const VectorXd next = plant.A * x + plant.B2 * nn.eval(x);
    x = (1.0 - opts.damping) * x + opts.damping * next;
    if (!x.allFinite()) break;
  }
  const MatrixXd I = MatrixXd::Identity(plant.nx(), plant.nx());
  for (int it = 0; it < 100 && x.allFinite(); ++it) {
    const VectorXd F = residual(x);
    if (F.lpNorm<Eigen::Infinity>() <= opts.tol) break;
    const MatrixXd J = I - plant.A - plant.B2 * nn.jacobian(x);
    const VectorXd step = J.fullPivLu().solve(F);
    double t = 1.0;
    while (t > 1e-6 && residual(x - t * step).norm() >= F.norm()) t *= 0.5;
    x -= t * step;
  }
  if (!x.allFinite()) return std::nullopt;
  Equilibrium eq = propagate_equilibrium(nn, x);
  if (!verify_equilibrium(plant, nn, eq, std::max(opts.tol, 1e-10)).pass) return std::nullopt;
  return eq;
}

}  // namespace roacert
