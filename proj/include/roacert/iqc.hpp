#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "roacert/errors.hpp"
#include "roacert/linalg.hpp"
#include "roacert/network.hpp"
#include "roacert/plant.hpp"

namespace roacert {

/// psi(k+1) = A psi + B1 p + B2 q,  r = C psi + D1 p + D2 q,  psi(0) = 0.
struct IqcFilter {
  MatrixXd A, B1, B2, C, D1, D2;

  int n_psi() const { return static_cast<int>(A.rows()); }
  int n_p() const { return static_cast<int>(D1.cols()); }
  int n_q() const { return static_cast<int>(D2.cols()); }
  int n_r() const { return static_cast<int>(D1.rows()); }

  void validate() const {
    const int n = n_psi(), np = n_p(), nq = n_q(), nr = n_r();
    auto check = [](const MatrixXd& M, Eigen::Index r, Eigen::Index c, const char* name) {
      if (M.rows() != r || M.cols() != c)
        throw DimensionError(std::string("IqcFilter: ") + name + " is " + std::to_string(M.rows()) + "x" +
                             std::to_string(M.cols()) + ", expected " + std::to_string(r) + "x" + std::to_string(c));
    };
    check(A, n, n, "A");
    check(B1, n, np, "B1");
    check(B2, n, nq, "B2");
    check(C, nr, n, "C");
    check(D1, nr, np, "D1");
    check(D2, nr, nq, "D2");
    if (n > 0 && !is_schur(A)) throw ParameterError("IqcFilter: A is not Schur");
  }

  /// Filter output sequence for input sequences p, q of equal length.
  std::vector<VectorXd> simulate(const std::vector<VectorXd>& p, const std::vector<VectorXd>& q) const {
    if (p.size() != q.size()) throw DimensionError("IqcFilter::simulate: signal lengths differ");
    std::vector<VectorXd> r;
    r.reserve(p.size());
    VectorXd psi = VectorXd::Zero(n_psi());
    for (std::size_t k = 0; k < p.size(); ++k) {
      r.push_back(C * psi + D1 * p[k] + D2 * q[k]);
      psi = (A * psi + B1 * p[k] + B2 * q[k]).eval();
    }
    return r;
  }
};

/// A condition on multiplier parameters: theta_k >= 0, or the symmetric
/// matrix X with X_ij = theta[params[svec_index(i,j)]] is PSD.
struct ParamConstraint {
  enum class Kind { Nonneg, Psd };
  Kind kind = Kind::Nonneg;
  int dim = 1;
  std::vector<int> params;

  MatrixXd matrix(const VectorXd& theta) const {
    MatrixXd X(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) X(i, j) = X(j, i) = theta(params[svec_index(dim, i, j)]);
    return X;
  }
};

/// M(theta) = sum_k theta_k basis[k] over the admissible parameter set.
struct MultiplierSet {
  int dim_r = 0;
  std::vector<MatrixXd> basis;
  std::vector<ParamConstraint> constraints;

  int param_count() const { return static_cast<int>(basis.size()); }

  MatrixXd evaluate(const VectorXd& theta) const {
    if (theta.size() != param_count()) throw DimensionError("MultiplierSet: parameter count mismatch");
    MatrixXd M = MatrixXd::Zero(dim_r, dim_r);
    for (int k = 0; k < param_count(); ++k) M += theta(k) * basis[k];
    return M;
  }

  bool admissible(const VectorXd& theta, double tol = 1e-9) const {
    for (const auto& c : constraints)
      if (min_eigenvalue(c.matrix(theta)) < -tol) return false;
    return true;
  }

  /// Random admissible parameters (nonneg entries uniform in [0,1], PSD blocks G G^T).
  VectorXd sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    VectorXd theta = VectorXd::Zero(param_count());
    for (const auto& c : constraints) {
      if (c.kind == ParamConstraint::Kind::Nonneg) {
        theta(c.params[0]) = U(rng);
        continue;
      }
      MatrixXd G(c.dim, c.dim);
      for (int i = 0; i < c.dim; ++i)
        for (int j = 0; j < c.dim; ++j) G(i, j) = N(rng);
      const MatrixXd X = G * G.transpose() / c.dim;
      for (int i = 0; i < c.dim; ++i)
        for (int j = i; j < c.dim; ++j) theta(c.params[svec_index(c.dim, i, j)]) = X(i, j);
    }
    return theta;
  }
};

enum class ChannelKind { Plant, Activation };

/// Which interconnection signals feed a block: plant ports (p, q) or the
/// activation pair (v, w) of the listed neurons.
struct Channel {
  ChannelKind kind = ChannelKind::Plant;
  std::vector<int> p, q;
};

struct IqcBlock {
  std::string label;
  IqcFilter filter;
  MultiplierSet multipliers;
  Channel channel;
  /// Optional |p_j| <= p_radius(j) range on which the block description is
  /// valid; adds containment constraints for the block's p channels.
  VectorXd p_radius;

  void validate() const {
    filter.validate();
    if (multipliers.dim_r != filter.n_r()) throw DimensionError(label + ": multiplier size does not match filter output");
    if (static_cast<int>(channel.p.size()) != filter.n_p() || static_cast<int>(channel.q.size()) != filter.n_q())
      throw DimensionError(label + ": channel size does not match filter input partition");
    if (p_radius.size() != 0 && p_radius.size() != filter.n_p()) throw DimensionError(label + ": p_radius size");
  }
};

namespace detail {

inline MatrixXd sector_pair_basis(int n, int i) {
  MatrixXd B = MatrixXd::Zero(2 * n, 2 * n);
  B(i, n + i) = B(n + i, i) = 1.0;
  return B;
}

inline MultiplierSet diagonal_pair_multipliers(int n) {
  MultiplierSet ms;
  ms.dim_r = 2 * n;
  for (int i = 0; i < n; ++i) {
    ms.basis.push_back(sector_pair_basis(n, i));
    ms.constraints.push_back({ParamConstraint::Kind::Nonneg, 1, {i}});
  }
  return ms;
}

inline std::vector<int> iota_vec(int n, int start = 0) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = start + i;
  return v;
}

}  // namespace detail

/// Static offset sector [alpha, beta] (memoryless), M(lambda) = [0 diag; diag 0].
inline IqcBlock static_sector_iqc(const VectorXd& alpha, const VectorXd& beta) {
  if (alpha.size() != beta.size()) throw DimensionError("static_sector_iqc: alpha/beta size");
  const int n = static_cast<int>(alpha.size());
  for (int i = 0; i < n; ++i)
    if (!(alpha(i) <= beta(i))) throw ParameterError("static_sector_iqc: alpha exceeds beta");
  IqcBlock blk;
  blk.label = "sector";
  const MatrixXd I = MatrixXd::Identity(n, n);
  blk.filter.A.resize(0, 0);
  blk.filter.B1.resize(0, n);
  blk.filter.B2.resize(0, n);
  blk.filter.C.resize(2 * n, 0);
  blk.filter.D1.resize(2 * n, n);
  blk.filter.D1 << MatrixXd(beta.asDiagonal()), -MatrixXd(alpha.asDiagonal());
  blk.filter.D2.resize(2 * n, n);
  blk.filter.D2 << -I, I;
  blk.multipliers = detail::diagonal_pair_multipliers(n);
  blk.channel.p = blk.channel.q = detail::iota_vec(n);
  return blk;
}

/// Off-by-one IQC for slope restriction in [m, L].
inline IqcBlock off_by_one_iqc(const VectorXd& slope_lo, const VectorXd& slope_hi) {
  if (slope_lo.size() != slope_hi.size()) throw DimensionError("off_by_one_iqc: slope vector sizes differ");
  const int n = static_cast<int>(slope_lo.size());
  for (int i = 0; i < n; ++i)
    if (!(slope_lo(i) <= slope_hi(i))) throw ParameterError("off_by_one_iqc: invalid slope interval (m > L)");
  IqcBlock blk;
  blk.label = "off_by_one";
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd Z = MatrixXd::Zero(n, n);
  blk.filter.A = Z;
  blk.filter.B1 = -MatrixXd(slope_hi.asDiagonal());
  blk.filter.B2 = I;
  blk.filter.C.resize(2 * n, n);
  blk.filter.C << I, Z;
  blk.filter.D1.resize(2 * n, n);
  blk.filter.D1 << MatrixXd(slope_hi.asDiagonal()), -MatrixXd(slope_lo.asDiagonal());
  blk.filter.D2.resize(2 * n, n);
  blk.filter.D2 << -I, I;
  blk.multipliers = detail::diagonal_pair_multipliers(n);
  blk.channel.p = blk.channel.q = detail::iota_vec(n);
  return blk;
}

/// Norm-bounded LTI uncertainty ||Delta||_inf <= b. With basis_len = 0 the
/// multiplier is the static [b^2 lambda I, 0; 0, -lambda I]; otherwise the
/// filter stacks [1; 1/(z-rho); ...; 1/(z-rho)^nu] on each channel and the
/// multiplier is [b^2 X (x) I, 0; 0, -X (x) I] with X PSD.
inline IqcBlock norm_bounded_lti_iqc(double b, int n_p, int n_q, int basis_len = 1, double rho = 0.0) {
  if (!(b > 0.0)) throw ParameterError("norm_bounded_lti_iqc: gain bound must be positive");
  if (basis_len < 0) throw ParameterError("norm_bounded_lti_iqc: basis length must be nonnegative");
  if (!(std::abs(rho) < 1.0)) throw ParameterError("norm_bounded_lti_iqc: unstable basis pole (|rho| >= 1)");
  if (n_p < 1 || n_q < 1) throw DimensionError("norm_bounded_lti_iqc: channel sizes must be positive");
  const int nu = basis_len, d = nu + 1;

  // Chain realization of the scalar basis: s1+ = rho s1 + in, sk+ = rho sk + s(k-1).
  MatrixXd a = rho * MatrixXd::Identity(nu, nu);
  for (int k = 1; k < nu; ++k) a(k, k - 1) = 1.0;
  MatrixXd bb = MatrixXd::Zero(nu, 1);
  if (nu > 0) bb(0, 0) = 1.0;
  MatrixXd c = MatrixXd::Zero(d, nu);
  c.bottomRows(nu) = MatrixXd::Identity(nu, nu);
  MatrixXd dd = MatrixXd::Zero(d, 1);
  dd(0, 0) = 1.0;

  auto kron = [](const MatrixXd& X, int n) {
    MatrixXd K = MatrixXd::Zero(X.rows() * n, X.cols() * n);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      for (Eigen::Index j = 0; j < X.cols(); ++j) K.block(i * n, j * n, n, n) = X(i, j) * MatrixXd::Identity(n, n);
    return K;
  };

  const int sp = nu * n_p, sq = nu * n_q, rp = d * n_p, rq = d * n_q;
  IqcBlock blk;
  blk.label = "norm_bounded_lti";
  IqcFilter& f = blk.filter;
  f.A = MatrixXd::Zero(sp + sq, sp + sq);
  f.A.topLeftCorner(sp, sp) = kron(a, n_p);
  f.A.bottomRightCorner(sq, sq) = kron(a, n_q);
  f.B1 = MatrixXd::Zero(sp + sq, n_p);
  f.B1.topRows(sp) = kron(bb, n_p);
  f.B2 = MatrixXd::Zero(sp + sq, n_q);
  f.B2.bottomRows(sq) = kron(bb, n_q);
  f.C = MatrixXd::Zero(rp + rq, sp + sq);
  f.C.topLeftCorner(rp, sp) = kron(c, n_p);
  f.C.bottomRightCorner(rq, sq) = kron(c, n_q);
  f.D1 = MatrixXd::Zero(rp + rq, n_p);
  f.D1.topRows(rp) = kron(dd, n_p);
  f.D2 = MatrixXd::Zero(rp + rq, n_q);
  f.D2.bottomRows(rq) = kron(dd, n_q);

  MultiplierSet& ms = blk.multipliers;
  ms.dim_r = rp + rq;
  ParamConstraint psd{d == 1 ? ParamConstraint::Kind::Nonneg : ParamConstraint::Kind::Psd, d, {}};
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      MatrixXd E = MatrixXd::Zero(d, d);
      E(i, j) = E(j, i) = 1.0;
      MatrixXd M = MatrixXd::Zero(rp + rq, rp + rq);
      M.topLeftCorner(rp, rp) = b * b * kron(E, n_p);
      M.bottomRightCorner(rq, rq) = -kron(E, n_q);
      psd.params.push_back(static_cast<int>(ms.basis.size()));
      ms.basis.push_back(M);
    }
  }
  ms.constraints.push_back(psd);
  blk.channel.p = detail::iota_vec(n_p);
  blk.channel.q = detail::iota_vec(n_q);
  return blk;
}

/// Plant plus IQC filter states, zeta = [x; psi_1; ...; psi_B]:
///   zeta+ = A zeta + B [q; u] + Bw w,   r = C zeta + D [q; u] + Dw w.
/// Bw and Dw are nonzero only for blocks on activation channels.
struct ExtendedSystem {
  MatrixXd A, B, C, D, Bw, Dw;
  MatrixXd plant_C, plant_D1, plant_D2;  // p = C x + D1 q + D2 u
  int n_x = 0, n_zeta = 0, n_q = 0, n_u = 0, n_phi = 0, r_dim = 0;
  std::vector<int> state_offset, r_offset;  // per block
};

namespace detail {

inline MatrixXd selector(const std::vector<int>& idx, int n) {
  MatrixXd S = MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()), n);
  for (std::size_t k = 0; k < idx.size(); ++k) S(static_cast<Eigen::Index>(k), idx[k]) = 1.0;
  return S;
}

inline void check_channels(const LtiPlant& plant, const std::vector<IqcBlock>& blocks, int n_phi) {
  std::vector<const IqcBlock*> plant_blocks;
  for (const auto& b : blocks) {
    b.validate();
    const int np = b.channel.kind == ChannelKind::Plant ? plant.np() : n_phi;
    const int nq = b.channel.kind == ChannelKind::Plant ? plant.nq() : n_phi;
    for (int i : b.channel.p)
      if (i < 0 || i >= np) throw InterconnectionError(b.label + ": p index " + std::to_string(i) + " out of range");
    for (int i : b.channel.q)
      if (i < 0 || i >= nq) throw InterconnectionError(b.label + ": q index " + std::to_string(i) + " out of range");
    if (b.channel.kind == ChannelKind::Activation && b.channel.p != b.channel.q)
      throw InterconnectionError(b.label + ": activation channel must pair v and w of the same neurons");
    if (b.channel.kind == ChannelKind::Plant) plant_blocks.push_back(&b);
  }
  for (std::size_t i = 0; i < plant_blocks.size(); ++i) {
    for (std::size_t j = i + 1; j < plant_blocks.size(); ++j) {
      const auto& a = plant_blocks[i]->channel;
      const auto& c = plant_blocks[j]->channel;
      const std::set<int> ap(a.p.begin(), a.p.end()), aq(a.q.begin(), a.q.end());
      const std::set<int> cp(c.p.begin(), c.p.end()), cq(c.q.begin(), c.q.end());
      if (ap == cp && aq == cq) continue;
      bool disjoint = true;
      for (int k : cp) disjoint = disjoint && !ap.count(k);
      for (int k : cq) disjoint = disjoint && !aq.count(k);
      if (!disjoint)
        throw InterconnectionError("channel overlap between blocks '" + plant_blocks[i]->label + "' and '" +
                                   plant_blocks[j]->label + "'");
    }
  }
  std::set<int> cov_p, cov_q;
  for (const auto* b : plant_blocks) {
    cov_p.insert(b->channel.p.begin(), b->channel.p.end());
    cov_q.insert(b->channel.q.begin(), b->channel.q.end());
  }
  for (int i = 0; i < plant.nq(); ++i)
    if (!cov_q.count(i)) throw InterconnectionError("coverage gap: plant output q[" + std::to_string(i) + "] has no block");
  for (int i = 0; i < plant.np(); ++i)
    if (!cov_p.count(i)) throw InterconnectionError("coverage gap: plant input p[" + std::to_string(i) + "] has no block");
}

}  // namespace detail

/// Stack the plant and the block filters. `lft` is required when any block
/// sits on an activation channel (its p = v depends on the network).
inline ExtendedSystem extend_system(const LtiPlant& plant, const std::vector<IqcBlock>& blocks,
                                    const NnLft* lft = nullptr) {
  plant.validate();
  const int n_phi = lft ? static_cast<int>(lft->vx.rows()) : 0;
  for (const auto& b : blocks)
    if (b.channel.kind == ChannelKind::Activation && !lft)
      throw InterconnectionError(b.label + ": activation-channel block needs the network decomposition");
  if (lft && lft->vx.cols() != plant.nx()) throw DimensionError("extend_system: network input does not match plant");
  detail::check_channels(plant, blocks, n_phi);

  ExtendedSystem ext;
  ext.n_x = plant.nx();
  ext.n_q = plant.nq();
  ext.n_u = plant.nu();
  ext.n_phi = n_phi;
  int ns = ext.n_x, nr = 0;
  for (const auto& b : blocks) {
    ext.state_offset.push_back(ns);
    ext.r_offset.push_back(nr);
    ns += b.filter.n_psi();
    nr += b.filter.n_r();
  }
  ext.n_zeta = ns;
  ext.r_dim = nr;
  const int nx = ext.n_x, nq = ext.n_q, nu = ext.n_u;
  ext.A = MatrixXd::Zero(ns, ns);
  ext.B = MatrixXd::Zero(ns, nq + nu);
  ext.C = MatrixXd::Zero(nr, ns);
  ext.D = MatrixXd::Zero(nr, nq + nu);
  ext.Bw = MatrixXd::Zero(ns, n_phi);
  ext.Dw = MatrixXd::Zero(nr, n_phi);
  ext.plant_C = plant.C;
  ext.plant_D1 = plant.D1;
  ext.plant_D2 = plant.D2;
  ext.A.topLeftCorner(nx, nx) = plant.A;
  ext.B.topLeftCorner(nx, nq) = plant.B1;
  ext.B.topRightCorner(nx, nu) = plant.B2;

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const IqcFilter& f = blocks[k].filter;
    const Channel& ch = blocks[k].channel;
    const int o = ext.state_offset[k], ro = ext.r_offset[k], n = f.n_psi(), m = f.n_r();
    ext.A.block(o, o, n, n) = f.A;
    ext.C.block(ro, o, m, n) = f.C;
    if (ch.kind == ChannelKind::Plant) {
      const MatrixXd Sp = detail::selector(ch.p, plant.np());
      const MatrixXd Sq = detail::selector(ch.q, nq);
      const MatrixXd pC = Sp * plant.C, pD1 = Sp * plant.D1, pD2 = Sp * plant.D2;
      ext.A.block(o, 0, n, nx) = f.B1 * pC;
      ext.B.block(o, 0, n, nq) = f.B1 * pD1 + f.B2 * Sq;
      ext.B.block(o, nq, n, nu) = f.B1 * pD2;
      ext.C.block(ro, 0, m, nx) = f.D1 * pC;
      ext.D.block(ro, 0, m, nq) = f.D1 * pD1 + f.D2 * Sq;
      ext.D.block(ro, nq, m, nu) = f.D1 * pD2;
    } else {
      const MatrixXd S = detail::selector(ch.p, n_phi);
      ext.A.block(o, 0, n, nx) = f.B1 * S * lft->vx;
      ext.Bw.middleRows(o, n) = f.B1 * S * lft->vw + f.B2 * S;
      ext.C.block(ro, 0, m, nx) = f.D1 * S * lft->vx;
      ext.Dw.middleRows(ro, m) = f.D1 * S * lft->vw + f.D2 * S;
    }
  }
  return ext;
}

}  // namespace roacert
