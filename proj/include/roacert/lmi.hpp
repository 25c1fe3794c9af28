#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "roacert/bounds.hpp"
#include "roacert/errors.hpp"
#include "roacert/iqc.hpp"
#include "roacert/linalg.hpp"
#include "roacert/network.hpp"
#include "roacert/plant.hpp"

namespace roacert {

/// F(x) = constant + sum_k x_k * coeff_k, symmetric.
struct AffineMatrix {
  MatrixXd constant;
  std::vector<std::pair<int, MatrixXd>> terms;

  AffineMatrix() = default;
  explicit AffineMatrix(int n) : constant(MatrixXd::Zero(n, n)) {}

  int dim() const { return static_cast<int>(constant.rows()); }

  void add(int var, const MatrixXd& coeff) {
    if (coeff.rows() != dim() || coeff.cols() != dim()) throw DimensionError("AffineMatrix::add: coefficient size");
    if (coeff.cwiseAbs().maxCoeff() == 0.0) return;
    for (auto& t : terms) {
      if (t.first == var) {
        t.second += coeff;
        return;
      }
    }
    terms.emplace_back(var, coeff);
  }

  MatrixXd evaluate(const VectorXd& x) const {
    MatrixXd F = constant;
    for (const auto& [k, C] : terms) F += x(k) * C;
    return F;
  }

  void symmetrize_all() {
    constant = symmetrize(constant);
    for (auto& t : terms) t.second = symmetrize(t.second);
  }
};

/// F(x) >= 0. Strict inequalities are stored with their margin applied
/// (F = -LHS - margin I).
struct LmiConstraint {
  std::string name;
  AffineMatrix F;
  bool strict = false;
  double margin = 0.0;
};

/// Packed decision vector: svec(P), lambda, then multiplier parameters of
/// activation-channel blocks, then those of plant-channel blocks.
struct VariableLayout {
  int n_zeta = 0, n_x = 0, n_phi = 0;
  int lambda_offset = 0;
  std::vector<int> block_offset, block_count;
  std::vector<bool> block_activation;
  int num_vars = 0;

  int p_count() const { return svec_size(n_zeta); }
};

struct LmiProblem {
  VariableLayout layout;
  VectorXd objective;
  std::vector<LmiConstraint> constraints;
  std::vector<std::string> block_labels;
  std::vector<MultiplierSet> block_multipliers;

  MatrixXd P(const VectorXd& x) const { return smat(x.head(layout.p_count()), layout.n_zeta); }
  MatrixXd P_x(const VectorXd& x) const { return P(x).topLeftCorner(layout.n_x, layout.n_x); }
  VectorXd lambda(const VectorXd& x) const { return x.segment(layout.lambda_offset, layout.n_phi); }
  VectorXd block_params(const VectorXd& x, int b) const {
    return x.segment(layout.block_offset[b], layout.block_count[b]);
  }

  VectorXd pack(const MatrixXd& P, const VectorXd& lambda, const std::vector<VectorXd>& params) const {
    if (P.rows() != layout.n_zeta || lambda.size() != layout.n_phi || params.size() != layout.block_offset.size())
      throw DimensionError("LmiProblem::pack: variable sizes");
    VectorXd x(layout.num_vars);
    x.head(layout.p_count()) = svec(P);
    x.segment(layout.lambda_offset, layout.n_phi) = lambda;
    for (std::size_t b = 0; b < params.size(); ++b) {
      if (params[b].size() != layout.block_count[b]) throw DimensionError("LmiProblem::pack: block parameter count");
      x.segment(layout.block_offset[b], layout.block_count[b]) = params[b];
    }
    return x;
  }

  int add_constraint(LmiConstraint c) {
    c.F.symmetrize_all();
    constraints.push_back(std::move(c));
    return static_cast<int>(constraints.size()) - 1;
  }

  /// Text serialization: variable layout, objective, and each LMI as its
  /// constant block plus per-variable coefficient blocks.
  std::string dump() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "variables " << layout.num_vars << "\n";
    os << "P sym " << layout.n_zeta << " offset 0 count " << layout.p_count() << "\n";
    os << "lambda nonneg " << layout.n_phi << " offset " << layout.lambda_offset << "\n";
    for (std::size_t b = 0; b < layout.block_offset.size(); ++b)
      os << "theta[" << b << "] " << block_labels[b] << " offset " << layout.block_offset[b] << " count "
         << layout.block_count[b] << "\n";
    os << "objective";
    for (Eigen::Index k = 0; k < objective.size(); ++k) os << " " << objective(k);
    os << "\n";
    auto put = [&os](const MatrixXd& M) {
      for (Eigen::Index r = 0; r < M.rows(); ++r) {
        os << " ";
        for (Eigen::Index c = 0; c < M.cols(); ++c) os << " " << M(r, c);
        os << "\n";
      }
    };
    for (const auto& c : constraints) {
      os << "lmi " << c.name << " dim " << c.F.dim() << (c.strict ? " strict" : "") << " margin " << c.margin << "\n";
      os << " constant\n";
      put(c.F.constant);
      for (const auto& [k, M] : c.F.terms) {
        os << " var " << k << "\n";
        put(M);
      }
    }
    return os.str();
  }
};

struct AssemblyOptions {
  double epsilon = 1e-6;  // strict LMIs become <= -epsilon I
  double p_floor = 1e-8;  // P >= p_floor I
  double lambda_cap = 0.0;  // lambda_i <= lambda_cap when positive
};

/// Psi^T M(lambda) Psi for the offset sector: the quadratic form on
/// (dv, dw) equals sum_i 2 lambda_i (dw_i - alpha_i dv_i)(beta_i dv_i - dw_i).
inline MatrixXd sector_quadratic_form(const VectorXd& alpha, const VectorXd& beta, const VectorXd& lambda) {
  const int n = static_cast<int>(alpha.size());
  if (beta.size() != n || lambda.size() != n) throw DimensionError("sector_quadratic_form: vector sizes");
  for (int i = 0; i < n; ++i)
    if (lambda(i) < 0.0) throw ParameterError("sector_quadratic_form: negative multiplier");
  MatrixXd Psi(2 * n, 2 * n);
  const MatrixXd I = MatrixXd::Identity(n, n);
  Psi << MatrixXd(beta.asDiagonal()), -I, -MatrixXd(alpha.asDiagonal()), I;
  MatrixXd M = MatrixXd::Zero(2 * n, 2 * n);
  M.topRightCorner(n, n) = lambda.asDiagonal();
  M.bottomLeftCorner(n, n) = lambda.asDiagonal();
  return Psi.transpose() * M * Psi;
}

namespace detail {

// Coefficient of svec variable k in G^T P G, i.e. G^T E_k G.
inline MatrixXd congruence_of_basis(const MatrixXd& G, int /*n*/, int i, int j) {
  if (i == j) return G.row(i).transpose() * G.row(i);
  const MatrixXd t = G.row(i).transpose() * G.row(j);
  return (t + t.transpose()) / kSqrt2;
}

inline void add_containment(LmiProblem& prob, const std::string& name, double radius, const VectorXd& row) {
  const int nz = prob.layout.n_zeta;
  LmiConstraint c{name, AffineMatrix(nz + 1), false, 0.0};
  c.F.constant(0, 0) = radius * radius;
  c.F.constant.block(0, 1, 1, nz) = row.transpose();
  c.F.constant.block(1, 0, nz, 1) = row;
  int k = 0;
  for (int i = 0; i < nz; ++i) {
    for (int j = i; j < nz; ++j, ++k) {
      MatrixXd E = MatrixXd::Zero(nz + 1, nz + 1);
      if (i == j) {
        E(1 + i, 1 + i) = 1.0;
      } else {
        E(1 + i, 1 + j) = E(1 + j, 1 + i) = 1.0 / kSqrt2;
      }
      c.F.add(k, E);
    }
  }
  prob.add_constraint(std::move(c));
}

inline LmiProblem assemble_core(const ExtendedSystem& ext, const NnLft& lft, const ActivationBounds& bounds,
                                const Equilibrium& eq, const std::vector<IqcBlock>& blocks, int n1,
                                const AssemblyOptions& opts) {
  const int nx = ext.n_x, nz = ext.n_zeta, nq = ext.n_q, nu = ext.n_u;
  const int nphi = static_cast<int>(lft.vx.rows());
  if (lft.vx.cols() != nx || lft.ux.rows() != nu) throw DimensionError("assemble: plant and network dimensions differ");
  if (bounds.size() != nphi) throw DimensionError("assemble: bounds do not match network");
  if (ext.n_phi != 0 && ext.n_phi != nphi) throw DimensionError("assemble: extended system built for another network");
  if (blocks.size() != ext.state_offset.size()) throw DimensionError("assemble: block list does not match extension");

  LmiProblem prob;
  VariableLayout& L = prob.layout;
  L.n_zeta = nz;
  L.n_x = nx;
  L.n_phi = nphi;
  L.lambda_offset = L.p_count();
  int off = L.lambda_offset + nphi;
  L.block_offset.assign(blocks.size(), 0);
  L.block_count.assign(blocks.size(), 0);
  L.block_activation.assign(blocks.size(), false);
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const bool act = blocks[b].channel.kind == ChannelKind::Activation;
      if (act != (pass == 0)) continue;
      L.block_offset[b] = off;
      L.block_count[b] = blocks[b].multipliers.param_count();
      L.block_activation[b] = act;
      off += L.block_count[b];
    }
  }
  L.num_vars = off;
  for (const auto& b : blocks) {
    prob.block_labels.push_back(b.label);
    prob.block_multipliers.push_back(b.multipliers);
  }

  // xi = [zeta; w; q]
  const int nxi = nz + nphi + nq;
  MatrixXd RV = MatrixXd::Zero(nz + nq + nu, nxi);
  RV.topLeftCorner(nz, nz).setIdentity();
  RV.block(nz, nz + nphi, nq, nq).setIdentity();
  RV.block(nz + nq, 0, nu, nx) = lft.ux;
  RV.block(nz + nq, nz, nu, nphi) = lft.uw;
  MatrixXd AB(nz, nz + nq + nu);
  AB << ext.A, ext.B;
  MatrixXd Gnext = AB * RV;
  if (ext.n_phi == nphi) Gnext.middleCols(nz, nphi) += ext.Bw;
  MatrixXd Gnow = MatrixXd::Zero(nz, nxi);
  Gnow.leftCols(nz).setIdentity();
  MatrixXd CD(ext.r_dim, nz + nq + nu);
  CD << ext.C, ext.D;
  MatrixXd H = CD * RV;
  if (ext.n_phi == nphi) H.middleCols(nz, nphi) += ext.Dw;
  MatrixXd Rphi = MatrixXd::Zero(2 * nphi, nxi);
  Rphi.block(0, 0, nphi, nx) = lft.vx;
  Rphi.block(0, nz, nphi, nphi) = lft.vw;
  Rphi.block(nphi, nz, nphi, nphi).setIdentity();

  LmiConstraint dec{"decrease", AffineMatrix(nxi), true, opts.epsilon};
  dec.F.constant = -opts.epsilon * MatrixXd::Identity(nxi, nxi);
  int k = 0;
  for (int i = 0; i < nz; ++i)
    for (int j = i; j < nz; ++j, ++k)
      dec.F.add(k, -(congruence_of_basis(Gnext, nz, i, j) - congruence_of_basis(Gnow, nz, i, j)));
  for (int i = 0; i < nphi; ++i) {
    const MatrixXd a = Rphi.row(i), c = Rphi.row(nphi + i);
    const double al = bounds.alpha(i), be = bounds.beta(i);
    const MatrixXd ac = a.transpose() * c;
    const MatrixXd Q = -2.0 * al * be * a.transpose() * a + (al + be) * (ac + ac.transpose()) - 2.0 * c.transpose() * c;
    dec.F.add(L.lambda_offset + i, -Q);
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& ms = blocks[b].multipliers;
    const MatrixXd Hb = H.middleRows(ext.r_offset[b], ms.dim_r);
    for (int t = 0; t < ms.param_count(); ++t)
      dec.F.add(L.block_offset[b] + t, -(Hb.transpose() * ms.basis[t] * Hb));
  }
  prob.add_constraint(std::move(dec));

  LmiConstraint pos{"P_positive", AffineMatrix(nz), false, 0.0};
  pos.F.constant = -opts.p_floor * MatrixXd::Identity(nz, nz);
  k = 0;
  for (int i = 0; i < nz; ++i)
    for (int j = i; j < nz; ++j, ++k) {
      MatrixXd E = MatrixXd::Zero(nz, nz);
      if (i == j) {
        E(i, i) = 1.0;
      } else {
        E(i, j) = E(j, i) = 1.0 / kSqrt2;
      }
      pos.F.add(k, E);
    }
  prob.add_constraint(std::move(pos));

  for (int i = 0; i < nphi; ++i) {
    LmiConstraint c{"lambda_nonneg[" + std::to_string(i) + "]", AffineMatrix(1), false, 0.0};
    c.F.add(L.lambda_offset + i, MatrixXd::Ones(1, 1));
    prob.add_constraint(std::move(c));
    if (opts.lambda_cap > 0.0) {
      LmiConstraint cap{"lambda_cap[" + std::to_string(i) + "]", AffineMatrix(1), false, 0.0};
      cap.F.constant(0, 0) = opts.lambda_cap;
      cap.F.add(L.lambda_offset + i, -MatrixXd::Ones(1, 1));
      prob.add_constraint(std::move(cap));
    }
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& ms = blocks[b].multipliers;
    for (std::size_t ci = 0; ci < ms.constraints.size(); ++ci) {
      const ParamConstraint& pc = ms.constraints[ci];
      LmiConstraint c{blocks[b].label + "[" + std::to_string(b) + "].multiplier[" + std::to_string(ci) + "]",
                      AffineMatrix(pc.dim), false, 0.0};
      for (int i = 0; i < pc.dim; ++i)
        for (int j = i; j < pc.dim; ++j) {
          MatrixXd E = MatrixXd::Zero(pc.dim, pc.dim);
          E(i, j) = E(j, i) = 1.0;
          c.F.add(L.block_offset[b] + pc.params[svec_index(pc.dim, i, j)], E);
        }
      prob.add_constraint(std::move(c));
    }
  }

  // First-layer containment: (W_i^1 (x - x*))^2 <= delta_i^2 on the ellipsoid.
  for (int i = 0; i < n1; ++i) {
    const double d = std::min(bounds.v_hi(i) - eq.v(i), eq.v(i) - bounds.v_lo(i));
    if (!(d > 0.0)) throw InvalidIntervalError("assemble: first-layer interval has zero radius");
    VectorXd row = VectorXd::Zero(nz);
    row.head(nx) = lft.vx.row(i).transpose();
    add_containment(prob, "containment[" + std::to_string(i) + "]", d, row);
  }
  // Range-restricted plant blocks: |p_j| <= radius on the ellipsoid.
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    if (blk.p_radius.size() == 0) continue;
    for (std::size_t t = 0; t < blk.channel.p.size(); ++t) {
      const int j = blk.channel.p[t];
      if (blk.channel.kind != ChannelKind::Plant) throw InterconnectionError(blk.label + ": ranges apply to plant channels");
      if (ext.plant_D1.row(j).cwiseAbs().sum() + ext.plant_D2.row(j).cwiseAbs().sum() != 0.0)
        throw InterconnectionError(blk.label + ": range on p[" + std::to_string(j) + "] requires p to depend on the state only");
      VectorXd row = VectorXd::Zero(nz);
      row.head(nx) = ext.plant_C.row(j).transpose();
      add_containment(prob, blk.label + "[" + std::to_string(b) + "].range[" + std::to_string(j) + "]",
                      blk.p_radius(static_cast<Eigen::Index>(t)), row);
    }
  }

  prob.objective = VectorXd::Zero(L.num_vars);
  for (int i = 0; i < nx; ++i) prob.objective(svec_index(nz, i, i)) = 1.0;
  return prob;
}

}  // namespace detail

/// Local stability LMIs for a nominal plant x+ = A x + B u about `eq`, with
/// objective trace(P).
inline LmiProblem assemble_nominal(const LtiPlant& plant, const NeuralNetwork& nn, const NnLft& lft,
                                   const Equilibrium& eq, const ActivationBounds& bounds,
                                   const AssemblyOptions& opts = {}) {
  if (!plant.is_nominal()) throw ParameterError("assemble_nominal: plant has uncertainty channels");
  if (plant.nx() != nn.input_dim() || plant.nu() != nn.output_dim())
    throw DimensionError("assemble_nominal: plant and network dimensions differ");
  const ExtendedSystem ext = extend_system(plant, {});
  return detail::assemble_core(ext, lft, bounds, eq, {}, nn.layer_size(0), opts);
}

/// Robust LMIs on the extended system (equilibrium at the origin), objective
/// trace(P_x).
inline LmiProblem assemble_robust(const ExtendedSystem& ext, const NeuralNetwork& nn, const NnLft& lft,
                                  const Equilibrium& eq, const ActivationBounds& bounds,
                                  const std::vector<IqcBlock>& blocks, const AssemblyOptions& opts = {}) {
  if (!eq.is_origin(1e-12))
    throw UnsupportedEquilibriumError(
        "robust analysis requires the equilibrium at the origin (x*, u*, v*, w* all zero)");
  return detail::assemble_core(ext, lft, bounds, eq, blocks, nn.layer_size(0), opts);
}

}  // namespace roacert
