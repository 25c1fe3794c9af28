#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roacert/backends.hpp"
#include "roacert/bounds.hpp"
#include "roacert/config.hpp"
#include "roacert/iqc.hpp"
#include "roacert/json_io.hpp"
#include "roacert/lmi.hpp"
#include "roacert/network.hpp"
#include "roacert/sdp.hpp"
#include "roacert/simulate.hpp"
#include "roacert/sweep.hpp"

namespace roacert {

/// Loaded network and resolved equilibrium for a config.
struct PreparedModel {
  ScenarioConfig cfg;
  NeuralNetwork nn;
  NnLft lft;
  LtiPlant model;
  Equilibrium eq;
};

inline PreparedModel prepare(const ScenarioConfig& cfg) {
  PreparedModel pm;
  pm.cfg = cfg;
  pm.model = cfg.plant.model();
  pm.nn = load_network(cfg.weights_path().string());
  if (pm.nn.input_dim() != pm.model.nx() || pm.nn.output_dim() != pm.model.nu())
    throw DimensionError("network maps " + std::to_string(pm.nn.input_dim()) + " -> " +
                         std::to_string(pm.nn.output_dim()) + " but the plant has n_x = " +
                         std::to_string(pm.model.nx()) + ", n_u = " + std::to_string(pm.model.nu()));
  pm.lft = build_lft(pm.nn);
  const int nx = pm.model.nx();
  // equilibrium conditions use the plant with q = 0 (the nominal part of the LFT)
  const LtiPlant lin = LtiPlant::nominal(pm.model.A, pm.model.B2);
  switch (cfg.eq_mode) {
    case EquilibriumMode::Origin:
      pm.eq = propagate_equilibrium(pm.nn, VectorXd::Zero(nx));
      break;
    case EquilibriumMode::Vector:
      pm.eq = propagate_equilibrium(pm.nn, cfg.eq_vector);
      break;
    case EquilibriumMode::Solve: {
      auto e = solve_equilibrium(lin, pm.nn, VectorXd::Zero(nx));
      if (!e) throw ParameterError("equilibrium search did not converge");
      pm.eq = *e;
      break;
    }
  }
  const EquilibriumResidual r = verify_equilibrium(lin, pm.nn, pm.eq, 1e-9);
  if (!r.pass) {
    std::ostringstream os;
    os << "declared equilibrium is not a fixed point of the closed loop (residual " << r.max() << ")";
    throw ParameterError(os.str());
  }
  return pm;
}

/// Quadratic-constraint data, blocks and LMIs at one delta_v.
struct Instance {
  double delta_v = 0.0;
  bool robust = false;
  ActivationBounds bounds;
  std::vector<IqcBlock> blocks;
  ExtendedSystem ext;
  LmiProblem prob;
};

inline IqcBlock build_block(const BlockSpec& s, const ActivationBounds& b) {
  IqcBlock blk;
  switch (s.type) {
    case BlockType::ActivationOffByOne:
      blk = off_by_one_iqc(b.slope_lo, b.slope_hi);
      blk.channel.kind = ChannelKind::Activation;
      break;
    case BlockType::Sector:
      blk = static_sector_iqc(s.alpha, s.beta);
      break;
    case BlockType::OffByOne:
      blk = off_by_one_iqc(s.slope_lo, s.slope_hi);
      break;
    case BlockType::NonlinearitySector:
    case BlockType::NonlinearityOffByOne: {
      const ScalarBounds sb = bound_scalar_nonlinearity(detail::named_nonlinearity(s.nonlinearity, s.u_max), s.lo, s.hi, 0.0);
      blk = s.type == BlockType::NonlinearitySector
                ? static_sector_iqc(VectorXd::Constant(1, sb.sector.alpha), VectorXd::Constant(1, sb.sector.beta))
                : off_by_one_iqc(VectorXd::Constant(1, sb.slope.lo), VectorXd::Constant(1, sb.slope.hi));
      break;
    }
    case BlockType::SaturationSector: {
      if (s.output >= b.u_bar.size()) throw ConfigError("saturation_sector: output index out of range");
      const SectorBound ss = saturation_sector(*s.u_max, b.u_bar(s.output));
      blk = static_sector_iqc(VectorXd::Constant(1, ss.alpha), VectorXd::Constant(1, ss.beta));
      break;
    }
    case BlockType::NormBoundedLti:
      blk = norm_bounded_lti_iqc(s.b, static_cast<int>(s.p.size()), static_cast<int>(s.q.size()), s.basis_len, s.rho);
      break;
  }
  blk.label = s.type_name;
  if (s.type != BlockType::ActivationOffByOne) {
    blk.channel.p = s.p;
    blk.channel.q = s.q;
  }
  if (s.p_radius.size()) blk.p_radius = s.p_radius;
  blk.validate();
  return blk;
}

/// `robust` selects the extended-system LMIs; a nominal plant without blocks
/// falls back to the nominal LMIs either way.
inline Instance build_instance(const PreparedModel& pm, double delta_v, bool robust) {
  Instance in;
  in.delta_v = delta_v;
  in.bounds = propagate_bounds(pm.nn, pm.eq, delta_v, pm.cfg.bound_opts);
  const bool nominal_plant = pm.model.is_nominal();
  if (!robust && !nominal_plant)
    throw ConfigError("certify-nominal needs a nominal plant (lti, or pendulum/vehicle with \"linearized\": true)");
  if (!robust && !pm.cfg.blocks.empty()) throw ConfigError("certify-nominal takes no iqc_blocks; use certify-robust");
  in.robust = robust && !(nominal_plant && pm.cfg.blocks.empty());
  if (!in.robust) {
    in.prob = assemble_nominal(pm.model, pm.nn, pm.lft, pm.eq, in.bounds, pm.cfg.assembly);
    in.ext = extend_system(pm.model, {});
    return in;
  }
  if (!pm.eq.is_origin(1e-12))
    throw UnsupportedEquilibriumError(
        "robust analysis requires the equilibrium at the origin (x*, u*, v*, w* all zero); shift coordinates first");
  for (const auto& s : pm.cfg.blocks) in.blocks.push_back(build_block(s, in.bounds));
  in.ext = extend_system(pm.model, in.blocks, &pm.lft);
  in.prob = assemble_robust(in.ext, pm.nn, pm.lft, pm.eq, in.bounds, in.blocks, pm.cfg.assembly);
  return in;
}

namespace detail {

// What the blocks say about the operator on one q channel.
struct ChannelClass {
  bool covered = false;
  bool saturation = false;
  double u_max = 0.0;
  double lti_b = 0.0;
  double alpha = -std::numeric_limits<double>::infinity(), beta = std::numeric_limits<double>::infinity();
  double m = -std::numeric_limits<double>::infinity(), L = std::numeric_limits<double>::infinity();
  double range = std::numeric_limits<double>::infinity();
};

inline std::vector<ChannelClass> classify_channels(const PreparedModel& pm, const Instance& in) {
  const int nq = pm.model.nq();
  std::vector<ChannelClass> cls(nq);
  for (std::size_t bi = 0; bi < pm.cfg.blocks.size(); ++bi) {
    const BlockSpec& s = pm.cfg.blocks[bi];
    if (s.type == BlockType::ActivationOffByOne) continue;
    if (s.p != s.q)
      throw ConfigError("validation: block '" + s.type_name + "' maps p to a different q index; cannot sample it");
    const IqcBlock& blk = in.blocks[bi];
    for (std::size_t t = 0; t < s.q.size(); ++t) {
      const int j = s.q[t];
      ChannelClass& c = cls[j];
      c.covered = true;
      if (blk.p_radius.size()) c.range = std::min(c.range, blk.p_radius(static_cast<Eigen::Index>(t)));
      const Eigen::Index k = static_cast<Eigen::Index>(t);
      switch (s.type) {
        case BlockType::SaturationSector:
          c.saturation = true;
          c.u_max = *s.u_max;
          break;
        case BlockType::NormBoundedLti:
          c.lti_b = c.lti_b > 0.0 ? std::min(c.lti_b, s.b) : s.b;
          break;
        case BlockType::Sector:
        case BlockType::NonlinearitySector:
          // D1 = [beta; -alpha] on the p part of the sector filter
          c.beta = std::min(c.beta, blk.filter.D1(k, k));
          c.alpha = std::max(c.alpha, -blk.filter.D1(static_cast<Eigen::Index>(s.p.size()) + k, k));
          break;
        case BlockType::OffByOne:
        case BlockType::NonlinearityOffByOne:
          c.L = std::min(c.L, blk.filter.D1(k, k));
          c.m = std::max(c.m, -blk.filter.D1(static_cast<Eigen::Index>(s.p.size()) + k, k));
          break;
        default: break;
      }
    }
  }
  return cls;
}

inline std::pair<double, double> static_gain_range(const ChannelClass& c) {
  double lo = std::max(c.alpha, c.m), hi = std::min(c.beta, c.L);
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("validation: a static channel needs finite sector or slope bounds");
  return {lo, hi};
}

}  // namespace detail

/// Simulation scenario for the configured plant. Uncertainty realizations
/// are drawn from the classes described by the plant-channel blocks;
/// saturation channels keep the true saturation.
inline Scenario build_scenario(const PreparedModel& pm, const Instance& in) {
  const PlantSpec& ps = pm.cfg.plant;
  Scenario scn;
  if (pm.model.is_nominal()) return nominal_scenario(pm.model, pm.nn, pm.eq.x);
  if (ps.type == PlantType::Pendulum) scn = pendulum_scenario(ps.pendulum, pm.nn);
  else if (ps.type == PlantType::Vehicle) scn = vehicle_scenario(ps.vehicle, pm.nn);
  else {
    scn.kind = ScenarioKind::Lft;
    scn.plant = pm.model;
    scn.nn = pm.nn;
    scn.x_star = pm.eq.x;
  }
  const auto cls = detail::classify_channels(pm, in);
  if (ps.type == PlantType::Uncertain) {
    for (const auto& c : cls) {
      if (c.saturation) {
        scn.nominal.push_back(std::make_shared<StaticOperator>([u = c.u_max](double v) { return sat(v, u); }, "saturation"));
      } else if (c.lti_b > 0.0 || !c.covered) {
        scn.nominal.push_back(std::make_shared<FirstOrderOperator>(0.0, 0.0, 0.0));
      } else {
        const auto [lo, hi] = detail::static_gain_range(c);
        const double g = std::clamp(0.0, lo, hi);
        scn.nominal.push_back(std::make_shared<StaticOperator>([g](double t) { return g * t; }, "linear"));
      }
    }
  }
  const Realization nominal = scn.nominal;
  scn.sampler = [cls, nominal](std::mt19937_64& rng) {
    Realization r;
    for (std::size_t j = 0; j < cls.size(); ++j) {
      const auto& c = cls[j];
      if (c.saturation || !c.covered) {
        r.push_back(nominal[j]);
      } else if (c.lti_b > 0.0) {
        r.push_back(random_lti_operator(c.lti_b, rng));
      } else {
        const auto [lo, hi] = detail::static_gain_range(c);
        const double m = std::isfinite(c.m) ? c.m : lo, L = std::isfinite(c.L) ? c.L : hi;
        const double a = std::isfinite(c.alpha) ? c.alpha : lo, b = std::isfinite(c.beta) ? c.beta : hi;
        const double range = std::isfinite(c.range) ? c.range : 1.0;
        r.push_back(std::make_shared<StaticOperator>(random_slope_map(m, L, a, b, range, rng), "sampled"));
      }
    }
    return r;
  };
  return scn;
}

struct RunResult {
  Instance instance;
  RoaCertificate cert;
  std::optional<ValidationReport> validation;
  std::optional<LyapunovReport> lyapunov;

  bool certified() const {
    return cert.certified() && (!validation || validation->pass()) && (!lyapunov || lyapunov->pass());
  }
  /// 0 certified, 2 infeasible or a failed check.
  int exit_code() const { return certified() ? 0 : 2; }
};

inline std::unique_ptr<SdpBackend> backend_for(const ScenarioConfig& cfg) { return make_backend(cfg.backend); }

inline RoaCertificate solve_instance(const PreparedModel& pm, const Instance& in, SdpBackend& be) {
  RoaCertificate c = solve(in.prob, be, pm.cfg.solver);
  c.x_star = pm.eq.x;
  return c;
}

inline void run_checks(const PreparedModel& pm, RunResult& r) {
  if (!pm.cfg.validate || !r.cert.certified()) return;
  const Instance& in = r.instance;
  const Scenario scn = build_scenario(pm, in);
  r.validation = validate_roa(r.cert, scn, pm.cfg.validation, in.robust ? &in.blocks : nullptr, &in.bounds);
  if (!in.robust && pm.cfg.lyapunov_samples > 0)
    r.lyapunov = check_lyapunov_decrease(r.cert, pm.model, pm.nn, pm.eq, in.bounds, pm.cfg.lyapunov_samples,
                                         pm.cfg.validation.seed);
}

inline double require_delta(const ScenarioConfig& cfg) {
  if (!cfg.delta_v) throw ConfigError("config: certification needs 'delta_v' (a sweep grid alone is for the sweep command)");
  return *cfg.delta_v;
}

inline RunResult certify(const PreparedModel& pm, bool robust) {
  RunResult r;
  r.instance = build_instance(pm, require_delta(pm.cfg), robust);
  auto be = backend_for(pm.cfg);
  r.cert = solve_instance(pm, r.instance, *be);
  run_checks(pm, r);
  return r;
}

inline SweepResult sweep(const PreparedModel& pm, bool robust) {
  if (pm.cfg.sweep.empty()) throw ConfigError("config: sweep needs a 'sweep' grid");
  build_instance(pm, pm.cfg.sweep.front(), robust);  // surface config errors before the sweep
  return sweep_delta_v(
      pm.cfg.sweep,
      [&](double d) {
        const Instance in = build_instance(pm, d, robust);
        auto be = backend_for(pm.cfg);
        return solve_instance(pm, in, *be);
      },
      pm.cfg.sweep_threads);
}

inline std::string sweep_csv(const SweepResult& s) {
  std::ostringstream os;
  os.precision(10);
  os << "delta_v,status,feasible,trace_P_x,det_P_x_inv,best_volume\n";
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& r = s.rows[i];
    os << r.delta_v << ',' << to_string(r.status) << ',' << (r.feasible ? 1 : 0) << ',';
    if (r.feasible) os << r.trace << ',' << r.det_inv;
    else os << ',';
    os << ',' << (static_cast<int>(i) == s.best_volume ? 1 : 0) << '\n';
  }
  return os.str();
}

// ---- certificate serialization ----

inline json validation_to_json(const ValidationReport& v) {
  json f = json::array();
  for (const auto& x : v.failures)
    f.push_back({{"x0", to_json(x.x0)}, {"realization", x.realization}, {"reason", x.reason}});
  return {{"trajectories", v.trajectories},   {"converged", v.converged}, {"invariant", v.invariant},
          {"passed", v.passed},               {"fraction", v.fraction},   {"worst_V", v.worst_V},
          {"worst_dissipation", v.worst_dissipation}, {"failures", f},    {"pass", v.pass()},
          {"timing", {{"elapsed_s", v.elapsed_s}}}};
}

inline json lyapunov_to_json(const LyapunovReport& l) {
  return {{"samples", l.samples},
          {"worst_margin", l.worst_margin},
          {"min_sector_term", l.min_sector_term},
          {"violations", l.violations},
          {"pass", l.pass()}};
}

inline json certificate_to_json(const PreparedModel& pm, const RunResult& r) {
  const RoaCertificate& c = r.cert;
  const bool have = c.P.size() > 0;
  json j;
  j["status"] = to_string(c.status);
  j["certified"] = r.certified();
  j["mode"] = r.instance.robust ? "robust" : "nominal";
  j["delta_v"] = r.instance.delta_v;
  j["objective"] = have ? json(c.objective) : json(nullptr);
  j["P"] = have ? to_json(c.P) : json::array();
  j["P_x"] = have ? to_json(c.P_x) : json::array();
  j["x_star"] = to_json(pm.eq.x);
  j["epsilon"] = c.epsilon;
  j["lambda"] = have ? to_json(c.lambda) : json::array();
  j["eta"] = have ? to_json(c.eta) : json::array();
  json mp = json::array();
  for (std::size_t b = 0; b < c.multiplier_params.size(); ++b)
    mp.push_back({{"label", b < c.block_labels.size() ? c.block_labels[b] : ""}, {"params", to_json(c.multiplier_params[b])}});
  j["multiplier_params"] = mp;
  json res = json::array();
  for (const auto& ck : c.verification.checks) res.push_back({{"name", ck.name}, {"min_eig", ck.min_eig}, {"pass", ck.pass}});
  j["residuals"] = res;
  const auto& b = r.instance.bounds;
  j["bounds"] = {{"u_bar", to_json(b.u_bar)}, {"alpha", to_json(b.alpha)}, {"beta", to_json(b.beta)}};
  const auto& st = c.stats;
  j["solver_stats"] = {{"backend", st.backend},
                       {"raw_status", st.raw_status},
                       {"iterations", st.iterations},
                       {"primal_objective", st.primal_objective},
                       {"dual_objective", st.dual_objective},
                       {"primal_residual", st.primal_residual},
                       {"dual_residual", st.dual_residual},
                       {"timing", {{"setup_ms", st.setup_ms}, {"solve_ms", st.solve_ms}}}};
  j["validation"] = r.validation ? validation_to_json(*r.validation) : json(nullptr);
  j["lyapunov_check"] = r.lyapunov ? lyapunov_to_json(*r.lyapunov) : json(nullptr);
  j["config_echo"] = pm.cfg.echo;
  j["config_hash"] = config_hash(pm.cfg);
  return j;
}

/// Drops timing fields, for determinism comparisons.
inline json strip_timing(json j) {
  if (j.is_object()) {
    j.erase("timing");
    for (auto& [k, v] : j.items()) v = strip_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timing(v);
  }
  return j;
}

inline RoaCertificate certificate_from_json(const json& j, const LmiProblem& prob) {
  check_keys(j, {"status", "certified", "mode", "delta_v", "objective", "P", "P_x", "x_star", "epsilon", "lambda", "eta",
                 "multiplier_params", "residuals", "bounds", "solver_stats", "validation", "lyapunov_check",
                 "config_echo", "config_hash"},
             "certificate");
  RoaCertificate c;
  try {
    c.P = matrix_from_json(j.at("P"), "certificate.P");
    c.lambda = vector_from_json(j.at("lambda"), "certificate.lambda");
    for (const auto& m : j.at("multiplier_params")) {
      c.multiplier_params.push_back(vector_from_json(m.at("params"), "certificate.multiplier_params"));
      c.block_labels.push_back(m.at("label").get<std::string>());
    }
    c.objective = j.at("objective").is_number() ? j.at("objective").get<double>() : 0.0;
    c.epsilon = j.at("epsilon").get<double>();
    c.x_star = vector_from_json(j.at("x_star"), "certificate.x_star");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
  const int nx = prob.layout.n_x;
  if (c.P.rows() != prob.layout.n_zeta || c.P.cols() != prob.layout.n_zeta)
    throw ConfigError("certificate: P has the wrong size for this config");
  c.P_x = c.P.topLeftCorner(nx, nx);
  std::vector<double> eta;
  for (std::size_t b = 0; b < c.multiplier_params.size() && b < prob.layout.block_activation.size(); ++b)
    if (prob.layout.block_activation[b])
      for (Eigen::Index t = 0; t < c.multiplier_params[b].size(); ++t) eta.push_back(c.multiplier_params[b](t));
  c.eta = Eigen::Map<VectorXd>(eta.data(), static_cast<Eigen::Index>(eta.size()));
  c.status = j.at("status") == "optimal" ? SolveStatus::Optimal : SolveStatus::NumericalTrouble;
  return c;
}

/// Re-audits a stored certificate against its config: LMI residuals, then
/// trajectories and (nominal) sampled Lyapunov decrease.
inline RunResult revalidate(const PreparedModel& pm, const json& cert_json) {
  if (!cert_json.contains("config_hash") || cert_json.at("config_hash") != config_hash(pm.cfg))
    throw ConfigError("certificate was produced for a different config (config hash mismatch)");
  RunResult r;
  const bool robust = cert_json.value("mode", "nominal") == "robust";
  r.instance = build_instance(pm, require_delta(pm.cfg), robust);
  r.cert = certificate_from_json(cert_json, r.instance.prob);
  r.cert.verification = verify_certificate(r.instance.prob, r.cert);
  if (!r.cert.verification.pass) r.cert.status = SolveStatus::NumericalTrouble;
  if (r.cert.status != SolveStatus::Optimal) return r;
  ScenarioConfig cfg = pm.cfg;
  cfg.validate = true;
  PreparedModel pv = pm;
  pv.cfg = cfg;
  run_checks(pv, r);
  return r;
}

/// V along a recorded trajectory; filter states are rebuilt from the
/// recorded p, q, v, w for extended certificates.
inline std::vector<double> lyapunov_along(const Trajectory& tr, const RoaCertificate& cert, const Instance& in,
                                          const VectorXd& x_star) {
  const int nx = static_cast<int>(cert.P_x.rows()), nz = static_cast<int>(cert.P.rows());
  std::vector<VectorXd> psi;
  for (const auto& b : in.blocks) psi.push_back(VectorXd::Zero(b.filter.n_psi()));
  std::vector<double> V;
  for (std::size_t k = 0; k < tr.x.size(); ++k) {
    VectorXd z(nz);
    z.head(nx) = tr.x[k] - x_star;
    int o = nx;
    for (const auto& ps : psi) {
      z.segment(o, ps.size()) = ps;
      o += static_cast<int>(ps.size());
    }
    V.push_back(z.dot(cert.P * z));
    if (k >= tr.u.size()) break;
    for (std::size_t b = 0; b < in.blocks.size(); ++b) {
      const auto& blk = in.blocks[b];
      const auto& ch = blk.channel;
      VectorXd pb(ch.p.size()), qb(ch.q.size());
      for (std::size_t t = 0; t < ch.p.size(); ++t)
        pb(t) = ch.kind == ChannelKind::Plant ? tr.p[k](ch.p[t]) : tr.v[k](ch.p[t]);
      for (std::size_t t = 0; t < ch.q.size(); ++t)
        qb(t) = ch.kind == ChannelKind::Plant ? tr.q[k](ch.q[t]) : tr.w[k](ch.q[t]);
      psi[b] = blk.filter.A * psi[b] + blk.filter.B1 * pb + blk.filter.B2 * qb;
    }
  }
  return V;
}

inline std::string trajectory_csv(const Trajectory& tr, const std::vector<double>& V) {
  std::ostringstream os;
  os.precision(12);
  const int nx = static_cast<int>(tr.x.front().size());
  const int nu = tr.u.empty() ? 0 : static_cast<int>(tr.u.front().size());
  os << "k";
  for (int i = 0; i < nx; ++i) os << ",x" << i;
  for (int i = 0; i < nu; ++i) os << ",u" << i;
  os << ",V\n";
  for (std::size_t k = 0; k < tr.x.size(); ++k) {
    os << k;
    for (int i = 0; i < nx; ++i) os << ',' << tr.x[k](i);
    for (int i = 0; i < nu; ++i) {
      os << ',';
      if (k < tr.u.size()) os << tr.u[k](i);
    }
    os << ',';
    if (k < V.size()) os << V[k];
    os << '\n';
  }
  return os.str();
}

inline std::string ellipse_csv(const MatrixXd& P_x, const VectorXd& x_star, int i, int j) {
  std::ostringstream os;
  os.precision(12);
  os << "x" << i << ",x" << j << "\n";
  for (const auto& [a, b] : ellipse_slice(P_x, x_star, i, j)) os << a << ',' << b << '\n';
  return os.str();
}

}  // namespace roacert
