// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "roacert/pipeline.hpp"
#include "scalar_oracle.hpp"

using namespace roacert;

namespace {

using Clock = std::chrono::steady_clock;

const std::string kConfigs = std::string(ROACERT_SOURCE_DIR) + "/configs/";

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s [%2d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), s);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// ---- 1 ----
Outcome theta_minus_sin_bounds() {
  const auto t0 = Clock::now();
  const ScalarBounds b = bound_scalar_nonlinearity(theta_minus_sin(), -0.73, 0.73, 0.0);
  const double dt = seconds_since(t0);
  const bool ok = std::abs(b.sector.alpha - 0.0) <= 1e-3 && std::abs(b.sector.beta - 0.087) <= 1e-3 &&
                  std::abs(b.slope.lo - 0.0) <= 1e-3 && std::abs(b.slope.hi - 0.2548) <= 1e-3 && dt < 1.0;
  return {ok, fmt("sector [%.6f, %.6f] slope [%.6f, %.6f] vs [0, 0.087] / [0, 0.2548] tol 1e-3, %.4f s", b.sector.alpha,
                  b.sector.beta, b.slope.lo, b.slope.hi, dt)};
}

// ---- 2 ----
Outcome tanh_sector() {
  const SectorBound s = local_sector(Activation::tanh(), -0.1, 0.1, 0.0);
  const double ref = std::tanh(0.1) / 0.1;
  const bool ok = std::abs(s.alpha - ref) <= 1e-9 && s.beta == 1.0 && std::abs(ref - 0.996680) < 5e-7;
  return {ok, fmt("alpha %.12f (tanh(0.1)/0.1 = %.12f, |diff| %.1e <= 1e-9), beta %.1f", s.alpha, ref,
                  std::abs(s.alpha - ref), s.beta)};
}

// ---- 3 ----
Outcome saturation_sector_exact() {
  const PreparedModel pm = prepare(load_config(kConfigs + "pendulum_robust.json"));
  bool ok = true, active = false;
  std::ostringstream os;
  for (double d : pm.cfg.sweep) {
    const Instance in = build_instance(pm, d, true);
    const double ubar = in.bounds.u_bar(0);
    const double expect_alpha = std::min(1.0, 0.7 / ubar);
    const IqcBlock* sat = nullptr;
    for (const auto& b : in.blocks)
      if (b.label == "saturation_sector") sat = &b;
    if (!sat) return {false, "no saturation block in the pendulum instance"};
    // static sector D1 = [beta; -alpha]
    const double alpha = -sat->filter.D1(1, 0), beta = sat->filter.D1(0, 0);
    ok = ok && alpha == expect_alpha && beta == 1.0;
    if (ubar > 0.7) {
      active = true;
      ok = ok && alpha == 0.7 / ubar;
    }
    os << fmt(" dv=%.2f:ubar=%.4f,alpha=%.6f", d, ubar, alpha);
  }
  ok = ok && active;
  return {ok, "alpha == 0.7/ubar exactly, beta == 1 on the grid;" + os.str()};
}

// ---- 4 ----
Outcome scalar_oracle() {
  std::mt19937_64 rng(2024);
  auto be = make_backend("clarabel");
  int disagree = 0, feasible = 0, trouble = 0;
  std::ostringstream os;
  for (int i = 0; i < 50; ++i) {
    const oracle::ScalarInstance s = oracle::random_instance(rng);
    const RoaCertificate c = oracle::sdp_solve(s, *be);
    const bool grid = oracle::grid_feasible(s, 1e-6);
    if (c.status == SolveStatus::NumericalTrouble) ++trouble;
    const bool sdp = c.status == SolveStatus::Optimal;
    feasible += grid;
    if (sdp != grid || c.status == SolveStatus::NumericalTrouble) {
      ++disagree;
      os << fmt(" #%d(a=%.3f b=%.3f w1=%.3f w2=%.3f d=%.3f sdp=%s grid=%d)", i, s.a, s.b, s.w1, s.w2, s.delta,
                to_string(c.status).c_str(), grid);
    }
  }
  return {disagree == 0, fmt("50 instances, %d grid-feasible, %d disagreements, %d numerical", feasible, disagree,
                             trouble) + os.str()};
}

// ---- 5 ----
Outcome closed_form() {
  LmiProblem prob;
  prob.layout.n_zeta = prob.layout.n_x = 1;
  prob.layout.lambda_offset = prob.layout.num_vars = 1;
  LmiConstraint dec{"decrease", AffineMatrix(1), true, 1.0};
  dec.F.constant(0, 0) = -1.0;
  dec.F.add(0, MatrixXd::Constant(1, 1, 0.75));
  prob.add_constraint(dec);
  LmiConstraint lb{"P_ge_1", AffineMatrix(1), false, 0.0};
  lb.F.constant(0, 0) = -1.0;
  lb.F.add(0, MatrixXd::Ones(1, 1));
  prob.add_constraint(lb);
  prob.objective = VectorXd::Ones(1);
  bool ok = true;
  std::ostringstream os;
  for (const char* name : {"clarabel", "scs"}) {
    auto be = make_backend(name);
    const RoaCertificate c = solve(prob, *be);
    ok = ok && c.status == SolveStatus::Optimal && std::abs(c.objective - 4.0 / 3.0) <= 1e-6;
    os << fmt(" %s=%.9f", name, c.objective);
  }
  return {ok, "min P s.t. 0.25P - P <= -1, P >= 1; expect 4/3 +- 1e-6:" + os.str()};
}

// ---- 6 ----
Outcome nominal_end_to_end() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream os;
  for (const char* f : {"double_integrator.json", "pendulum_linearized.json"}) {
    ScenarioConfig cfg = load_config(kConfigs + f);
    cfg.validate = true;
    cfg.validation.samples = 1000;
    cfg.validation.steps = 5000;
    cfg.validation.conv_tol = 1e-4;
    cfg.validation.interior_fraction = 0.0;
    cfg.validation.radius_scale = 1.0;
    cfg.lyapunov_samples = 10000;
    const RunResult r = certify(prepare(cfg), false);
    const bool opt = r.cert.status == SolveStatus::Optimal && r.cert.verification.pass;
    const double frac = r.validation ? r.validation->fraction : 0.0;
    const double margin = r.lyapunov ? r.lyapunov->worst_margin : 1.0;
    ok = ok && opt && r.validation && frac == 1.0 && r.lyapunov && r.lyapunov->samples == 10000 && margin <= 0.0;
    os << fmt(" %s: %s trace=%.4g fraction=%.3f lyap_margin=%.3e;", cfg.name.c_str(), to_string(r.cert.status).c_str(),
              r.cert.objective, frac, margin);
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 60.0;
  return {ok, os.str() + fmt(" total %.1f s < 60", dt)};
}

// ---- 7 ----
Outcome robust_pendulum() {
  const auto t0 = Clock::now();
  ScenarioConfig cfg = load_config(kConfigs + "pendulum_robust.json");
  cfg.validate = false;
  const PreparedModel pm = prepare(cfg);
  const RunResult r = certify(pm, true);
  if (!r.cert.certified()) return {false, "certify-robust: " + to_string(r.cert.status)};
  bool has_tms_sector = false, has_tms_obo = false, has_sat = false;
  for (const auto& b : pm.cfg.blocks) {
    has_tms_sector |= b.type == BlockType::NonlinearitySector && b.nonlinearity == "theta_minus_sin";
    has_tms_obo |= b.type == BlockType::NonlinearityOffByOne && b.nonlinearity == "theta_minus_sin";
    has_sat |= b.type == BlockType::SaturationSector;
  }
  const Scenario scn = build_scenario(pm, r.instance);
  ValidationOptions o = pm.cfg.validation;
  o.samples = 1000;
  o.steps = 5000;
  o.conv_tol = 1e-4;
  o.realizations = 101;  // index 0 is the true plant, 1..100 sampled
  o.pooled = false;
  o.interior_fraction = 0.5;
  const ValidationReport v = validate_roa(r.cert, scn, o, &r.instance.blocks, &r.instance.bounds);
  const double dt = seconds_since(t0);
  const bool ok = has_tms_sector && has_tms_obo && has_sat && r.instance.delta_v > 0.0 && v.trajectories == 101000 &&
                  v.converged == v.trajectories && v.pass() && dt < 600.0;
  return {ok, fmt("delta_v=%.3g trace=%.4g; %ld/%ld trajectories (1000 x0 x 101 realizations) converged, %ld invariant; "
                  "worst dissipation %.2e; %.1f s < 600",
                  r.instance.delta_v, r.cert.objective, v.converged, v.trajectories, v.invariant, v.worst_dissipation, dt)};
}

// ---- 8 ----
Outcome off_by_one_benefit() {
  const SweepResult sec = sweep(prepare(load_config(kConfigs + "vehicle_sector.json")), true);
  const SweepResult obo = sweep(prepare(load_config(kConfigs + "vehicle_off_by_one.json")), true);
  if (sec.rows.size() != obo.rows.size()) return {false, "grids differ"};
  bool order = true;
  int shared = 0, trouble = 0;
  std::ostringstream os;
  for (std::size_t i = 0; i < sec.rows.size(); ++i) {
    const auto &a = sec.rows[i], &b = obo.rows[i];
    trouble += (a.status == SolveStatus::NumericalTrouble) + (b.status == SolveStatus::NumericalTrouble);
    if (a.feasible && b.feasible) {
      ++shared;
      order = order && b.trace <= a.trace * (1.0 + 1e-6);
      os << fmt(" %.1f:%.4g/%.4g", a.delta_v, a.trace, b.trace);
    }
  }
  const bool ok = order && shared > 0 && trouble == 0 && sec.any_feasible() &&
                  obo.largest_feasible > sec.largest_feasible;
  return {ok, fmt("largest feasible delta_v sector %.2f vs off-by-one %.2f; %d shared points, trace sector/obo:",
                  sec.largest_feasible, obo.largest_feasible, shared) +
                  os.str() + fmt("; %d numerical", trouble)};
}

// ---- 9 ----
Outcome hard_iqc_suite() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int K = 1000;
  auto signal = [&]() {
    const double amp = 0.1 + 2.0 * U(rng);
    std::vector<double> p(K);
    for (auto& v : p) v = amp * N(rng);
    return p;
  };
  auto as_vec = [](const std::vector<double>& s) {
    std::vector<VectorXd> out;
    for (double v : s) out.push_back(VectorXd::Constant(1, v));
    return out;
  };
  // min over 3 admissible multipliers of the worst partial sum
  auto worst = [&](const IqcBlock& blk, const std::vector<double>& p, const std::vector<double>& q) {
    double w = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 3; ++t) w = std::min(w, check_iqc_accumulation(blk, as_vec(p), as_vec(q), blk.multipliers.sample(rng)));
    return w;
  };
  auto apply_static = [](const std::function<double(double)>& g, const std::vector<double>& p) {
    std::vector<double> q;
    for (double v : p) q.push_back(g(v));
    return q;
  };
  auto apply_op = [](const ScalarOperator& op0, const std::vector<double>& p) {
    auto op = op0.clone();
    std::vector<double> q;
    for (double v : p) {
      q.push_back(op->output(v));
      op->advance(v);
    }
    return q;
  };

  const double al = 0.2, be = 1.0, m = 0.0, L = 0.2548, b = 0.1;
  const IqcBlock sector = static_sector_iqc(VectorXd::Constant(1, al), VectorXd::Constant(1, be));
  const IqcBlock obo = off_by_one_iqc(VectorXd::Constant(1, m), VectorXd::Constant(1, L));
  const IqcBlock nb0 = norm_bounded_lti_iqc(b, 1, 1, 0);
  const IqcBlock nb1 = norm_bounded_lti_iqc(b, 1, 1, 1, 0.0);

  double w_sec = 1e300, w_obo = 1e300, w_nb0 = 1e300, w_nb1 = 1e300;
  for (int i = 0; i < 100; ++i) {
    // sector: time-varying gain in [alpha, beta]
    const auto p = signal();
    std::vector<double> q(K);
    for (int k = 0; k < K; ++k) q[k] = (al + (be - al) * U(rng)) * p[k];
    w_sec = std::min(w_sec, worst(sector, p, q));
    // off-by-one: time-invariant slope-restricted map
    const auto g = random_slope_map(m, L, m, L, 5.0, rng);
    const auto p2 = signal();
    w_obo = std::min(w_obo, worst(obo, p2, apply_static(g, p2)));
    // norm-bounded LTI, static and first-order basis
    const auto op = random_lti_operator(b, rng);
    const auto p3 = signal();
    const auto q3 = apply_op(*op, p3);
    w_nb0 = std::min(w_nb0, worst(nb0, p3, q3));
    w_nb1 = std::min(w_nb1, worst(nb1, p3, q3));
  }
  const bool admissible_ok = w_sec >= -1e-9 && w_obo >= -1e-9 && w_nb0 >= -1e-9 && w_nb1 >= -1e-9;

  // inadmissible probes
  const auto p = signal();
  const FirstOrderOperator gain2b(0.0, 0.0, 2.0 * b);
  const double v_nb0 = worst(nb0, p, apply_op(gain2b, p));
  const double v_nb1 = worst(nb1, p, apply_op(gain2b, p));
  const double v_obo = worst(obo, p, apply_static([&](double t) { return 2.0 * L * t; }, p));
  const double v_sec = worst(sector, p, apply_static([&](double t) { return 2.0 * be * t; }, p));
  const bool probes_ok = v_nb0 < 0.0 && v_nb1 < 0.0 && v_obo < 0.0 && v_sec < 0.0;
  return {admissible_ok && probes_ok,
          fmt("admissible min partial sums sector %.2e, off-by-one %.2e, norm-bounded nu=0 %.2e, nu=1 %.2e (>= -1e-9); "
              "inadmissible gain 2b: %.2e / %.2e, slope 2L: %.2e, sector 2beta: %.2e (< 0)",
              w_sec, w_obo, w_nb0, w_nb1, v_nb0, v_nb1, v_obo, v_sec)};
}

// ---- 10 ----
Outcome ibp_soundness() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  const Activation acts[] = {Activation::tanh(), Activation::sigmoid(), Activation::relu(), Activation::leaky_relu(0.1)};
  auto randn = [&](int r, int c) {
    MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) M(i, j) = N(rng);
    return M;
  };
  long violations = 0, samples = 0;
  int max_layers = 0, max_width = 0;
  for (int net = 0; net < 100; ++net) {
    const int nx = 1 + static_cast<int>(U(rng) * 4), nl = 1 + static_cast<int>(U(rng) * 3);
    std::vector<Layer> layers;
    int in = nx;
    for (int l = 0; l < nl; ++l) {
      const int w = 1 + static_cast<int>(U(rng) * 16);
      max_width = std::max(max_width, w);
      layers.push_back({randn(w, in) / std::sqrt(in), randn(w, 1), acts[static_cast<int>(U(rng) * 4)]});
      in = w;
    }
    max_layers = std::max(max_layers, nl);
    const NeuralNetwork nn(layers, randn(2, in), randn(2, 1));
    const Equilibrium eq = propagate_equilibrium(nn, randn(nx, 1));
    const double delta = 0.05 + 2.0 * U(rng);
    const ActivationBounds bd = propagate_bounds(nn, eq, delta);
    const int n1 = nn.layer_size(0);
    for (int s = 0; s < 100000; ++s) {
      VectorXd v = eq.v.head(n1);
      for (int i = 0; i < n1; ++i) v(i) += delta * (2.0 * U(rng) - 1.0);
      bool bad = false;
      for (int l = 0; l < nl; ++l) {
        const int o = nn.layer_offset(l);
        if (l > 0) {
          const Layer& L = nn.layers()[l];
          VectorXd wprev(nn.layer_size(l - 1));
          for (int i = 0; i < wprev.size(); ++i) wprev(i) = nn.layers()[l - 1].activation(v(i));
          v = L.W * wprev + L.b;
        }
        for (int i = 0; i < v.size(); ++i) {
          const double wi = nn.layers()[l].activation(v(i));
          bad |= v(i) < bd.v_lo(o + i) || v(i) > bd.v_hi(o + i) || wi < bd.w_lo(o + i) || wi > bd.w_hi(o + i);
        }
      }
      VectorXd w(v.size());
      for (int i = 0; i < v.size(); ++i) w(i) = nn.layers()[nl - 1].activation(v(i));
      const VectorXd u = nn.output_weight() * w + nn.output_bias();
      for (int k = 0; k < u.size(); ++k) bad |= u(k) < bd.u_lo(k) || u(k) > bd.u_hi(k);
      violations += bad;
      ++samples;
    }
  }
  return {violations == 0, fmt("100 networks (up to %d layers, width %d, mixed activations), %ld samples, %ld violations",
                               max_layers, max_width, samples, violations)};
}

}  // namespace

int main() {
  report(1, "theta - sin(theta) sector/slope on [-0.73, 0.73]", theta_minus_sin_bounds);
  report(2, "tanh local sector on [-0.1, 0.1]", tanh_sector);
  report(3, "saturation sector [0.7/ubar, 1] from IBP ubar", saturation_sector_exact);
  report(4, "scalar SDP vs grid oracle", scalar_oracle);
  report(5, "closed-form SDP", closed_form);
  report(6, "nominal end-to-end (double integrator, linearized pendulum)", nominal_end_to_end);
  report(7, "robust pendulum end-to-end", robust_pendulum);
  report(8, "off-by-one benefit on the vehicle", off_by_one_benefit);
  report(9, "hard-IQC accumulation suite", hard_iqc_suite);
  report(10, "IBP soundness Monte Carlo", ibp_soundness);
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
