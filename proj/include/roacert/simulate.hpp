#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <numbers>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "roacert/bounds.hpp"
#include "roacert/errors.hpp"
#include "roacert/iqc.hpp"
#include "roacert/network.hpp"
#include "roacert/plant.hpp"
#include "roacert/scenarios.hpp"
#include "roacert/sdp.hpp"

namespace roacert {

/// Causal scalar operator q = Delta(p) on one uncertainty channel.
class ScalarOperator {
 public:
  virtual ~ScalarOperator() = default;
  /// Output at the current step for input p (internal state unchanged).
  virtual double output(double p) const = 0;
  /// Commit input p and move to the next step.
  virtual void advance(double /*p*/) {}
  virtual double state_norm() const { return 0.0; }
  virtual std::unique_ptr<ScalarOperator> clone() const = 0;
  virtual std::string describe() const = 0;
};

class StaticOperator final : public ScalarOperator {
 public:
  StaticOperator(std::function<double(double)> f, std::string label) : f_(std::move(f)), label_(std::move(label)) {}
  double output(double p) const override { return f_(p); }
  std::unique_ptr<ScalarOperator> clone() const override { return std::make_unique<StaticOperator>(*this); }
  std::string describe() const override { return label_; }

 private:
  std::function<double(double)> f_;
  std::string label_;
};

/// First-order LTI operator s+ = a s + p, y = c s + d p, zero initial state.
/// Covers pure gains (c = 0) and scaled unit delays (a = 0, d = 0).
class FirstOrderOperator final : public ScalarOperator {
 public:
  FirstOrderOperator(double a, double c, double d) : a_(a), c_(c), d_(d) {
    if (!(std::abs(a) < 1.0)) throw ParameterError("FirstOrderOperator: pole must lie inside the unit disk");
  }
  double output(double p) const override { return c_ * s_ + d_ * p; }
  void advance(double p) override { s_ = a_ * s_ + p; }
  double state_norm() const override { return std::abs(s_); }
  std::unique_ptr<ScalarOperator> clone() const override {
    auto o = std::make_unique<FirstOrderOperator>(a_, c_, d_);
    return o;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "lti(a=" << a_ << ",c=" << c_ << ",d=" << d_ << ")";
    return os.str();
  }
  /// The magnitude of H(e^{jw}) = d + c/(e^{jw} - a) is monotone in cos(w),
  /// so the peak is at z = 1 or z = -1.
  double hinf_norm() const { return std::max(std::abs(d_ + c_ / (1.0 - a_)), std::abs(d_ - c_ / (1.0 + a_))); }
  double a() const { return a_; }
  double c() const { return c_; }
  double d() const { return d_; }

 private:
  double a_, c_, d_;
  double s_ = 0.0;
};

using Realization = std::vector<std::shared_ptr<const ScalarOperator>>;

/// Piecewise-linear map g with g(0) = 0, every slope in [m, L], and
/// g(t)/t in [alpha, beta] for 0 < |t| <= range.
inline std::function<double(double)> random_slope_map(double m, double L, double alpha, double beta, double range,
                                                      std::mt19937_64& rng, int segments = 8) {
  const double lo = std::max(m, alpha), hi = std::min(L, beta);
  if (!(lo <= hi) || !(range > 0.0)) throw ParameterError("random_slope_map: empty admissible class");
  std::uniform_real_distribution<double> U(0.0, 1.0);
  struct Side {
    std::vector<double> t, s, g;  // breakpoints, slopes after each breakpoint, values at breakpoints
  };
  auto make_side = [&]() {
    Side sd;
    std::vector<double> cuts;
    for (int i = 0; i < segments - 1; ++i) cuts.push_back(range * U(rng));
    std::sort(cuts.begin(), cuts.end());
    sd.t.push_back(0.0);
    for (double c : cuts) sd.t.push_back(c);
    for (std::size_t i = 0; i < sd.t.size(); ++i) sd.s.push_back(m + (L - m) * U(rng));
    // Pull slopes toward lo until every average slope on [0, t] is in [alpha, beta].
    double c = 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < sd.t.size(); ++i) {
      const double t1 = (i + 1 < sd.t.size()) ? sd.t[i + 1] : range;
      acc += sd.s[i] * (t1 - sd.t[i]);
      for (double tt : {t1}) {
        if (tt <= 0.0) continue;
        const double avg = acc / tt;
        if (avg > beta) c = std::min(c, (beta - lo) / (avg - lo));
        if (avg < alpha) c = std::min(c, (lo - alpha) / (lo - avg));
      }
      // the average over [0, t] for t inside a segment lies between segment-end averages and the slope itself
      if (sd.s[i] > beta) c = std::min(c, (beta - lo) / (sd.s[i] - lo));
      if (sd.s[i] < alpha) c = std::min(c, (lo - alpha) / (lo - sd.s[i]));
    }
    c = std::clamp(c, 0.0, 1.0);
    for (auto& s : sd.s) s = lo + c * (s - lo);
    sd.g.push_back(0.0);
    for (std::size_t i = 1; i < sd.t.size(); ++i) sd.g.push_back(sd.g[i - 1] + sd.s[i - 1] * (sd.t[i] - sd.t[i - 1]));
    return sd;
  };
  const Side pos = make_side(), neg = make_side();
  auto eval = [](const Side& sd, double t) {
    const auto it = std::upper_bound(sd.t.begin(), sd.t.end(), t);
    const std::size_t i = static_cast<std::size_t>(std::distance(sd.t.begin(), it)) - 1;
    return sd.g[i] + sd.s[i] * (t - sd.t[i]);
  };
  return [pos, neg, eval](double t) { return t >= 0.0 ? eval(pos, t) : -eval(neg, -t); };
}

/// Admissible ||Delta||_inf <= b: gains +-b, a delay scaled by b, or a random
/// stable first-order filter scaled to a norm in [b/2, b].
inline std::shared_ptr<const ScalarOperator> random_lti_operator(double b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  const int kind = static_cast<int>(U(rng) * 6.0);
  switch (kind) {
    case 0: return std::make_shared<FirstOrderOperator>(0.0, 0.0, b);
    case 1: return std::make_shared<FirstOrderOperator>(0.0, 0.0, -b);
    case 2: return std::make_shared<FirstOrderOperator>(0.0, b, 0.0);
    default: {
      const double a = 1.9 * U(rng) - 0.95;
      double c = N(rng), d = N(rng);
      const FirstOrderOperator raw(a, c, d);
      const double scale = b * (0.5 + 0.5 * U(rng)) / raw.hinf_norm();
      return std::make_shared<FirstOrderOperator>(a, c * scale, d * scale);
    }
  }
}

using RealizationSampler = std::function<Realization(std::mt19937_64&)>;

enum class ScenarioKind { NominalLti, Pendulum, Vehicle, Lft, Custom };

struct Scenario {
  ScenarioKind kind = ScenarioKind::NominalLti;
  LtiPlant plant;  // nominal (x+ = A x + B u) or LFT form for uncertain kinds
  NeuralNetwork nn;
  VectorXd x_star;
  PendulumParams pendulum;
  VehicleParams vehicle;
  std::function<VectorXd(const VectorXd& x, const VectorXd& u)> step;  // Custom
  Realization nominal;          // true q-channel operators for LFT-form kinds
  RealizationSampler sampler;   // admissible uncertainty realizations (optional)

  bool uncertain() const { return kind == ScenarioKind::Pendulum || kind == ScenarioKind::Vehicle || kind == ScenarioKind::Lft; }
};

inline Scenario nominal_scenario(const LtiPlant& plant, const NeuralNetwork& nn, const VectorXd& x_star) {
  Scenario s;
  s.kind = ScenarioKind::NominalLti;
  s.plant = plant;
  s.nn = nn;
  s.x_star = x_star;
  return s;
}

inline Scenario pendulum_scenario(const PendulumParams& p, const NeuralNetwork& nn) {
  Scenario s;
  s.kind = ScenarioKind::Pendulum;
  s.pendulum = p;
  s.plant = pendulum_plant(p);
  s.nn = nn;
  s.x_star = VectorXd::Zero(2);
  s.nominal = {std::make_shared<StaticOperator>([](double t) { return t - std::sin(t); }, "theta_minus_sin"),
               std::make_shared<StaticOperator>([u = p.u_max](double v) { return sat(v, u); }, "saturation")};
  return s;
}

inline Scenario vehicle_scenario(const VehicleParams& p, const NeuralNetwork& nn) {
  Scenario s;
  s.kind = ScenarioKind::Vehicle;
  s.vehicle = p;
  s.plant = vehicle_plant(p);
  s.nn = nn;
  s.x_star = VectorXd::Zero(4);
  s.nominal = {std::make_shared<StaticOperator>([u = p.u_max](double v) { return sat(v, u); }, "saturation"),
               std::make_shared<FirstOrderOperator>(0.0, 0.0, 0.0)};
  return s;
}

/// Per-step signals handed to observers.
struct StepSignals {
  int k = 0;
  const VectorXd* x = nullptr;  // x(k)
  const VectorXd* x_next = nullptr;
  const VectorXd* u = nullptr;
  const VectorXd* v = nullptr;
  const VectorXd* w = nullptr;
  const VectorXd* p = nullptr;
  const VectorXd* q = nullptr;
};

struct Trajectory {
  std::vector<VectorXd> x, u, v, w, p, q;
  bool converged = false;
  bool diverged = false;
  bool early_exit = false;
  int steps = 0;
};

struct SimOptions {
  double conv_tol = 1e-4;
  /// Stop once |x - x*| and all operator states fall below this (0 disables).
  double early_exit_tol = 0.0;
  double divergence_bound = 1e8;
};

/// Layer recursion that also exposes v and w.
inline VectorXd nn_forward(const NeuralNetwork& nn, const VectorXd& x, VectorXd& v, VectorXd& w) {
  v.resize(nn.num_neurons());
  w.resize(nn.num_neurons());
  VectorXd in = nn.output_map() ? VectorXd((*nn.output_map()) * x) : x;
  for (int i = 0; i < nn.num_layers(); ++i) {
    const auto& l = nn.layers()[i];
    const int off = nn.layer_offset(i), n = nn.layer_size(i);
    VectorXd vi = l.W * in + l.b;
    VectorXd wi(n);
    for (int j = 0; j < n; ++j) wi(j) = l.activation(vi(j));
    v.segment(off, n) = vi;
    w.segment(off, n) = wi;
    in = std::move(wi);
  }
  return nn.output_weight() * in + nn.output_bias();
}

/// Runs K steps from x0, calling `observe` for every step. `realization`
/// overrides the scenario's nominal q operators for LFT-form kinds.
template <class Observer>
inline Trajectory simulate_stream(const Scenario& scn, const VectorXd& x0, int K, const Realization* realization,
                                  const SimOptions& opts, Observer&& observe) {
  if (K < 1) throw ParameterError("simulate: K must be at least 1");
  const int nx = scn.nn.input_dim();
  if (x0.size() != nx) throw DimensionError("simulate: x0 has wrong length");
  const VectorXd xs = scn.x_star.size() ? scn.x_star : VectorXd::Zero(nx);

  std::vector<std::unique_ptr<ScalarOperator>> ops;
  const bool lft = scn.uncertain();
  const LtiPlant& G = scn.plant;
  if (lft) {
    const Realization& r = realization ? *realization : scn.nominal;
    if (static_cast<int>(r.size()) != G.nq() || G.np() != G.nq())
      throw DimensionError("simulate: realization must provide one operator per q channel (np == nq)");
    for (const auto& o : r) ops.push_back(o->clone());
  }

  Trajectory tr;
  VectorXd x = x0, xn, u, v, w, p(G.np()), q(G.nq());
  for (int k = 0; k < K; ++k) {
    u = nn_forward(scn.nn, x, v, w);
    switch (scn.kind) {
      case ScenarioKind::NominalLti:
        xn = G.A * x + G.B2 * u;
        break;
      case ScenarioKind::Custom:
        xn = scn.step(x, u);
        break;
      default: {
        q.setZero();
        // channels are causally ordered through D1; nq + 1 sweeps resolve the loop
        for (int it = 0; it <= G.nq(); ++it) {
          p = G.C * x + G.D1 * q + G.D2 * u;
          for (int j = 0; j < G.nq(); ++j) q(j) = ops[j]->output(p(j));
        }
        p = G.C * x + G.D1 * q + G.D2 * u;
        for (int j = 0; j < G.nq(); ++j)
          if (std::abs(q(j) - ops[j]->output(p(j))) > 1e-12 * (1.0 + std::abs(q(j))))
            throw InterconnectionError("simulate: algebraic loop through D1 is not well posed");
        xn = G.A * x + G.B1 * q + G.B2 * u;
        for (int j = 0; j < G.nq(); ++j) ops[j]->advance(p(j));
      }
    }
    StepSignals sig{k, &x, &xn, &u, &v, &w, &p, &q};
    observe(sig);
    tr.steps = k + 1;
    if (!xn.allFinite() || xn.lpNorm<Eigen::Infinity>() > opts.divergence_bound) {
      tr.diverged = true;
      x = xn;
      break;
    }
    x = xn;
    if (opts.early_exit_tol > 0.0) {
      double s = (x - xs).lpNorm<Eigen::Infinity>();
      for (const auto& o : ops) s = std::max(s, o->state_norm());
      if (s < opts.early_exit_tol) {
        tr.early_exit = true;
        break;
      }
    }
  }
  tr.converged = !tr.diverged && x.allFinite() && (x - xs).norm() < opts.conv_tol;
  tr.x.push_back(x);  // final state; full recording is done by simulate()
  return tr;
}

/// Full trajectory with recorded signals.
inline Trajectory simulate(const Scenario& scn, const VectorXd& x0, int K, const Realization* realization = nullptr,
                           const SimOptions& opts = {}) {
  std::vector<VectorXd> xs{x0}, us, vs, ws, ps, qs;
  Trajectory tr = simulate_stream(scn, x0, K, realization, opts, [&](const StepSignals& s) {
    xs.push_back(*s.x_next);
    us.push_back(*s.u);
    vs.push_back(*s.v);
    ws.push_back(*s.w);
    ps.push_back(*s.p);
    qs.push_back(*s.q);
  });
  tr.x = std::move(xs);
  tr.u = std::move(us);
  tr.v = std::move(vs);
  tr.w = std::move(ws);
  tr.p = std::move(ps);
  tr.q = std::move(qs);
  return tr;
}

/// Minimum over N of sum_{k<=N} r(k)^T M(theta) r(k) for the block's filter
/// driven by the given signals.
inline double check_iqc_accumulation(const IqcBlock& block, const std::vector<VectorXd>& p,
                                     const std::vector<VectorXd>& q, const VectorXd& theta) {
  const MatrixXd M = block.multipliers.evaluate(theta);
  const auto r = block.filter.simulate(p, q);
  double acc = 0.0, mn = std::numeric_limits<double>::infinity();
  for (const auto& rk : r) {
    acc += rk.dot(M * rk);
    mn = std::min(mn, acc);
  }
  return r.empty() ? 0.0 : mn;
}

namespace detail {

/// Random unit vector in R^n.
inline VectorXd random_direction(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  VectorXd d(n);
  do {
    for (int i = 0; i < n; ++i) d(i) = N(rng);
  } while (d.norm() < 1e-12);
  return d / d.norm();
}

/// y with y^T P y = radius^2.
inline VectorXd ellipsoid_point(const MatrixXd& P, const VectorXd& dir, double radius) {
  const Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) throw ParameterError("ellipsoid: P is not positive definite");
  // P = L L^T, y = L^{-T} d has y^T P y = |d|^2
  return radius * llt.matrixU().solve(dir);
}

template <class F>
inline void parallel_for(int n, int threads, F&& f) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

/// Per-task generator: identical streams regardless of thread count.
inline std::mt19937_64 task_rng(std::uint64_t seed, std::uint64_t task) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(task), static_cast<std::uint32_t>(task >> 32)};
  return std::mt19937_64(seq);
}

inline double sector_term(const ActivationBounds& b, const VectorXd& lambda, const VectorXd& dv, const VectorXd& dw) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < dv.size(); ++i)
    s += 2.0 * lambda(i) * (dw(i) - b.alpha(i) * dv(i)) * (b.beta(i) * dv(i) - dw(i));
  return s;
}

}  // namespace detail

struct ValidationOptions {
  int samples = 1000;
  int steps = 5000;
  double conv_tol = 1e-4;
  std::uint64_t seed = 1;
  int threads = 0;           // 0 = hardware concurrency
  int realizations = 1;      // admissible Delta draws per x0 (uncertain scenarios)
  bool pooled = false;        // each x0 gets one draw from a shared pool of `realizations`
  double interior_fraction = 0.0;
  double radius_scale = 1.0;  // > 1 probes outside the certified set
  double invariance_tol = 1e-6;
  double early_exit_tol = 1e-10;
  double dissipation_slack = 1e-9;
  int max_failures = 10;
};

struct ValidationFailure {
  long task = 0;
  VectorXd x0;
  int realization = 0;
  std::string reason;
};

struct ValidationReport {
  long trajectories = 0;
  long converged = 0;
  long invariant = 0;
  long passed = 0;
  double fraction = 0.0;
  double worst_V = 0.0;             // max over trajectories and steps of V / V(0)-level 1
  double worst_dissipation = -std::numeric_limits<double>::infinity();
  std::vector<ValidationFailure> failures;
  double elapsed_s = 0.0;

  bool pass(double slack = 1e-9) const {
    return trajectories > 0 && passed == trajectories && !(worst_dissipation > slack);
  }
};

/// Samples x0 on (and optionally inside) E(P_x, x*), simulates, and checks
/// forward invariance of the Lyapunov level set and convergence. With
/// `blocks` the filter states are tracked and V is evaluated on zeta = [x; psi].
/// With `bounds` the per-step dissipation inequality is also audited.
inline ValidationReport validate_roa(const RoaCertificate& cert, const Scenario& scn, const ValidationOptions& opts,
                                     const std::vector<IqcBlock>* blocks = nullptr,
                                     const ActivationBounds* bounds = nullptr) {
  ValidationReport rep;
  if (opts.samples <= 0) return rep;
  const auto t0 = std::chrono::steady_clock::now();
  const int nx = static_cast<int>(cert.P_x.rows());
  const int nz = static_cast<int>(cert.P.rows());
  const VectorXd xs = scn.x_star.size() ? scn.x_star : VectorXd::Zero(nx);
  if (!blocks && nz != nx) throw DimensionError("validate_roa: extended certificate needs the block list");
  const int nreal = scn.uncertain() && scn.sampler ? std::max(1, opts.realizations) : 1;
  const long total = opts.pooled ? static_cast<long>(opts.samples) : static_cast<long>(opts.samples) * nreal;

  const Equilibrium eq0 = propagate_equilibrium(scn.nn, xs);
  std::mutex mu;
  std::atomic<long> conv{0}, inv{0}, ok{0};
  double worst_V = 0.0, worst_d = -std::numeric_limits<double>::infinity();

  detail::parallel_for(static_cast<int>(total), opts.threads, [&](int task) {
    const int si = opts.pooled ? task : task / nreal, ri = task % nreal;
    auto rng = detail::task_rng(opts.seed, static_cast<std::uint64_t>(si));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const VectorXd dir = detail::random_direction(nx, rng);
    double radius = opts.radius_scale;
    if (U(rng) < opts.interior_fraction) radius *= std::pow(U(rng), 1.0 / nx);
    const VectorXd x0 = xs + detail::ellipsoid_point(cert.P_x, dir, radius);

    Realization real;
    const Realization* rp = nullptr;
    if (scn.uncertain() && scn.sampler && ri > 0) {
      const auto key = static_cast<std::uint64_t>(opts.pooled ? ri : task);
      auto rr = detail::task_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL, key);
      real = scn.sampler(rr);
      rp = &real;
    }

    // filter states per block
    std::vector<VectorXd> psi;
    if (blocks)
      for (const auto& b : *blocks) psi.push_back(VectorXd::Zero(b.filter.n_psi()));
    auto zeta_of = [&](const VectorXd& x) {
      VectorXd z(nz);
      z.head(nx) = x - xs;
      int o = nx;
      for (const auto& ps : psi) {
        z.segment(o, ps.size()) = ps;
        o += static_cast<int>(ps.size());
      }
      return z;
    };
    double V0 = (x0 - xs).dot(cert.P_x * (x0 - xs));
    double vmax = V0, dmax = -std::numeric_limits<double>::infinity();
    SimOptions so;
    so.conv_tol = opts.conv_tol;
    so.early_exit_tol = opts.early_exit_tol;

    Trajectory tr = simulate_stream(scn, x0, opts.steps, rp, so, [&](const StepSignals& s) {
      const VectorXd z = zeta_of(*s.x);
      double irr = 0.0;
      if (blocks) {
        for (std::size_t b = 0; b < blocks->size(); ++b) {
          const IqcBlock& blk = (*blocks)[b];
          const auto& ch = blk.channel;
          VectorXd pb(ch.p.size()), qb(ch.q.size());
          for (std::size_t t = 0; t < ch.p.size(); ++t)
            pb(t) = ch.kind == ChannelKind::Plant ? (*s.p)(ch.p[t]) : (*s.v)(ch.p[t]);
          for (std::size_t t = 0; t < ch.q.size(); ++t)
            qb(t) = ch.kind == ChannelKind::Plant ? (*s.q)(ch.q[t]) : (*s.w)(ch.q[t]);
          const VectorXd r = blk.filter.C * psi[b] + blk.filter.D1 * pb + blk.filter.D2 * qb;
          if (bounds) irr += r.dot(blk.multipliers.evaluate(cert.multiplier_params[b]) * r);
          psi[b] = blk.filter.A * psi[b] + blk.filter.B1 * pb + blk.filter.B2 * qb;
        }
      }
      const VectorXd zn = zeta_of(*s.x_next);
      const double Vn = zn.dot(cert.P * zn);
      vmax = std::max(vmax, Vn);
      if (bounds) {
        const double S = detail::sector_term(*bounds, cert.lambda, *s.v - eq0.v, *s.w - eq0.w);
        const double dx = (*s.x - xs).squaredNorm();
        dmax = std::max(dmax, Vn - z.dot(cert.P * z) + S + irr + cert.epsilon * dx);
      }
    });
    const bool invariant = vmax <= std::max(V0, 1.0) * (1.0 + opts.invariance_tol) && !tr.diverged;
    conv += tr.converged;
    inv += invariant;
    ok += (tr.converged && invariant);
    std::lock_guard<std::mutex> lk(mu);
    worst_V = std::max(worst_V, vmax);
    worst_d = std::max(worst_d, dmax);
    if ((!tr.converged || !invariant) && opts.max_failures > 0) {
      std::string why = tr.diverged ? "diverged" : (!tr.converged ? "not converged" : "left level set");
      // keep the lowest task ids so the report does not depend on thread timing
      rep.failures.push_back({task, x0, ri, why});
      std::sort(rep.failures.begin(), rep.failures.end(), [](const auto& a, const auto& b) { return a.task < b.task; });
      if (static_cast<int>(rep.failures.size()) > opts.max_failures) rep.failures.pop_back();
    }
  });
  rep.trajectories = total;
  rep.converged = conv;
  rep.invariant = inv;
  rep.passed = ok;
  rep.fraction = static_cast<double>(ok) / static_cast<double>(total);
  rep.worst_V = worst_V;
  rep.worst_dissipation = worst_d;
  rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

struct LyapunovReport {
  int samples = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max of dV + S + eps |dx|^2
  double min_sector_term = std::numeric_limits<double>::infinity();
  VectorXd worst_x;
  int violations = 0;

  bool pass(double slack = 1e-9) const { return samples > 0 && worst_margin <= slack; }
};

/// For x sampled uniformly in E(P, x*), checks
/// V(x+) - V(x) + sum 2 lambda_i (dw - alpha dv)(beta dv - dw) <= -eps |x - x*|^2.
inline LyapunovReport check_lyapunov_decrease(const RoaCertificate& cert, const LtiPlant& plant,
                                              const NeuralNetwork& nn, const Equilibrium& eq,
                                              const ActivationBounds& bounds, int n_samples, std::uint64_t seed = 1,
                                              double slack = 1e-9) {
  LyapunovReport rep;
  if (!plant.is_nominal()) throw ParameterError("check_lyapunov_decrease: nominal plant required");
  const int nx = plant.nx();
  auto rng = detail::task_rng(seed, 0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  VectorXd v, w;
  for (int s = 0; s < n_samples; ++s) {
    const VectorXd dir = detail::random_direction(nx, rng);
    const double rad = (s == 0) ? 0.0 : std::pow(U(rng), 1.0 / nx);
    const VectorXd x = eq.x + detail::ellipsoid_point(cert.P, dir, rad);
    const VectorXd u = nn_forward(nn, x, v, w);
    const VectorXd xn = plant.A * x + plant.B2 * u;
    const VectorXd dx = x - eq.x, dxn = xn - eq.x;
    const double S = detail::sector_term(bounds, cert.lambda, v - eq.v, w - eq.w);
    const double m = dxn.dot(cert.P * dxn) - dx.dot(cert.P * dx) + S + cert.epsilon * dx.squaredNorm();
    rep.min_sector_term = std::min(rep.min_sector_term, S);
    if (m > rep.worst_margin) {
      rep.worst_margin = m;
      rep.worst_x = x;
    }
    rep.violations += m > slack;
    ++rep.samples;
  }
  return rep;
}

/// Boundary points of the slice of E(P_x, x*) through x* in coordinates (i, j).
inline std::vector<std::pair<double, double>> ellipse_slice(const MatrixXd& P_x, const VectorXd& x_star, int i, int j,
                                                            int n_points = 200) {
  const int n = static_cast<int>(P_x.rows());
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw ParameterError("ellipse_slice: invalid coordinate pair");
  MatrixXd S(2, 2);
  S << P_x(i, i), P_x(i, j), P_x(j, i), P_x(j, j);
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k <= n_points; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n_points;
    VectorXd d(2);
    d << std::cos(t), std::sin(t);
    const VectorXd y = detail::ellipsoid_point(S, d, 1.0);
    pts.emplace_back(x_star(i) + y(0), x_star(j) + y(1));
  }
  return pts;
}

}  // namespace roacert
