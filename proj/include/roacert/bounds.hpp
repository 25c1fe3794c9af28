#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "roacert/activation.hpp"
#include "roacert/linalg.hpp"
#include "roacert/network.hpp"

namespace roacert {

struct SectorBound {
  double alpha = 0.0;
  double beta = 1.0;
};

struct SlopeBound {
  double lo = 0.0;
  double hi = 1.0;
};

/// How the offset-sector upper bound beta is chosen for activations.
enum class SectorUpper {
  Global,     // the activation's global slope bound
  Tightened,  // max derivative over the interval (mean-value bound)
};

struct BoundOptions {
  SectorUpper beta_mode = SectorUpper::Tightened;
  double outward = 1e-9;  // relative widening of propagated intervals
};

/// Per-neuron intervals and the quadratic-constraint data derived from them.
struct ActivationBounds {
  VectorXd v_lo, v_hi;  // activation inputs
  VectorXd w_lo, w_hi;  // activation outputs
  VectorXd alpha, beta;
  VectorXd slope_lo, slope_hi;
  VectorXd u_lo, u_hi;  // control output interval
  VectorXd u_bar;       // max(|u_lo|, |u_hi|)
  double delta_v = 0.0;

  int size() const { return static_cast<int>(v_lo.size()); }
};

namespace detail {

inline void require_interval(double lo, double hi, const char* where) {
  if (!(lo <= hi)) throw InvalidIntervalError(std::string(where) + ": lower bound exceeds upper bound");
}

inline double widen_down(double x, double rel) { return x - rel * std::abs(x); }
inline double widen_up(double x, double rel) { return x + rel * std::abs(x); }

}  // namespace detail

/// Offset local sector of `act` about (center, act(center)) for inputs in
/// [lo, hi]. The lower bound is the smaller endpoint chord slope (for tanh-like
/// and piecewise-linear activations the infimum of chord slopes is attained at
/// an endpoint or approached at the center); the upper bound is either the
/// global bound or the largest derivative on the interval.
inline SectorBound local_sector(const Activation& act, double lo, double hi, double center,
                                SectorUpper mode = SectorUpper::Tightened) {
  detail::require_interval(lo, hi, "local_sector");
  if (center < lo || center > hi) throw InvalidIntervalError("local_sector: center lies outside the interval");
  const double fc = act(center);
  double alpha = std::numeric_limits<double>::infinity();
  if (lo < center) {
    alpha = std::min(alpha, (fc - act(lo)) / (center - lo));
    alpha = std::min(alpha, act.derivative_left(center));
  }
  if (hi > center) {
    alpha = std::min(alpha, (act(hi) - fc) / (hi - center));
    alpha = std::min(alpha, act.derivative_right(center));
  }
  if (lo == hi) alpha = std::min(act.derivative_left(center), act.derivative_right(center));
  alpha = std::max(alpha, act.global_slope_floor());

  double beta = act.global_slope_bound();
  if (mode == SectorUpper::Tightened) {
    beta = std::min(beta, act.max_slope(lo, hi));
    if (lo == hi) beta = std::max(act.derivative_left(center), act.derivative_right(center));
  }
  beta = std::max(beta, alpha);
  return {alpha, beta};
}

/// Local slope bound [m, L] on [lo, hi]: m from the endpoint derivatives, L the
/// global slope bound.
inline SlopeBound local_slope(const Activation& act, double lo, double hi) {
  detail::require_interval(lo, hi, "local_slope");
  SlopeBound s{act.min_slope(lo, hi), act.global_slope_bound()};
  s.hi = std::max(s.hi, s.lo);
  return s;
}

/// Interval bound propagation from an explicit first-layer box
/// [first_lo, first_hi] (which must contain v*^1).
inline ActivationBounds propagate_bounds(const NeuralNetwork& nn, const Equilibrium& eq, const VectorXd& first_lo,
                                         const VectorXd& first_hi, const BoundOptions& opts = {}) {
  const int n1 = nn.layer_size(0);
  if (first_lo.size() != n1 || first_hi.size() != n1) throw DimensionError("propagate_bounds: first-layer box size");
  if (eq.v.size() != nn.num_neurons()) throw DimensionError("propagate_bounds: equilibrium does not match network");
  const int nphi = nn.num_neurons();
  ActivationBounds b;
  b.v_lo.resize(nphi);
  b.v_hi.resize(nphi);
  b.w_lo.resize(nphi);
  b.w_hi.resize(nphi);
  b.alpha.resize(nphi);
  b.beta.resize(nphi);
  b.slope_lo.resize(nphi);
  b.slope_hi.resize(nphi);

  VectorXd v_lo = first_lo, v_hi = first_hi;
  VectorXd w_lo, w_hi;
  for (int i = 0; i < nn.num_layers(); ++i) {
    const auto& layer = nn.layers()[i];
    const int off = nn.layer_offset(i), n = nn.layer_size(i);
    if (i > 0) {
      const VectorXd c = 0.5 * (w_hi + w_lo);
      const VectorXd r = 0.5 * (w_hi - w_lo);
      const VectorXd mid = layer.W * c + layer.b;
      const VectorXd rad = layer.W.cwiseAbs() * r;
      v_lo = mid - rad;
      v_hi = mid + rad;
      for (int j = 0; j < n; ++j) {
        v_lo(j) = detail::widen_down(v_lo(j), opts.outward);
        v_hi(j) = detail::widen_up(v_hi(j), opts.outward);
      }
    }
    w_lo.resize(n);
    w_hi.resize(n);
    for (int j = 0; j < n; ++j) {
      detail::require_interval(v_lo(j), v_hi(j), "propagate_bounds");
      // floating point can leave v* a hair outside a derived interval
      const double vs = eq.v(off + j);
      v_lo(j) = std::min(v_lo(j), vs);
      v_hi(j) = std::max(v_hi(j), vs);
      w_lo(j) = detail::widen_down(layer.activation(v_lo(j)), i > 0 ? opts.outward : 0.0);
      w_hi(j) = detail::widen_up(layer.activation(v_hi(j)), i > 0 ? opts.outward : 0.0);
      const SectorBound s = local_sector(layer.activation, v_lo(j), v_hi(j), vs, opts.beta_mode);
      const SlopeBound sl = local_slope(layer.activation, v_lo(j), v_hi(j));
      b.alpha(off + j) = s.alpha;
      b.beta(off + j) = s.beta;
      b.slope_lo(off + j) = sl.lo;
      b.slope_hi(off + j) = sl.hi;
    }
    b.v_lo.segment(off, n) = v_lo;
    b.v_hi.segment(off, n) = v_hi;
    b.w_lo.segment(off, n) = w_lo;
    b.w_hi.segment(off, n) = w_hi;
  }
  const VectorXd c = 0.5 * (w_hi + w_lo);
  const VectorXd r = 0.5 * (w_hi - w_lo);
  const VectorXd mid = nn.output_weight() * c + nn.output_bias();
  const VectorXd rad = nn.output_weight().cwiseAbs() * r;
  b.u_lo = mid - rad;
  b.u_hi = mid + rad;
  for (Eigen::Index k = 0; k < b.u_lo.size(); ++k) {
    b.u_lo(k) = detail::widen_down(b.u_lo(k), opts.outward);
    b.u_hi(k) = detail::widen_up(b.u_hi(k), opts.outward);
  }
  b.u_bar = b.u_lo.cwiseAbs().cwiseMax(b.u_hi.cwiseAbs());
  b.delta_v = (first_hi - eq.v.head(n1)).cwiseMin(eq.v.head(n1) - first_lo).minCoeff();
  return b;
}

/// Symmetric first-layer box v*^1 +- delta_v.
inline ActivationBounds propagate_bounds(const NeuralNetwork& nn, const Equilibrium& eq, double delta_v,
                                         const BoundOptions& opts = {}) {
  if (!(delta_v > 0.0)) throw ParameterError("propagate_bounds: delta_v must be positive");
  const int n1 = nn.layer_size(0);
  const VectorXd vs = eq.v.head(n1);
  ActivationBounds b = propagate_bounds(nn, eq, vs.array() - delta_v, vs.array() + delta_v, opts);
  b.delta_v = delta_v;
  return b;
}

/// Generic scalar map with an optional derivative.
struct ScalarNonlinearity {
  std::function<double(double)> f;
  std::function<double(double)> df;  // may be empty
  std::string label;
};

inline ScalarNonlinearity theta_minus_sin() {
  return {[](double t) { return t - std::sin(t); }, [](double t) { return 1.0 - std::cos(t); }, "theta_minus_sin"};
}

inline ScalarNonlinearity saturation(double u_max) {
  return {[u_max](double u) { return std::copysign(std::min(std::abs(u), u_max), u); },
          [u_max](double u) { return std::abs(u) < u_max ? 1.0 : 0.0; }, "saturation"};
}

inline ScalarNonlinearity identity_map() {
  return {[](double x) { return x; }, [](double) { return 1.0; }, "identity"};
}

struct ScalarBounds {
  SectorBound sector;
  SlopeBound slope;
};

/// Numerical sector and slope bounds of a scalar map on [lo, hi] about
/// `center`, from a uniform grid of `grid_n` points. Results are widened
/// outward by the relative factor `safety`.
inline ScalarBounds bound_scalar_nonlinearity(const ScalarNonlinearity& nl, double lo, double hi, double center,
                                              int grid_n = 10001, double safety = 1e-9) {
  detail::require_interval(lo, hi, "bound_scalar_nonlinearity");
  if (center < lo || center > hi) throw InvalidIntervalError("bound_scalar_nonlinearity: center outside interval");
  if (grid_n < 2) throw ParameterError("bound_scalar_nonlinearity: grid_n must be at least 2");
  const double fc = nl.f(center);
  if (!std::isfinite(fc)) throw ParameterError(nl.label + ": non-finite value at center");

  double s_lo = std::numeric_limits<double>::infinity(), s_hi = -s_lo;
  double m_lo = s_lo, m_hi = s_hi;
  auto chord = [&](double t) {
    const double ft = nl.f(t);
    if (!std::isfinite(ft)) throw ParameterError(nl.label + ": non-finite value on the interval");
    if (t == center) return;
    const double q = (ft - fc) / (t - center);
    s_lo = std::min(s_lo, q);
    s_hi = std::max(s_hi, q);
  };

  const double h = (hi - lo) / (grid_n - 1);
  double prev_t = lo, prev_f = nl.f(lo);
  for (int k = 0; k < grid_n; ++k) {
    const double t = (k == grid_n - 1) ? hi : lo + k * h;
    chord(t);
    const double ft = nl.f(t);
    if (nl.df) {
      const double d = nl.df(t);
      m_lo = std::min(m_lo, d);
      m_hi = std::max(m_hi, d);
    } else if (k > 0 && t > prev_t) {
      const double d = (ft - prev_f) / (t - prev_t);
      m_lo = std::min(m_lo, d);
      m_hi = std::max(m_hi, d);
    }
    prev_t = t;
    prev_f = ft;
  }
  // Chord slopes tend to the derivative at the center.
  double dc;
  if (nl.df) {
    dc = nl.df(center);
  } else {
    const double eps = 1e-7 * std::max(1.0, hi - lo);
    const double a = std::max(lo, center - eps), b = std::min(hi, center + eps);
    dc = b > a ? (nl.f(b) - nl.f(a)) / (b - a) : 0.0;
  }
  if (hi > lo) {
    s_lo = std::min(s_lo, dc);
    s_hi = std::max(s_hi, dc);
  } else {
    s_lo = s_hi = dc;
    m_lo = m_hi = dc;
  }
  if (!std::isfinite(m_lo)) m_lo = m_hi = dc;

  ScalarBounds out;
  out.sector = {detail::widen_down(s_lo, safety), detail::widen_up(s_hi, safety)};
  out.slope = {detail::widen_down(m_lo, safety), detail::widen_up(m_hi, safety)};
  return out;
}

/// Closed-form local sector of sat(.) for inputs |u| <= u_bar.
inline SectorBound saturation_sector(double u_max, double u_bar) {
  if (!(u_max > 0.0) || !(u_bar > 0.0)) throw ParameterError("saturation_sector: limits must be positive");
  return {std::min(1.0, u_max / u_bar), 1.0};
}

}  // namespace roacert
