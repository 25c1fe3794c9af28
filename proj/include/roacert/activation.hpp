#pragma once

#include <cmath>
#include <string>

#include "roacert/errors.hpp"

namespace roacert {

enum class ActivationKind { Tanh, Sigmoid, Relu, LeakyRelu };

/// Scalar activation applied element-wise inside a layer. Every kind is
/// monotone nondecreasing and globally sector-bounded in [0, 1] about its
/// value at zero ([a, 1] for leaky ReLU).
class Activation {
 public:
  Activation() = default;
  explicit Activation(ActivationKind kind, double leaky_slope = 0.01) : kind_(kind), slope_(leaky_slope) {
    if (kind_ == ActivationKind::LeakyRelu && !(slope_ > 0.0 && slope_ < 1.0)) {
      throw ParameterError("leaky_relu slope must lie in (0, 1)");
    }
  }

  static Activation tanh() { return Activation(ActivationKind::Tanh); }
  static Activation sigmoid() { return Activation(ActivationKind::Sigmoid); }
  static Activation relu() { return Activation(ActivationKind::Relu); }
  static Activation leaky_relu(double a) { return Activation(ActivationKind::LeakyRelu, a); }

  static Activation parse(const std::string& name, double leaky_slope = 0.01) {
    if (name == "tanh") return tanh();
    if (name == "sigmoid") return sigmoid();
    if (name == "relu") return relu();
    if (name == "leaky_relu") return leaky_relu(leaky_slope);
    throw ConfigError("unknown activation '" + name + "'");
  }

  ActivationKind kind() const { return kind_; }
  double leaky_slope() const { return slope_; }

  std::string name() const {
    switch (kind_) {
      case ActivationKind::Tanh: return "tanh";
      case ActivationKind::Sigmoid: return "sigmoid";
      case ActivationKind::Relu: return "relu";
      case ActivationKind::LeakyRelu: return "leaky_relu";
    }
    return "?";
  }

  double operator()(double v) const {
    switch (kind_) {
      case ActivationKind::Tanh: return std::tanh(v);
      case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
      case ActivationKind::Relu: return v > 0.0 ? v : 0.0;
      case ActivationKind::LeakyRelu: return v > 0.0 ? v : slope_ * v;
    }
    return 0.0;
  }

  // One-sided derivatives; they differ only at the ReLU kink.
  double derivative_right(double v) const {
    switch (kind_) {
      case ActivationKind::Tanh: {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      }
      case ActivationKind::Sigmoid: {
        const double s = (*this)(v);
        return s * (1.0 - s);
      }
      case ActivationKind::Relu: return v >= 0.0 ? 1.0 : 0.0;
      case ActivationKind::LeakyRelu: return v >= 0.0 ? 1.0 : slope_;
    }
    return 0.0;
  }

  double derivative_left(double v) const {
    switch (kind_) {
      case ActivationKind::Relu: return v > 0.0 ? 1.0 : 0.0;
      case ActivationKind::LeakyRelu: return v > 0.0 ? 1.0 : slope_;
      default: return derivative_right(v);
    }
  }

  double derivative(double v) const { return derivative_right(v); }

  /// Largest derivative over [lo, hi].
  double max_slope(double lo, double hi) const {
    switch (kind_) {
      case ActivationKind::Tanh:
      case ActivationKind::Sigmoid: {
        // Bell-shaped derivative peaking at 0.
        const double closest = (lo <= 0.0 && hi >= 0.0) ? 0.0 : (hi < 0.0 ? hi : lo);
        return derivative(closest);
      }
      case ActivationKind::Relu: return hi > 0.0 ? 1.0 : 0.0;
      case ActivationKind::LeakyRelu: return hi > 0.0 ? 1.0 : slope_;
    }
    return 1.0;
  }

  /// Smallest derivative over [lo, hi].
  double min_slope(double lo, double hi) const {
    switch (kind_) {
      case ActivationKind::Tanh:
      case ActivationKind::Sigmoid: return std::min(derivative(lo), derivative(hi));
      case ActivationKind::Relu: return lo < 0.0 ? 0.0 : 1.0;
      case ActivationKind::LeakyRelu: return lo < 0.0 ? slope_ : 1.0;
    }
    return 0.0;
  }

  /// Global slope (and offset-sector) upper bound.
  double global_slope_bound() const { return kind_ == ActivationKind::Sigmoid ? 0.25 : 1.0; }

  /// Global slope (and offset-sector) lower bound.
  double global_slope_floor() const { return kind_ == ActivationKind::LeakyRelu ? slope_ : 0.0; }

  bool operator==(const Activation& o) const {
    return kind_ == o.kind_ && (kind_ != ActivationKind::LeakyRelu || slope_ == o.slope_);
  }

 private:
  ActivationKind kind_ = ActivationKind::Tanh;
  double slope_ = 0.01;
};

}  // namespace roacert
