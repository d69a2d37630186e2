/**
 * @file field.hpp
 * @brief Scalar fields on R^n given as evaluation handles, plus the
 *        regression families used by the harness.
 */
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "kolmo/error.hpp"
#include "kolmo/linalg.hpp"

namespace kolmo {

/// Axis-aligned box [lo, hi].
struct Box {
  Vector lo;
  Vector hi;

  [[nodiscard]] static Box cube(std::size_t n, double half_width = 5.0) {
    const auto m = static_cast<Eigen::Index>(n);
    return {Vector::Constant(m, -half_width), Vector::Constant(m, half_width)};
  }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(lo.size()); }

  [[nodiscard]] bool contains(const Vector& x) const {
    if (x.size() != lo.size()) {
      return false;
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!(x(i) >= lo(i) && x(i) <= hi(i))) {
        return false;
      }
    }
    return true;
  }
};

/// f(x) = amplitude * cos(<w, x> + phase). Kept alongside the handle so the
/// Gaussian closed form of P_t f is available when F = 0.
struct TrigSpec {
  double amplitude = 1.0;
  Vector w;
  double phase = 0.0;
};

struct ScalarField {
  std::function<double(const Vector&)> eval;
  Box box;
  std::string label;
  /// Optional gradient, enables pathwise derivative estimators.
  std::function<Vector(const Vector&)> grad;
  /// Optional known bound on sup |f|.
  std::optional<double> sup_bound;
  /// Set for trigonometric fields.
  std::optional<TrigSpec> trig;

  [[nodiscard]] double operator()(const Vector& x) const { return eval(x); }

  /// Evaluation guarded by the domain box.
  [[nodiscard]] double checked(const Vector& x) const {
    if (!box.contains(x)) {
      throw OutOfDomain("field '" + label + "' evaluated outside its box");
    }
    return eval(x);
  }

  /// c * f, with every attached closed form rescaled.
  [[nodiscard]] ScalarField scaled(double c) const {
    ScalarField out = *this;
    out.eval = [f = eval, c](const Vector& x) { return c * f(x); };
    if (grad) {
      out.grad = [g = grad, c](const Vector& x) -> Vector { return c * g(x); };
    }
    if (sup_bound) {
      out.sup_bound = std::abs(c) * *sup_bound;
    }
    if (trig) {
      out.trig->amplitude *= c;
    }
    out.label = std::to_string(c) + "*" + label;
    return out;
  }
};

/// Time-dependent source H(s, x).
struct TimeField {
  std::function<double(double, const Vector&)> eval;
  Box box;
  std::string label;
  std::optional<double> sup_bound;
  /// Set when H(s, .) does not depend on s and is trigonometric.
  std::optional<TrigSpec> trig;

  [[nodiscard]] ScalarField slice(double s) const {
    ScalarField f;
    f.eval = [h = eval, s](const Vector& x) { return h(s, x); };
    f.box = box;
    f.label = label + "@" + std::to_string(s);
    f.sup_bound = sup_bound;
    f.trig = trig;
    return f;
  }
};

namespace fields {

[[nodiscard]] inline ScalarField constant(std::size_t n, double c) {
  ScalarField f;
  f.eval = [c](const Vector&) { return c; };
  f.grad = [n](const Vector&) -> Vector { return Vector::Zero(static_cast<Eigen::Index>(n)); };
  f.box = Box::cube(n);
  f.label = "const(" + std::to_string(c) + ")";
  f.sup_bound = std::abs(c);
  f.trig = TrigSpec{c, Vector::Zero(static_cast<Eigen::Index>(n)), 0.0};
  return f;
}

[[nodiscard]] inline ScalarField trig(const Vector& w, double amplitude = 1.0, double phase = 0.0) {
  ScalarField f;
  f.eval = [w, amplitude, phase](const Vector& x) { return amplitude * std::cos(w.dot(x) + phase); };
  f.grad = [w, amplitude, phase](const Vector& x) -> Vector {
    return -amplitude * std::sin(w.dot(x) + phase) * w;
  };
  f.box = Box::cube(static_cast<std::size_t>(w.size()));
  f.label = "trig";
  f.sup_bound = std::abs(amplitude);
  f.trig = TrigSpec{amplitude, w, phase};
  return f;
}

/// min(|x_i|, 1)^theta: exactly theta-Holder across x_i = 0, bounded.
[[nodiscard]] inline ScalarField abs_power(std::size_t n, std::size_t coord, double theta) {
  ScalarField f;
  f.eval = [coord, theta](const Vector& x) {
    return std::pow(std::min(std::abs(x(static_cast<Eigen::Index>(coord))), 1.0), theta);
  };
  f.box = Box::cube(n);
  f.label = "abs_power";
  f.sup_bound = 1.0;
  return f;
}

/// amplitude * tanh(<a, x> + b).
[[nodiscard]] inline ScalarField tanh_ridge(const Vector& a, double amplitude = 1.0, double b = 0.0) {
  ScalarField f;
  f.eval = [a, amplitude, b](const Vector& x) { return amplitude * std::tanh(a.dot(x) + b); };
  f.grad = [a, amplitude, b](const Vector& x) -> Vector {
    const double th = std::tanh(a.dot(x) + b);
    return amplitude * (1.0 - th * th) * a;
  };
  f.box = Box::cube(static_cast<std::size_t>(a.size()));
  f.label = "tanh_ridge";
  f.sup_bound = std::abs(amplitude);
  return f;
}

/// c + <b, x> + x^T M x / 2 (unbounded; used for annihilation checks).
[[nodiscard]] inline ScalarField quadratic(const Matrix& m, const Vector& b, double c) {
  ScalarField f;
  f.eval = [m, b, c](const Vector& x) { return c + b.dot(x) + 0.5 * x.dot(m * x); };
  f.grad = [m, b](const Vector& x) -> Vector { return b + symmetrize(m) * x; };
  f.box = Box::cube(static_cast<std::size_t>(b.size()));
  f.label = "quadratic";
  return f;
}

[[nodiscard]] inline TimeField constant_in_time(const ScalarField& f) {
  TimeField h;
  h.eval = [g = f.eval](double, const Vector& x) { return g(x); };
  h.box = f.box;
  h.label = f.label;
  h.sup_bound = f.sup_bound;
  h.trig = f.trig;
  return h;
}

}  // namespace fields

}  // namespace kolmo
