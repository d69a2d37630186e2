/**
 * @file drift.hpp
 * @brief Bounded nonlinear drift built from tanh ridge functions.
 *
 * Each term contributes c * tanh(<a, x> + b) to one degenerate coordinate.
 * All derivatives of tanh are bounded, so every partial derivative of the
 * field up to order three is bounded by construction.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "kolmo/error.hpp"
#include "kolmo/linalg.hpp"

namespace kolmo {

/// One ridge term c * tanh(<a, x> + b) acting on coordinate @c target (0-based).
struct DriftTerm {
  std::size_t target = 0;
  double amplitude = 0.0;
  Vector direction;
  double offset = 0.0;
};

class DriftField {
 public:
  DriftField() = default;
  DriftField(std::size_t dim, std::vector<DriftTerm> terms) : dim_(dim), terms_(std::move(terms)) {
    for (const auto& term : terms_) {
      if (term.direction.size() != static_cast<Eigen::Index>(dim_)) {
        throw InvalidArgument("drift term direction has wrong dimension");
      }
      if (term.target >= dim_) {
        throw InvalidArgument("drift term target out of range");
      }
      if (!term.direction.allFinite() || !std::isfinite(term.amplitude) ||
          !std::isfinite(term.offset)) {
        throw InvalidArgument("drift term has non-finite coefficients");
      }
    }
  }

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const std::vector<DriftTerm>& terms() const { return terms_; }
  [[nodiscard]] bool empty() const { return terms_.empty(); }

  /// Largest target coordinate + 1 (0 when the field vanishes).
  [[nodiscard]] std::size_t support() const {
    std::size_t s = 0;
    for (const auto& term : terms_) {
      s = std::max(s, term.target + 1);
    }
    return s;
  }

  /// F(x).
  void eval(const Vector& x, Vector& out) const {
    out.setZero(static_cast<Eigen::Index>(dim_));
    for (const auto& term : terms_) {
      out(term.target) += term.amplitude * std::tanh(term.direction.dot(x) + term.offset);
    }
  }

  [[nodiscard]] Vector operator()(const Vector& x) const {
    Vector out;
    eval(x, out);
    return out;
  }

  /// Jacobian DF(x), n x n.
  void jacobian(const Vector& x, Matrix& out) const {
    const auto n = static_cast<Eigen::Index>(dim_);
    out.setZero(n, n);
    for (const auto& term : terms_) {
      const double th = std::tanh(term.direction.dot(x) + term.offset);
      out.row(term.target) += (term.amplitude * (1.0 - th * th)) * term.direction.transpose();
    }
  }

  [[nodiscard]] Matrix jacobian(const Vector& x) const {
    Matrix out;
    jacobian(x, out);
    return out;
  }

  /// D^2F(x)[u][v].
  [[nodiscard]] Vector second(const Vector& x, const Vector& u, const Vector& v) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(dim_));
    for (const auto& term : terms_) {
      const double th = std::tanh(term.direction.dot(x) + term.offset);
      const double sech2 = 1.0 - th * th;
      out(term.target) += term.amplitude * (-2.0 * th * sech2) * term.direction.dot(u) *
                          term.direction.dot(v);
    }
    return out;
  }

  /// D^3F(x)[u][v][w].
  [[nodiscard]] Vector third(const Vector& x, const Vector& u, const Vector& v,
                             const Vector& w) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(dim_));
    for (const auto& term : terms_) {
      const double th = std::tanh(term.direction.dot(x) + term.offset);
      const double sech2 = 1.0 - th * th;
      out(term.target) += term.amplitude * (2.0 * sech2 * (3.0 * th * th - 1.0)) *
                          term.direction.dot(u) * term.direction.dot(v) * term.direction.dot(w);
    }
    return out;
  }

  /// Upper bound for sup_x ||DF(x)||: sum |c| |a|.
  [[nodiscard]] double jacobian_bound() const {
    double s = 0.0;
    for (const auto& term : terms_) {
      s += std::abs(term.amplitude) * term.direction.norm();
    }
    return s;
  }

  /// Upper bound for sup_x |F(x)|.
  [[nodiscard]] double sup_bound() const {
    double s = 0.0;
    for (const auto& term : terms_) {
      s += std::abs(term.amplitude);
    }
    return s;
  }

  /// Upper bound for sup_x ||D^2F(x)||; max |tanh''| = 4/(3 sqrt 3).
  [[nodiscard]] double second_bound() const {
    double s = 0.0;
    for (const auto& term : terms_) {
      s += std::abs(term.amplitude) * std::pow(term.direction.norm(), 2);
    }
    return s * 4.0 / (3.0 * std::sqrt(3.0));
  }

  /// Upper bound for sup_x ||D^3F(x)||; max |tanh'''| = 2.
  [[nodiscard]] double third_bound() const {
    double s = 0.0;
    for (const auto& term : terms_) {
      s += std::abs(term.amplitude) * std::pow(term.direction.norm(), 3);
    }
    return 2.0 * s;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<DriftTerm> terms_;
};

}  // namespace kolmo
