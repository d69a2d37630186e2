/**
 * @file semigroup.hpp
 * @brief Monte Carlo evaluation of P_t f(x) = E f(X_t^x), its spatial
 *        derivatives, and the resolvent / Cauchy solvers built on it.
 *
 * Every estimator is a mean over independent paths of a per-path value, so
 * the standard error is the sample standard deviation over sqrt(N).
 * Stencils (finite differences, residuals) are evaluated with common
 * random numbers: all stencil points of one path share the same noise.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kolmo/error.hpp"
#include "kolmo/field.hpp"
#include "kolmo/gramian.hpp"
#include "kolmo/operator.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/quadrature.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/simulate.hpp"

namespace kolmo {

enum class Method { direct, girsanov };

[[nodiscard]] inline std::string to_string(Method m) {
  return m == Method::direct ? "direct" : "girsanov";
}

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  Method method = Method::direct;
  /// Deterministic error bound (quadrature truncation, finite differences).
  double bias_bound = 0.0;
};

/// Default inner-time floor for quadrature nodes.
inline constexpr double kTimeFloor = 1e-4;

/// Grid steps used by evaluate(): max(32, ceil(t / 1e-3)).
[[nodiscard]] inline std::uint32_t default_steps(double t) {
  return std::max<std::uint32_t>(32, static_cast<std::uint32_t>(std::ceil(t / 1e-3)));
}

struct StencilPoint {
  Vector x;
  double weight = 1.0;
};

struct QuadratureScheme {
  double t_max = 1.0;
  std::vector<double> panels;
  std::size_t nodes_per_panel = 6;
  std::size_t paths_per_node = 1000;
  double t_floor = kTimeFloor;

  /// Resolvent scheme: t_max = max(1, ln(sup|f| / (lambda tol)) / lambda),
  /// log-spaced panels from the time floor.
  [[nodiscard]] static QuadratureScheme elliptic(double lambda, double sup_f, double tol,
                                                 std::size_t paths_per_node,
                                                 std::size_t panels = 12,
                                                 std::size_t nodes_per_panel = 6,
                                                 double t_floor = kTimeFloor) {
    if (!(lambda > 0.0) || !(tol > 0.0)) {
      throw InvalidArgument("elliptic scheme needs lambda > 0 and tol > 0");
    }
    QuadratureScheme s;
    s.t_max = std::max(1.0, std::log(std::max(sup_f, 1e-300) / (lambda * tol)) / lambda);
    s.panels = log_panels(t_floor, s.t_max, panels);
    s.nodes_per_panel = nodes_per_panel;
    s.paths_per_node = paths_per_node;
    s.t_floor = t_floor;
    return s;
  }

  /// Cauchy scheme over [0, t] in the lag variable r = t - s.
  [[nodiscard]] static QuadratureScheme parabolic(double t, std::size_t paths_per_node,
                                                  std::size_t panels = 8,
                                                  std::size_t nodes_per_panel = 6,
                                                  double t_floor = kTimeFloor) {
    QuadratureScheme s;
    s.t_max = t;
    s.t_floor = std::min(t_floor, 0.5 * t);
    s.panels = log_panels(s.t_floor, t, panels);
    s.nodes_per_panel = nodes_per_panel;
    s.paths_per_node = paths_per_node;
    return s;
  }

  /// e^{-lambda t_max} / lambda * sup|f|.
  [[nodiscard]] double tail_bound(double lambda, double sup_f) const {
    return std::exp(-lambda * t_max) / lambda * sup_f;
  }
};

/// Sampled estimate of sup|f| over the field's box when no bound is attached.
[[nodiscard]] inline double sup_estimate(const ScalarField& f, std::uint64_t seed,
                                         std::size_t samples = 4096) {
  if (f.sup_bound) {
    return *f.sup_bound;
  }
  double s = 0.0;
  const auto n = f.box.lo.size();
  for (std::size_t j = 0; j < samples; ++j) {
    RandomStream rs(derive_seed(seed, rng_purpose::kSupSamples), j);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i) = rs.uniform(f.box.lo(i), f.box.hi(i));
    }
    s = std::max(s, std::abs(f.eval(x)));
  }
  return s;
}

class Semigroup {
 public:
  explicit Semigroup(OperatorSpec spec, double rank_tol = kDefaultRankTol)
      : spec_(std::move(spec)), dec_(decompose(spec_, rank_tol)) {}
  Semigroup(OperatorSpec spec, KalmanDecomposition dec) : spec_(std::move(spec)), dec_(std::move(dec)) {}

  [[nodiscard]] const OperatorSpec& spec() const { return spec_; }
  [[nodiscard]] const KalmanDecomposition& decomposition() const { return dec_; }

  /// Mean over paths of sum_m w_m f(X_t^{x_m}) (direct) or
  /// sum_m w_m f(Z_t^{x_m}) Phi_m (girsanov), all points sharing noise.
  [[nodiscard]] MCEstimate estimate_stencil(const ScalarField& f, double t,
                                            std::span<const StencilPoint> stencil,
                                            std::size_t budget, std::uint64_t seed,
                                            Method method) const {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw InvalidArgument("semigroup time must be positive");
    }
    if (t < Gramian::kMinTime) {
      throw SingularGramian("semigroup time below the minimum scale");
    }
    if (budget < 2) {
      throw InvalidArgument("Monte Carlo budget must be >= 2");
    }
    std::vector<double> values(budget);
    if (spec_.drift().empty()) {
      // F = 0: exact Gaussian endpoint, X = Z and Phi = 1.
      const OuSampler sampler(spec_, dec_, t, seed);
      std::vector<Vector> shifted;
      shifted.reserve(stencil.size());
      for (const auto& p : stencil) {
        shifted.push_back(sampler.gramian().exp_ta() * p.x);
      }
      parallel::parallel_for(budget, [&](std::size_t path) {
        Vector z;
        sampler.noise(path, z);
        double acc = 0.0;
        for (std::size_t m = 0; m < stencil.size(); ++m) {
          acc += stencil[m].weight * f.eval(shifted[m] + z);
        }
        values[path] = acc;
      });
    } else {
      const PathSimulator sim(spec_, PathGrid(t, default_steps(t)), seed);
      std::vector<Vector> starts;
      starts.reserve(stencil.size());
      for (const auto& p : stencil) {
        starts.push_back(p.x);
      }
      const bool direct = method == Method::direct;
      parallel::parallel_for(budget, [&](std::size_t path) {
        Endpoints ep;
        sim.endpoints(starts, path, direct, !direct, ep);
        double acc = 0.0;
        for (std::size_t m = 0; m < stencil.size(); ++m) {
          acc += direct ? stencil[m].weight * f.eval(ep.X[m])
                        : stencil[m].weight * f.eval(ep.Z[m]) * std::exp(ep.log_phi[m]);
        }
        values[path] = acc;
      });
    }
    const auto ms = parallel::mean_stderr(values);
    return {ms.mean, ms.stderr_, budget, seed, method, 0.0};
  }

  /// P_t f(x).
  [[nodiscard]] MCEstimate evaluate(const ScalarField& f, double t, const Vector& x,
                                    std::size_t budget, std::uint64_t seed,
                                    Method method = Method::direct) const {
    const StencilPoint p{x, 1.0};
    return estimate_stencil(f, t, std::span<const StencilPoint>(&p, 1), budget, seed, method);
  }

  /// Default finite-difference step in reference direction i:
  /// max(1e-3, t^{h + 1/2} / 10), i in I_h.
  [[nodiscard]] double default_step(double t, std::size_t i) const {
    return std::max(1e-3, std::pow(t, dec_.level(i) + 0.5) / 10.0);
  }

  /// Central-difference stencil for D_{i1 i2 ...} along reference directions.
  [[nodiscard]] std::vector<StencilPoint> derivative_stencil(
      const Vector& x, std::span<const std::size_t> multi_index, double t,
      std::optional<double> step = std::nullopt) const {
    if (multi_index.empty() || multi_index.size() > 3) {
      throw InvalidArgument("derivative order must be 1, 2 or 3");
    }
    std::map<std::size_t, int> mult;
    for (auto i : multi_index) {
      if (i >= spec_.n()) {
        throw InvalidArgument("derivative index out of range");
      }
      ++mult[i];
    }
    std::vector<StencilPoint> pts = {{x, 1.0}};
    for (const auto& [i, m] : mult) {
      const double eps = step.value_or(default_step(t, i));
      const Vector dir = dec_.basis().col(static_cast<Eigen::Index>(i));
      std::vector<std::pair<double, double>> rule;  // (offset multiple, weight)
      if (m == 1) {
        rule = {{1.0, 0.5 / eps}, {-1.0, -0.5 / eps}};
      } else if (m == 2) {
        const double e2 = eps * eps;
        rule = {{1.0, 1.0 / e2}, {0.0, -2.0 / e2}, {-1.0, 1.0 / e2}};
      } else {
        const double e3 = eps * eps * eps;
        rule = {{2.0, 0.5 / e3}, {1.0, -1.0 / e3}, {-1.0, 1.0 / e3}, {-2.0, -0.5 / e3}};
      }
      std::vector<StencilPoint> next;
      for (const auto& p : pts) {
        for (const auto& [off, w] : rule) {
          next.push_back({p.x + off * eps * dir, p.weight * w});
        }
      }
      pts = std::move(next);
    }
    return pts;
  }

  /// D^alpha P_t f(x) by common-random-number central differences.
  [[nodiscard]] MCEstimate derivative_estimate(const ScalarField& f, double t, const Vector& x,
                                               std::span<const std::size_t> multi_index,
                                               std::size_t budget, std::uint64_t seed,
                                               std::optional<double> step = std::nullopt,
                                               Method method = Method::direct) const {
    const auto pts = derivative_stencil(x, multi_index, t, step);
    return estimate_stencil(f, t, pts, budget, seed, method);
  }

  /// D_i P_t f(x) = E <Df(X_t), eta_i> along simulated paths (needs f.grad).
  [[nodiscard]] MCEstimate pathwise_derivative(const ScalarField& f, double t, const Vector& x,
                                               std::size_t i, std::size_t budget,
                                               std::uint64_t seed) const {
    if (!f.grad) {
      throw InvalidArgument("pathwise derivative needs a field gradient");
    }
    if (budget < 2) {
      throw InvalidArgument("Monte Carlo budget must be >= 2");
    }
    const PathSimulator sim(spec_, PathGrid(t, default_steps(t)), seed);
    const Vector dir = dec_.basis().col(static_cast<Eigen::Index>(i));
    std::vector<double> values(budget);
    parallel::parallel_for(budget, [&](std::size_t path) {
      Vector xe;
      Matrix eta;
      sim.endpoint_with_variation(x, path, xe, eta);
      values[path] = f.grad(xe).dot(eta * dir);
    });
    const auto ms = parallel::mean_stderr(values);
    return {ms.mean, ms.stderr_, budget, seed, Method::direct, 0.0};
  }

  /// u(x) = int_0^inf e^{-lambda t} P_t f(x) dt on the composite rule of
  /// @p scheme; each node is an independent estimate with its own seed.
  [[nodiscard]] MCEstimate solve_elliptic(const ScalarField& f, double lambda, const Vector& x,
                                          const QuadratureScheme& scheme, std::uint64_t seed,
                                          Method method = Method::direct) const {
    const StencilPoint p{x, 1.0};
    return resolvent_stencil(f, lambda, std::span<const StencilPoint>(&p, 1), scheme, seed, method);
  }

  /// Resolvent applied to a stencil: sum_m w_m u(x_m) with shared noise.
  [[nodiscard]] MCEstimate resolvent_stencil(const ScalarField& f, double lambda,
                                             std::span<const StencilPoint> stencil,
                                             const QuadratureScheme& scheme, std::uint64_t seed,
                                             Method method = Method::direct) const {
    if (!(lambda > 0.0)) {
      throw InvalidArgument("lambda must be positive");
    }
    const double sup_f = sup_estimate(f, seed);
    const QuadratureRule rule = composite_rule(scheme.panels, scheme.nodes_per_panel);
    double mean = 0.0;
    double var = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double tj = rule.nodes[j];
      const double wj = rule.weights[j] * std::exp(-lambda * tj);
      const MCEstimate e =
          estimate_stencil(f, std::max(tj, scheme.t_floor), stencil, scheme.paths_per_node,
                           derive_seed(seed, rng_purpose::kQuadratureNode, j), method);
      mean += wj * e.mean;
      var += wj * wj * e.std_error * e.std_error;
    }
    double wsum = 0.0;
    for (const auto& p : stencil) {
      wsum += std::abs(p.weight);
    }
    const double bias = wsum * (scheme.tail_bound(lambda, sup_f) + 2.0 * scheme.t_floor * sup_f);
    return {mean, std::sqrt(var), scheme.paths_per_node * rule.nodes.size(), seed, method, bias};
  }

  /// Stencil of (lambda - A) at x in canonical coordinates, step eps.
  [[nodiscard]] std::vector<StencilPoint> generator_stencil(const Vector& x, double lambda,
                                                            double eps) const {
    const auto n = static_cast<Eigen::Index>(spec_.n());
    const auto p = static_cast<Eigen::Index>(spec_.p_tilde());
    std::map<std::vector<int>, double> acc;
    auto add = [&](std::vector<int> off, double w) { acc[std::move(off)] += w; };
    const std::vector<int> zero(static_cast<std::size_t>(n), 0);
    add(zero, lambda);
    const Vector b = spec_.a() * x + spec_.drift()(x);
    const Matrix& q = spec_.q();
    for (Eigen::Index i = 0; i < n; ++i) {
      // -b_i d_i u
      if (b(i) != 0.0) {
        auto up = zero;
        auto dn = zero;
        up[static_cast<std::size_t>(i)] = 1;
        dn[static_cast<std::size_t>(i)] = -1;
        add(up, -b(i) * 0.5 / eps);
        add(dn, b(i) * 0.5 / eps);
      }
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        const double c = -0.5 * q(i, j);
        if (c == 0.0) {
          continue;
        }
        if (i == j) {
          auto up = zero;
          auto dn = zero;
          up[static_cast<std::size_t>(i)] = 1;
          dn[static_cast<std::size_t>(i)] = -1;
          add(up, c / (eps * eps));
          add(zero, -2.0 * c / (eps * eps));
          add(dn, c / (eps * eps));
        } else {
          for (int si : {1, -1}) {
            for (int sj : {1, -1}) {
              auto off = zero;
              off[static_cast<std::size_t>(i)] = si;
              off[static_cast<std::size_t>(j)] = sj;
              add(off, c * si * sj / (4.0 * eps * eps));
            }
          }
        }
      }
    }
    std::vector<StencilPoint> pts;
    for (const auto& [off, w] : acc) {
      Vector y = x;
      for (Eigen::Index i = 0; i < n; ++i) {
        y(i) += eps * off[static_cast<std::size_t>(i)];
      }
      pts.push_back({y, w});
    }
    return pts;
  }

  /// lambda u - A u - f at x; bias_bound holds the finite-difference
  /// (Richardson, eps vs 2 eps) plus quadrature error estimate.
  [[nodiscard]] MCEstimate elliptic_residual(const ScalarField& f, double lambda, const Vector& x,
                                             const QuadratureScheme& scheme, std::uint64_t seed,
                                             double eps = 1e-2) const {
    const auto fine = generator_stencil(x, lambda, eps);
    const auto coarse = generator_stencil(x, lambda, 2.0 * eps);
    const MCEstimate rf = resolvent_stencil(f, lambda, fine, scheme, seed);
    const MCEstimate rc = resolvent_stencil(f, lambda, coarse, scheme, seed);
    const double fx = f.eval(x);
    const double sup_f = sup_estimate(f, seed);
    MCEstimate out = rf;
    out.mean = rf.mean - fx;
    out.bias_bound = std::abs(rf.mean - rc.mean) / 3.0 + lambda * scheme.tail_bound(lambda, sup_f);
    return out;
  }

  /// v(t,x) = P_t g(x) + int_0^t P_{t-s} H(s, .)(x) ds.
  [[nodiscard]] MCEstimate solve_parabolic(const ScalarField& g, const TimeField& h, double t,
                                           const Vector& x, const QuadratureScheme& scheme,
                                           std::uint64_t seed, Method method = Method::direct) const {
    if (!(t > 0.0)) {
      throw InvalidArgument("parabolic time must be positive");
    }
    const QuadratureRule rule = composite_rule(scheme.panels, scheme.nodes_per_panel);
    const StencilPoint p{x, 1.0};
    const std::span<const StencilPoint> one(&p, 1);
    const MCEstimate head =
        estimate_stencil(g, t, one, scheme.paths_per_node,
                         derive_seed(seed, rng_purpose::kQuadratureNode, rule.nodes.size()), method);
    double mean = head.mean;
    double var = head.std_error * head.std_error;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double lag = rule.nodes[j];
      const double s = t - lag;
      const double wj = rule.weights[j];
      const MCEstimate e =
          estimate_stencil(h.slice(s), std::max(lag, scheme.t_floor), one, scheme.paths_per_node,
                           derive_seed(seed, rng_purpose::kQuadratureNode, j), method);
      mean += wj * e.mean;
      var += wj * wj * e.std_error * e.std_error;
    }
    const double sup_h = h.sup_bound.value_or(0.0);
    return {mean,   std::sqrt(var), scheme.paths_per_node * (rule.nodes.size() + 1), seed, method,
            2.0 * scheme.t_floor * sup_h};
  }

 private:
  OperatorSpec spec_;
  KalmanDecomposition dec_;
};

// Free-function spellings.

[[nodiscard]] inline MCEstimate evaluate(const OperatorSpec& spec, const ScalarField& f, double t,
                                         const Vector& x, std::size_t budget, std::uint64_t seed,
                                         Method method = Method::direct) {
  return Semigroup(spec).evaluate(f, t, x, budget, seed, method);
}

[[nodiscard]] inline MCEstimate solve_elliptic(const OperatorSpec& spec, const ScalarField& f,
                                               double lambda, const Vector& x,
                                               const QuadratureScheme& scheme, std::uint64_t seed) {
  return Semigroup(spec).solve_elliptic(f, lambda, x, scheme, seed);
}

[[nodiscard]] inline MCEstimate solve_parabolic(const OperatorSpec& spec, const ScalarField& g,
                                                const TimeField& h, double t, const Vector& x,
                                                const QuadratureScheme& scheme, std::uint64_t seed) {
  return Semigroup(spec).solve_parabolic(g, h, t, x, scheme, seed);
}

/// Closed forms for F = 0 and trigonometric fields:
/// P_t f(x) = a e^{-<Q_t w, w>/2} cos(<w, e^{tA} x> + phase).
namespace gaussian {

[[nodiscard]] inline double semigroup(const Gramian& gram, const TrigSpec& f, const Vector& x) {
  return f.amplitude * std::exp(-0.5 * f.w.dot(gram.matrix() * f.w)) *
         std::cos(f.w.dot(gram.exp_ta() * x) + f.phase);
}

/// Gradient in canonical coordinates.
[[nodiscard]] inline Vector semigroup_gradient(const Gramian& gram, const TrigSpec& f, const Vector& x) {
  const Vector b = gram.exp_ta().transpose() * f.w;
  return -f.amplitude * std::exp(-0.5 * f.w.dot(gram.matrix() * f.w)) *
         std::sin(b.dot(x) + f.phase) * b;
}

/// Deterministic resolvent u = int_0^inf e^{-lambda t} P_t f dt for a
/// trigonometric f with F = 0, tabulated once on a fine composite rule.
class TrigResolvent {
 public:
  TrigResolvent(const OperatorSpec& spec, const KalmanDecomposition& dec, const TrigSpec& f,
                double lambda, double tol = 1e-13, std::size_t panels = 48,
                std::size_t nodes_per_panel = 16)
      : f_(f) {
    if (!spec.drift().empty()) {
      throw InvalidArgument("Gaussian closed form requires F = 0");
    }
    const double sup_f = std::max(std::abs(f.amplitude), 1e-300);
    const double t_max = std::max(1.0, std::log(sup_f / (lambda * tol)) / lambda);
    std::vector<double> edges = log_panels(1e-8, t_max, panels);
    const QuadratureRule rule = composite_rule(edges, nodes_per_panel);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double t = rule.nodes[j];
      const Gramian gram(spec, dec, std::max(t, Gramian::kMinTime));
      weight_.push_back(rule.weights[j] * std::exp(-lambda * t) *
                        std::exp(-0.5 * f.w.dot(gram.matrix() * f.w)));
      freq_.push_back(gram.exp_ta().transpose() * f.w);
    }
  }

  [[nodiscard]] double operator()(const Vector& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < weight_.size(); ++j) {
      s += weight_[j] * std::cos(freq_[j].dot(x) + f_.phase);
    }
    return f_.amplitude * s;
  }

 private:
  TrigSpec f_;
  std::vector<double> weight_;
  std::vector<Vector> freq_;
};

/// Deterministic Duhamel term int_0^t P_r h dr for time-constant trig h.
class TrigDuhamel {
 public:
  TrigDuhamel(const OperatorSpec& spec, const KalmanDecomposition& dec, const TrigSpec& h, double t,
              std::size_t panels = 24, std::size_t nodes_per_panel = 16)
      : h_(h) {
    if (!spec.drift().empty()) {
      throw InvalidArgument("Gaussian closed form requires F = 0");
    }
    const double floor = std::min(1e-8, 0.5 * t);
    const QuadratureRule rule = composite_rule(log_panels(floor, t, panels), nodes_per_panel);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const Gramian gram(spec, dec, std::max(rule.nodes[j], Gramian::kMinTime));
      weight_.push_back(rule.weights[j] * std::exp(-0.5 * h.w.dot(gram.matrix() * h.w)));
      freq_.push_back(gram.exp_ta().transpose() * h.w);
    }
  }

  [[nodiscard]] double operator()(const Vector& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < weight_.size(); ++j) {
      s += weight_[j] * std::cos(freq_[j].dot(x) + h_.phase);
    }
    return h_.amplitude * s;
  }

 private:
  TrigSpec h_;
  std::vector<double> weight_;
  std::vector<Vector> freq_;
};

}  // namespace gaussian

}  // namespace kolmo
