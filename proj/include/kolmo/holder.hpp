/**
 * @file holder.hpp
 * @brief Anisotropic Holder calculus: third differences and seeded
 *        lower-bound estimators of [f]_{gamma,d,3} and ||f||_{gamma,d}.
 *
 * Sampling protocol (fixed, so estimates are comparable across runs):
 *  - per block h, a direction uniform on the unit sphere of E_h(R^n) and a
 *    block scale s_h log-uniform in [kMinScale, kMaxScale];
 *    E_h v = s_h^{2h+1} * direction, so |E_h v|^{1/(2h+1)} = s_h;
 *  - if sum_h s_h > 1 all s_h are divided by the sum (|||v||| <= 1);
 *  - if x + 3v cannot fit in the box, v is shrunk along its direction;
 *  - x is uniform over the part of the box where x, ..., x + 3v fit.
 * Sample j depends only on (seed, j): a larger budget extends the sample
 * set and the estimate never decreases.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "kolmo/error.hpp"
#include "kolmo/field.hpp"
#include "kolmo/operator.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

inline constexpr double kMinScale = 1e-3;
inline constexpr double kMaxScale = 1.0;

/// Delta_v^3 f(x) = f(x) - 3 f(x+v) + 3 f(x+2v) - f(x+3v).
[[nodiscard]] inline double third_difference_values(const std::array<double, 4>& f) {
  return f[0] - 3.0 * f[1] + 3.0 * f[2] - f[3];
}

[[nodiscard]] inline double third_difference(const ScalarField& f, const Vector& x, const Vector& v) {
  return third_difference_values(
      {f.checked(x), f.checked(x + v), f.checked(x + 2.0 * v), f.checked(x + 3.0 * v)});
}

/// Rejects gamma outside (0, 3) or within 1e-9 of an integer.
inline void require_noninteger_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 3.0)) {
    throw InvalidArgument("gamma must lie in (0, 3)");
  }
  if (std::abs(gamma - std::round(gamma)) < 1e-9) {
    throw InvalidArgument("gamma must be non-integer");
  }
}

struct HolderSample {
  Vector x;
  Vector v;
  double quasi_norm = 0.0;
};

/// The j-th (x, v) pair of the sampling protocol.
[[nodiscard]] inline HolderSample holder_sample(const KalmanDecomposition& dec, const Box& box,
                                                std::uint64_t seed, std::uint64_t j) {
  const auto n = static_cast<Eigen::Index>(dec.n());
  RandomStream rs(derive_seed(seed, rng_purpose::kHolderSamples), j);
  const int levels = dec.k() + 1;
  std::vector<double> s(static_cast<std::size_t>(levels));
  double total = 0.0;
  const double log_lo = std::log(kMinScale);
  const double log_hi = std::log(kMaxScale);
  for (auto& sh : s) {
    sh = std::exp(rs.uniform(log_lo, log_hi));
    total += sh;
  }
  if (total > 1.0) {
    for (auto& sh : s) {
      sh /= total;
    }
  }
  Vector v = Vector::Zero(n);
  for (int h = 0; h < levels; ++h) {
    const Matrix& b = dec.block(h).basis;
    Vector dir(b.cols());
    for (Eigen::Index i = 0; i < dir.size(); ++i) {
      dir(i) = rs.normal();
    }
    dir /= dir.norm();
    v += std::pow(s[static_cast<std::size_t>(h)], 2.0 * h + 1.0) * (b * dir);
  }
  double shrink = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double width = box.hi(i) - box.lo(i);
    if (3.0 * std::abs(v(i)) > width) {
      shrink = std::min(shrink, (1.0 - 1e-9) * width / (3.0 * std::abs(v(i))));
    }
  }
  v *= shrink;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Relative margin keeps x + 3v inside the box after rounding.
    const double margin = 1e-12 * (box.hi(i) - box.lo(i));
    const double lo = box.lo(i) + std::max(0.0, -3.0 * v(i)) + margin;
    const double hi = box.hi(i) - std::max(0.0, 3.0 * v(i)) - margin;
    x(i) = rs.uniform(lo, std::max(lo, hi));
  }
  const double qn = dec.quasi_norm(v);
  return {std::move(x), std::move(v), qn};
}

inline void require_box_fits(const Box& box) {
  for (Eigen::Index i = 0; i < box.lo.size(); ++i) {
    if (box.hi(i) - box.lo(i) < 3.0 * kMinScale) {
      throw DegenerateBox("box too small for third differences at the minimum scale");
    }
  }
}

struct SeminormEstimate {
  double value = 0.0;
  Vector witness_x;
  Vector witness_v;
  std::size_t samples = 0;
  double gamma = 0.0;
  std::array<double, 2> scale_range{0.0, 0.0};
  /// max |f| over every evaluated point.
  double sup = 0.0;
};

/// Evaluates a field at the four stencil points x + j v, j = 0..3.
using StencilEvaluator = std::function<std::array<double, 4>(const Vector& x, const Vector& v)>;

/// Core estimator over the seeded sample set; @p values may be any
/// (deterministic) evaluator of the field at the four stencil points.
[[nodiscard]] inline SeminormEstimate zygmund_estimate(const KalmanDecomposition& dec, const Box& box,
                                                       double gamma, std::size_t budget,
                                                       std::uint64_t seed,
                                                       const StencilEvaluator& values) {
  require_noninteger_gamma(gamma);
  if (budget < 1) {
    throw InvalidArgument("holder estimate needs budget >= 1");
  }
  if (box.dim() != dec.n()) {
    throw InvalidArgument("box dimension does not match operator");
  }
  require_box_fits(box);
  std::vector<double> ratio(budget);
  std::vector<double> sup(budget);
  std::vector<double> qn(budget);
  parallel::parallel_for(budget, [&](std::size_t j) {
    const HolderSample smp = holder_sample(dec, box, seed, j);
    const auto vals = values(smp.x, smp.v);
    ratio[j] = std::abs(third_difference_values(vals)) / std::pow(smp.quasi_norm, gamma);
    sup[j] = std::max({std::abs(vals[0]), std::abs(vals[1]), std::abs(vals[2]), std::abs(vals[3])});
    qn[j] = smp.quasi_norm;
  });
  SeminormEstimate est;
  est.samples = budget;
  est.gamma = gamma;
  est.scale_range = {std::numeric_limits<double>::infinity(), 0.0};
  std::size_t best = 0;
  for (std::size_t j = 0; j < budget; ++j) {
    if (ratio[j] > ratio[best]) {
      best = j;
    }
    est.sup = std::max(est.sup, sup[j]);
    est.scale_range[0] = std::min(est.scale_range[0], qn[j]);
    est.scale_range[1] = std::max(est.scale_range[1], qn[j]);
  }
  est.value = ratio[best];
  const HolderSample w = holder_sample(dec, box, seed, best);
  est.witness_x = w.x;
  est.witness_v = w.v;
  return est;
}

[[nodiscard]] inline StencilEvaluator pointwise(const ScalarField& f) {
  return [&f](const Vector& x, const Vector& v) -> std::array<double, 4> {
    return {f.checked(x), f.checked(x + v), f.checked(x + 2.0 * v), f.checked(x + 3.0 * v)};
  };
}

/// Lower-bound estimate of sup_{|||v|||<=1} |Delta_v^3 f(x)| / |||v|||^gamma.
[[nodiscard]] inline SeminormEstimate holder_seminorm(const ScalarField& f, double gamma,
                                                      const KalmanDecomposition& dec,
                                                      std::size_t budget, std::uint64_t seed) {
  return zygmund_estimate(dec, f.box, gamma, budget, seed, pointwise(f));
}

/// Sampled sup |f| plus the seminorm estimate.
[[nodiscard]] inline double holder_norm(const ScalarField& f, double gamma,
                                        const KalmanDecomposition& dec, std::size_t budget,
                                        std::uint64_t seed) {
  const SeminormEstimate est = holder_seminorm(f, gamma, dec, budget, seed);
  return est.sup + est.value;
}

}  // namespace kolmo
