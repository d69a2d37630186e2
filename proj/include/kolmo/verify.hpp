/**
 * @file verify.hpp
 * @brief Exponent fits and the scaling-law / Schauder-ratio checks.
 *
 * Checks compare exponents or boundedness, never constants. Rate checks
 * only use times t < 1. Schauder "norms" are sampled lower bounds, so the
 * ratio checks are stability properties, not certified inequalities.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "kolmo/csv.hpp"
#include "kolmo/error.hpp"
#include "kolmo/field.hpp"
#include "kolmo/gramian.hpp"
#include "kolmo/holder.hpp"
#include "kolmo/operator.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/semigroup.hpp"
#include "kolmo/simulate.hpp"

namespace kolmo {

using Point = std::pair<double, double>;

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<Point> points;
};

/// Least squares of log(value) against log(t).
[[nodiscard]] inline ExponentFit fit_exponent(const std::vector<Point>& points) {
  if (points.size() < 3) {
    throw NonPositiveValue("fit_exponent needs at least 3 points");
  }
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& [t, v] : points) {
    if (!(t > 0.0) || !(v > 0.0) || !std::isfinite(t) || !std::isfinite(v)) {
      throw NonPositiveValue("fit_exponent needs positive finite t and values");
    }
    sx += std::log(t);
    sy += std::log(v);
  }
  const auto m = static_cast<double>(points.size());
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [t, v] : points) {
    const double dx = std::log(t) - mx;
    const double dy = std::log(v) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 1e-24 * std::max(1.0, mx * mx)) {
    throw NonPositiveValue("fit_exponent: all t coincide");
  }
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  fit.points = points;
  return fit;
}

enum class CheckKind {
  exponent,  ///< |measured - expected| <= tolerance
  at_least,  ///< measured >= expected - tolerance
  at_most,   ///< measured <= expected
  vacuous,   ///< quantity identically zero
};

[[nodiscard]] inline std::string to_string(CheckKind k) {
  switch (k) {
    case CheckKind::exponent:
      return "exponent";
    case CheckKind::at_least:
      return "at_least";
    case CheckKind::at_most:
      return "at_most";
    case CheckKind::vacuous:
      return "vacuous";
  }
  return "?";
}

struct CheckReport {
  std::string name;
  CheckKind kind = CheckKind::exponent;
  double expected = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  double r2 = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::string note;
  std::vector<Point> points;

  void decide() {
    switch (kind) {
      case CheckKind::exponent:
        pass = std::abs(measured - expected) <= tolerance;
        break;
      case CheckKind::at_least:
        pass = measured >= expected - tolerance;
        break;
      case CheckKind::at_most:
        pass = std::isfinite(measured) && measured <= expected;
        break;
      case CheckKind::vacuous:
        pass = true;
        break;
    }
  }
};

[[nodiscard]] inline bool all_pass(const std::vector<CheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

namespace detail {

inline std::vector<double> rate_grid(const std::vector<double>& grid) {
  std::vector<double> out;
  for (double t : grid) {
    if (t > 0.0 && t < 1.0) {
      out.push_back(t);
    }
  }
  return out;
}

inline CheckReport exponent_report(std::string name, const std::vector<Point>& pts, CheckKind kind,
                                   double expected, double tol) {
  CheckReport r;
  r.name = std::move(name);
  r.kind = kind;
  r.expected = expected;
  r.tolerance = tol;
  r.points = pts;
  const ExponentFit fit = fit_exponent(pts);
  r.measured = fit.slope;
  r.r2 = fit.r2;
  r.decide();
  return r;
}

}  // namespace detail

/// Whitened-direction slopes -(h + 1/2) per coordinate and block slopes
/// (2h+1)/2 of |E_h Q_t^{1/2}|.
[[nodiscard]] inline std::vector<CheckReport> check_gramian_scaling(const OperatorSpec& spec,
                                                                    const KalmanDecomposition& dec,
                                                                    const std::vector<double>& t_grid,
                                                                    double tol = 0.05) {
  const auto ts = detail::rate_grid(t_grid);
  std::vector<Gramian> grams;
  grams.reserve(ts.size());
  for (double t : ts) {
    grams.emplace_back(spec, dec, t);
  }
  std::vector<CheckReport> out;
  for (std::size_t i = 0; i < spec.n(); ++i) {
    std::vector<Point> pts;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      pts.emplace_back(ts[j], grams[j].whitened_direction_norm(i));
    }
    const int h = dec.level(i);
    out.push_back(detail::exponent_report("gramian_whitened_e" + std::to_string(i + 1), pts,
                                          CheckKind::exponent, -(h + 0.5), tol));
  }
  for (int h = 0; h <= dec.k(); ++h) {
    std::vector<Point> pts;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      pts.emplace_back(ts[j], grams[j].block_sqrt_norm(h));
    }
    out.push_back(detail::exponent_report("gramian_block_sqrt_E" + std::to_string(h), pts,
                                          CheckKind::exponent, (2.0 * h + 1.0) / 2.0, tol));
  }
  return out;
}

/// |E_i e^{sA} E_h| for every block pair.
[[nodiscard]] inline std::vector<CheckReport> check_exponential_blocks(
    const OperatorSpec& spec, const KalmanDecomposition& dec, const std::vector<double>& s_grid,
    double tol = 0.05) {
  const auto ss = detail::rate_grid(s_grid);
  std::vector<Matrix> exps;
  for (double s : ss) {
    exps.push_back(matrix_exp(spec.a(), s));
  }
  std::vector<CheckReport> out;
  for (int i = 0; i <= dec.k(); ++i) {
    for (int h = 0; h <= dec.k(); ++h) {
      std::vector<Point> pts;
      double vmax = 0.0;
      for (std::size_t j = 0; j < ss.size(); ++j) {
        const Matrix blk = dec.block(i).basis.transpose() * exps[j] * dec.block(h).basis;
        const double v = op_norm(blk);
        vmax = std::max(vmax, v);
        pts.emplace_back(ss[j], v);
      }
      const std::string name = "exp_block_E" + std::to_string(i) + "_E" + std::to_string(h);
      if (vmax <= 1e-13) {
        CheckReport r;
        r.name = name;
        r.kind = CheckKind::vacuous;
        r.points = pts;
        r.note = "block identically zero";
        r.decide();
        out.push_back(std::move(r));
        continue;
      }
      if (i > h && h == 0) {
        out.push_back(detail::exponent_report(name, pts, CheckKind::exponent, i, tol));
      } else if (i > h) {
        out.push_back(detail::exponent_report(name, pts, CheckKind::at_least, i - h, tol));
      } else if (i == h) {
        out.push_back(detail::exponent_report(name, pts, CheckKind::at_least, 0.0, tol));
      } else {
        out.push_back(detail::exponent_report(name, pts, CheckKind::at_least, 1.0, tol));
      }
    }
  }
  return out;
}

/// Monte Carlo moments E|||X_t - Y_t|||^q and E|E_h(X_t - Y_t)|^q with Y the
/// deterministic flow; X is sampled exactly when F = 0.
[[nodiscard]] inline std::vector<CheckReport> check_flow_moments(
    const OperatorSpec& spec, const KalmanDecomposition& dec, double q,
    const std::vector<double>& t_grid, std::size_t n_paths, std::uint64_t seed,
    std::optional<Vector> start = std::nullopt) {
  if (!(q > 0.0) || n_paths < 2) {
    throw InvalidArgument("flow moments need q > 0 and at least 2 paths");
  }
  const auto ts = detail::rate_grid(t_grid);
  const Vector x = start.value_or(Vector::Zero(static_cast<Eigen::Index>(spec.n())));
  const int levels = dec.k() + 1;
  const bool gaussian = spec.drift().empty();
  std::vector<Point> full;
  std::vector<std::vector<Point>> block(static_cast<std::size_t>(levels));
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const double t = ts[ti];
    const std::uint64_t s = derive_seed(seed, rng_purpose::kCheck, ti);
    std::vector<double> vf(n_paths);
    std::vector<std::vector<double>> vb(static_cast<std::size_t>(levels), std::vector<double>(n_paths));
    auto record = [&](std::size_t p, const Vector& diff) {
      vf[p] = std::pow(dec.quasi_norm(diff), q);
      for (int h = 0; h < levels; ++h) {
        vb[static_cast<std::size_t>(h)][p] = std::pow(dec.block_norm(h, diff), q);
      }
    };
    if (gaussian) {
      const OuSampler sampler(spec, dec, t, s);
      const Vector y = sampler.gramian().exp_ta() * x;
      parallel::parallel_for(n_paths, [&](std::size_t p) { record(p, sampler.sample(x, p) - y); });
    } else {
      const Vector y = deterministic_flow(spec, x, t, 256, 1).Y;
      const PathSimulator sim(spec, PathGrid(t, default_steps(t)), s);
      const Vector starts[1] = {x};
      parallel::parallel_for(n_paths, [&](std::size_t p) {
        Endpoints ep;
        sim.endpoints(starts, p, true, false, ep);
        record(p, ep.X[0] - y);
      });
    }
    full.emplace_back(t, parallel::mean_stderr(vf).mean);
    for (int h = 0; h < levels; ++h) {
      block[static_cast<std::size_t>(h)].emplace_back(t, parallel::mean_stderr(vb[static_cast<std::size_t>(h)]).mean);
    }
  }
  std::vector<CheckReport> out;
  const std::string qs = csv::format(q);
  auto finish = [&](CheckReport r) {
    r.seed = seed;
    r.budget = n_paths;
    out.push_back(std::move(r));
  };
  finish(detail::exponent_report("flow_moment_q" + qs + "_full", full, CheckKind::exponent, q / 2.0,
                                 q <= 2.0 ? 0.15 : 0.2));
  for (int h = 0; h < levels; ++h) {
    finish(detail::exponent_report("flow_moment_q" + qs + "_E" + std::to_string(h),
                                   block[static_cast<std::size_t>(h)], CheckKind::exponent,
                                   q * (2.0 * h + 1.0) / 2.0, gaussian ? 0.1 : 0.15));
  }
  return out;
}

struct SchauderBudget {
  /// Holder samples per seminorm estimate.
  std::size_t samples = 2048;
  /// Paths per quadrature node; 0 selects the deterministic Gaussian oracle.
  std::size_t paths_per_node = 0;
};

struct RatioResult {
  double ratio = 0.0;
  double norm_in = 0.0;
  double norm_out = 0.0;
  /// Relative rounding level of the ratio.
  double rounding = 0.0;
};

/// Largest ratio over @p family for a given field-to-solution map.
using SolutionMap = std::function<StencilEvaluator(const ScalarField&, const SchauderBudget&)>;

namespace detail {

// ~64 eps sup per value; the third difference over min |||v|||^gamma amplifies it.
inline double rounding_level(const SeminormEstimate& e, double gamma) {
  const double unit = 64.0 * std::numeric_limits<double>::epsilon() * e.sup;
  return unit * (1.0 + 8.0 / std::pow(e.scale_range[0], gamma));
}

inline RatioResult schauder_ratio(const KalmanDecomposition& dec, const ScalarField& f, double theta,
                                  double gamma_out, const SchauderBudget& b, std::uint64_t seed,
                                  const StencilEvaluator& solution) {
  const SeminormEstimate in = holder_seminorm(f, theta, dec, b.samples, seed);
  const SeminormEstimate out = zygmund_estimate(dec, f.box, gamma_out, b.samples, seed, solution);
  RatioResult r;
  r.norm_in = in.sup + in.value;
  r.norm_out = out.sup + out.value;
  r.ratio = r.norm_out / r.norm_in;
  r.rounding = rounding_level(in, theta) / r.norm_in + rounding_level(out, gamma_out) / r.norm_out;
  return r;
}

inline std::vector<CheckReport> ratio_reports(const std::string& name,
                                              const std::vector<ScalarField>& family,
                                              const KalmanDecomposition& dec, double theta,
                                              const SchauderBudget& budget, std::uint64_t seed,
                                              const SolutionMap& solve) {
  auto max_ratio = [&](const std::vector<ScalarField>& fam, const SchauderBudget& b,
                       std::vector<Point>* per_field) {
    double best = 0.0;
    double rounding = 0.0;
    for (std::size_t j = 0; j < fam.size(); ++j) {
      const auto sol = solve(fam[j], b);
      const RatioResult r = schauder_ratio(dec, fam[j], theta, 2.0 + theta, b, seed, sol);
      if (per_field != nullptr) {
        per_field->emplace_back(static_cast<double>(j), r.ratio);
      }
      best = std::max(best, r.ratio);
      rounding = std::max(rounding, r.rounding);
    }
    return std::pair{best, rounding};
  };
  std::vector<Point> per_field;
  const auto [r1, round1] = max_ratio(family, budget, &per_field);
  SchauderBudget doubled = budget;
  doubled.samples *= 2;
  doubled.paths_per_node *= 2;
  const double r2 = max_ratio(family, doubled, nullptr).first;
  std::vector<ScalarField> scaled;
  for (const auto& f : family) {
    scaled.push_back(f.scaled(10.0));
  }
  const auto [r10, round10] = max_ratio(scaled, budget, nullptr);

  std::vector<CheckReport> out;
  CheckReport stab;
  stab.name = name + "_budget_stability";
  stab.kind = CheckKind::at_most;
  stab.expected = 2.0;
  const bool finite = std::isfinite(r1) && std::isfinite(r2) && r1 > 0.0 && r2 > 0.0;
  stab.measured = finite ? std::max(r1, r2) / std::min(r1, r2) : std::numeric_limits<double>::infinity();
  stab.seed = seed;
  stab.budget = budget.samples;
  stab.points = per_field;
  stab.note = "max ratio " + csv::format(r1) + " at budget, " + csv::format(r2) +
              " at doubled budget; sampled lower-bound surrogates";
  stab.decide();
  out.push_back(stab);

  CheckReport hom;
  hom.name = name + "_homogeneity";
  hom.kind = CheckKind::at_most;
  hom.expected = round1 + round10;
  hom.measured = std::abs(r10 - r1) / std::max(std::abs(r1), 1e-300);
  hom.seed = seed;
  hom.budget = budget.samples;
  hom.note = "relative change of the max ratio for the family scaled by 10; bound is the rounding level";
  hom.decide();
  out.push_back(hom);
  return out;
}

/// Values of a scalar map at the four stencil points. Monte Carlo maps use
/// one seed for every point, so the four values share their noise.
inline StencilEvaluator stencil_of(std::function<double(const Vector&)> u) {
  return [u = std::move(u)](const Vector& x, const Vector& v) -> std::array<double, 4> {
    return {u(x), u(x + v), u(x + 2.0 * v), u(x + 3.0 * v)};
  };
}

}  // namespace detail

/// Resolvent Schauder ratio ||u||_{2+theta} / ||f||_theta, max over the
/// family; stability under doubled budgets and homogeneity under f -> 10 f.
/// Uses the Gaussian oracle for trigonometric fields when F = 0 and
/// budget.paths_per_node == 0, Monte Carlo otherwise.
[[nodiscard]] inline std::vector<CheckReport> check_schauder_ratio(
    const Semigroup& sg, const std::vector<ScalarField>& family, double theta, double lambda,
    const SchauderBudget& budget, std::uint64_t seed) {
  require_noninteger_gamma(theta);
  require_noninteger_gamma(2.0 + theta);
  const auto& spec = sg.spec();
  const auto& dec = sg.decomposition();
  const SolutionMap solve = [&](const ScalarField& f, const SchauderBudget& b) -> StencilEvaluator {
    if (b.paths_per_node == 0) {
      if (!f.trig || !spec.drift().empty()) {
        throw InvalidArgument("oracle pipeline needs F = 0 and trigonometric fields");
      }
      auto oracle = std::make_shared<gaussian::TrigResolvent>(spec, dec, *f.trig, lambda);
      return detail::stencil_of([oracle](const Vector& x) { return (*oracle)(x); });
    }
    const double sup_f = sup_estimate(f, seed);
    const auto scheme = QuadratureScheme::elliptic(lambda, sup_f, 1e-4, b.paths_per_node);
    return detail::stencil_of([&sg, f, lambda, scheme, seed](const Vector& x) {
      return sg.solve_elliptic(f, lambda, x, scheme, seed).mean;
    });
  };
  return detail::ratio_reports("schauder_elliptic", family, dec, theta, budget, seed, solve);
}

/// Cauchy analogue with g = 0 and H = f constant in time:
/// ||v(t)||_{2+theta} / sup_s ||H(s)||_theta at time @p t.
[[nodiscard]] inline std::vector<CheckReport> check_schauder_ratio_parabolic(
    const Semigroup& sg, const std::vector<ScalarField>& family, double theta, double t,
    const SchauderBudget& budget, std::uint64_t seed) {
  require_noninteger_gamma(theta);
  require_noninteger_gamma(2.0 + theta);
  const auto& spec = sg.spec();
  const auto& dec = sg.decomposition();
  const SolutionMap solve = [&](const ScalarField& f, const SchauderBudget& b) -> StencilEvaluator {
    if (b.paths_per_node == 0) {
      if (!f.trig || !spec.drift().empty()) {
        throw InvalidArgument("oracle pipeline needs F = 0 and trigonometric fields");
      }
      auto oracle = std::make_shared<gaussian::TrigDuhamel>(spec, dec, *f.trig, t);
      return detail::stencil_of([oracle](const Vector& x) { return (*oracle)(x); });
    }
    const auto scheme = QuadratureScheme::parabolic(t, b.paths_per_node);
    const ScalarField zero = fields::constant(spec.n(), 0.0);
    const TimeField h = fields::constant_in_time(f);
    return detail::stencil_of([&sg, zero, h, t, scheme, seed](const Vector& x) {
      return sg.solve_parabolic(zero, h, t, x, scheme, seed).mean;
    });
  };
  return detail::ratio_reports("schauder_parabolic_t" + csv::format(t), family, dec, theta, budget,
                               seed, solve);
}

/// Bounded ratio [P_t f]_{theta} / [f]_{theta} over a t grid (F = 0 closed
/// form for trigonometric f, Monte Carlo with common noise otherwise).
[[nodiscard]] inline CheckReport check_holder_stability(const Semigroup& sg, const ScalarField& f,
                                                        double theta, const std::vector<double>& t_grid,
                                                        std::size_t samples, std::size_t paths,
                                                        std::uint64_t seed) {
  const auto& spec = sg.spec();
  const auto& dec = sg.decomposition();
  auto max_ratio = [&](std::size_t b, std::size_t p, std::vector<Point>* pts) {
    const double base = holder_seminorm(f, theta, dec, b, seed).value;
    if (!(base > 0.0)) {
      throw InvalidArgument("holder stability needs a non-affine field");
    }
    double best = 0.0;
    for (double t : t_grid) {
      StencilEvaluator ev;
      if (f.trig && spec.drift().empty() && p == 0) {
        auto gram = std::make_shared<Gramian>(spec, dec, t);
        const TrigSpec trig = *f.trig;
        ev = detail::stencil_of([gram, trig](const Vector& x) { return gaussian::semigroup(*gram, trig, x); });
      } else {
        ev = detail::stencil_of([&sg, &f, t, p, seed](const Vector& x) {
          return sg.evaluate(f, t, x, std::max<std::size_t>(p, 2), seed).mean;
        });
      }
      const double r = zygmund_estimate(dec, f.box, theta, b, seed, ev).value / base;
      if (pts != nullptr) {
        pts->emplace_back(t, r);
      }
      best = std::max(best, r);
    }
    return best;
  };
  CheckReport rep;
  rep.name = "holder_stability";
  rep.kind = CheckKind::at_most;
  rep.expected = 2.0;
  const double r1 = max_ratio(samples, paths, &rep.points);
  const double r2 = max_ratio(2 * samples, 2 * paths, nullptr);
  rep.measured = std::max(r1, r2) / std::min(r1, r2);
  rep.seed = seed;
  rep.budget = samples;
  rep.note = "max over t of [P_t f]/[f]: " + csv::format(r1) + " and " + csv::format(r2) +
             " at doubled budget";
  rep.decide();
  return rep;
}

inline void write_reports_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
  csv::write_row(os, {"name", "kind", "expected", "measured", "tolerance", "r2", "pass", "seed",
                      "budget", "note"});
  for (const auto& r : reports) {
    csv::Row row;
    row << r.name << to_string(r.kind) << r.expected << r.measured << r.tolerance << r.r2 << r.pass
        << r.seed << static_cast<std::uint64_t>(r.budget) << ('"' + r.note + '"');
    csv::write_row(os, row);
  }
}

inline void write_points_csv(std::ostream& os, const std::vector<CheckReport>& reports) {
  csv::write_row(os, {"name", "t", "value", "seed"});
  for (const auto& r : reports) {
    for (const auto& [t, v] : r.points) {
      csv::Row row;
      row << r.name << t << v << r.seed;
      csv::write_row(os, row);
    }
  }
}

}  // namespace kolmo
