/**
 * @file simulate.hpp
 * @brief Path generation for dX = (AX + F(X)) dt + Q^{1/2} dW.
 *
 * Noise comes first: the increments dW_k are drawn from the counter-based
 * stream keyed by (seed, path, step) and every process on the path (the
 * Ornstein-Uhlenbeck state Z, the SDE state X, the Girsanov log-weight)
 * is driven by the same increments. With F = 0 this makes X and Z equal
 * bit for bit.
 *
 * Exponential Euler:
 *   Z_{k+1} = e^{dt A} Z_k + e^{dt A} Q^{1/2} dW_k
 *   X_{k+1} = e^{dt A} (X_k + F(X_k) dt) + e^{dt A} Q^{1/2} dW_k
 *   log Phi += <G(Z_k), dW_k> - |G(Z_k)|^2 dt / 2,   G = Q^{-1/2} F.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "kolmo/csv.hpp"
#include "kolmo/error.hpp"
#include "kolmo/gramian.hpp"
#include "kolmo/linalg.hpp"
#include "kolmo/operator.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

struct PathGrid {
  double t_end = 1.0;
  std::uint32_t steps = 1;

  PathGrid(double t, std::uint32_t k) : t_end(t), steps(k) {
    if (!(t > 0.0) || !std::isfinite(t) || k < 1) {
      throw InvalidArgument("PathGrid needs t_end > 0 and steps >= 1");
    }
  }

  [[nodiscard]] double dt() const { return t_end / steps; }
  [[nodiscard]] double time(std::uint32_t k) const {
    return k == steps ? t_end : static_cast<double>(k) * dt();
  }
};

enum class Integrator {
  exponential_euler,
  /// Plain Euler-Maruyama, kept as a cross-check.
  euler_maruyama,
};

struct PathBundle {
  PathGrid grid{1.0, 1};
  Vector x0;
  std::vector<Vector> dW;      ///< K increments, each N(0, dt I_n)
  std::vector<Vector> Z;       ///< K+1 Ornstein-Uhlenbeck states
  std::vector<Vector> X;       ///< K+1 SDE states
  std::vector<double> logPhi;  ///< K+1 running Girsanov log-weights
  std::uint64_t seed = 0;
  std::uint64_t path_id = 0;
};

/// Per-path endpoint values for several start points driven by common noise.
struct Endpoints {
  std::vector<Vector> X;
  std::vector<Vector> Z;
  std::vector<double> log_phi;
};

class PathSimulator {
 public:
  PathSimulator(const OperatorSpec& spec, PathGrid grid, std::uint64_t seed,
                Integrator integrator = Integrator::exponential_euler)
      : spec_(spec),
        grid_(grid),
        seed_(seed),
        noise_seed_(derive_seed(seed, rng_purpose::kPathNoise)),
        integrator_(integrator) {
    const double dt = grid_.dt();
    const auto n = static_cast<Eigen::Index>(spec_.n());
    if (integrator_ == Integrator::exponential_euler) {
      step_ = matrix_exp(spec_.a(), dt);
    } else {
      step_ = Matrix::Identity(n, n) + dt * spec_.a();
    }
    noise_map_ = (integrator_ == Integrator::exponential_euler ? step_ : Matrix::Identity(n, n)) *
                 spec_.sqrt_q();
    drift_map_ = integrator_ == Integrator::exponential_euler ? step_ : Matrix::Identity(n, n);
  }

  [[nodiscard]] const OperatorSpec& spec() const { return spec_; }
  [[nodiscard]] const PathGrid& grid() const { return grid_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] Integrator integrator() const { return integrator_; }
  /// One-step linear propagator (e^{dt A}, or I + dt A for Euler-Maruyama).
  [[nodiscard]] const Matrix& step_matrix() const { return step_; }

  /// dW_k for the given path, N(0, dt I_n).
  void increment(std::uint64_t path, std::uint32_t k, Vector& dw) const {
    const auto n = static_cast<Eigen::Index>(spec_.n());
    dw.resize(n);
    RandomStream rs(noise_seed_, path, k);
    const double sd = std::sqrt(grid_.dt());
    for (Eigen::Index i = 0; i < n; ++i) {
      dw(i) = sd * rs.normal();
    }
  }

  /// Full path record.
  [[nodiscard]] PathBundle bundle(const Vector& x0, std::uint64_t path) const {
    check_start(x0);
    PathBundle b{grid_, x0, {}, {}, {}, {}, seed_, path};
    const std::uint32_t steps = grid_.steps;
    b.dW.resize(steps);
    b.Z.assign(steps + 1, x0);
    b.X.assign(steps + 1, x0);
    b.logPhi.assign(steps + 1, 0.0);
    State st(spec_.n());
    for (std::uint32_t k = 0; k < steps; ++k) {
      increment(path, k, b.dW[k]);
      b.Z[k + 1] = b.Z[k];
      b.X[k + 1] = b.X[k];
      double lp = b.logPhi[k];
      advance(b.X[k + 1], b.Z[k + 1], lp, b.dW[k], st, true, true);
      b.logPhi[k + 1] = lp;
    }
    return b;
  }

  /// Endpoints for every start under the same increments.
  void endpoints(std::span<const Vector> starts, std::uint64_t path, bool want_x, bool want_z,
                 Endpoints& out) const {
    const std::size_t m = starts.size();
    out.X.assign(starts.begin(), starts.end());
    out.Z.assign(starts.begin(), starts.end());
    out.log_phi.assign(m, 0.0);
    for (const auto& s : starts) {
      check_start(s);
    }
    State st(spec_.n());
    Vector dw;
    for (std::uint32_t k = 0; k < grid_.steps; ++k) {
      increment(path, k, dw);
      st.noise.noalias() = noise_map_ * dw;
      for (std::size_t j = 0; j < m; ++j) {
        advance_shared(out.X[j], out.Z[j], out.log_phi[j], dw, st, want_x, want_z);
      }
    }
  }

  /// Endpoint X_T together with the first variation eta = dX_T/dx of the
  /// discrete scheme: eta_{k+1} = P (I + DF(X_k) dt) eta_k, P the step matrix.
  void endpoint_with_variation(const Vector& x0, std::uint64_t path, Vector& x_end,
                               Matrix& eta) const {
    check_start(x0);
    const auto n = static_cast<Eigen::Index>(spec_.n());
    const double dt = grid_.dt();
    x_end = x0;
    eta = Matrix::Identity(n, n);
    State st(spec_.n());
    Vector dw;
    Vector z = x0;
    double lp = 0.0;
    Matrix jac(n, n);
    Matrix tmp(n, n);
    for (std::uint32_t k = 0; k < grid_.steps; ++k) {
      increment(path, k, dw);
      spec_.drift().jacobian(x_end, jac);
      tmp.noalias() = jac * eta;  // DF(X_k) eta_k, before X advances
      tmp = eta + dt * tmp;
      if (integrator_ == Integrator::exponential_euler) {
        eta.noalias() = step_ * tmp;
      } else {
        eta = tmp + dt * (spec_.a() * eta);
      }
      advance(x_end, z, lp, dw, st, true, false);
    }
  }

 private:
  struct State {
    explicit State(std::size_t n)
        : f(Vector::Zero(static_cast<Eigen::Index>(n))),
          g(Vector::Zero(static_cast<Eigen::Index>(n))),
          tmp(Vector::Zero(static_cast<Eigen::Index>(n))),
          noise(Vector::Zero(static_cast<Eigen::Index>(n))) {}
    Vector f;
    Vector g;
    Vector tmp;
    Vector noise;
  };

  void check_start(const Vector& x) const {
    if (x.size() != static_cast<Eigen::Index>(spec_.n()) || !x.allFinite()) {
      throw InvalidArgument("start point has wrong dimension or is not finite");
    }
  }

  void advance(Vector& x, Vector& z, double& log_phi, const Vector& dw, State& st, bool want_x,
               bool want_z) const {
    st.noise.noalias() = noise_map_ * dw;
    advance_shared(x, z, log_phi, dw, st, want_x, want_z);
  }

  // st.noise must hold noise_map * dw.
  void advance_shared(Vector& x, Vector& z, double& log_phi, const Vector& dw, State& st,
                      bool want_x, bool want_z) const {
    const double dt = grid_.dt();
    const bool linear = spec_.drift().empty();
    const bool em = integrator_ == Integrator::euler_maruyama;
    if (want_z) {
      if (!linear) {
        spec_.drift().eval(z, st.f);
        st.g.noalias() = spec_.inv_sqrt_q() * st.f;
        log_phi += st.g.dot(dw) - 0.5 * st.g.squaredNorm() * dt;
      }
      st.tmp.noalias() = step_ * z;
      z = st.tmp + st.noise;
    }
    if (want_x) {
      if (linear) {
        if (want_z) {
          x = z;
          return;
        }
        st.tmp.noalias() = step_ * x;
        x = st.tmp + st.noise;
        return;
      }
      spec_.drift().eval(x, st.f);
      if (em) {
        st.tmp.noalias() = step_ * x;
        x = st.tmp + dt * st.f + st.noise;
      } else {
        st.g = x + dt * st.f;
        st.tmp.noalias() = drift_map_ * st.g;
        x = st.tmp + st.noise;
      }
    }
  }

  OperatorSpec spec_;
  PathGrid grid_;
  std::uint64_t seed_;
  std::uint64_t noise_seed_;
  Integrator integrator_;
  Matrix step_;
  Matrix noise_map_;
  Matrix drift_map_;
};

[[nodiscard]] inline PathBundle simulate_bundle(const OperatorSpec& spec, const Vector& x,
                                                const PathGrid& grid, std::uint64_t seed,
                                                std::uint64_t path = 0,
                                                Integrator integrator = Integrator::exponential_euler) {
  return PathSimulator(spec, grid, seed, integrator).bundle(x, path);
}

/// Exact sampler of Z_t^x = e^{tA} x + Q_t^{1/2} xi.
class OuSampler {
 public:
  OuSampler(const OperatorSpec& spec, const KalmanDecomposition& dec, double t, std::uint64_t seed)
      : gram_(spec, dec, t), seed_(derive_seed(seed, rng_purpose::kPathNoise)) {
    gram_.require_nonsingular("sample_ou_endpoint");
    factor_ = gram_.sampling_factor();
  }

  [[nodiscard]] const Gramian& gramian() const { return gram_; }

  /// Q_t^{1/2} xi for sample @p id (the same xi for every start point).
  void noise(std::uint64_t id, Vector& out) const {
    const auto n = factor_.rows();
    Vector xi(n);
    RandomStream rs(seed_, id, 0xFFFFFFFFu);
    for (Eigen::Index i = 0; i < n; ++i) {
      xi(i) = rs.normal();
    }
    out.noalias() = factor_ * xi;
  }

  [[nodiscard]] Vector sample(const Vector& x, std::uint64_t id) const {
    Vector z;
    noise(id, z);
    return gram_.exp_ta() * x + z;
  }

 private:
  Gramian gram_;
  std::uint64_t seed_;
  Matrix factor_;
};

[[nodiscard]] inline Vector sample_ou_endpoint(const OperatorSpec& spec, const KalmanDecomposition& dec,
                                               const Vector& x, double t, std::uint64_t seed,
                                               std::uint64_t id = 0) {
  return OuSampler(spec, dec, t, seed).sample(x, id);
}

/// Deterministic flow Y' = AY + F(Y) with variation equations.
struct FlowState {
  Vector Y;
  Matrix eta1;                                 ///< column i = eta_i
  std::vector<Matrix> eta2;                    ///< eta2[i].col(j) = eta_ij
  std::vector<std::vector<Matrix>> eta3;       ///< eta3[i][j].col(r) = eta_ijr
};

namespace detail {

struct FlowLayout {
  Eigen::Index n;
  int order;
  [[nodiscard]] Eigen::Index size() const {
    Eigen::Index s = n + n * n;
    if (order >= 2) s += n * n * n;
    if (order >= 3) s += n * n * n * n;
    return s;
  }
  [[nodiscard]] Eigen::Index e1(Eigen::Index i) const { return n + i * n; }
  [[nodiscard]] Eigen::Index e2(Eigen::Index i, Eigen::Index j) const {
    return n + n * n + (i * n + j) * n;
  }
  [[nodiscard]] Eigen::Index e3(Eigen::Index i, Eigen::Index j, Eigen::Index r) const {
    return n + n * n + n * n * n + ((i * n + j) * n + r) * n;
  }
};

inline Vector flow_rhs(const OperatorSpec& spec, const FlowLayout& L, const Vector& s) {
  const Eigen::Index n = L.n;
  const Matrix& a = spec.a();
  const DriftField& f = spec.drift();
  Vector out(s.size());
  const Vector y = s.head(n);
  out.head(n) = a * y + f(y);
  const Matrix jac = f.jacobian(y);
  const Matrix lin = a + jac;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.segment(L.e1(i), n) = lin * s.segment(L.e1(i), n);
  }
  if (L.order >= 2) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        out.segment(L.e2(i, j), n) =
            lin * s.segment(L.e2(i, j), n) +
            f.second(y, s.segment(L.e1(i), n), s.segment(L.e1(j), n));
      }
    }
  }
  if (L.order >= 3) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index r = 0; r < n; ++r) {
          const Vector ei = s.segment(L.e1(i), n);
          const Vector ej = s.segment(L.e1(j), n);
          const Vector er = s.segment(L.e1(r), n);
          out.segment(L.e3(i, j, r), n) =
              lin * s.segment(L.e3(i, j, r), n) + f.third(y, ei, ej, er) +
              f.second(y, s.segment(L.e2(i, r), n), ej) + f.second(y, ei, s.segment(L.e2(j, r), n)) +
              f.second(y, s.segment(L.e2(i, j), n), er);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Classical RK4 for Y and its variations up to @p order (1..3).
[[nodiscard]] inline FlowState deterministic_flow(const OperatorSpec& spec, const Vector& x, double t,
                                                  std::uint32_t steps, int order = 1) {
  if (steps < 1) {
    throw InvalidArgument("deterministic_flow needs steps >= 1");
  }
  if (order < 1 || order > 3) {
    throw InvalidArgument("variation order must be 1, 2 or 3");
  }
  const auto n = static_cast<Eigen::Index>(spec.n());
  if (x.size() != n) {
    throw InvalidArgument("start point has wrong dimension");
  }
  const detail::FlowLayout layout{n, order};
  Vector s = Vector::Zero(layout.size());
  s.head(n) = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    s(layout.e1(i) + i) = 1.0;
  }
  const double h = t / steps;
  for (std::uint32_t k = 0; k < steps; ++k) {
    const Vector k1 = detail::flow_rhs(spec, layout, s);
    const Vector k2 = detail::flow_rhs(spec, layout, s + 0.5 * h * k1);
    const Vector k3 = detail::flow_rhs(spec, layout, s + 0.5 * h * k2);
    const Vector k4 = detail::flow_rhs(spec, layout, s + h * k3);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  FlowState fs;
  fs.Y = s.head(n);
  fs.eta1.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    fs.eta1.col(i) = s.segment(layout.e1(i), n);
  }
  if (order >= 2) {
    fs.eta2.assign(static_cast<std::size_t>(n), Matrix(n, n));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        fs.eta2[static_cast<std::size_t>(i)].col(j) = s.segment(layout.e2(i, j), n);
      }
    }
  }
  if (order >= 3) {
    fs.eta3.assign(static_cast<std::size_t>(n),
                   std::vector<Matrix>(static_cast<std::size_t>(n), Matrix(n, n)));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index r = 0; r < n; ++r) {
          fs.eta3[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].col(r) =
              s.segment(layout.e3(i, j, r), n);
        }
      }
    }
  }
  return fs;
}

/// First variation dX_T/dx along the X path of a bundle (pathwise linear
/// ODE, additive noise), using the tangent of the scheme that produced it.
[[nodiscard]] inline Matrix variation_flow_along_path(const OperatorSpec& spec, const PathBundle& b,
                                                      Integrator integrator = Integrator::exponential_euler) {
  const auto n = static_cast<Eigen::Index>(spec.n());
  const double dt = b.grid.dt();
  const Matrix step = integrator == Integrator::exponential_euler ? matrix_exp(spec.a(), dt)
                                                                 : Matrix::Identity(n, n);
  Matrix eta = Matrix::Identity(n, n);
  Matrix jac(n, n);
  for (std::uint32_t k = 0; k < b.grid.steps; ++k) {
    spec.drift().jacobian(b.X[k], jac);
    const Matrix inner = eta + dt * (jac * eta);
    if (integrator == Integrator::exponential_euler) {
      eta = step * inner;
    } else {
      eta = inner + dt * (spec.a() * eta);
    }
  }
  return eta;
}

/// Gronwall bound exp((||A|| + ||DF||_0) t) for the first variation.
[[nodiscard]] inline double variation_bound(const OperatorSpec& spec, double t) {
  return std::exp((op_norm(spec.a()) + spec.drift().jacobian_bound()) * t);
}

/// Path dump: path_id,k,t,Z_1..Z_n,X_1..X_n,logPhi.
inline void write_paths_csv(std::ostream& os, std::span<const PathBundle> bundles) {
  if (bundles.empty()) {
    return;
  }
  const auto n = bundles.front().x0.size();
  std::vector<std::string> header = {"path_id", "k", "t"};
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("Z_" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < n; ++i) header.push_back("X_" + std::to_string(i + 1));
  header.emplace_back("logPhi");
  csv::write_row(os, header);
  for (const auto& b : bundles) {
    for (std::uint32_t k = 0; k <= b.grid.steps; ++k) {
      csv::Row row;
      row << b.path_id << k << b.grid.time(k);
      for (Eigen::Index i = 0; i < n; ++i) row << b.Z[k](i);
      for (Eigen::Index i = 0; i < n; ++i) row << b.X[k](i);
      row << b.logPhi[k];
      csv::write_row(os, row);
    }
  }
}

}  // namespace kolmo
