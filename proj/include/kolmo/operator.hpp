/**
 * @file operator.hpp
 * @brief Degenerate Kolmogorov operators, the Kalman rank condition and the
 *        graded orthogonal decomposition of R^n it induces.
 *
 * The operator is
 *
 *   A u(x) = 1/2 Tr(Q D^2 u(x)) + <A x + F(x), D u(x)>,   Q = diag(Q0, 0),
 *
 * with Q0 a p~ x p~ positive definite block and F supported in the first p~
 * coordinates. Coordinates are 0-based throughout the C++ API.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "kolmo/drift.hpp"
#include "kolmo/error.hpp"
#include "kolmo/linalg.hpp"

namespace kolmo {

/// Default relative singular-value threshold for rank decisions.
inline constexpr double kDefaultRankTol = 1e-10;

class OperatorSpec {
 public:
  OperatorSpec(Matrix q0, Matrix a, DriftField drift = {})
      : q0_(std::move(q0)), a_(std::move(a)), drift_(std::move(drift)) {
    validate();
  }

  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(a_.rows()); }
  [[nodiscard]] std::size_t p_tilde() const { return static_cast<std::size_t>(q0_.rows()); }
  [[nodiscard]] const Matrix& q0() const { return q0_; }
  [[nodiscard]] const Matrix& a() const { return a_; }
  [[nodiscard]] const DriftField& drift() const { return drift_; }

  /// Full diffusion matrix Q = diag(Q0, 0).
  [[nodiscard]] const Matrix& q() const { return q_; }
  /// Symmetric square root of Q (zero outside the leading block).
  [[nodiscard]] const Matrix& sqrt_q() const { return sqrt_q_; }
  /// Pseudo inverse square root diag(Q0^{-1/2}, 0).
  [[nodiscard]] const Matrix& inv_sqrt_q() const { return inv_sqrt_q_; }

  /// Smallest and largest eigenvalue of Q0.
  [[nodiscard]] double nu1() const { return nu1_; }
  [[nodiscard]] double nu2() const { return nu2_; }

  /// Same linear part with the drift replaced.
  [[nodiscard]] OperatorSpec with_drift(DriftField drift) const {
    return OperatorSpec(q0_, a_, std::move(drift));
  }

 private:
  void validate() {
    const auto p = q0_.rows();
    const auto n = a_.rows();
    if (n < 1 || a_.cols() != n) {
      throw InvalidArgument("A must be a non-empty square matrix");
    }
    if (p < 1 || q0_.cols() != p || p > n) {
      throw InvalidArgument("Q0 must be square with 1 <= p~ <= n");
    }
    if (!q0_.allFinite() || !a_.allFinite()) {
      throw InvalidArgument("operator matrices must be finite");
    }
    const double scale = std::max(1.0, q0_.cwiseAbs().maxCoeff());
    if ((q0_ - q0_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw InvalidArgument("Q0 is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(q0_));
    nu1_ = es.eigenvalues().minCoeff();
    nu2_ = es.eigenvalues().maxCoeff();
    if (!(nu1_ > 0.0)) {
      throw InvalidArgument("Q0 must be positive definite");
    }
    if (drift_.dim() == 0) {
      drift_ = DriftField(static_cast<std::size_t>(n), {});
    }
    if (drift_.dim() != static_cast<std::size_t>(n)) {
      throw InvalidArgument("drift dimension does not match A");
    }
    if (drift_.support() > static_cast<std::size_t>(p)) {
      throw InvalidArgument("drift must vanish outside the first p~ coordinates");
    }
    q_ = Matrix::Zero(n, n);
    q_.topLeftCorner(p, p) = symmetrize(q0_);
    sqrt_q_ = Matrix::Zero(n, n);
    sqrt_q_.topLeftCorner(p, p) = sym_sqrt(q0_);
    inv_sqrt_q_ = Matrix::Zero(n, n);
    inv_sqrt_q_.topLeftCorner(p, p) = sym_inv_sqrt(q0_, 0.0);
  }

  Matrix q0_;
  Matrix a_;
  DriftField drift_;
  Matrix q_;
  Matrix sqrt_q_;
  Matrix inv_sqrt_q_;
  double nu1_ = 0.0;
  double nu2_ = 0.0;
};

/// Numerical rank: singular values above tol * sigma_max.
[[nodiscard]] inline Eigen::Index numerical_rank(const Matrix& m, double tol) {
  if (m.size() == 0) {
    return 0;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0) {
    return 0;
  }
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) {
      ++r;
    }
  }
  return r;
}

/// Smallest k with rank [Q^{1/2}, A Q^{1/2}, ..., A^k Q^{1/2}] = n.
[[nodiscard]] inline int kalman_index(const OperatorSpec& spec, double tol = kDefaultRankTol) {
  const auto n = static_cast<Eigen::Index>(spec.n());
  Matrix ctrl = spec.sqrt_q();
  Matrix power = spec.sqrt_q();
  for (Eigen::Index m = 0; m < n; ++m) {
    if (m > 0) {
      power = (spec.a() * power).eval();
      Matrix grown(n, ctrl.cols() + n);
      grown << ctrl, power;
      ctrl = std::move(grown);
    }
    if (numerical_rank(ctrl, tol) == n) {
      return static_cast<int>(m);
    }
  }
  throw NotHypoelliptic("Kalman rank condition fails: controllability matrix has rank < n");
}

/// One graded block W_m = V_m minus V_{m-1}.
struct KalmanBlock {
  std::vector<std::size_t> indices;  ///< I_m: positions in the reference basis
  Matrix basis;                      ///< n x dim, orthonormal columns spanning W_m
  Matrix projection;                 ///< E_m = basis * basis^T
};

class KalmanDecomposition {
 public:
  KalmanDecomposition(std::vector<KalmanBlock> blocks, Matrix basis, double rank_tol)
      : blocks_(std::move(blocks)), basis_(std::move(basis)), rank_tol_(rank_tol) {
    level_.resize(static_cast<std::size_t>(basis_.cols()));
    for (std::size_t h = 0; h < blocks_.size(); ++h) {
      for (auto i : blocks_[h].indices) {
        level_[i] = static_cast<int>(h);
      }
    }
  }

  [[nodiscard]] int k() const { return static_cast<int>(blocks_.size()) - 1; }
  [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(basis_.rows()); }
  [[nodiscard]] const std::vector<KalmanBlock>& blocks() const { return blocks_; }
  [[nodiscard]] const KalmanBlock& block(int h) const { return blocks_.at(static_cast<std::size_t>(h)); }
  /// Orthogonal matrix whose columns are the reference basis e_1..e_n.
  [[nodiscard]] const Matrix& basis() const { return basis_; }
  [[nodiscard]] double rank_tol() const { return rank_tol_; }

  /// Block level h with i in I_h.
  [[nodiscard]] int level(std::size_t i) const { return level_.at(i); }
  [[nodiscard]] const std::vector<int>& levels() const { return level_; }

  [[nodiscard]] const Matrix& projection(int h) const { return block(h).projection; }

  /// |E_h x|.
  [[nodiscard]] double block_norm(int h, const Vector& x) const {
    return (block(h).basis.transpose() * x).norm();
  }

  /// Quasi-norm |||x||| = sum_h |E_h x|^{1/(2h+1)}.
  [[nodiscard]] double quasi_norm(const Vector& x) const {
    double s = 0.0;
    for (int h = 0; h <= k(); ++h) {
      s += std::pow(block_norm(h, x), 1.0 / (2.0 * h + 1.0));
    }
    return s;
  }

  [[nodiscard]] double distance(const Vector& x, const Vector& y) const { return quasi_norm(x - y); }

  /// Human readable form of the metric, e.g. "d = |E0.|^1 + |E1.|^(1/3)".
  [[nodiscard]] std::string metric_formula() const {
    std::ostringstream os;
    os << "d = ";
    for (int h = 0; h <= k(); ++h) {
      if (h > 0) {
        os << " + ";
      }
      os << "|E" << h << "·|^";
      if (h == 0) {
        os << "1";
      } else {
        os << "(1/" << 2 * h + 1 << ")";
      }
    }
    return os.str();
  }

 private:
  std::vector<KalmanBlock> blocks_;
  Matrix basis_;
  double rank_tol_;
  std::vector<int> level_;
};

/// Builds V_m = V_{m-1} + A^m span{e_1..e_p~} and the orthogonal blocks
/// W_m by Gram-Schmidt. Candidates are visited by generating power, then by
/// source index, so the reference basis is reproducible.
[[nodiscard]] inline KalmanDecomposition decompose(const OperatorSpec& spec,
                                                   double tol = kDefaultRankTol) {
  const int k = kalman_index(spec, tol);
  const auto n = static_cast<Eigen::Index>(spec.n());
  const auto p = static_cast<Eigen::Index>(spec.p_tilde());

  std::vector<Vector> accepted;
  std::vector<KalmanBlock> blocks;
  Matrix powers = Matrix::Identity(n, n).leftCols(p);
  for (int m = 0; m <= k; ++m) {
    if (m > 0) {
      powers = (spec.a() * powers).eval();
    }
    KalmanBlock block;
    std::vector<Vector> fresh;
    for (Eigen::Index i = 0; i < p; ++i) {
      const Vector cand = powers.col(i);
      const double cand_norm = cand.norm();
      if (cand_norm == 0.0) {
        continue;
      }
      Vector r = cand;
      // two passes of modified Gram-Schmidt
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : accepted) {
          r -= b.dot(r) * b;
        }
      }
      if (r.norm() > tol * cand_norm) {
        Vector b = r / r.norm();
        if (m == 0) {
          b = Vector::Unit(n, i);  // exact canonical vectors for V_0
        }
        block.indices.push_back(accepted.size());
        accepted.push_back(b);
        fresh.push_back(b);
      }
    }
    if (fresh.empty()) {
      throw NotHypoelliptic("Kalman rank condition fails: subspace chain stalls");
    }
    block.basis.resize(n, static_cast<Eigen::Index>(fresh.size()));
    for (std::size_t j = 0; j < fresh.size(); ++j) {
      block.basis.col(static_cast<Eigen::Index>(j)) = fresh[j];
    }
    block.projection = block.basis * block.basis.transpose();
    blocks.push_back(std::move(block));
  }
  if (static_cast<Eigen::Index>(accepted.size()) != n) {
    throw NotHypoelliptic("Gram-Schmidt and SVD ranks disagree; adjust rank tolerance");
  }
  Matrix basis(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    basis.col(j) = accepted[static_cast<std::size_t>(j)];
  }
  return KalmanDecomposition(std::move(blocks), std::move(basis), tol);
}

/// Free-function spelling of the quasi-norm.
[[nodiscard]] inline double quasi_norm(const KalmanDecomposition& dec, const Vector& x) {
  return dec.quasi_norm(x);
}

[[nodiscard]] inline double distance(const KalmanDecomposition& dec, const Vector& x,
                                     const Vector& y) {
  return dec.distance(x, y);
}

}  // namespace kolmo
