/**
 * @file gramian.hpp
 * @brief Controllability Gramian Q_t = int_0^t e^{sA} Q e^{sA*} ds.
 *
 * This is the covariance of the stochastic convolution
 * Z_t^0 = int_0^t e^{(t-s)A} Q^{1/2} dW_s.
 *
 * For small t the eigenvalues of Q_t spread over many decades
 * (|E_h Q_t E_h| ~ t^{2h+1}), so Q_t is never formed and factorized directly.
 * Instead, in the reference basis, with D_t = diag(t^{-(2h_i+1)/2}),
 *
 *   S_t = D_t Q_t D_t = int_0^1 e^{s M_t} N e^{s M_t^*} ds,
 *   M_t = t D_t A D_t^{-1},   N = t D_t Q D_t = diag(Q0, 0),
 *
 * where (M_t)_{ij} = t^{1 + h_j - h_i} A_ij only involves non-negative powers
 * of t because E_h A E_{h'} = 0 for h > h' + 1. S_t stays O(1) and well
 * conditioned as t -> 0; it is computed with the Van Loan block exponential.
 */
#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "kolmo/error.hpp"
#include "kolmo/linalg.hpp"
#include "kolmo/operator.hpp"

namespace kolmo {

/// Van Loan identity: for C = [[-M, N], [0, M^T]], exp(C) = [[F11, F12], [0, F22]]
/// and int_0^1 e^{sM} N e^{sM^T} ds = F22^T F12.
[[nodiscard]] inline Matrix van_loan_gramian(const Matrix& m, const Matrix& noise, double t = 1.0) {
  const auto n = m.rows();
  Matrix c = Matrix::Zero(2 * n, 2 * n);
  c.topLeftCorner(n, n) = -m;
  c.topRightCorner(n, n) = noise;
  c.bottomRightCorner(n, n) = m.transpose();
  const Matrix e = matrix_exp(c, t);
  return symmetrize(e.bottomRightCorner(n, n).transpose() * e.topRightCorner(n, n));
}

class Gramian {
 public:
  /// Gramians are computed for t >= kMinTime; below it SingularGramian is raised.
  static constexpr double kMinTime = 1e-12;

  Gramian(const OperatorSpec& spec, const KalmanDecomposition& dec, double t) : t_(t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw InvalidArgument("gramian: t must be positive and finite");
    }
    if (t < kMinTime) {
      throw SingularGramian("gramian: t below documented minimum scale " + std::to_string(kMinTime));
    }
    const auto n = static_cast<Eigen::Index>(spec.n());
    basis_ = dec.basis();
    levels_ = dec.levels();
    const Matrix a_ref = basis_.transpose() * spec.a() * basis_;
    const Matrix q_ref = basis_.transpose() * spec.q() * basis_;
    scaled_drift_ = Matrix::Zero(n, n);
    Matrix scaled_noise = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int hi = levels_[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < n; ++j) {
        const int hj = levels_[static_cast<std::size_t>(j)];
        // structurally zero: A maps V_m into V_{m+1}
        if (hi <= hj + 1) {
          scaled_drift_(i, j) = std::pow(t, 1 + hj - hi) * a_ref(i, j);
        }
        if (hi == 0 && hj == 0) {
          scaled_noise(i, j) = q_ref(i, j);
        }
      }
    }
    scaled_ = van_loan_gramian(scaled_drift_, scaled_noise);
    scale_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      scale_(i) = std::pow(t, (2.0 * levels_[static_cast<std::size_t>(i)] + 1.0) / 2.0);
    }
    const Matrix q_ref_t = scale_.asDiagonal() * scaled_ * scale_.asDiagonal();
    matrix_ = symmetrize(basis_ * q_ref_t * basis_.transpose());
    exp_ta_ = matrix_exp(spec.a(), t);

    Eigen::SelfAdjointEigenSolver<Matrix> es(scaled_);
    scaled_eigenvalues_ = es.eigenvalues();
    scaled_eigenvectors_ = es.eigenvectors();
    floor_ = clamp_floor(scaled_);
  }

  Gramian(const OperatorSpec& spec, double t) : Gramian(spec, decompose(spec), t) {}

  [[nodiscard]] double t() const { return t_; }
  /// Q_t in canonical coordinates.
  [[nodiscard]] const Matrix& matrix() const { return matrix_; }
  /// e^{tA}.
  [[nodiscard]] const Matrix& exp_ta() const { return exp_ta_; }
  /// Rescaled Gramian S_t (reference basis).
  [[nodiscard]] const Matrix& scaled() const { return scaled_; }
  /// t M_t-scaled drift used for S_t.
  [[nodiscard]] const Matrix& scaled_drift() const { return scaled_drift_; }
  /// Diagonal of D_t^{-1}: t^{(2h_i+1)/2}.
  [[nodiscard]] const Vector& scale() const { return scale_; }
  /// Eigenvalues of S_t before clamping (ascending).
  [[nodiscard]] const Vector& scaled_eigenvalues() const { return scaled_eigenvalues_; }
  /// Clamping floor max(eps * tr S_t, 1e-14).
  [[nodiscard]] double floor() const { return floor_; }

  [[nodiscard]] bool singular() const { return scaled_eigenvalues_(0) < floor_; }

  void require_nonsingular(const char* who) const {
    if (singular()) {
      throw SingularGramian(std::string(who) + ": rescaled Gramian eigenvalue " +
                            std::to_string(scaled_eigenvalues_(0)) + " below floor " +
                            std::to_string(floor_));
    }
  }

  /// Factor L with L L^T = Q_t, exact up to rounding at every scale:
  /// L = B D_t^{-1} S_t^{1/2}.
  [[nodiscard]] Matrix sampling_factor() const {
    const Vector ev = scaled_eigenvalues_.cwiseMax(0.0).cwiseSqrt();
    const Matrix root = scaled_eigenvectors_ * ev.asDiagonal() * scaled_eigenvectors_.transpose();
    return basis_ * scale_.asDiagonal() * root;
  }

  /// Symmetric Q_t^{1/2}, eigenvalues of Q_t clamped at max(eps tr, 1e-14).
  /// Loses relative accuracy in the fast-decaying blocks; prefer
  /// sampling_factor() or block_sqrt_norm() for small t.
  [[nodiscard]] Matrix sqrt() const { return sym_sqrt(matrix_, clamp_floor(matrix_)); }

  /// S_t^{-1/2} with clamped eigenvalues.
  [[nodiscard]] Matrix scaled_inv_sqrt() const {
    const Vector ev = scaled_eigenvalues_.cwiseMax(floor_).cwiseSqrt().cwiseInverse();
    return scaled_eigenvectors_ * ev.asDiagonal() * scaled_eigenvectors_.transpose();
  }

  /// |Q_t^{-1/2} e^{tA} e_i| for the i-th reference basis vector.
  [[nodiscard]] double whitened_direction_norm(std::size_t i) const {
    require_nonsingular("whitened_direction_norm");
    const auto n = scaled_.rows();
    if (i >= static_cast<std::size_t>(n)) {
      throw InvalidArgument("whitened_direction_norm: index out of range");
    }
    // D_t e^{tA} D_t^{-1} = e^{M_t}; D_t e_i = e_i / scale_i
    const Vector y = matrix_exp(scaled_drift_).col(static_cast<Eigen::Index>(i));
    return (scaled_inv_sqrt() * y).norm() / scale_(static_cast<Eigen::Index>(i));
  }

  /// |Q_t^{-1/2} e^{tA} v| for an arbitrary vector in canonical coordinates.
  [[nodiscard]] double whitened_norm(const Vector& v) const {
    require_nonsingular("whitened_norm");
    const Vector ref = basis_.transpose() * v;
    const Vector y = matrix_exp(scaled_drift_) * ref.cwiseQuotient(scale_);
    return (scaled_inv_sqrt() * y).norm();
  }

  /// ||E_h Q_t^{1/2}|| = t^{(2h+1)/2} sqrt(lambda_max(S_hh)).
  [[nodiscard]] double block_sqrt_norm(int h) const {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (levels_[i] == h) {
        idx.push_back(static_cast<Eigen::Index>(i));
      }
    }
    if (idx.empty()) {
      throw InvalidArgument("block_sqrt_norm: empty block");
    }
    Matrix sub(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = 0; b < idx.size(); ++b) {
        sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = scaled_(idx[a], idx[b]);
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
    return std::pow(t_, (2.0 * h + 1.0) / 2.0) * std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }

 private:
  double t_;
  Matrix basis_;
  std::vector<int> levels_;
  Matrix scaled_drift_;
  Matrix scaled_;
  Vector scale_;
  Matrix matrix_;
  Matrix exp_ta_;
  Vector scaled_eigenvalues_;
  Matrix scaled_eigenvectors_;
  double floor_ = 0.0;
};

[[nodiscard]] inline Gramian gramian(const OperatorSpec& spec, double t) { return Gramian(spec, t); }

[[nodiscard]] inline Gramian gramian(const OperatorSpec& spec, const KalmanDecomposition& dec,
                                     double t) {
  return Gramian(spec, dec, t);
}

/// Q_t for a possibly non-hypoelliptic operator, by Van Loan without rescaling.
[[nodiscard]] inline Matrix raw_gramian(const OperatorSpec& spec, double t) {
  return van_loan_gramian(spec.a(), spec.q(), t);
}

/// |Q_t^{-1/2} e^{tA} e_i|, e_i the i-th reference basis vector (0-based).
[[nodiscard]] inline double whitened_direction_norm(const OperatorSpec& spec,
                                                    const KalmanDecomposition& dec, double t,
                                                    std::size_t i) {
  return Gramian(spec, dec, t).whitened_direction_norm(i);
}

}  // namespace kolmo
