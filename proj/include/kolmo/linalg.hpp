/**
 * @file linalg.hpp
 * @brief Dense linear algebra helpers: matrix exponential, symmetric
 *        factorizations and norms.
 */
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "kolmo/error.hpp"

namespace kolmo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

// Pade approximants r_m = (V+U)/(V-U) of exp, Higham (2005) coefficients.
inline void pade3(const Matrix& a, Matrix& u, Matrix& v) {
  constexpr std::array<double, 4> b = {120.0, 60.0, 12.0, 1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  u.noalias() = a * (b[3] * a2 + b[1] * id);
  v = b[2] * a2 + b[0] * id;
}

inline void pade5(const Matrix& a, Matrix& u, Matrix& v) {
  constexpr std::array<double, 6> b = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  u.noalias() = a * (b[5] * a4 + b[3] * a2 + b[1] * id);
  v = b[4] * a4 + b[2] * a2 + b[0] * id;
}

inline void pade7(const Matrix& a, Matrix& u, Matrix& v) {
  constexpr std::array<double, 8> b = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                       25200.0,    1512.0,    56.0,      1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  u.noalias() = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

inline void pade9(const Matrix& a, Matrix& u, Matrix& v) {
  constexpr std::array<double, 10> b = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                        30270240.0,    2162160.0,    110880.0,     3960.0,
                                        90.0,          1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix a8 = a6 * a2;
  u.noalias() = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

inline void pade13(const Matrix& a, Matrix& u, Matrix& v) {
  constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  const Matrix id = Matrix::Identity(a.rows(), a.cols());
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  Matrix tmp = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
  tmp += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  u.noalias() = a * tmp;
  v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2);
  v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace detail

/// Returns exp(t*M) by scaling and squaring with a diagonal Pade core.
/// The approximant degree and the number of squarings follow the 1-norm
/// thresholds of Higham (2005), which give double-precision backward error.
[[nodiscard]] inline Matrix matrix_exp(const Matrix& m, double t = 1.0) {
  if (m.rows() != m.cols()) {
    throw InvalidArgument("matrix_exp: matrix must be square");
  }
  const Matrix a = t * m;
  if (!a.allFinite()) {
    throw InvalidArgument("matrix_exp: non-finite input");
  }
  const auto n = a.rows();
  if (n == 0) {
    return a;
  }
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  Matrix u(n, n);
  Matrix v(n, n);
  int squarings = 0;
  if (norm1 <= 1.495585217958292e-2) {
    detail::pade3(a, u, v);
  } else if (norm1 <= 2.539398330063230e-1) {
    detail::pade5(a, u, v);
  } else if (norm1 <= 9.504178996162932e-1) {
    detail::pade7(a, u, v);
  } else if (norm1 <= 2.097847961257068e0) {
    detail::pade9(a, u, v);
  } else {
    constexpr double theta13 = 5.371920351148152e0;
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
    const Matrix scaled = a * std::ldexp(1.0, -squarings);
    detail::pade13(scaled, u, v);
  }
  Matrix result = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) {
    result = (result * result).eval();
  }
  return result;
}

/// Spectral (2-)norm of a matrix; 0 for empty matrices.
[[nodiscard]] inline double op_norm(const Matrix& m) {
  if (m.size() == 0) {
    return 0.0;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Symmetric part (M + M^T)/2.
[[nodiscard]] inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Symmetric square root of a symmetric positive semi-definite matrix,
/// eigenvalues clamped below at @p floor.
[[nodiscard]] inline Matrix sym_sqrt(const Matrix& m, double floor = 0.0) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector ev = es.eigenvalues().cwiseMax(floor).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Symmetric inverse square root, eigenvalues clamped below at @p floor.
[[nodiscard]] inline Matrix sym_inv_sqrt(const Matrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector ev = es.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Clamping floor for symmetric factorizations: max(eps * trace, 1e-14).
[[nodiscard]] inline double clamp_floor(const Matrix& m) {
  return std::max(std::numeric_limits<double>::epsilon() * m.trace(), 1e-14);
}

}  // namespace kolmo
