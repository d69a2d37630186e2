#include <gtest/gtest.h>

#include "test_support.hpp"

using kolmo::Matrix;
using kolmo::Vector;

TEST(MatrixExp, ZeroIsIdentity) {
  EXPECT_EQ(kolmo::matrix_exp(Matrix::Zero(3, 3)), Matrix::Identity(3, 3));
}

TEST(MatrixExp, IdempotentClosedForm) {
  const Matrix a = kt::example_2d().a();
  for (double t : {1e-6, 0.01, 0.5, 1.0, 3.0}) {
    const Matrix expected = Matrix::Identity(2, 2) + std::expm1(t) * a;
    EXPECT_LT(kt::rel_err(kolmo::matrix_exp(a, t), expected), 1e-14) << t;
  }
}

TEST(MatrixExp, NilpotentShiftIsPolynomial) {
  const Matrix a = kt::shift_3d().a();
  for (double t : {1e-4, 0.3, 2.0, 10.0}) {
    const Matrix expected = Matrix::Identity(3, 3) + t * a + 0.5 * t * t * a * a;
    EXPECT_LT(kt::rel_err(kolmo::matrix_exp(a, t), expected), 1e-14) << t;
  }
}

TEST(MatrixExp, MatchesTaylorSeriesOnRandomMatrices) {
  kt::Gen gen(1);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = gen.integer(1, 6);
    const Matrix a = gen.matrix(n, n, gen.uniform(0.01, 1.5));
    EXPECT_LT(kt::rel_err(kolmo::matrix_exp(a), kt::exp_series(a)), 1e-12) << trial;
  }
}

TEST(MatrixExp, SemigroupProperty) {
  kt::Gen gen(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = gen.integer(2, 5);
    const Matrix a = gen.matrix(n, n, 2.0);
    const double s = gen.uniform(0.0, 2.0);
    const double t = gen.uniform(0.0, 2.0);
    const Matrix lhs = kolmo::matrix_exp(a, s + t);
    const Matrix rhs = kolmo::matrix_exp(a, s) * kolmo::matrix_exp(a, t);
    EXPECT_LT(kt::rel_err(lhs, rhs), 1e-11) << trial;
  }
}

TEST(MatrixExp, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW((void)kolmo::matrix_exp(Matrix::Zero(2, 3)), kolmo::InvalidArgument);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW((void)kolmo::matrix_exp(bad), kolmo::InvalidArgument);
}

TEST(SymmetricRoots, SquareRootSquaresBack) {
  kt::Gen gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = gen.integer(1, 6);
    const Matrix m = gen.spd(n);
    const Matrix s = kolmo::sym_sqrt(m);
    EXPECT_LT(kt::rel_err(s * s, m), 1e-12);
    EXPECT_LT(kt::rel_err(s, s.transpose()), 1e-14);
    const Matrix is = kolmo::sym_inv_sqrt(m, 0.0);
    EXPECT_LT(kt::rel_err(is * m * is, Matrix::Identity(n, n)), 1e-11);
  }
}

TEST(SymmetricRoots, FloorClampsNegativeEigenvalues) {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1e-20;
  const Matrix s = kolmo::sym_sqrt(m, 1e-14);
  EXPECT_NEAR(s(1, 1), 1e-7, 1e-20);
  EXPECT_DOUBLE_EQ(kolmo::clamp_floor(Matrix::Zero(2, 2)), 1e-14);
}

TEST(OpNorm, SpectralNorm) {
  Matrix m(2, 2);
  m << 3.0, 0.0, 4.0, 0.0;
  EXPECT_NEAR(kolmo::op_norm(m), 5.0, 1e-14);
}
