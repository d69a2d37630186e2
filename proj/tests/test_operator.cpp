#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "test_support.hpp"

using kolmo::Matrix;
using kolmo::Vector;

namespace {

/// Rank of [Q^{1/2}, A Q^{1/2}, ..., A^m Q^{1/2}] by full SVD, for each m.
int brute_force_index(const kolmo::OperatorSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.n());
  Matrix blocks = spec.sqrt_q();
  Matrix power = spec.sqrt_q();
  for (int m = 0; m < n; ++m) {
    Eigen::JacobiSVD<Matrix> svd(blocks);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 1e-10 * sv(0)) ++rank;
    }
    if (rank == n) return m;
    power = spec.a() * power;
    Matrix next(n, blocks.cols() + n);
    next << blocks, power;
    blocks = next;
  }
  return -1;
}

}  // namespace

TEST(OperatorSpec, ValidatesHypotheses) {
  Matrix q0(1, 1);
  q0 << 1.0;
  Matrix a = Matrix::Zero(2, 2);
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.4, 1.0;
  EXPECT_THROW(kolmo::OperatorSpec(asym, a), kolmo::InvalidArgument);
  Matrix indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(kolmo::OperatorSpec(indefinite, a), kolmo::InvalidArgument);
  EXPECT_THROW(kolmo::OperatorSpec(Matrix::Identity(3, 3), a), kolmo::InvalidArgument);
  // Drift acting on a coordinate outside the noise block.
  Vector dir(2);
  dir << 1.0, 0.0;
  EXPECT_THROW(kolmo::OperatorSpec(q0, a, kolmo::DriftField(2, {{1, 1.0, dir, 0.0}})), kolmo::InvalidArgument);
  EXPECT_NO_THROW(kolmo::OperatorSpec(q0, a, kolmo::DriftField(2, {{0, 1.0, dir, 0.0}})));
}

TEST(OperatorSpec, EigenvalueBoundsOfQ0) {
  Matrix q0(2, 2);
  q0 << 2.0, 1.0, 1.0, 2.0;
  const kolmo::OperatorSpec spec(q0, Matrix::Zero(2, 2));
  EXPECT_NEAR(spec.nu1(), 1.0, 1e-14);
  EXPECT_NEAR(spec.nu2(), 3.0, 1e-14);
  EXPECT_LT(kt::rel_err(spec.sqrt_q() * spec.sqrt_q(), q0), 1e-14);
}

TEST(KalmanIndex, WorkedExamples) {
  EXPECT_EQ(kolmo::kalman_index(kt::example_2d()), 1);
  EXPECT_EQ(kolmo::kalman_index(kt::shift_3d()), 2);
  EXPECT_EQ(kolmo::kalman_index(kt::isotropic(3)), 0);
  kt::Gen gen(10);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = gen.integer(1, 5);
    const kolmo::OperatorSpec spec(gen.spd(n), gen.matrix(n, n));
    EXPECT_EQ(kolmo::kalman_index(spec), 0);
  }
}

TEST(KalmanIndex, RejectsNonHypoelliptic) {
  Matrix q0(1, 1);
  q0 << 1.0;
  EXPECT_THROW((void)kolmo::kalman_index(kolmo::OperatorSpec(q0, Matrix::Zero(2, 2))), kolmo::NotHypoelliptic);
  EXPECT_THROW((void)kolmo::decompose(kolmo::OperatorSpec(q0, Matrix::Zero(2, 2))), kolmo::NotHypoelliptic);
  Matrix a = Matrix::Zero(3, 3);
  a(1, 0) = 1.0;  // e3 is never reached
  EXPECT_THROW((void)kolmo::kalman_index(kolmo::OperatorSpec(q0, a)), kolmo::NotHypoelliptic);
}

TEST(KalmanIndex, AgreesWithBruteForceRankOnRandomOperators) {
  kt::Gen gen(11);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = gen.integer(2, 5);
    const auto p = gen.integer(1, static_cast<int>(n));
    Matrix a = gen.matrix(n, n);
    // Sparsify sometimes so that larger indices occur.
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (gen.uniform(0.0, 1.0) < 0.5) a(i, j) = 0.0;
    const kolmo::OperatorSpec spec(gen.spd(p), a);
    const int expected = brute_force_index(spec);
    if (expected < 0) {
      EXPECT_THROW((void)kolmo::kalman_index(spec), kolmo::NotHypoelliptic);
    } else {
      EXPECT_EQ(kolmo::kalman_index(spec), expected);
      ++checked;
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Decompose, TwoDimensionalExampleBlocks) {
  const auto dec = kolmo::decompose(kt::example_2d());
  ASSERT_EQ(dec.k(), 1);
  Matrix e0 = Matrix::Zero(2, 2);
  e0(0, 0) = 1.0;
  Matrix e1 = Matrix::Zero(2, 2);
  e1(1, 1) = 1.0;
  EXPECT_LT((dec.projection(0) - e0).norm(), 1e-14);
  EXPECT_LT((dec.projection(1) - e1).norm(), 1e-14);
  EXPECT_EQ(dec.block(0).indices, std::vector<std::size_t>{0});
  EXPECT_EQ(dec.block(1).indices, std::vector<std::size_t>{1});
  EXPECT_EQ(dec.metric_formula(), "d = |E0·|^1 + |E1·|^(1/3)");
}

TEST(Decompose, ShiftExampleAxes) {
  const auto dec = kolmo::decompose(kt::shift_3d());
  ASSERT_EQ(dec.k(), 2);
  for (int h = 0; h <= 2; ++h) {
    Matrix e = Matrix::Zero(3, 3);
    e(h, h) = 1.0;
    EXPECT_LT((dec.projection(h) - e).norm(), 1e-14) << h;
  }
}

TEST(Decompose, FullNoiseIsSingleBlock) {
  const auto dec = kolmo::decompose(kt::isotropic(4));
  EXPECT_EQ(dec.k(), 0);
  EXPECT_LT((dec.projection(0) - Matrix::Identity(4, 4)).norm(), 1e-14);
}

TEST(Decompose, InvariantsOnRandomHypoellipticOperators) {
  kt::Gen gen(12);
  int checked = 0;
  for (int trial = 0; trial < 80 && checked < 30; ++trial) {
    const auto n = gen.integer(2, 6);
    const auto p = gen.integer(1, static_cast<int>(n));
    const kolmo::OperatorSpec spec(gen.spd(p), gen.matrix(n, n));
    std::optional<kolmo::KalmanDecomposition> maybe;
    try {
      maybe = kolmo::decompose(spec);
    } catch (const kolmo::NotHypoelliptic&) {
      continue;
    }
    const auto& dec = *maybe;
    ++checked;
    Matrix sum = Matrix::Zero(n, n);
    for (int h = 0; h <= dec.k(); ++h) {
      const Matrix& e = dec.projection(h);
      EXPECT_LT((e * e - e).norm(), 1e-10);
      EXPECT_LT((e - e.transpose()).norm(), 1e-10);
      EXPECT_GT(dec.block(h).indices.size(), 0u);
      for (int g = 0; g < h; ++g) {
        EXPECT_LT((e * dec.projection(g)).norm(), 1e-10);
      }
      sum += e;
    }
    EXPECT_LT((sum - Matrix::Identity(n, n)).norm(), 1e-10);
    // range(E0) is exactly span{e_1..e_p}.
    Matrix e0 = Matrix::Zero(n, n);
    e0.topLeftCorner(p, p).setIdentity();
    EXPECT_LT((dec.projection(0) - e0).norm(), 1e-12);
    EXPECT_LT((dec.basis().leftCols(p) - Matrix::Identity(n, n).leftCols(p)).norm(), 1e-15);
    EXPECT_LT((dec.basis().transpose() * dec.basis() - Matrix::Identity(n, n)).norm(), 1e-10);
    EXPECT_EQ(dec.k(), kolmo::kalman_index(spec));
  }
  EXPECT_GE(checked, 10);
}

TEST(QuasiNorm, WorkedValues) {
  const auto dec2 = kolmo::decompose(kt::example_2d());
  Vector x(2);
  x << 1.0, 8.0;
  EXPECT_NEAR(dec2.quasi_norm(x), 3.0, 1e-14);
  EXPECT_EQ(dec2.quasi_norm(Vector::Zero(2)), 0.0);
  const auto dec3 = kolmo::decompose(kt::shift_3d());
  Vector z(3);
  z << 0.0, 0.0, 32.0;
  EXPECT_NEAR(dec3.quasi_norm(z), 2.0, 1e-14);
  EXPECT_NEAR(kolmo::distance(dec2, x, Vector::Zero(2)), 3.0, 1e-14);
}

TEST(QuasiNorm, MetricPropertiesOnRandomTriples) {
  const auto dec = kolmo::decompose(kt::shift_3d());
  kt::Gen gen(13);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector x = gen.vector(3, gen.uniform(0.01, 10.0));
    const Vector y = gen.vector(3, gen.uniform(0.01, 10.0));
    const Vector z = gen.vector(3, gen.uniform(0.01, 10.0));
    EXPECT_DOUBLE_EQ(dec.distance(x, y), dec.distance(y, x));
    EXPECT_LE(dec.distance(x, z), dec.distance(x, y) + dec.distance(y, z) + 1e-12);
    EXPECT_GT(dec.distance(x, y), 0.0);
  }
}

TEST(DriftField, DerivativesMatchFiniteDifferences) {
  kt::Gen gen(14);
  Vector a1 = gen.vector(3);
  Vector a2 = gen.vector(3);
  const kolmo::DriftField f(3, {{0, 0.7, a1, 0.3}, {1, -0.4, a2, -0.2}, {0, 0.2, a2, 0.1}});
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = gen.vector(3);
    const Vector u = gen.vector(3);
    const Vector v = gen.vector(3);
    const Vector w = gen.vector(3);
    const double h = 1e-4;
    Matrix jac;
    f.jacobian(x, jac);
    const Vector fd1 = (f(x + h * u) - f(x - h * u)) / (2 * h);
    EXPECT_LT((jac * u - fd1).norm(), 1e-7);
    Matrix jp;
    Matrix jm;
    f.jacobian(x + h * v, jp);
    f.jacobian(x - h * v, jm);
    const Vector fd2 = (jp - jm) * u / (2 * h);
    EXPECT_LT((f.second(x, u, v) - fd2).norm(), 1e-7);
    const Vector fd3 = (f.second(x + h * w, u, v) - f.second(x - h * w, u, v)) / (2 * h);
    EXPECT_LT((f.third(x, u, v, w) - fd3).norm(), 1e-6);
  }
}

TEST(DriftField, BoundsDominateSampledDerivatives) {
  kt::Gen gen(15);
  const Vector a = gen.vector(2);
  const kolmo::DriftField f(2, {{0, 0.5, a, 0.0}});
  EXPECT_NEAR(f.jacobian_bound(), 0.5 * a.norm(), 1e-15);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = gen.vector(2, 3.0);
    Matrix jac;
    f.jacobian(x, jac);
    EXPECT_LE(kolmo::op_norm(jac), f.jacobian_bound() + 1e-14);
    EXPECT_LE(f(x).norm(), f.sup_bound() + 1e-14);
  }
  EXPECT_TRUE(kolmo::DriftField(2, {}).empty());
}
