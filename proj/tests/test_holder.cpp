#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_support.hpp"

using kolmo::Matrix;
using kolmo::ScalarField;
using kolmo::Vector;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

ScalarField cos_y() {
  ScalarField f;
  f.eval = [](const Vector& x) { return std::cos(x(1)); };
  f.box = kolmo::Box::cube(2);
  f.label = "cos_y";
  return f;
}

/// Dense-grid brute force of the same supremum: 40 log-spaced scales per
/// block (both signs), the protocol's normalization, and a 200 x 200 grid of
/// base points over the feasible part of the box.
double grid_oracle_cos_y(double gamma) {
  const int scales = 40;
  const int grid = 200;
  double best = 0.0;
  for (int i0 = 0; i0 < scales; ++i0) {
    for (int i1 = 0; i1 < scales; ++i1) {
      double s0 = std::pow(10.0, -3.0 + 3.0 * i0 / (scales - 1));
      double s1 = std::pow(10.0, -3.0 + 3.0 * i1 / (scales - 1));
      if (s0 + s1 > 1.0) {
        const double sum = s0 + s1;
        s0 /= sum;
        s1 /= sum;
      }
      const double vy = s1 * s1 * s1;  // |E_1 v| = s1^3
      const double qn = s0 + s1;
      for (int sign : {1, -1}) {
        const double v = sign * vy;
        const double lo = -5.0 + std::max(0.0, -3.0 * v);
        const double hi = 5.0 - std::max(0.0, 3.0 * v);
        for (int g = 0; g < grid; ++g) {
          const double y = lo + (hi - lo) * (g + 0.5) / grid;
          const double d3 = std::cos(y) - 3 * std::cos(y + v) + 3 * std::cos(y + 2 * v) - std::cos(y + 3 * v);
          best = std::max(best, std::abs(d3) / std::pow(qn, gamma));
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST(ThirdDifference, WorkedValues) {
  ScalarField cube;
  cube.eval = [](const Vector& x) { return x(0) * x(0) * x(0); };
  cube.box = kolmo::Box::cube(1);
  Vector x = Vector::Zero(1);
  Vector v = Vector::Ones(1);
  EXPECT_EQ(kolmo::third_difference(cube, x, v), -6.0);
  EXPECT_EQ(kolmo::third_difference(kolmo::fields::constant(1, 2.5), x, v), 0.0);
  EXPECT_EQ(kolmo::third_difference_values({1.0, 2.0, 4.0, 8.0}), 1.0 - 6.0 + 12.0 - 8.0);
}

TEST(ThirdDifference, AnnihilatesQuadratics) {
  kt::Gen gen(30);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = kolmo::fields::quadratic(gen.matrix(3, 3), gen.vector(3), gen.normal());
    const Vector x = gen.vector(3);
    const Vector v = gen.vector(3, 0.3);
    EXPECT_NEAR(kolmo::third_difference(f, x, v), 0.0, 1e-12) << trial;
  }
}

TEST(ThirdDifference, OutOfDomain) {
  const auto f = kolmo::fields::constant(2, 1.0);
  EXPECT_THROW((void)kolmo::third_difference(f, vec2(4.0, 0.0), vec2(1.0, 0.0)), kolmo::OutOfDomain);
}

TEST(HolderSeminorm, RejectsIntegerGammaAndTinyBox) {
  const auto dec = kolmo::decompose(kt::example_2d());
  const auto f = kolmo::fields::constant(2, 1.0);
  EXPECT_THROW((void)kolmo::holder_seminorm(f, 1.0, dec, 10, 1), kolmo::InvalidArgument);
  EXPECT_THROW((void)kolmo::holder_seminorm(f, 2.0 + 1e-10, dec, 10, 1), kolmo::InvalidArgument);
  EXPECT_THROW((void)kolmo::holder_seminorm(f, 3.5, dec, 10, 1), kolmo::InvalidArgument);
  auto tiny = f;
  tiny.box = kolmo::Box{vec2(0.0, 0.0), vec2(1e-3, 1.0)};
  EXPECT_THROW((void)kolmo::holder_seminorm(tiny, 0.5, dec, 10, 1), kolmo::DegenerateBox);
}

TEST(HolderSeminorm, SamplesRespectProtocol) {
  const auto dec = kolmo::decompose(kt::shift_3d());
  const auto box = kolmo::Box::cube(3);
  for (std::uint64_t j = 0; j < 2000; ++j) {
    const auto s = kolmo::holder_sample(dec, box, 5, j);
    EXPECT_LE(s.quasi_norm, 1.0 + 1e-12);
    EXPECT_TRUE(box.contains(s.x));
    EXPECT_TRUE(box.contains(s.x + 3.0 * s.v));
    const auto again = kolmo::holder_sample(dec, box, 5, j);
    EXPECT_EQ(s.x, again.x);
    EXPECT_EQ(s.v, again.v);
  }
}

TEST(HolderSeminorm, AnnihilatesQuadraticsForEveryGamma) {
  const auto dec = kolmo::decompose(kt::example_2d());
  Matrix m(2, 2);
  m << 1.0, 0.5, 0.5, -2.0;
  const auto f = kolmo::fields::quadratic(m, vec2(0.3, -1.0), 2.0);
  for (double gamma : {0.3, 0.5, 1.5, 2.5, 2.9}) {
    // Zero up to rounding of the four evaluations, divided by the smallest |||v|||^gamma.
    const auto est = kolmo::holder_seminorm(f, gamma, dec, 2000, 3);
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * est.sup *
                         std::pow(est.scale_range[0], -gamma);
    EXPECT_LT(est.value, floor) << gamma;
  }
}

TEST(HolderSeminorm, CosYMatchesGridOracle) {
  const auto dec = kolmo::decompose(kt::example_2d());
  const double oracle = grid_oracle_cos_y(0.5);
  const auto est = kolmo::holder_seminorm(cos_y(), 0.5, dec, 200000, 7);
  EXPECT_GT(est.value, 0.0);
  EXPECT_LE(std::abs(est.value - oracle), 0.1 * oracle) << est.value << " vs " << oracle;
  // Witness reproduces the value.
  const double w = std::abs(kolmo::third_difference(cos_y(), est.witness_x, est.witness_v)) /
                   std::pow(dec.quasi_norm(est.witness_v), 0.5);
  EXPECT_DOUBLE_EQ(w, est.value);
  EXPECT_GE(est.scale_range[0], 0.0);
  EXPECT_LE(est.scale_range[1], 1.0 + 1e-12);
}

TEST(HolderSeminorm, QuasiNormPowerIsBoundedIndependentlyOfBudget) {
  const auto dec = kolmo::decompose(kt::example_2d());
  const double gamma = 0.5;
  ScalarField f;
  f.eval = [&dec, gamma](const Vector& x) { return std::pow(dec.quasi_norm(x), gamma); };
  f.box = kolmo::Box{vec2(-1.0, -1.0), vec2(1.0, 1.0)};
  // |f(x) - f(y)| <= d(x, y)^gamma, so |Delta^3_v f| <= 4 |||v|||^gamma.
  double previous = 0.0;
  for (std::size_t budget : {1000u, 10000u, 100000u}) {
    const double v = kolmo::holder_seminorm(f, gamma, dec, budget, 8).value;
    EXPECT_LE(v, 4.0);
    EXPECT_GE(v, previous);
    previous = v;
  }
  EXPECT_GT(previous, 0.5);
}

TEST(HolderSeminorm, MonotoneInBudget) {
  const auto dec = kolmo::decompose(kt::shift_3d());
  Vector w(3);
  w << 1.0, -0.5, 0.7;
  const auto f = kolmo::fields::trig(w);
  double previous = 0.0;
  for (std::size_t budget = 16; budget <= 8192; budget *= 2) {
    const double v = kolmo::holder_seminorm(f, 1.5, dec, budget, 9).value;
    EXPECT_GE(v, previous);
    previous = v;
  }
}

TEST(HolderSeminorm, Homogeneity) {
  const auto dec = kolmo::decompose(kt::example_2d());
  const auto f = kolmo::fields::tanh_ridge(vec2(1.0, 0.3), 1.0, 0.2);
  const double base = kolmo::holder_seminorm(f, 0.7, dec, 4000, 10).value;
  EXPECT_EQ(kolmo::holder_seminorm(f.scaled(2.0), 0.7, dec, 4000, 10).value, 2.0 * base);
  EXPECT_NEAR(kolmo::holder_seminorm(f.scaled(-3.0), 0.7, dec, 4000, 10).value, 3.0 * base, 1e-12 * base);
  EXPECT_EQ(kolmo::holder_norm(f.scaled(2.0), 0.7, dec, 4000, 10), 2.0 * kolmo::holder_norm(f, 0.7, dec, 4000, 10));
}

TEST(HolderNorm, ConstantField) {
  const auto dec = kolmo::decompose(kt::example_2d());
  EXPECT_EQ(kolmo::holder_norm(kolmo::fields::constant(2, -1.5), 0.5, dec, 500, 11), 1.5);
}

TEST(HolderNorm, CosX1IsOnePlusSeminorm) {
  const auto dec = kolmo::decompose(kt::example_2d());
  const auto f = kolmo::fields::trig(vec2(1.0, 0.0));
  const auto est = kolmo::holder_seminorm(f, 0.5, dec, 50000, 12);
  EXPECT_NEAR(est.sup, 1.0, 1e-3);
  EXPECT_EQ(kolmo::holder_norm(f, 0.5, dec, 50000, 12), est.sup + est.value);
}

TEST(HolderSeminorm, IsotropicCaseIsEuclideanZygmund) {
  const auto spec = kt::isotropic(2);
  const auto dec = kolmo::decompose(spec);
  ASSERT_EQ(dec.k(), 0);
  const auto f = kolmo::fields::tanh_ridge(vec2(2.0, -1.0));
  const double gamma = 1.3;
  const std::size_t budget = 3000;
  const auto est = kolmo::holder_seminorm(f, gamma, dec, budget, 13);
  double euclid = 0.0;
  for (std::size_t j = 0; j < budget; ++j) {
    const auto s = kolmo::holder_sample(dec, f.box, 13, j);
    euclid = std::max(euclid, std::abs(kolmo::third_difference(f, s.x, s.v)) / std::pow(s.v.norm(), gamma));
  }
  EXPECT_NEAR(est.value, euclid, 1e-12 * euclid);
}
