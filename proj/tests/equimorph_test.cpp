#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "circdyn/equimorph.hpp"

using namespace circdyn;

namespace {

std::shared_ptr<const LinearSystem> linear(const std::string& a) {
  return std::make_shared<LinearSystem>(LinearSystem::from_expression(a));
}

const std::shared_ptr<const LinearSystem>& minus_one() {
  static auto sys = linear("-1");
  return sys;
}
const std::shared_ptr<const LinearSystem>& minus_two() {
  static auto sys = linear("-2");
  return sys;
}
const std::shared_ptr<const LinearSystem>& wobbly() {
  static auto sys = linear("-2 - sin(t)");
  return sys;
}

// Composite Simpson on [t, t + 40] of exp(2 (A(u) - A(t))), A(u) = -2u + cos u.
double wobbly_s2(double t) {
  auto A = [](double u) { return -2.0 * u + std::cos(u); };
  const int n = 40000;
  const double h = 40.0 / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * std::exp(2.0 * (A(t + i * h) - A(t)));
  }
  return sum * h / 3.0;
}

}  // namespace

TEST(LinearSystem, ConstantCoefficientConstants) {
  const auto& a = *minus_one();
  EXPECT_NEAR(a.M(), 1.0, 1e-9);
  EXPECT_NEAR(a.lambda(), 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(a.a0(), 1.0);
  EXPECT_LE(a.dichotomy_residual(), 1e-9);
  EXPECT_TRUE(a.bounds_hold());
  for (double t : {-50.0, -3.3, 0.0, 0.005, 7.77, 99.0}) EXPECT_NEAR(a.s2(t), 0.5, 1e-11) << t;
  EXPECT_NEAR(a.Lambda(3.0, 1.0), -2.0, 1e-13);
}

TEST(LinearSystem, ScaleFunctionMatchesQuadrature) {
  const auto& b = *wobbly();
  EXPECT_LE(b.dichotomy_residual(), 1e-9);
  EXPECT_TRUE(b.bounds_hold());
  EXPECT_DOUBLE_EQ(b.a0(), 3.0);
  for (double t : {0.0, 0.123, 1.0, 2.5, 4.0, 10.017, 33.3}) {
    EXPECT_NEAR(b.s2(t), wobbly_s2(t), 1e-11) << t;
    EXPECT_GE(b.s2(t), b.s2_inf() * (1 - 1e-9));
    EXPECT_LE(b.s2(t), b.s2_sup() * (1 + 1e-9));
  }
  EXPECT_NEAR(b.Lambda(2.0, 0.5), -3.0 + std::cos(2.0) - std::cos(0.5), 1e-12);
}

TEST(LinearSystem, Rejections) {
  EXPECT_THROW(LinearSystem::from_expression("-1 - x"), EquimorphError);
  EXPECT_THROW(LinearSystem::from_expression("1"), EquimorphError);
  EXPECT_THROW(LinearSystem::from_expression("-1 + q"), std::exception);
}

TEST(Crossing, ClosedForm) {
  SemiStrip strip{minus_one(), 1.0};
  const auto c = crossing_time(strip, 0.5, 10.0);
  EXPECT_NEAR(c.T, 10.0 + std::log(0.5), 1e-10);
  EXPECT_NEAR(c.T, 9.30685, 1e-5);
  EXPECT_LE(c.residual, 1e-12 * std::sqrt(0.5));
  EXPECT_DOUBLE_EQ(crossing_time(strip, 1.0, 4.0).T, 4.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uc(1e-6, 1.0), ut(0.0, 30.0);
  for (int i = 0; i < 200; ++i) {
    const double C = uc(rng), tau = ut(rng);
    EXPECT_NEAR(crossing_time(strip, C, tau).T, tau + std::log(C), 1e-10);
  }
}

TEST(Crossing, SmallCGrowthWithinBounds) {
  SemiStrip strip{wobbly(), 1.0};
  const auto& b = *wobbly();
  const double s_inf = std::sqrt(b.s2_inf()), s_sup = std::sqrt(b.s2_sup());
  for (double tau : {0.0, 5.0, 20.0}) {
    for (double C : {1e-2, 1e-4, 1e-6, 1e-8}) {
      const auto c = crossing_time(strip, C, tau);
      const double gap = tau - c.T;
      EXPECT_LE(gap, std::log(b.M() * s_sup / (C * s_inf)) / b.lambda() + 1e-9);
      EXPECT_GE(gap, std::log(s_inf / (C * s_sup)) / b.a0() - 1e-9);
      EXPECT_LE(c.residual, 1e-12 * b.s(tau));
    }
  }
}

TEST(Crossing, Errors) {
  SemiStrip strip{minus_one(), 1.0};
  EXPECT_THROW(crossing_time(strip, 0.0, 1.0), EquimorphError);
  EXPECT_THROW(crossing_time(strip, 1.5, 1.0), EquimorphError);
  EXPECT_THROW(crossing_time(strip, 1e-300, 1.0), EquimorphError);
}

TEST(PhiMap, IdentityPair) {
  SemiStrip s{wobbly(), 1.0};
  for (double C : {1e-5, 0.01, 0.3, 0.77, 1.0}) {
    for (double tau : {0.0, 2.0, 13.0}) {
      const auto [C1, tau1] = phi_map(s, s, C, tau);
      EXPECT_NEAR(C1, C, 1e-12 * std::max(1.0, C));
      EXPECT_EQ(tau1, tau);
    }
  }
}

TEST(PhiMap, ClosedFormSquare) {
  SemiStrip a{minus_one(), 1.0}, b{minus_two(), 1.0};
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uc(1e-3, 1.0), ut(0.0, 20.0);
  for (int i = 0; i < 100; ++i) {
    const double C = uc(rng), tau = ut(rng);
    const auto [C1, tau1] = phi_map(a, b, C, tau);
    EXPECT_NEAR(C1, C * C, 1e-10);
    EXPECT_EQ(tau1, tau);
  }
}

TEST(PhiMap, BoundaryToBoundaryAndMonotone) {
  SemiStrip a{minus_one(), 1.0}, b{wobbly(), 0.7};
  for (double tau = 0.0; tau <= 20.0; tau += 0.5) {
    EXPECT_NEAR(phi_map(a, b, 1.0, tau).first, 0.7, 1e-13);
    double prev = 0.0;
    for (double C = 0.02; C <= 1.0; C += 0.02) {
      const double C1 = phi_map(a, b, C, tau).first;
      EXPECT_GT(C1, prev);
      prev = C1;
    }
  }
}

TEST(PhiMap, XCoordinatesOddAndFixZero) {
  SemiStrip a{minus_one(), 1.0}, b{wobbly(), 1.0};
  EXPECT_EQ(phi_x(a, b, 0.0, 3.0), 0.0);
  for (double x : {1e-4, 0.1, 0.9, 1.4}) {
    EXPECT_EQ(phi_x(a, b, -x, 3.0), -phi_x(a, b, x, 3.0));
    EXPECT_GT(phi_x(a, b, x, 3.0), 0.0);
  }
  // x -> 0 continuously.
  EXPECT_LT(std::abs(phi_x(a, b, 1e-8, 3.0)), 1e-6);
}

TEST(Verify, IdentityPair) {
  SemiStrip s{minus_one(), 1.0};
  const auto r = verify_equimorphism(s, s, 30, {1e-3, 1e-2, 0.1});
  EXPECT_LE(r.conjugacy_residual, 1e-12);
  EXPECT_TRUE(r.tau_preserved);
  EXPECT_LE(r.boundary_residual, 1e-14);
  ASSERT_EQ(r.modulus.size(), 3u);
  for (const auto& m : r.modulus) EXPECT_NEAR(m.sup_displacement, m.delta, 1e-9 * m.delta);
  EXPECT_TRUE(r.passed());
}

TEST(Verify, WobblyPair) {
  SemiStrip a{minus_one(), 1.0}, b{wobbly(), 1.0};
  const auto r = verify_equimorphism(a, b, 100, {1e-3, 1e-2, 0.1});
  EXPECT_LE(r.conjugacy_residual, 1e-8);
  EXPECT_LE(r.conjugacy_oracle, 1e-8);
  EXPECT_TRUE(r.tau_preserved);
  EXPECT_TRUE(r.monotone);
  EXPECT_LE(r.R1_emp, r.R1);
  EXPECT_LE(r.R2_emp, r.R2);
  EXPECT_TRUE(r.derivative_bounds_hold);
  EXPECT_TRUE(r.lyapunov_bounds_hold);
  EXPECT_TRUE(r.preimage_shrinks);
  for (const auto& m : r.modulus) EXPECT_TRUE(m.within_bound) << m.delta;
  EXPECT_TRUE(r.passed());
  const std::string js = r.to_json();
  EXPECT_NE(js.find("\"conjugacy_residual\""), std::string::npos);
  EXPECT_EQ(js, verify_equimorphism(a, b, 100, {1e-3, 1e-2, 0.1}).to_json());
}

TEST(Verify, DerivativeBoundClosedForm) {
  SemiStrip a{minus_one(), 1.0}, b{minus_two(), 1.0};
  const auto r = verify_equimorphism(a, b, 20, {1e-2});
  EXPECT_NEAR(r.R1, 40.0, 1e-6);
  // dg/dC = 2C peaks at C = 1; dg/dtau = 0.
  EXPECT_NEAR(r.R1_emp, 2.0, 1e-3);
  EXPECT_LE(r.R2_emp, 1e-6);
  EXPECT_TRUE(r.derivative_bounds_hold);
}

TEST(Verify, PreimageShrinks) {
  SemiStrip a{minus_one(), 1.0}, b{minus_two(), 1.0};
  const auto r = verify_equimorphism(a, b, 20, {1e-2});
  ASSERT_FALSE(r.preimage.empty());
  for (const auto& p : r.preimage) {
    // C1 = C^2 so the pre-image of C1 = v is C = sqrt(v).
    EXPECT_NEAR(p.d1, std::sqrt(p.v), 1e-8);
    EXPECT_NEAR(p.d2, std::sqrt(p.v), 1e-8);
  }
  EXPECT_TRUE(r.preimage_shrinks);
}

TEST(PhiCsv, HeaderAndRows) {
  SemiStrip a{minus_one(), 1.0}, b{minus_two(), 1.0};
  std::ostringstream out;
  write_phi_csv(a, b, 4, 3, 10.0, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "C,tau,C1");
  int rows = 0;
  while (std::getline(in, line)) {
    double C, tau, C1;
    char c1, c2;
    std::istringstream row(line);
    row >> C >> c1 >> tau >> c2 >> C1;
    EXPECT_NEAR(C1, C * C, 1e-10);
    ++rows;
  }
  EXPECT_EQ(rows, 12);
}
