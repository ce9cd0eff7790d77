#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "circdyn/bunch.hpp"
#include "circdyn/construct.hpp"
#include "circdyn/periodic.hpp"
#include "json.hpp"

using namespace circdyn;

namespace {

const double kPi = 3.14159265358979323846;

PoincareMap map_of(const std::string& rhs, int grid = 256) {
  return poincare_map(OdeSystem::from_expression(rhs), grid, 1e-10, 1.0);
}

const PoincareMap& sine_map() {
  static PoincareMap P = map_of("0.1*sin(2*pi*x)");
  return P;
}

// x' = 1/2 + 0.1 sin(4 pi (x - t/2)): in the moving frame y = x - t/2 the
// zeros of sin(4 pi y) are fixed, so P has two orbits of period 2.
OdeSystem doubled() {
  auto s = OdeSystem::from_expression("0.5+0.1*sin(4*pi*x-2*pi*t)");
  s.time_structure = PeriodicTime{1.0};
  return s;
}

void expect_same_equipped(const EquippedSet& a, const EquippedSet& b, double tol) {
  ASSERT_EQ(a.points.size(), b.points.size());
  for (const auto& p : a.points) {
    bool matched = false;
    for (const auto& r : b.points)
      matched = matched || (p.label == r.label && circle_distance(p.position, r.position) < tol);
    EXPECT_TRUE(matched) << p.position;
  }
}

}  // namespace

TEST(Poincare, RigidRotation) {
  auto P = map_of("0.3");
  EXPECT_EQ(P.degree(), 1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    double x = u(rng);
    EXPECT_NEAR(P(x), x + 0.3, 1e-9);
  }
}

TEST(Poincare, AutonomousSineFixesZeros) {
  const auto& P = sine_map();
  EXPECT_NEAR(P(0.0), 0.0, 1e-9);
  EXPECT_NEAR(P(0.5), 0.5, 1e-9);
  EXPECT_GT(P(0.25), 0.25);
  EXPECT_LT(P(0.75), 0.75);
}

TEST(Poincare, ForcedSineIsMonotoneDegreeOne) {
  auto P = map_of("0.1*sin(2*pi*x)+0.02*sin(2*pi*t)");
  const auto& y = P.samples();
  for (size_t i = 1; i < y.size(); ++i) EXPECT_GT(y[i], y[i - 1]);
  EXPECT_LT(y.back(), y.front() + 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    double x = u(rng);
    EXPECT_NEAR(P(x + 1.0), P(x) + 1.0, 1e-12);
    EXPECT_NEAR(P(x), P.exact(x, 1), 1e-7);
  }
}

TEST(Poincare, NeedsAPeriod) {
  EXPECT_THROW(poincare_map(OdeSystem::from_expression("sin(2*pi*x)+sin(t)"), 64),
               PeriodicError);
  OdeSystem s;
  s.field = std::make_shared<CallableField>([](double, double x) { return std::sin(x); });
  EXPECT_THROW(poincare_map(s, 64), PeriodicError);
  EXPECT_NO_THROW(poincare_map(OdeSystem::from_expression("0.2"), 16));
  EXPECT_EQ(poincare_map(library("periodic_rough"), 32).period(), 1.0);
}

TEST(Rotation, RigidRational) {
  auto r = rotation_number(map_of("0.3"));
  EXPECT_NEAR(r.value, 0.3, 1e-6);
  EXPECT_LE(r.error_bar, 1e-6);
  ASSERT_TRUE(r.rational);
  EXPECT_EQ(r.rational->first, 3);
  EXPECT_EQ(r.rational->second, 10);
}

TEST(Rotation, SineMapIsZero) {
  auto r = rotation_number(sine_map());
  EXPECT_NEAR(r.value, 0.0, r.error_bar);
  ASSERT_TRUE(r.rational);
  EXPECT_EQ(r.rational->first, 0);
  EXPECT_EQ(r.rational->second, 1);
}

TEST(Rotation, IrrationalFlowMatchesClosedForm) {
  // For x' = a + b sin(2 pi x) the flow time of one turn is 1/sqrt(a^2 - b^2).
  auto P = map_of("0.3+0.05*sin(2*pi*x)");
  auto r = rotation_number(P, 50000);
  auto r2 = rotation_number(P, 100000);
  const double rho = std::sqrt(0.09 - 0.0025);
  EXPECT_GT(r.value, 0.25);
  EXPECT_LT(r.value, 0.35);
  EXPECT_NEAR(r.value, rho, r.error_bar);
  EXPECT_NEAR(r2.value, rho, r2.error_bar);
  EXPECT_NEAR(r.value, r2.value, r.error_bar + r2.error_bar);
  EXPECT_FALSE(r.rational);
  for (double x : {0.0, 0.137, 0.5, 0.91})
    EXPECT_NEAR(rotation_estimate(P, x, 50000), r.value, r.error_bar);
}

TEST(PeriodicPoints, SineFixedPointsAndMultipliers) {
  const auto& P = sine_map();
  auto orbits = periodic_points(P, 1, 0);
  ASSERT_EQ(orbits.size(), 2u);
  EXPECT_NEAR(circle_distance(orbits[0].point.value, 0.0), 0.0, 1e-9);
  EXPECT_NEAR(orbits[1].point.value, 0.5, 1e-9);
  EXPECT_NEAR(orbits[0].multiplier, std::exp(0.2 * kPi), 1e-6);
  EXPECT_NEAR(orbits[1].multiplier, std::exp(-0.2 * kPi), 1e-6);
  EXPECT_EQ(orbits[0].stability, Stability::kUnstable);
  EXPECT_EQ(orbits[1].stability, Stability::kStable);
  for (const auto& o : orbits) {
    EXPECT_LE(o.residual, 1e-9);
    const double h = 1e-5, x = o.point.value;
    double fd = (P.exact(x + h, 1) - P.exact(x - h, 1)) / (2 * h);
    EXPECT_NEAR(o.multiplier, fd, 1e-5);
  }
}

TEST(PeriodicPoints, RigidRotationIsADegenerateFamily) {
  auto P = map_of("0.3");
  auto orbits = periodic_points(P, 10, 3);
  ASSERT_EQ(orbits.size(), 1u);
  EXPECT_TRUE(orbits[0].family);
  EXPECT_EQ(orbits[0].stability, Stability::kNonhyperbolic);
  for (double x : P.grid()) EXPECT_NEAR(P.exact(x, 10) - x - 3.0, 0.0, 1e-9);
  EXPECT_THROW(equipped_set_from_periodic(orbits), PeriodicError);
}

TEST(PeriodicPoints, ContinuationInForcing) {
  for (double c : {0.005, 0.01, 0.02}) {
    auto P = poincare_map(
        OdeSystem::from_expression("0.1*sin(2*pi*x)+c*sin(2*pi*t)", {{"c", c}}), 256, 1e-10, 1.0);
    auto orbits = periodic_points(P, 1, 0);
    ASSERT_EQ(orbits.size(), 2u) << c;
    int unstable = 0;
    for (const auto& o : orbits) {
      EXPECT_NE(o.stability, Stability::kNonhyperbolic);
      EXPECT_LE(o.residual, 1e-9);
      double d0 = circle_distance(o.point.value, 0.0), d5 = circle_distance(o.point.value, 0.5);
      EXPECT_LT(std::min(d0, d5), 0.2 * c);
      if (o.stability == Stability::kUnstable) {
        ++unstable;
        EXPECT_LT(d0, d5);
      }
      const double h = 1e-5, x = o.point.value;
      double fd = (P.exact(x + h, 1) - P.exact(x - h, 1)) / (2 * h);
      EXPECT_NEAR(o.multiplier, fd, 1e-5);
    }
    EXPECT_EQ(unstable, 1);
  }
}

TEST(PeriodicPoints, PeriodTwoOrbits) {
  auto P = poincare_map(doubled(), 256, 1e-10);
  auto r = rotation_number(P);
  ASSERT_TRUE(r.rational);
  EXPECT_EQ(r.rational->first, 1);
  EXPECT_EQ(r.rational->second, 2);
  auto orbits = periodic_points(P, 2, 1);
  ASSERT_EQ(orbits.size(), 2u);
  for (const auto& o : orbits) {
    ASSERT_EQ(o.trace.size(), 2u);
    EXPECT_NEAR(circle_distance(o.trace[0] + 0.5, o.trace[1]), 0.0, 1e-8);
    // DP^2 = exp(2 * 0.4 pi cos(4 pi y)) at the frame zeros
    double expected = o.stability == Stability::kUnstable ? std::exp(0.8 * kPi)
                                                          : std::exp(-0.8 * kPi);
    EXPECT_NEAR(o.multiplier, expected, 1e-5 * expected);
  }
  auto e = equipped_set_from_periodic(orbits);
  EXPECT_EQ(word_of(e).canonical, "USUS");
}

TEST(EquippedFromPeriodic, SineFixedPoints) {
  auto e = equipped_set_from_periodic(periodic_points(sine_map(), 1, 0));
  ASSERT_EQ(e.points.size(), 2u);
  EXPECT_EQ(e.points[0].label, Label::kU);
  EXPECT_NEAR(circle_distance(e.points[0].position, 0.0), 0.0, 1e-9);
  EXPECT_EQ(e.points[1].label, Label::kS);
  EXPECT_NEAR(e.points[1].position, 0.5, 1e-9);
}

TEST(EquippedFromPeriodic, AgreesWithBunchConstruction) {
  {
    auto s = doubled();
    auto from_orbits =
        equipped_set_from_periodic(periodic_points(poincare_map(s, 256, 1e-10), 2, 1));
    expect_same_equipped(from_orbits, equipped_set(s), 1e-4);
  }
  {
    auto s = library("periodic_rough");
    auto from_orbits =
        equipped_set_from_periodic(periodic_points(poincare_map(s, 256, 1e-10), 1, 0));
    expect_same_equipped(from_orbits, equipped_set(s), 1e-4);
  }
}

TEST(EquippedFromPeriodic, RejectsNonhyperbolic) {
  PeriodicOrbit o;
  o.point = CirclePoint(0.3);
  o.trace = {0.3};
  EXPECT_THROW(equipped_set_from_periodic({o}), PeriodicError);
}

TEST(AlmostPeriods, PeriodicTraceGivesIntegers) {
  auto x = [](double t) { return 0.1 * std::sin(2 * kPi * t); };
  auto r = almost_periods(x, 0.0, 25.0, 0.01, 10.0, 0.001);
  // short shifts below epsilon/(0.2 pi) are accepted too: cluster 0 sits near 0
  ASSERT_EQ(r.clusters.size(), 11u);
  EXPECT_LT(r.clusters[0], 0.01);
  // the last run is cut at l_max
  for (size_t i = 1; i + 1 < r.clusters.size(); ++i) EXPECT_NEAR(r.clusters[i], i, 2e-3);
  EXPECT_NEAR(r.clusters.back(), 10.0, 1e-2);
  EXPECT_GT(r.max_gap, 0.95);
  EXPECT_LE(r.max_gap, 1.0);
  EXPECT_TRUE(r.relatively_dense);
  // sup_t |x(t+l) - x(t)| = 0.2 |sin(pi l)|
  for (double l : r.found_periods) EXPECT_LT(0.2 * std::abs(std::sin(kPi * l)), 0.01 + 1e-9);
  size_t must = 0;
  for (long k = 1; k <= 10000; ++k)
    if (0.2 * std::abs(std::sin(kPi * k * 0.001)) < 0.0099) ++must;
  EXPECT_GE(r.found_periods.size(), must);
}

TEST(AlmostPeriods, IntegralCurveTrace) {
  auto s = OdeSystem::from_expression("0.2*pi*cos(2*pi*t)");
  auto c = integrate(s, 0.0, CirclePoint(0.0), 12.0);
  auto r = almost_periods(c, 0.01, 5.0, 0.01);
  ASSERT_EQ(r.clusters.size(), 6u);
  for (size_t i = 1; i + 1 < r.clusters.size(); ++i) EXPECT_NEAR(r.clusters[i], i, 1e-2);
}

TEST(AlmostPeriods, ConstantAcceptsEverything) {
  auto r = almost_periods([](double) { return 0.4; }, 0.0, 10.0, 1e-6, 5.0, 0.1);
  EXPECT_EQ(r.found_periods.size(), 50u);
  EXPECT_NEAR(r.max_gap, 0.1, 1e-12);
  EXPECT_TRUE(r.relatively_dense);
}

TEST(AlmostPeriods, TrackedStableSolution) {
  auto s = library("ap_perturbed");
  auto c = integrate(s, -30.0, CirclePoint(0.5), 410.0);
  auto r = almost_periods(c, 0.1, 200.0, 0.05);
  auto half = almost_periods(c, 0.1, 200.0, 0.025);
  EXPECT_TRUE(r.relatively_dense);
  EXPECT_TRUE(half.relatively_dense);
  EXPECT_LE(half.max_gap, r.l_max / 5.0);
}

TEST(AlmostPeriods, Errors) {
  auto x = [](double t) { return t; };
  EXPECT_THROW(almost_periods(x, 0.0, 5.0, 0.1, 3.0, 0.1), PeriodicError);
  EXPECT_THROW(almost_periods(x, 0.0, 10.0, 0.0, 3.0, 0.1), PeriodicError);
  EXPECT_THROW(almost_periods(x, 0.0, 10.0, 0.1, 3.0, 0.0), PeriodicError);
}

TEST(PeriodicIo, JsonAndCsv) {
  auto orbits = periodic_points(sine_map(), 1, 0);
  auto j = nlohmann::json::parse(to_json(orbits));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["stability"], "unstable");
  auto rj = nlohmann::json::parse(to_json(rotation_number(sine_map(), 1000)));
  EXPECT_EQ(rj["rational"]["q"], 1);
  std::ostringstream out;
  write_orbits_csv(orbits, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "point,q,p,multiplier,stability,residual");
  auto ap = nlohmann::json::parse(to_json(almost_periods([](double) { return 0.0; }, 0.0, 4.0,
                                                         0.1, 2.0, 0.5)));
  EXPECT_EQ(ap["found_count"], 4);
}
