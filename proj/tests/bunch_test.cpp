#include <gtest/gtest.h>

#include <cmath>

#include "circdyn/bunch.hpp"

using namespace circdyn;

namespace {

const char* kReversibleMu = "cos(2*pi*x)*(sin(2*pi*x)^2+exp(-t^2)-0.04)/(2*pi)";
const char* kReversible = "cos(2*pi*x)*(sin(2*pi*x)^2+exp(-t^2))/(2*pi)";

// Fixed-step RK4 on the angle form of the reversible family.
double rk4_angle(double mu, double phi, double t0, double t1, int steps) {
  auto f = [mu](double t, double p) {
    return std::cos(p) * (std::sin(p) * std::sin(p) + std::exp(-t * t) - mu);
  };
  double h = (t1 - t0) / steps, t = t0;
  for (int i = 0; i < steps; ++i, t += h) {
    double k1 = f(t, phi), k2 = f(t + h / 2, phi + h / 2 * k1);
    double k3 = f(t + h / 2, phi + h / 2 * k2), k4 = f(t + h, phi + h * k3);
    phi += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return phi;
}

bool has_point(const EquippedSet& e, double x, Label l, double tol) {
  for (const auto& p : e.points)
    if (p.label == l && circle_distance(p.position, x) < tol) return true;
  return false;
}

}  // namespace

GTEST_TEST(Bunch, SingleAttractor) {
  auto sys = OdeSystem::from_expression("sin(2*pi*x)");
  auto b = find_bunches(sys, BunchKind::kStableRplus, 720, 50.0, 1e-3);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(b[0].representative.value, 0.5, 2e-3);
  EXPECT_NEAR(b[0].trace_begin.value, 0.25 / 720, 1e-12);
  EXPECT_NEAR(b[0].trace_end.value, 719.25 / 720, 1e-12);
  ASSERT_EQ(b[0].boundary_points.size(), 1u);
  EXPECT_LT(circle_distance(b[0].boundary_points[0].value, 0.0), 1e-8);
}

GTEST_TEST(Bunch, TwoAttractorsAndMembership) {
  auto sys = OdeSystem::from_expression("-sin(4*pi*x)");
  auto b = find_bunches(sys, BunchKind::kStableRplus, 720, 50.0, 1e-3);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_LT(circle_distance(b[0].representative.value, 0.0), 2e-3);
  EXPECT_NEAR(b[1].representative.value, 0.5, 2e-3);
  // Members of one bunch converge at the horizon; members of different ones do not.
  auto end = [&](double x) { return integrate(sys, 0.0, CirclePoint(x), 50.0).circle(50.0); };
  EXPECT_LT(circle_distance(end(0.3), end(0.7)), 1e-9);
  EXPECT_LT(circle_distance(end(0.9), end(0.1)), 1e-9);
  EXPECT_GT(circle_distance(end(0.3), end(0.1)), 0.4);
  for (const auto& bu : b) EXPECT_EQ(bu.boundary_points.size(), 2u);
}

GTEST_TEST(Bunch, ReversibleMuHasThreeBunchesEachWay) {
  auto sys = OdeSystem::from_expression(kReversibleMu);
  // limit field cos(phi)(sin^2(phi) - mu): three attracting and three repelling zeros
  EXPECT_EQ(find_bunches(sys, BunchKind::kStableRplus, 720, 50.0, 1e-3).size(), 3u);
  EXPECT_EQ(find_bunches(sys, BunchKind::kUnstableRminus, 720, 50.0, 1e-3).size(), 3u);
}

GTEST_TEST(Bunch, RefineBoundary) {
  auto s1 = OdeSystem::from_expression("sin(2*pi*x)");
  auto b1 = refine_boundary(s1, -0.1, 0.1, BunchKind::kStableRplus, 50.0);
  EXPECT_NEAR(b1.lifted, 0.0, 1e-9);
  EXPECT_TRUE(b1.verified);
  EXPECT_EQ(b1.check.kind, DichotomyKind::kUnstable);

  auto s2 = OdeSystem::from_expression("-sin(4*pi*x)");
  auto b2 = refine_boundary(s2, 0.1, 0.4, BunchKind::kStableRplus, 50.0);
  EXPECT_NEAR(b2.lifted, 0.25, 1e-9);
  EXPECT_TRUE(b2.verified);

  auto b3 = refine_boundary(s2, 0.4, 0.6, BunchKind::kUnstableRminus, 50.0);
  EXPECT_NEAR(b3.lifted, 0.5, 1e-9);
  EXPECT_TRUE(b3.verified);
  EXPECT_EQ(b3.check.kind, DichotomyKind::kStable);

  EXPECT_THROW(refine_boundary(s2, 0.3, 0.4, BunchKind::kStableRplus, 50.0), BunchError);
}

GTEST_TEST(Bunch, EquippedSetExamples) {
  auto e1 = equipped_set(OdeSystem::from_expression("sin(2*pi*x)"));
  ASSERT_EQ(e1.points.size(), 2u);
  EXPECT_TRUE(has_point(e1, 0.0, Label::kU, 1e-8));
  EXPECT_TRUE(has_point(e1, 0.5, Label::kS, 1e-8));

  auto e2 = equipped_set(OdeSystem::from_expression("-sin(4*pi*x)"));
  ASSERT_EQ(e2.points.size(), 4u);
  EXPECT_TRUE(has_point(e2, 0.0, Label::kS, 1e-8));
  EXPECT_TRUE(has_point(e2, 0.25, Label::kU, 1e-8));
  EXPECT_TRUE(has_point(e2, 0.5, Label::kS, 1e-8));
  EXPECT_TRUE(has_point(e2, 0.75, Label::kU, 1e-8));
  EXPECT_EQ(word_of(e2).canonical, "USUS");
}

GTEST_TEST(Bunch, ReversibleMuPointsMatchShooting) {
  const double mu = 0.04, pm = std::asin(std::sqrt(mu));
  auto e = equipped_set(OdeSystem::from_expression(kReversibleMu));
  ASSERT_EQ(e.points.size(), 6u);
  // U-curves end on the repelling limit zeros, S-curves start on the attracting ones.
  for (double z : {pm, M_PI - pm, 1.5 * M_PI}) {
    double x = rk4_angle(mu, z, 40.0, 0.0, 40000) / (2 * M_PI);
    EXPECT_TRUE(has_point(e, wrap01(x), Label::kU, 1e-6)) << x;
  }
  for (double z : {-pm, M_PI + pm, 0.5 * M_PI}) {
    double x = rk4_angle(mu, z, -40.0, 0.0, 40000) / (2 * M_PI);
    EXPECT_TRUE(has_point(e, wrap01(x), Label::kS, 1e-6)) << x;
  }
  EXPECT_EQ(word_of(e).canonical, "UUUSSS");
}

GTEST_TEST(Bunch, GridDoublingMovesPointsLittle) {
  auto sys = OdeSystem::from_expression("-sin(4*pi*x) + 0.3*sin(2*pi*x)*exp(-t^2)");
  BunchParams p;
  auto a = equipped_set(sys, p);
  p.grid_size = 1440;
  auto b = equipped_set(sys, p);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (const auto& q : a.points) EXPECT_TRUE(has_point(b, q.position, q.label, 2 * p.cluster_tol));
}

GTEST_TEST(Bunch, GradientLikeReport) {
  auto r = check_assumptions(OdeSystem::from_expression("sin(2*pi*x)"));
  for (const auto& a : r.assumption) EXPECT_EQ(a.verdict, Verdict::kHolds) << a.diagnostics;
  ASSERT_TRUE(r.gradient_like());
  EXPECT_EQ(word_of(*r.equipped).canonical, "US");
  EXPECT_EQ(r.stable_bunches.size(), r.u_points.size());
  EXPECT_EQ(r.unstable_bunches.size(), r.s_points.size());
  auto js = r.to_json();
  EXPECT_NE(js.find("\"word\": \"US\""), std::string::npos);
  EXPECT_NE(js.find("window doubling stable"), std::string::npos);
  auto csv = equipped_csv(*r.equipped);
  EXPECT_EQ(csv.rfind("position,label\n", 0), 0u);
}

GTEST_TEST(Bunch, ReversibleFailsAssumptionOne) {
  auto r = check_assumptions(OdeSystem::from_expression(kReversible));
  EXPECT_EQ(r.assumption[0].verdict, Verdict::kFails);
  EXPECT_FALSE(r.gradient_like());
  ASSERT_FALSE(r.assumption[0].witnesses.empty());
  // Marginal curves accumulate on the degenerate zeros phi = 0 mod pi.
  int near = 0;
  for (const auto& w : r.assumption[0].witnesses)
    if (std::min(circle_distance(w.end_position, 0.0), circle_distance(w.end_position, 0.5)) <
        0.01)
      ++near;
  EXPECT_GT(near, 0);
}

GTEST_TEST(Bunch, RotationIsUndetermined) {
  auto sys = OdeSystem::from_expression("1");
  EXPECT_THROW(find_bunches(sys, BunchKind::kStableRplus, 720, 50.0, 1e-3), UndeterminedError);
  auto r = check_assumptions(sys);
  EXPECT_EQ(r.assumption[0].verdict, Verdict::kFails);
  EXPECT_EQ(r.assumption[1].verdict, Verdict::kUndetermined);
  EXPECT_FALSE(r.gradient_like());
}

GTEST_TEST(Bunch, SmallGridRejected) {
  EXPECT_THROW(find_bunches(OdeSystem::from_expression("sin(2*pi*x)"), BunchKind::kStableRplus, 8,
                            50.0, 1e-3),
               std::invalid_argument);
}
