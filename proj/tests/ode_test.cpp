#include "circdyn/ode.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace circdyn {
namespace {

constexpr double kPi = std::numbers::pi;

GTEST_TEST(CircleTest, Distance) {
  EXPECT_NEAR(circle_distance(0.1, 0.9), 0.2, 1e-15);
  EXPECT_EQ(circle_distance(0.37, 0.37), 0.0);
  EXPECT_EQ(circle_distance(0.0, 0.5), 0.5);
  EXPECT_NEAR(circle_distance(CirclePoint(-0.1), CirclePoint(1.1)), 0.2, 1e-15);
}

GTEST_TEST(CircleTest, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    double a = u(rng), b = u(rng), c = u(rng);
    double ab = circle_distance(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 0.5);
    EXPECT_EQ(ab, circle_distance(b, a));
    EXPECT_LE(ab, circle_distance(a, c) + circle_distance(c, b) + 1e-15);
  }
}

GTEST_TEST(OdeTest, ConstantAndUnitWinding) {
  OdeSystem zero = OdeSystem::from_expression("0");
  IntegralCurve c0 = integrate(zero, 0.0, CirclePoint(0.3), 17.0);
  EXPECT_EQ(c0.lifted(9.0), 0.3);
  EXPECT_EQ(c0.lifted_end(), 0.3);

  OdeSystem one = OdeSystem::from_expression("1");
  IntegralCurve c1 = integrate(one, 0.0, CirclePoint(0.0), 1.5);
  EXPECT_NEAR(c1.lifted(1.5), 1.5, 1e-12);
  EXPECT_NEAR(c1.circle(1.5), 0.5, 1e-12);
  auto s = c1.samples();
  for (size_t i = 1; i < s.size(); ++i)
    EXPECT_LT(std::fabs(s[i].lifted_x - s[i - 1].lifted_x), 0.25);
}

// Fixed-step RK4 with a very small step, as an independent oracle.
double rk4(const OdeSystem& sys, double t0, double x0, double t1, int n) {
  double h = (t1 - t0) / n, t = t0, x = x0;
  for (int i = 0; i < n; ++i) {
    double k1 = sys.f(t, x), k2 = sys.f(t + h / 2, x + h / 2 * k1);
    double k3 = sys.f(t + h / 2, x + h / 2 * k2), k4 = sys.f(t + h, x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return x;
}

GTEST_TEST(OdeTest, ConvergesToStableZero) {
  OdeSystem sys = OdeSystem::from_expression("sin(2*pi*x)");
  IntegralCurve c = integrate(sys, 0.0, CirclePoint(0.25), 20.0);
  EXPECT_NEAR(c.circle(20.0), 0.5, 1e-6);
  EXPECT_NEAR(c.lifted(3.0), rk4(sys, 0.0, 0.25, 3.0, 200000), 1e-9);
}

GTEST_TEST(OdeTest, BackwardIntegration) {
  OdeSystem sys = OdeSystem::from_expression("sin(2*pi*x)+0.3*cos(t)");
  IntegralCurve c = integrate(sys, 2.0, CirclePoint(0.1), -3.0);
  EXPECT_EQ(c.direction(), -1);
  EXPECT_NEAR(c.lifted(-3.0), rk4(sys, 2.0, 0.1, -3.0, 200000), 1e-8);
  EXPECT_NEAR(c.lifted(0.5), rk4(sys, 2.0, 0.1, 0.5, 100000), 1e-8);
  EXPECT_THROW(c.lifted(2.5), SpanError);
}

GTEST_TEST(OdeTest, LogFlowClosedForm) {
  // x' = (-1 + 0.5 sin t) * sin(x) around x = 0 has a = -1 + 0.5 sin t.
  OdeSystem sys = OdeSystem::from_expression("(-1+0.5*sin(t))*sin(2*pi*x)/(2*pi)");
  IntegralCurve c = integrate(sys, 0.0, CirclePoint(0.0), 60.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 60.0);
  for (int i = 0; i < 100; ++i) {
    double tau = u(rng), t = u(rng);
    double exact = -(t - tau) + 0.5 * (std::cos(tau) - std::cos(t));
    EXPECT_NEAR(variational(sys, c, tau, t), exact, 1e-8);
  }
  OdeSystem s2 = OdeSystem::from_expression("sin(2*pi*x)");
  IntegralCurve c2 = integrate(s2, 0.0, CirclePoint(0.5), 1.0);
  EXPECT_NEAR(c2.log_flow(1.0, 0.0), -2 * kPi, 1e-12);
  OdeSystem s3 = OdeSystem::from_expression("-sin(2*pi*x)/(2*pi)");
  IntegralCurve c3 = integrate(s3, 0.0, CirclePoint(0.0), 5.0);
  EXPECT_NEAR(std::exp(c3.log_flow(5.0, 0.0)), std::exp(-5.0), 1e-14);
}

std::vector<OdeSystem> sample_systems() {
  return {OdeSystem::from_expression("sin(2*pi*x)"),
          OdeSystem::from_expression("0.3+0.05*sin(2*pi*x)"),
          OdeSystem::from_expression("0.1*sin(2*pi*x)+0.02*sin(2*pi*t)"),
          OdeSystem::from_expression("sin(2*pi*x)+0.05*(sin(t)+sin(sqrt(2)*t))"),
          OdeSystem::from_expression(
              "cos(2*pi*x)*(sin(2*pi*x)^2+exp(-t^2)-0.04)/(2*pi)")};
}

GTEST_TEST(OdeTest, FlowPropertyAndReversal) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tol = 1e-9;
  for (const auto& sys : sample_systems()) {
    for (int i = 0; i < 10; ++i) {
      double x0 = u(rng), t1 = 4 * u(rng), t2 = t1 + 4 * u(rng);
      IntegralCurve a = integrate(sys, 0.0, CirclePoint(x0), t1);
      IntegralCurve b = integrate_lifted(sys, t1, a.lifted_end(), t2);
      IntegralCurve c = integrate(sys, 0.0, CirclePoint(x0), t2);
      EXPECT_NEAR(b.lifted_end(), c.lifted_end(), 10 * tol) << sys.label;
      IntegralCurve back = integrate_lifted(sys, t2, c.lifted_end(), 0.0);
      EXPECT_NEAR(back.lifted_end(), x0, 10 * tol * std::exp(2 * std::fabs(c.log_flow(t2))))
          << sys.label;
      // additivity of the log-flow
      double s = t2 * u(rng);
      EXPECT_NEAR(c.log_flow(t2, 0.0), c.log_flow(t2, s) + c.log_flow(s, 0.0), 1e-10);
    }
  }
}

GTEST_TEST(OdeTest, DenseOutputMatchesHalfStepReintegration) {
  OdeSystem sys = OdeSystem::from_expression("sin(2*pi*x)+0.4*sin(t)");
  IntegralCurve c = integrate(sys, 0.0, CirclePoint(0.2), 10.0);
  IntegrateOptions fine;
  fine.rtol = 1e-12;
  fine.atol = 1e-14;
  for (double t = 0.05; t < 10.0; t += 0.37) {
    IntegralCurve r = integrate(sys, 0.0, CirclePoint(0.2), t, fine);
    EXPECT_NEAR(c.lifted(t), r.lifted_end(), 1e-8);
  }
}

GTEST_TEST(OdeTest, PeriodicityOfRhs) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (const auto& sys : sample_systems()) {
    for (int i = 0; i < 200; ++i) {
      double t = u(rng), x = u(rng);
      EXPECT_NEAR(sys.f(t, x + 1.0), sys.f(t, x), 1e-12);
    }
  }
}

GTEST_TEST(OdeTest, NonFiniteRhsReported) {
  OdeSystem sys = OdeSystem::from_expression("1/(t-1)");
  EXPECT_THROW(integrate(sys, 0.0, CirclePoint(0.0), 2.0), std::runtime_error);
}

GTEST_TEST(OdeTest, CallableFiniteDifferenceFallback) {
  OdeSystem sys;
  sys.field = std::make_shared<CallableField>(
      [](double, double x) { return std::sin(2 * kPi * x); });
  double f, fx;
  sys.f_fx(0.0, 0.1, f, fx);
  EXPECT_NEAR(fx, 2 * kPi * std::cos(0.2 * kPi), 1e-6);
}

GTEST_TEST(OdeTest, A0BoundFromGrid) {
  OdeSystem sys = OdeSystem::from_expression("(-1+0.5*sin(t))*sin(2*pi*x)/(2*pi)");
  EXPECT_NEAR(sys.a0(0.0, 50.0), 1.5, 1e-3);
}

GTEST_TEST(OdeTest, CsvExport) {
  OdeSystem one = OdeSystem::from_expression("1");
  IntegralCurve c = integrate(one, 0.0, CirclePoint(0.0), 1.5);
  std::ostringstream os;
  write_csv(c, os);
  std::string s = os.str();
  EXPECT_EQ(s.rfind("t,x,lifted_x\n0,0,0\n", 0), 0u);
  EXPECT_NE(s.find("1.5,0.5,1.5"), std::string::npos);
}

}  // namespace
}  // namespace circdyn
