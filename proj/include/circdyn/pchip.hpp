// Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes) and
// its periodic use as the lift of a degree-one circle map.
#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace circdyn {

class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  // x strictly increasing, at least two knots. Outside [x.front(), x.back()]
  // the end cubics are extended.
  MonotoneCubic(std::vector<double> x, std::vector<double> y);
  double operator()(double u) const;
  double derivative(double u) const;
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }

 private:
  size_t cell(double u) const;
  std::vector<double> x_, y_, m_;
};

// F(u + 1) = F(u) + 1. Knots x_i strictly increasing inside [x_0, x_0 + 1),
// values y_i strictly increasing with y_last < y_0 + 1.
class PeriodicLift {
 public:
  PeriodicLift() = default;
  PeriodicLift(const std::vector<double>& x, const std::vector<double>& y);
  double operator()(double u) const;
  double derivative(double u) const;
  // Inverse lift by safeguarded Newton.
  double inverse(double v) const;
  double x0() const { return x0_; }

 private:
  MonotoneCubic c_;
  double x0_ = 0.0;
};

// Root of an increasing g with g(x + 1) = g(x) + 1 at level v: Newton steps
// kept inside a bisection bracket, falling back to bisection when the residual
// does not halve. Stops once a Newton step starts from |g(u) - v| <= tol.
double degree_one_inverse(const std::function<double(double)>& g,
                          const std::function<double(double)>& g_prime, double v, double tol);
// Same with g and g' from one call jet(u, g, g').
// u0 is an optional starting guess (NaN: use v - (g(v) - v)).
double degree_one_inverse(const std::function<void(double, double&, double&)>& jet, double v,
                          double tol, double u0 = std::numeric_limits<double>::quiet_NaN());

}  // namespace circdyn
