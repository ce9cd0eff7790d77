// Poincare maps of time-periodic systems, rotation numbers, hyperbolic
// periodic orbits, and epsilon-almost periods of traces.
#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "circdyn/invariant.hpp"
#include "circdyn/ode.hpp"
#include "circdyn/pchip.hpp"

namespace circdyn {

class PeriodicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoincareMap {
 public:
  // Lift of P from the monotone cubic through the grid samples.
  double operator()(double x) const { return lift_(x); }
  double derivative(double x) const { return lift_.derivative(x); }
  double iterate(double x, long n) const;
  // Lift of P^n by integrating n periods from x, with DP^n = exp(Lambda).
  double exact(double x, long n, double* log_multiplier = nullptr) const;

  const OdeSystem& system() const { return system_; }
  double period() const { return period_; }
  int degree() const { return degree_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& samples() const { return samples_; }
  // max |interpolated - integrated| at the grid midpoints
  double interpolation_error() const { return interpolation_error_; }
  const IntegrateOptions& integrate_options() const { return opts_; }

 private:
  friend PoincareMap poincare_map(const OdeSystem&, int, double, std::optional<double>);
  OdeSystem system_;
  double period_ = 1.0;
  int degree_ = 1;
  std::vector<double> grid_, samples_;
  PeriodicLift lift_;
  double interpolation_error_ = 0.0;
  IntegrateOptions opts_;
};

// period: overrides the system's; an expression field without t gets 1.
PoincareMap poincare_map(const OdeSystem& system, int grid_size = 256, double tol = 1e-10,
                         std::optional<double> period = std::nullopt);

struct RotationNumber {
  double value = 0.0;
  double error_bar = 0.0;
  long iterations = 0;
  std::optional<std::pair<int, int>> rational;  // p/q, q <= q_max
};

// (lift(P^N)(x) - x)/N over 16 starts; the bar covers every start x in [0,1)
// plus the interpolation error of the lift.
RotationNumber rotation_number(const PoincareMap& P, long iterations = 100000, int q_max = 64);
double rotation_estimate(const PoincareMap& P, double x, long iterations);

enum class Stability { kStable, kUnstable, kNonhyperbolic };
const char* to_string(Stability s);

struct PeriodicOrbit {
  CirclePoint point;
  int q = 1;
  int p = 0;
  double multiplier = 1.0;  // DP^q at point
  Stability stability = Stability::kNonhyperbolic;
  std::vector<double> trace;  // P^k(point) mod 1, k = 0..q-1
  double residual = 0.0;      // |lift(P^q)(point) - point - p|
  bool family = false;        // part of a continuum of solutions
};

// Roots of lift(P^q)(x) - x - p, one entry per orbit, sorted by point.
std::vector<PeriodicOrbit> periodic_points(const PoincareMap& P, int q, int p,
                                           int scan_size = 1024);

EquippedSet equipped_set_from_periodic(const std::vector<PeriodicOrbit>& orbits);

struct AlmostPeriodReport {
  double epsilon = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  double l_max = 0.0, l_step = 0.0;
  std::vector<double> found_periods;
  std::vector<double> clusters;  // midpoints of runs of consecutive accepted l
  double max_gap = 0.0;          // over 0 and the accepted l, and up to l_max
  bool relatively_dense = false;
};

// d(x(t+l), x(t)) on the circle, t on the l_step grid over the trace window.
AlmostPeriodReport almost_periods(const IntegralCurve& trajectory, double epsilon, double l_max,
                                  double l_step);
// Same on a lifted trace x(t), t in [t0, t0 + span].
AlmostPeriodReport almost_periods(const std::function<double(double)>& x, double t0, double span,
                                  double epsilon, double l_max, double l_step);

std::string to_json(const RotationNumber& r);
std::string to_json(const std::vector<PeriodicOrbit>& orbits);
std::string to_json(const AlmostPeriodReport& r);
void write_orbits_csv(const std::vector<PeriodicOrbit>& orbits, std::ostream& out);

}  // namespace circdyn
