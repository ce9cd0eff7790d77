// Conjugating map between the Lyapunov semi-strips of two scalar linear
// systems x' = a(t) x and y' = b(t) y with stable dichotomy on R+.
#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "circdyn/expr.hpp"

namespace circdyn {

class EquimorphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearOptions {
  // Lambda and s are tabulated on [t_lo, t_hi]; s^2 integrates past t_hi
  // until the neglected tail is below 1e-16 relative.
  double t_lo = -100.0;
  double t_hi = 100.0;
  double dt = 0.01;
  // (M, lambda) fitted on [0, fit_horizon] unless supplied.
  double fit_horizon = 60.0;
  double window = 5.0;
  std::optional<double> M, lambda;
};

class LinearSystem {
 public:
  static LinearSystem from_expression(const std::string& a, const ParamMap& params = {},
                                      const LinearOptions& opts = {});
  static LinearSystem from_callable(std::function<double(double)> a, std::string label,
                                    const LinearOptions& opts = {});

  double a(double t) const { return a_(t); }
  // Integral of a from tau to t.
  double Lambda(double t, double tau) const { return A(t) - A(tau); }
  double s2(double t) const;
  double s(double t) const;

  const std::string& label() const { return label_; }
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }
  double M() const { return M_; }
  double lambda() const { return lambda_; }
  double a0() const { return a0_; }
  // max over grid pairs t_i <= t_j in [0, fit_horizon] of
  // Lambda(t_j, t_i) + lambda (t_j - t_i) - ln M, clipped at 0.
  double dichotomy_residual() const { return dichotomy_residual_; }
  double s2_inf() const { return s2_inf_; }
  double s2_sup() const { return s2_sup_; }
  // 1/(2 a0) <= s^2 <= M^2/(2 lambda) on [0, t_hi] (relative slack 1e-9).
  bool bounds_hold() const { return bounds_hold_; }

 private:
  void build(const LinearOptions& opts);
  double A(double t) const;
  size_t cell(double t) const;

  std::function<double(double)> a_;
  std::string label_;
  double t_lo_ = 0.0, t_hi_ = 0.0, t_end_ = 0.0, dt_ = 0.0;
  std::vector<double> A_;  // A(t_lo + k dt) = integral of a from 0
  std::vector<double> I_;  // s^2 at the nodes
  double M_ = 1.0, lambda_ = 0.0, a0_ = 0.0, dichotomy_residual_ = 0.0;
  double s2_inf_ = 0.0, s2_sup_ = 0.0;
  bool bounds_hold_ = false;
};

// {0 < C <= C_star, tau >= 0} with C = s(tau) x.
struct SemiStrip {
  std::shared_ptr<const LinearSystem> system;
  double C_star = 1.0;
};

struct Crossing {
  double T = 0.0;
  double residual = 0.0;  // |R(T, C, tau)|
};

// Time T <= tau at which the curve through (C, tau) meets the level C = C_star.
Crossing crossing_time(const SemiStrip& strip, double C, double tau);

// (C, tau) -> (C1, tau) through the crossing of the boundary level line.
std::pair<double, double> phi_map(const SemiStrip& s1, const SemiStrip& s2, double C, double tau);
// The same map in x-coordinates on the whole strip |x| <= C_star / s(t),
// odd in x, with x = 0 fixed.
double phi_x(const SemiStrip& s1, const SemiStrip& s2, double x, double tau);

struct ModulusEntry {
  double delta = 0.0;
  double sup_displacement = 0.0;  // over all sampled pairs
  double inner = 0.0, outer = 0.0, mixed = 0.0;  // by case: both C <= d, both >= d, one each
  double bound = 0.0;
  bool within_bound = false;
};

struct PreimageEntry {
  double v = 0.0;
  double d1 = 0.0, d2 = 0.0;  // range of C over the pre-image of C1 = v
};

struct EquimorphismReport {
  double conjugacy_residual = 0.0;
  double conjugacy_oracle = 0.0;  // same with a direct RK4 solve of system 2
  bool tau_preserved = true;
  double boundary_residual = 0.0;  // max |C1(C_star, tau) - C1_star|
  bool monotone = true;
  std::vector<ModulusEntry> modulus;
  std::vector<PreimageEntry> preimage;
  bool preimage_shrinks = true;
  double d = 0.1;
  double collar = 0.0;  // sup over tau of C1(d, tau)
  double R1 = 0.0, R2 = 0.0;
  double R1_emp = 0.0, R2_emp = 0.0;
  bool derivative_bounds_hold = false;
  bool lyapunov_bounds_hold = false;

  bool passed(double tol = 1e-8) const;
  std::string to_json() const;
};

struct VerifyOptions {
  double d = 0.1;
  double tau_max = 20.0;
  unsigned long seed = 1;
  double fd_step = 1e-5;
};

EquimorphismReport verify_equimorphism(const SemiStrip& s1, const SemiStrip& s2, int sample_count,
                                       const std::vector<double>& delta_grid,
                                       const VerifyOptions& opts = {});

// Rows C,tau,C1 on an nC x ntau grid over (0, C_star] x [0, tau_max].
void write_phi_csv(const SemiStrip& s1, const SemiStrip& s2, int nC, int ntau, double tau_max,
                   std::ostream& out);

}  // namespace circdyn
