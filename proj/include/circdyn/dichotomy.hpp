// Exponential dichotomy of a solution on a semi-axis, and the quadratic
// Lyapunov function s(t)^2 u^2 built from the linearized flow.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "circdyn/ode.hpp"

namespace circdyn {

enum class Semiaxis { kPlus, kMinus };
enum class DichotomyKind { kStable, kUnstable, kMarginal };

const char* to_string(Semiaxis s);
const char* to_string(DichotomyKind k);

class DichotomyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DichotomyEstimate {
  Semiaxis semiaxis = Semiaxis::kPlus;
  DichotomyKind kind = DichotomyKind::kMarginal;
  double C_hat = 1.0;
  double lambda_hat = 0.0;
  double horizon = 0.0;
  double max_residual = 0.0;
  // raw slopes of both fits; the kind is read off these
  double lambda_stable_fit = 0.0;
  double lambda_unstable_fit = 0.0;
};

struct DichotomyOptions {
  double lambda_min = 0.05;
  double window = 5.0;
  double grid_dt = 0.0;  // 0: window/20
};

// Fits on the uniform time grid t_i = t_first + i*dt given L_i = Lambda(t_i, t_first).
DichotomyEstimate fit_dichotomy(const std::vector<double>& L, double dt, double window,
                                double lambda_min, Semiaxis semiaxis);

// Estimate on [0, horizon] (kPlus) or [-horizon, 0] (kMinus).
DichotomyEstimate estimate_dichotomy(const OdeSystem& system, const IntegralCurve& curve,
                                     Semiaxis semiaxis, double horizon, double window,
                                     double lambda_min = 0.05);
// Same on an arbitrary interval of the curve.
DichotomyEstimate estimate_on_interval(const IntegralCurve& curve, double t_a, double t_b,
                                       Semiaxis semiaxis, const DichotomyOptions& opts);

// Semi-axis classification allowing a finite transient: when the fit over the
// whole semi-axis is marginal, the kind and rate come from the far half and
// C_hat is enlarged to cover the near half.
DichotomyEstimate classify_semiaxis(const IntegralCurve& curve, Semiaxis semiaxis,
                                    double horizon, const DichotomyOptions& opts = {});

std::string to_json(const DichotomyEstimate& e);

class LyapunovError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LyapunovFunction {
  // Internal time tau runs forward from 0; original time is orientation*tau.
  // orientation = -1 when the function was obtained by time reflection.
  int orientation = 1;
  std::vector<double> tau;
  std::vector<double> s;
  std::vector<double> a;      // linearization along the curve, internal time
  std::vector<double> gamma;  // lifted curve, internal time
  double C_hat = 1.0;
  double lambda_hat = 0.0;
  double a0 = 0.0;
  double truncation_tail = 0.0;
  double lower_bound = 0.0;  // 1/(2 a0)
  double upper_bound = 0.0;  // C^2/(2 lambda)
  bool bounds_hold = false;
  double sprime_residual = 0.0;
  std::vector<std::pair<double, double>> nonlinearity_modulus;  // (r, n(r))
  OdeSystem system;

  double time_of(size_t i) const { return orientation * tau[i]; }
  // f in internal time: orientation * f(orientation*tau, x)
  double f_internal(double tau, double x) const {
    return orientation * system.f(orientation * tau, x);
  }
  // Remainder h(tau, u) of the linearization at grid index i.
  double remainder(size_t i, double u) const;
};

struct LyapunovOptions {
  double dt = 0.05;
  double t_end = -1.0;  // < 0: largest grid time with tail <= tail_max
  double tail_max = 1e-6;
};

// Stable type on R+ directly; unstable type on R- by time reflection.
LyapunovFunction lyapunov(const OdeSystem& system, const IntegralCurve& curve,
                          const DichotomyEstimate& est, const LyapunovOptions& opts = {});

struct DecayReport {
  double max_ratio = 0.0;      // max of 2 s^2 h/u; the bound needs <= 1/2
  double admissible_u = 0.0;
  std::vector<std::pair<double, double>> tested;  // (amplitude, max ratio)
};

class DecayCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checks dS/dt <= -u^2/2 with S = s^2 u^2 on sampled (t0, u0), halving the
// amplitude from u_max until it holds.
DecayReport lyapunov_decay_check(const OdeSystem& system, const IntegralCurve& curve,
                                 const LyapunovFunction& lyap, double u_max, int samples,
                                 int max_halvings = 10);

struct IsolatingNeighborhood {
  std::vector<double> t;  // original time
  std::vector<double> upper, lower;  // offsets u = +-c/s(t) from the curve
  double transversality_margin = 0.0;
};

IsolatingNeighborhood isolating_neighborhood(const LyapunovFunction& lyap,
                                             const IntegralCurve& curve, double c,
                                             double admissible_u);

}  // namespace circdyn
