// Circle arithmetic, systems x' = f(t,x) with f 1-periodic in x, and their
// integration with a lifted dense output and the log-flow of the linearization.
#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "circdyn/expr.hpp"

namespace circdyn {

// Reduces a real number to [0,1).
double wrap01(double x);

struct CirclePoint {
  double value = 0.0;
  CirclePoint() = default;
  explicit CirclePoint(double v) : value(wrap01(v)) {}
};

double circle_distance(double x, double y);
inline double circle_distance(CirclePoint x, CirclePoint y) {
  return circle_distance(x.value, y.value);
}

// Right-hand side with access to f_x.
class Field {
 public:
  virtual ~Field() = default;
  virtual double f(double t, double x) const = 0;
  virtual void f_fx(double t, double x, double& f, double& fx) const = 0;
};

class ExprField : public Field {
 public:
  ExprField(Expression rhs, ParamMap params);
  double f(double t, double x) const override { return cf_(t, x); }
  void f_fx(double t, double x, double& f, double& fx) const override {
    f = cf_(t, x);
    fx = cfx_(t, x);
  }
  const Expression& rhs() const { return rhs_; }
  const Expression& rhs_x() const { return rhs_x_; }

 private:
  Expression rhs_, rhs_x_;
  CompiledExpr cf_, cfx_;
};

// Opaque callable; f_x falls back to a central difference with step
// 1e-6*max(1,|x|) when no derivative is supplied.
class CallableField : public Field {
 public:
  using Fn = std::function<double(double, double)>;
  explicit CallableField(Fn f, Fn fx = nullptr) : f_(std::move(f)), fx_(std::move(fx)) {}
  double f(double t, double x) const override { return f_(t, x); }
  void f_fx(double t, double x, double& f, double& fx) const override;

 private:
  Fn f_, fx_;
};

struct GenericTime {};
struct PeriodicTime {
  double period = 1.0;
};
struct AsymptoticallyAutonomous {
  std::shared_ptr<const Field> f_minus, f_plus;
  double half_width = 1.0;
};
using TimeStructure = std::variant<GenericTime, PeriodicTime, AsymptoticallyAutonomous>;

struct OdeSystem {
  std::shared_ptr<const Field> field;
  ParamMap params;
  TimeStructure time_structure = GenericTime{};
  std::optional<double> a0_bound;
  // Cap on the integrator step when the options leave h_max at 0; for fields
  // with short time-localized forcing next to regions where f vanishes.
  double max_step = 0.0;
  std::string label;

  static OdeSystem from_expression(const std::string& rhs, const ParamMap& params = {});

  double f(double t, double x) const { return field->f(t, x); }
  void f_fx(double t, double x, double& f, double& fx) const { field->f_fx(t, x, f, fx); }

  // sup |f_x| from a 256x256 grid over [t_lo,t_hi] x [0,1), unless a0_bound is set.
  double a0(double t_lo, double t_hi) const;
  std::optional<double> period() const;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& msg, double t, double x)
      : std::runtime_error(msg), t_(t), x_(x) {}
  double t() const { return t_; }
  double x() const { return x_; }

 private:
  double t_, x_;
};

class SpanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IntegrateOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_max = 0.0;  // 0: no cap besides the span
  long max_steps = 10000000;
};

struct CurveSample {
  double t;
  double lifted_x;
};

class IntegralCurve {
 public:
  double t0() const { return t0_; }
  CirclePoint x0() const { return CirclePoint(x0_); }
  double t_min() const { return std::min(t0_, t_end_); }
  double t_max() const { return std::max(t0_, t_end_); }
  double t_end() const { return t_end_; }
  int direction() const { return dir_; }
  bool covers(double t) const { return t >= t_min() && t <= t_max(); }

  double lifted(double t) const;
  double circle(double t) const { return wrap01(lifted(t)); }
  double lifted_end() const;
  // Lambda(t, t0) = integral of f_x along the curve from t0 to t.
  double log_flow(double t) const;
  double log_flow(double t, double tau) const { return log_flow(t) - log_flow(tau); }

  std::vector<CurveSample> samples() const;
  size_t step_count() const { return steps_.size(); }

 private:
  friend IntegralCurve integrate_until(const OdeSystem&, double, double, double,
                                       const IntegrateOptions&,
                                       const std::function<bool(double, double)>&);
  struct Step {
    double t, h;
    double rx[5];
    double rl[5];
  };
  const Step& find(double t) const;

  double t0_ = 0.0, x0_ = 0.0, t_end_ = 0.0;
  int dir_ = 1;
  std::vector<Step> steps_;
};

// Embedded Dormand-Prince 5(4) with its continuous extension. Works forward and
// backward; a step is rejected when the lift moves by 1/4 or more.
IntegralCurve integrate(const OdeSystem& system, double t0, CirclePoint x0, double t1,
                        const IntegrateOptions& opts = {});
// Same on the lifted line: x0 is kept as given.
IntegralCurve integrate_lifted(const OdeSystem& system, double t0, double x0, double t1,
                               const IntegrateOptions& opts = {});
// Stops at the end of the first accepted step where stop(t, lifted_x) holds.
IntegralCurve integrate_until(const OdeSystem& system, double t0, double x0, double t1,
                              const IntegrateOptions& opts,
                              const std::function<bool(double, double)>& stop);

// Lambda(t, tau) along the curve.
double variational(const OdeSystem& system, const IntegralCurve& curve, double tau, double t);

void write_csv(const IntegralCurve& curve, std::ostream& out);

}  // namespace circdyn
