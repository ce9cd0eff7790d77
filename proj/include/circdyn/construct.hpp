// Autonomous fields with prescribed simple zeros, glued asymptotically
// autonomous systems, autonomization of a word, and the model library.
#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "circdyn/invariant.hpp"
#include "circdyn/ode.hpp"
#include "circdyn/pchip.hpp"

namespace circdyn {

class ConstructError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ZeroSpec {
  struct Zero {
    double position;
    int sign;  // sign of f' at the zero
  };
  std::vector<Zero> zeros;
  double amplitude = 1.0;

  // Sorts by position in [0,1) and checks count, alternation and separation.
  void validate(double separation = 1e-3);
};

// Autonomous field with simple zeros and an explicit flow map.
class ZeroField : public Field {
 public:
  double f(double, double x) const override { return value(x); }
  void f_fx(double, double x, double& f, double& fx) const override {
    f = value(x);
    fx = deriv(x);
  }
  virtual double value(double x) const = 0;
  virtual double deriv(double x) const = 0;
  // Lifted position after time t from the lifted point x0, and its x0-derivative.
  virtual double flow(double t, double x0) const = 0;
  virtual double flow_dx(double t, double x0) const = 0;
  virtual void flow_jet(double t, double x0, double& F, double& F_x) const {
    F = flow(t, x0);
    F_x = flow_dx(t, x0);
  }
  const ZeroSpec& spec() const { return spec_; }

 protected:
  ZeroSpec spec_;
  // lifted zeros z_0 < ... < z_{k-1} < z_0 + 1 and the sign of f on (z_i, z_{i+1})
  std::vector<double> z_;
  std::vector<int> side_;
  void set_zeros(const ZeroSpec& spec);
  // Index i with z_i <= x - k < z_{i+1}, and the integer shift k.
  size_t locate(double x, double& k) const;
};

// amplitude * sigma * prod_i sin(pi (x - z_i)) / max|prod|
class ProductSineField : public ZeroField {
 public:
  explicit ProductSineField(ZeroSpec spec);
  double value(double x) const override;
  double deriv(double x) const override;
  double flow(double t, double x0) const override;
  double flow_dx(double t, double x0) const override;
  std::string expression() const;

 private:
  double raw(double x) const;
  double raw_deriv(double x) const;
  double scale_ = 1.0;
  // per interval: time potential P(w) on a uniform w grid, with dP/dw
  struct Table {
    std::vector<double> P, dP;
  };
  std::vector<Table> tables_;
  double w_max_ = 40.0, dw_ = 0.02;
  double dPdw(size_t i, double w) const;
  double potential(size_t i, double w) const;
  double potential_inverse(size_t i, double P) const;
};

// On each interval between consecutive zeros, a half sine arch scaled so that
// |f'| equals rate at every zero; the flow is explicit.
class PiecewiseSineField : public ZeroField {
 public:
  PiecewiseSineField(ZeroSpec spec, double rate);
  double value(double x) const override;
  double deriv(double x) const override;
  double flow(double t, double x0) const override;
  double flow_dx(double t, double x0) const override;
  void flow_jet(double t, double x0, double& F, double& F_x) const override;
  double rate() const { return rate_; }

 private:
  struct Arch;
  Arch arch(double x) const;
  double rate_;
};

OdeSystem field_from_zeros(const ZeroSpec& spec);

struct GluePlan {
  std::shared_ptr<const ZeroField> f_minus, f_plus;
  double half_width = 1.0;
  // Pairing of f_minus labels to f_plus labels: knots (eta_k, h(eta_k)) of a
  // degree-one monotone map h. Empty: h(eta) = eta + winding.
  std::vector<std::pair<double, double>> knots;
  int winding = 0;
  // Zero pairs recorded for reporting: (f_minus zero, f_plus zero) lifted.
  std::vector<std::pair<double, double>> pairing;
};

// Field of the foliation Gamma(t, eta) = (1 - b) F_-(t, eta) + b F_+(t, h(eta)),
// b a quintic smootherstep across [-T, T].
class GluedField : public Field {
 public:
  explicit GluedField(GluePlan plan);
  double f(double t, double x) const override;
  void f_fx(double t, double x, double& f, double& fx) const override;
  const GluePlan& plan() const { return plan_; }
  double h(double eta) const;
  double h_prime(double eta) const;
  double gamma(double t, double eta) const;
  double gamma_eta(double t, double eta) const;
  void gamma_jet(double t, double eta, double& g, double& g_eta) const;
  // Label eta with gamma(t, eta) = x; residual below 1e-13 before the last Newton step.
  double gamma_inverse(double t, double x) const;

 private:
  GluePlan plan_;
  PeriodicLift h_;
  bool identity_h_ = true;
};

OdeSystem glue(const GluePlan& plan);

struct Autonomization {
  OdeSystem system;
  EquippedSet designed;  // U- and S-points at t = 0
  GluePlan plan;
};

// rate = |f_plus'| = |f_minus'| at every zero.
Autonomization autonomize(const UInvariant& inv, double rate = 3.14159265358979323846);

// Named models; params override defaults.
OdeSystem library(const std::string& name, const ParamMap& params = {});
std::vector<std::string> library_names();
// Default parameters of a library model.
ParamMap library_defaults(const std::string& name);

// Sampled spec JSON for a glued system (rebuilt exactly from the stored plan).
std::string export_sampled(const GluedField& field, const std::string& label);
// Rebuilds a system from the "interpolation" member of a sampled spec.
OdeSystem import_sampled(const std::string& json_text);

}  // namespace circdyn
