#include "circdyn/construct.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>

#include "json.hpp"

namespace circdyn {

namespace {

constexpr double kPi = 3.14159265358979323846;

double logistic(double w) {
  return w >= 0 ? 1.0 / (1.0 + std::exp(-w)) : std::exp(w) / (1.0 + std::exp(w));
}

}  // namespace

void ZeroSpec::validate(double separation) {
  if (!(amplitude > 0.0)) throw ConstructError("amplitude must be positive");
  if (zeros.size() < 2 || zeros.size() % 2 != 0)
    throw ConstructError("zero count must be even and at least two");
  for (auto& z : zeros) {
    if (z.sign != 1 && z.sign != -1) throw ConstructError("zero signs must be +1 or -1");
    z.position = wrap01(z.position);
  }
  std::sort(zeros.begin(), zeros.end(),
            [](const Zero& a, const Zero& b) { return a.position < b.position; });
  for (size_t i = 0; i < zeros.size(); ++i) {
    const auto& a = zeros[i];
    const auto& b = zeros[(i + 1) % zeros.size()];
    if (a.sign == b.sign) throw ConstructError("zero signs must alternate around the circle");
    if (circle_distance(a.position, b.position) < separation)
      throw ConstructError("zeros closer than the separation tolerance");
  }
}

void ZeroField::set_zeros(const ZeroSpec& spec) {
  spec_ = spec;
  spec_.validate();
  z_.clear();
  side_.clear();
  for (const auto& z : spec_.zeros) {
    z_.push_back(z.position);
    side_.push_back(z.sign);
  }
}

size_t ZeroField::locate(double x, double& k) const {
  k = std::floor(x - z_[0]);
  double u = x - k;
  size_t i = std::upper_bound(z_.begin(), z_.end(), u) - z_.begin();
  return i == 0 ? 0 : i - 1;
}

// ---------------------------------------------------------------- product of sines

ProductSineField::ProductSineField(ZeroSpec spec) {
  set_zeros(spec);
  double d0 = raw_deriv(z_[0]);
  double sigma = (d0 > 0) == (side_[0] > 0) ? 1.0 : -1.0;
  double mx = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) mx = std::max(mx, std::abs(raw((i + 0.5) / n)));
  scale_ = sigma * spec_.amplitude / mx;
  for (size_t i = 0; i < z_.size(); ++i)
    if ((deriv(z_[i]) > 0) != (side_[i] > 0)) throw ConstructError("inconsistent zero signs");

  // Time potential per interval in the coordinate w = ln((x - z_a)/(z_b - x)).
  const size_t cells = static_cast<size_t>(std::llround(2 * w_max_ / dw_));
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                               0.4786286704993665, 0.2369268850561891};
  tables_.resize(z_.size());
  for (size_t i = 0; i < z_.size(); ++i) {
    auto& tb = tables_[i];
    tb.P.assign(cells + 1, 0.0);
    tb.dP.assign(cells + 1, 0.0);
    for (size_t j = 0; j <= cells; ++j) tb.dP[j] = dPdw(i, -w_max_ + j * dw_);
    for (size_t j = 0; j < cells; ++j) {
      double a = -w_max_ + j * dw_, s = 0.0;
      for (int q = 0; q < 5; ++q) s += gw[q] * dPdw(i, a + 0.5 * dw_ * (1 + gx[q]));
      tb.P[j + 1] = tb.P[j] + 0.5 * dw_ * s;
    }
  }
}

double ProductSineField::raw(double x) const {
  double p = 1.0;
  for (double z : z_) p *= std::sin(kPi * (x - z));
  return p;
}

double ProductSineField::raw_deriv(double x) const {
  double s = 0.0;
  for (size_t j = 0; j < z_.size(); ++j) {
    double p = kPi * std::cos(kPi * (x - z_[j]));
    for (size_t i = 0; i < z_.size(); ++i)
      if (i != j) p *= std::sin(kPi * (x - z_[i]));
    s += p;
  }
  return s;
}

namespace {

// Product with the two bracketing factors taken from the offsets da = x - z_a
// and db = z_b - x, which keeps relative accuracy next to the zeros.
double local_product(const std::vector<double>& z, size_t i, double da, double db) {
  const size_t k = z.size(), ib = (i + 1) % k;
  double x = z[i] + da;
  double p = 1.0;
  for (size_t j = 0; j < k; ++j) {
    if (j == i) {
      p *= std::sin(kPi * da);
    } else if (j == ib) {
      // z_b = z[ib] or z[ib] + 1
      p *= ib == 0 ? std::sin(kPi * db) : -std::sin(kPi * db);
    } else {
      p *= std::sin(kPi * (x - z[j]));
    }
  }
  return p;
}

}  // namespace

double ProductSineField::value(double x) const {
  double k;
  size_t i = locate(x, k);
  double zb = i + 1 < z_.size() ? z_[i + 1] : z_[0] + 1.0;
  double u = x - k;
  return scale_ * local_product(z_, i, u - z_[i], zb - u);
}

double ProductSineField::deriv(double x) const { return scale_ * raw_deriv(x); }

double ProductSineField::dPdw(size_t i, double w) const {
  double zb = i + 1 < z_.size() ? z_[i + 1] : z_[0] + 1.0;
  double L = zb - z_[i];
  double pa = logistic(w), pb = logistic(-w);
  double g = scale_ * local_product(z_, i, L * pa, L * pb);
  return L * pa * pb / g;
}

double ProductSineField::potential(size_t i, double w) const {
  const auto& tb = tables_[i];
  const size_t cells = tb.P.size() - 1;
  if (w <= -w_max_) return tb.P[0] + tb.dP[0] * (w + w_max_);
  if (w >= w_max_) return tb.P[cells] + tb.dP[cells] * (w - w_max_);
  size_t j = std::min(cells - 1, static_cast<size_t>((w + w_max_) / dw_));
  double s = (w - (-w_max_ + j * dw_)) / dw_;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * tb.P[j] + h10 * dw_ * tb.dP[j] + h01 * tb.P[j + 1] + h11 * dw_ * tb.dP[j + 1];
}

double ProductSineField::potential_inverse(size_t i, double P) const {
  const auto& tb = tables_[i];
  const size_t cells = tb.P.size() - 1;
  const double sg = side_[i] > 0 ? 1.0 : -1.0;  // P increases with w when f > 0
  if (sg * (P - tb.P[0]) <= 0) return -w_max_ + (P - tb.P[0]) / tb.dP[0];
  if (sg * (P - tb.P[cells]) >= 0) return w_max_ + (P - tb.P[cells]) / tb.dP[cells];
  size_t lo = 0, hi = cells;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    if (sg * (tb.P[mid] - P) <= 0) lo = mid; else hi = mid;
  }
  double a = -w_max_ + lo * dw_, b = a + dw_;
  double w = a + dw_ * (P - tb.P[lo]) / (tb.P[lo + 1] - tb.P[lo]);
  for (int it = 0; it < 60; ++it) {
    double r = sg * (potential(i, w) - P);
    if (r > 0) b = w; else a = w;
    double d = sg * dPdw(i, w);
    double next = w - r / d;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - w) < 1e-15 * std::max(1.0, std::abs(w))) return next;
    w = next;
  }
  return w;
}

double ProductSineField::flow(double t, double x0) const {
  double k;
  size_t i = locate(x0, k);
  double u = x0 - k;
  double da = u - z_[i];
  if (da == 0.0 || t == 0.0) return x0;
  double zb = i + 1 < z_.size() ? z_[i + 1] : z_[0] + 1.0;
  double L = zb - z_[i];
  double w0 = std::log(da) - std::log(zb - u);
  double w = potential_inverse(i, potential(i, w0) + t);
  double x = w <= 0 ? z_[i] + L * logistic(w) : zb - L * logistic(-w);
  return x + k;
}

double ProductSineField::flow_dx(double t, double x0) const {
  double k;
  size_t i = locate(x0, k);
  double u = x0 - k;
  double da = u - z_[i];
  if (da == 0.0) return std::exp(deriv(z_[i]) * t);
  if (t == 0.0) return 1.0;
  double zb = i + 1 < z_.size() ? z_[i + 1] : z_[0] + 1.0;
  double L = zb - z_[i];
  double w0 = std::log(da) - std::log(zb - u);
  double w = potential_inverse(i, potential(i, w0) + t);
  auto g = [&](double ww) { return local_product(z_, i, L * logistic(ww), L * logistic(-ww)); };
  return g(w) / g(w0);
}

std::string ProductSineField::expression() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", scale_);
  std::string s = buf;
  for (double z : z_) {
    std::snprintf(buf, sizeof buf, "*sin(pi*(x-%.17g))", z);
    s += buf;
  }
  return s;
}

// ---------------------------------------------------------------- piecewise sine

PiecewiseSineField::PiecewiseSineField(ZeroSpec spec, double rate) : rate_(rate) {
  if (!(rate > 0.0)) throw ConstructError("rate must be positive");
  set_zeros(spec);
}

struct PiecewiseSineField::Arch {
  size_t i;
  double k, za, zb, L, da, db;
  int side;
};

PiecewiseSineField::Arch PiecewiseSineField::arch(double x) const {
  double k;
  size_t i = locate(x, k);
  double zb = i + 1 < z_.size() ? z_[i + 1] : z_[0] + 1.0;
  double u = x - k;
  if (zb - u <= 0.0) {
    // x rounds onto the next zero: take the arch starting there
    if (++i == z_.size()) {
      i = 0;
      k += 1.0;
    }
    zb = i + 1 < z_.size() ? z_[i + 1] : z_[0] + 1.0;
    return {i, k, z_[i], zb, zb - z_[i], 0.0, zb - z_[i], side_[i]};
  }
  return {i, k, z_[i], zb, zb - z_[i], u - z_[i], zb - u, side_[i]};
}

double PiecewiseSineField::value(double x) const {
  Arch a = arch(x);
  double s = a.da <= a.db ? std::sin(kPi * a.da / a.L) : std::sin(kPi * a.db / a.L);
  return a.side * rate_ / kPi * a.L * s;
}

double PiecewiseSineField::deriv(double x) const {
  Arch a = arch(x);
  double c = a.da <= a.db ? std::cos(kPi * a.da / a.L) : -std::cos(kPi * a.db / a.L);
  return a.side * rate_ * c;
}

namespace {

// w = ln tan(theta/2) with theta = pi*da/L, from whichever end is closer.
double arch_w(double da, double db, double L) {
  if (da <= db) return std::log(std::tan(0.5 * kPi * da / L));
  return -std::log(std::tan(0.5 * kPi * db / L));
}

double cosh_ratio(double w0, double w) {
  double a0 = std::abs(w0), a1 = std::abs(w);
  return std::exp(a0 - a1) * (1.0 + std::exp(-2 * a0)) / (1.0 + std::exp(-2 * a1));
}

}  // namespace

double PiecewiseSineField::flow(double t, double x0) const {
  Arch a = arch(x0);
  if (a.da == 0.0 || t == 0.0) return x0;
  double w = arch_w(a.da, a.db, a.L) + a.side * rate_ * t;
  double x = w <= 0 ? a.za + a.L * 2.0 * std::atan(std::exp(w)) / kPi
                    : a.zb - a.L * 2.0 * std::atan(std::exp(-w)) / kPi;
  return x + a.k;
}

double PiecewiseSineField::flow_dx(double t, double x0) const {
  Arch a = arch(x0);
  if (a.da == 0.0) return std::exp(a.side * rate_ * t);
  if (t == 0.0) return 1.0;
  double w0 = arch_w(a.da, a.db, a.L);
  return cosh_ratio(w0, w0 + a.side * rate_ * t);
}

void PiecewiseSineField::flow_jet(double t, double x0, double& F, double& F_x) const {
  Arch a = arch(x0);
  if (a.da == 0.0 || t == 0.0) {
    F = x0;
    F_x = a.da == 0.0 ? std::exp(a.side * rate_ * t) : 1.0;
    return;
  }
  // q0 = exp(-|w0|) straight from tan(theta/2); dx/dw is proportional to sech w.
  double tq = a.da <= a.db ? std::tan(0.5 * kPi * a.da / a.L)
                           : 1.0 / std::tan(0.5 * kPi * a.db / a.L);
  double w0 = std::log(tq);
  double q0 = std::min(tq, 1.0 / tq);
  double w = w0 + a.side * rate_ * t;
  double q = std::exp(-std::abs(w));
  double x = w <= 0 ? a.za + a.L * 2.0 * std::atan(q) / kPi : a.zb - a.L * 2.0 * std::atan(q) / kPi;
  F = x + a.k;
  F_x = (q / q0) * (1.0 + q0 * q0) / (1.0 + q * q);
}

OdeSystem field_from_zeros(const ZeroSpec& spec) {
  OdeSystem s;
  auto f = std::make_shared<ProductSineField>(spec);
  s.label = "zeros:" + f->expression();
  s.field = f;
  return s;
}

// ---------------------------------------------------------------- glue

namespace {

double smootherstep(double s) { return s * s * s * (s * (6 * s - 15) + 10); }
double smootherstep_d(double s) { return 30 * s * s * (1 - s) * (1 - s); }

}  // namespace

GluedField::GluedField(GluePlan plan) : plan_(std::move(plan)) {
  if (!plan_.f_minus || !plan_.f_plus) throw ConstructError("glue needs both limit fields");
  if (!(plan_.half_width > 0.0)) throw ConstructError("layer half-width must be positive");
  if (!plan_.knots.empty()) {
    std::vector<double> xs, ys;
    for (auto [a, b] : plan_.knots) {
      xs.push_back(a);
      ys.push_back(b);
    }
    for (size_t i = 0; i + 1 < xs.size(); ++i)
      if (!(xs[i + 1] > xs[i]) || !(ys[i + 1] > ys[i]))
        throw ConstructError("pairing knots must be strictly increasing (paths would cross)");
    try {
      h_ = PeriodicLift(xs, ys);
    } catch (const std::invalid_argument& e) {
      throw ConstructError(std::string("pairing knots: ") + e.what());
    }
    identity_h_ = false;
  }
  auto plus_zero_sign = [&](double y) {
    for (const auto& z : plan_.f_plus->spec().zeros)
      if (circle_distance(z.position, y) < 1e-9) return z.sign;
    return 0;
  };
  for (const auto& z : plan_.f_minus->spec().zeros)
    if (z.sign < 0 && plus_zero_sign(h(z.position)) > 0)
      throw ConstructError("stable zero of f_minus paired to an unstable zero of f_plus");
  for (auto [zm, zp] : plan_.pairing) {
    int sm = 0;
    for (const auto& z : plan_.f_minus->spec().zeros)
      if (circle_distance(z.position, zm) < 1e-9) sm = z.sign;
    if (sm < 0 && plus_zero_sign(zp) > 0)
      throw ConstructError("stable zero of f_minus paired to an unstable zero of f_plus");
  }
  const double T = plan_.half_width;
  for (int i = 0; i <= 40; ++i) {
    double t = -T + 2 * T * i / 40.0;
    for (int j = 0; j < 400; ++j)
      if (!(gamma_eta(t, j / 400.0) > 0.0)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "glued foliation loses monotonicity at t = %.6g", t);
        throw ConstructError(buf);
      }
  }
}

double GluedField::h(double eta) const { return identity_h_ ? eta + plan_.winding : h_(eta); }
double GluedField::h_prime(double eta) const { return identity_h_ ? 1.0 : h_.derivative(eta); }

double GluedField::gamma(double t, double eta) const {
  double b = smootherstep((t + plan_.half_width) / (2 * plan_.half_width));
  return (1 - b) * plan_.f_minus->flow(t, eta) + b * plan_.f_plus->flow(t, h(eta));
}

double GluedField::gamma_eta(double t, double eta) const {
  double b = smootherstep((t + plan_.half_width) / (2 * plan_.half_width));
  return (1 - b) * plan_.f_minus->flow_dx(t, eta) +
         b * plan_.f_plus->flow_dx(t, h(eta)) * h_prime(eta);
}

void GluedField::gamma_jet(double t, double eta, double& g, double& g_eta) const {
  double b = smootherstep((t + plan_.half_width) / (2 * plan_.half_width));
  double Fm, Fmx, Fp, Fpx;
  plan_.f_minus->flow_jet(t, eta, Fm, Fmx);
  plan_.f_plus->flow_jet(t, h(eta), Fp, Fpx);
  g = (1 - b) * Fm + b * Fp;
  g_eta = (1 - b) * Fmx + b * Fpx * h_prime(eta);
}

double GluedField::gamma_inverse(double t, double x) const {
  // Successive calls from an integrator sit on nearby leaves: start from the last label.
  thread_local struct {
    const GluedField* owner = nullptr;
    double x = 0.0, eta = 0.0;
  } last;
  double guess = std::numeric_limits<double>::quiet_NaN();
  if (last.owner == this) guess = last.eta + std::round(x - last.x);
  double eta = degree_one_inverse(
      [&](double e, double& g, double& ge) { gamma_jet(t, e, g, ge); }, x, 1e-13, guess);
  last = {this, x, eta};
  return eta;
}

double GluedField::f(double t, double x) const {
  double fv, fx;
  f_fx(t, x, fv, fx);
  return fv;
}

void GluedField::f_fx(double t, double x, double& f, double& fx) const {
  const double T = plan_.half_width;
  if (t <= -T) {
    f = plan_.f_minus->value(x);
    fx = plan_.f_minus->deriv(x);
    return;
  }
  if (t >= T) {
    f = plan_.f_plus->value(x);
    fx = plan_.f_plus->deriv(x);
    return;
  }
  double s = (t + T) / (2 * T);
  double b = smootherstep(s), bp = smootherstep_d(s) / (2 * T);
  double eta = gamma_inverse(t, x);
  double he = h(eta), hp = h_prime(eta);
  double Fm, Fmx, Fp, Fpx;
  plan_.f_minus->flow_jet(t, eta, Fm, Fmx);
  plan_.f_plus->flow_jet(t, he, Fp, Fpx);
  Fpx *= hp;
  double gm = plan_.f_minus->value(Fm), gp = plan_.f_plus->value(Fp);
  f = bp * (Fp - Fm) + (1 - b) * gm + b * gp;
  double num = bp * (Fpx - Fmx) + (1 - b) * plan_.f_minus->deriv(Fm) * Fmx +
               b * plan_.f_plus->deriv(Fp) * Fpx;
  fx = num / ((1 - b) * Fmx + b * Fpx);
}

OdeSystem glue(const GluePlan& plan) {
  auto g = std::make_shared<GluedField>(plan);
  OdeSystem s;
  s.field = g;
  s.time_structure = AsymptoticallyAutonomous{plan.f_minus, plan.f_plus, plan.half_width};
  s.label = "glued";
  return s;
}

// ---------------------------------------------------------------- autonomize

Autonomization autonomize(const UInvariant& inv, double rate) {
  const std::string& w = inv.word;
  const int K = static_cast<int>(w.size());
  if (inv.n < 1 || inv.m < 1 || K != inv.n + inv.m)
    throw ConstructError("autonomize needs a word with n >= 1 and m >= 1");
  std::vector<double> us, ss;
  Autonomization out;
  for (int k = 0; k < K; ++k) {
    double p = static_cast<double>(k) / K;
    (w[k] == 'U' ? us : ss).push_back(p);
    out.designed.points.push_back({p, w[k] == 'U' ? Label::kU : Label::kS});
  }
  out.designed.normalize();
  auto interlace = [](const std::vector<double>& pts, int sign) {
    ZeroSpec z;
    for (size_t j = 0; j < pts.size(); ++j) {
      double next = j + 1 < pts.size() ? pts[j + 1] : pts[0] + 1.0;
      z.zeros.push_back({pts[j], sign});
      z.zeros.push_back({0.5 * (pts[j] + next), -sign});
    }
    return z;
  };
  auto f_plus = std::make_shared<PiecewiseSineField>(interlace(us, +1), rate);
  auto f_minus = std::make_shared<PiecewiseSineField>(interlace(ss, -1), rate);
  GluePlan plan;
  plan.f_minus = f_minus;
  plan.f_plus = f_plus;
  plan.half_width = 1.0;
  // Each point lies in one arc of the other kind; the interlaced zero of that
  // arc is where its curve comes from (U) or goes to (S).
  auto arc_mid = [](const std::vector<double>& pts, double x) {
    for (size_t j = 0; j < pts.size(); ++j) {
      double a = pts[j], b = j + 1 < pts.size() ? pts[j + 1] : pts[0] + 1.0;
      double xl = x < a ? x + 1.0 : x;
      if (xl > a && xl < b) return wrap01(0.5 * (a + b));
    }
    return wrap01(x + 0.5);
  };
  for (double u : us) plan.pairing.push_back({arc_mid(ss, u), u});
  for (double s : ss) plan.pairing.push_back({s, arc_mid(us, s)});
  out.plan = plan;
  out.system = glue(plan);
  out.system.label = "autonomize(" + w + ")";
  return out;
}

// ---------------------------------------------------------------- library

namespace {

// Kick profile on [t_{2k+1}, t_{2k+2}] with t_{2k+1} - t_{2k} = k + 1 and unit kicks.
double kick(double t) {
  if (t <= 0) return 0.0;
  double start = 0.0;
  for (int k = 0;; ++k) {
    double a = start + k + 1;
    if (t < a) return 0.0;
    if (t < a + 1) {
      double s = t - a;
      return 30 * s * s * (1 - s) * (1 - s);
    }
    start = a + 1;
  }
}

double plateau_fill(double t) {
  if (t <= -1) return 1.0;
  if (t >= 0) return 0.0;
  return 1.0 - smootherstep(t + 1);
}

// Segment model on y in [-1, 1]: returns F and F_y.
void slow_transit_segment(double t, double y, double kappa, double fill, double& F, double& Fy) {
  double a = std::abs(y), sg = y < 0 ? -1.0 : 1.0;
  double g, gp;
  if (a >= 2.0 / 3.0) {
    g = 1 - a;
    gp = -sg;
  } else if (a <= 1.0 / 3.0) {
    g = gp = 0.0;
  } else {
    double s = 3 * (2.0 / 3.0 - a);
    g = (1 - s) * (1 - s) * (1.0 / 3.0 + s);
    gp = -3 * sg * (1 - s) * (1.0 / 3.0 - 3 * s);
  }
  double c = 0.0, cp = 0.0;
  if (a < 2.0 / 3.0) {
    double th = 0.75 * kPi * y;
    c = std::cos(th) * std::cos(th);
    cp = -0.75 * kPi * std::sin(2 * th);
  }
  double amp = kappa * kick(t) + fill * plateau_fill(t);
  F = g + amp * c;
  Fy = gp + amp * cp;
}

OdeSystem slow_transit(const ParamMap& p) {
  double kappa = p.at("kappa"), fill = p.at("fill");
  auto eval = [kappa, fill](double t, double x, double& f, double& fx) {
    double u = wrap01(x), F, Fy;
    if (u <= 0.5) {
      slow_transit_segment(t, 4 * u - 1, kappa, fill, F, Fy);
      f = F / 4;
    } else {
      slow_transit_segment(t, 3 - 4 * u, kappa, fill, F, Fy);
      f = -F / 4;
    }
    fx = Fy;
  };
  OdeSystem s;
  s.field = std::make_shared<CallableField>(
      [eval](double t, double x) {
        double f, fx;
        eval(t, x, f, fx);
        return f;
      },
      [eval](double t, double x) {
        double f, fx;
        eval(t, x, f, fx);
        return fx;
      });
  s.params = p;
  s.max_step = 0.25;  // kicks last one time unit and f vanishes on the plateau
  s.label = "slow_transit";
  return s;
}

struct ModelDef {
  const char* rhs;  // nullptr for callables
  ParamMap defaults;
  double period;  // 0: none
};

const std::map<std::string, ModelDef>& models() {
  static const std::map<std::string, ModelDef> m = {
      {"autonomous_sin", {"sin(2*pi*x)", {}, 0.0}},
      {"reversible", {"cos(2*pi*x)*(sin(2*pi*x)^2+exp(-t^2))/(2*pi)", {}, 0.0}},
      {"reversible_mu", {"cos(2*pi*x)*(sin(2*pi*x)^2+exp(-t^2)-mu)/(2*pi)", {{"mu", 0.04}}, 0.0}},
      {"riccati_gauss",
       {"(sin(pi*x)^2+(exp(-t^2)-mu)*cos(pi*x)^2)/pi", {{"mu", 0.04}}, 0.0}},
      {"slow_transit", {nullptr, {{"kappa", 2.0}, {"fill", 0.3}}, 0.0}},
      {"periodic_rough", {"a*sin(2*pi*x)+c*sin(2*pi*t)", {{"a", 0.1}, {"c", 0.02}}, 1.0}},
      {"ap_perturbed", {"sin(2*pi*x)+eps*(sin(t)+sin(sqrt(2)*t))", {{"eps", 0.05}}, 0.0}},
  };
  return m;
}

}  // namespace

std::vector<std::string> library_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : models()) out.push_back(k);
  return out;
}

ParamMap library_defaults(const std::string& name) {
  auto it = models().find(name);
  if (it == models().end()) throw ConstructError("unknown model: " + name);
  return it->second.defaults;
}

OdeSystem library(const std::string& name, const ParamMap& params) {
  auto it = models().find(name);
  if (it == models().end()) throw ConstructError("unknown model: " + name);
  ParamMap p = it->second.defaults;
  for (const auto& [k, v] : params) {
    if (!p.count(k)) throw ConstructError("model " + name + " has no parameter " + k);
    p[k] = v;
  }
  OdeSystem s = it->second.rhs ? OdeSystem::from_expression(it->second.rhs, p) : slow_transit(p);
  if (it->second.period > 0) s.time_structure = PeriodicTime{it->second.period};
  s.label = name;
  return s;
}

// ---------------------------------------------------------------- sampled export

namespace {

nlohmann::ordered_json zero_field_json(const ZeroField& f) {
  nlohmann::ordered_json j;
  if (auto* ps = dynamic_cast<const PiecewiseSineField*>(&f)) {
    j["family"] = "piecewise_sine";
    j["rate"] = ps->rate();
  } else {
    j["family"] = "product_sine";
    j["amplitude"] = f.spec().amplitude;
  }
  nlohmann::ordered_json zs = nlohmann::ordered_json::array();
  for (const auto& z : f.spec().zeros) zs.push_back({z.position, z.sign});
  j["zeros"] = zs;
  return j;
}

std::shared_ptr<const ZeroField> zero_field_from_json(const nlohmann::json& j) {
  ZeroSpec spec;
  for (const auto& z : j.at("zeros"))
    spec.zeros.push_back({z.at(0).get<double>(), z.at(1).get<int>()});
  std::string fam = j.at("family");
  if (fam == "piecewise_sine") return std::make_shared<PiecewiseSineField>(spec, j.at("rate"));
  if (fam == "product_sine") {
    spec.amplitude = j.at("amplitude");
    return std::make_shared<ProductSineField>(spec);
  }
  throw ConstructError("unknown field family: " + fam);
}

}  // namespace

std::string export_sampled(const GluedField& field, const std::string& label) {
  const auto& plan = field.plan();
  nlohmann::ordered_json j;
  j["form"] = "sampled";
  j["label"] = label;
  j["rhs"] = nullptr;
  j["params"] = nlohmann::ordered_json::object();
  j["limits"] = {{"half_width", plan.half_width}};
  nlohmann::ordered_json in;
  in["kind"] = "glue";
  in["blend"] = "quintic_smootherstep";
  in["minus"] = zero_field_json(*plan.f_minus);
  in["plus"] = zero_field_json(*plan.f_plus);
  nlohmann::ordered_json kn = nlohmann::ordered_json::array();
  for (auto [a, b] : plan.knots) kn.push_back({a, b});
  in["h_knots"] = kn;
  in["winding"] = plan.winding;
  nlohmann::ordered_json pr = nlohmann::ordered_json::array();
  for (auto [a, b] : plan.pairing) pr.push_back({a, b});
  in["pairing"] = pr;
  j["interpolation"] = in;
  // Coarse table of the layer field for external viewers.
  nlohmann::ordered_json grid;
  std::vector<double> ts, xs;
  for (int i = 0; i <= 8; ++i) ts.push_back(-plan.half_width + plan.half_width * i / 4.0);
  for (int i = 0; i < 32; ++i) xs.push_back(i / 32.0);
  nlohmann::ordered_json fv = nlohmann::ordered_json::array();
  for (double t : ts) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (double x : xs) row.push_back(field.f(t, x));
    fv.push_back(row);
  }
  grid["t"] = ts;
  grid["x"] = xs;
  grid["f"] = fv;
  j["samples"] = grid;
  return j.dump(2);
}

OdeSystem import_sampled(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConstructError(std::string("malformed JSON: ") + e.what());
  }
  try {
    if (j.value("form", std::string()) != "sampled") throw ConstructError("spec is not sampled");
    const auto& in = j.at("interpolation");
    if (in.at("kind") != "glue") throw ConstructError("unknown interpolation kind");
    GluePlan plan;
    plan.f_minus = zero_field_from_json(in.at("minus"));
    plan.f_plus = zero_field_from_json(in.at("plus"));
    plan.half_width = j.at("limits").at("half_width");
    for (const auto& k : in.at("h_knots")) plan.knots.push_back({k.at(0), k.at(1)});
    plan.winding = in.value("winding", 0);
    for (const auto& k : in.value("pairing", nlohmann::json::array()))
      plan.pairing.push_back({k.at(0), k.at(1)});
    OdeSystem s = glue(plan);
    s.label = j.value("label", std::string("sampled"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConstructError(std::string("malformed sampled spec: ") + e.what());
  }
}

}  // namespace circdyn
