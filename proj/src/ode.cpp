#include "circdyn/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace circdyn {

double wrap01(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

double circle_distance(double x, double y) {
  double d = std::fabs(wrap01(x) - wrap01(y));
  return std::min(d, 1.0 - d);
}

ExprField::ExprField(Expression rhs, ParamMap params)
    : rhs_(std::move(rhs)),
      rhs_x_(rhs_.differentiate('x')),
      cf_(rhs_, params),
      cfx_(rhs_x_, params) {}

void CallableField::f_fx(double t, double x, double& f, double& fx) const {
  f = f_(t, x);
  if (fx_) {
    fx = fx_(t, x);
    return;
  }
  double h = 1e-6 * std::max(1.0, std::fabs(x));
  fx = (f_(t, x + h) - f_(t, x - h)) / (2.0 * h);
}

OdeSystem OdeSystem::from_expression(const std::string& rhs, const ParamMap& params) {
  OdeSystem s;
  auto declared = std::set<std::string>();
  for (const auto& [k, v] : params) declared.insert(k);
  s.field = std::make_shared<ExprField>(Expression::parse(rhs, declared), params);
  s.params = params;
  s.label = rhs;
  return s;
}

double OdeSystem::a0(double t_lo, double t_hi) const {
  if (a0_bound) return *a0_bound;
  const int n = 256;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    double t = t_lo + (t_hi - t_lo) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      double f, fx;
      f_fx(t, static_cast<double>(j) / n, f, fx);
      best = std::max(best, std::fabs(fx));
    }
  }
  return best;
}

std::optional<double> OdeSystem::period() const {
  if (auto* p = std::get_if<PeriodicTime>(&time_structure)) return p->period;
  return std::nullopt;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

inline double dense(const double* r, double th) {
  double th1 = 1.0 - th;
  return r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])));
}

struct Eval {
  const OdeSystem& sys;
  long count = 0;
  void operator()(double t, double x, double& f, double& fx) {
    sys.f_fx(t, x, f, fx);
    ++count;
    if (!std::isfinite(f) || !std::isfinite(fx)) {
      throw IntegrationError("non-finite right-hand side at t=" + std::to_string(t) +
                                 ", x=" + std::to_string(x),
                             t, x);
    }
  }
};

}  // namespace

const IntegralCurve::Step& IntegralCurve::find(double t) const {
  if (!covers(t)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "time %.17g outside curve span [%.17g, %.17g]", t, t_min(),
                  t_max());
    throw SpanError(buf);
  }
  // steps_ ordered along the integration direction
  size_t lo = 0, hi = steps_.size();
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    bool after = dir_ > 0 ? steps_[mid].t <= t : steps_[mid].t >= t;
    if (after) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return steps_[lo];
}

double IntegralCurve::lifted(double t) const {
  if (steps_.empty()) {
    if (t != t0_) find(t);
    return x0_;
  }
  const Step& s = find(t);
  return dense(s.rx, (t - s.t) / s.h);
}

double IntegralCurve::lifted_end() const {
  if (steps_.empty()) return x0_;
  const Step& s = steps_.back();
  return s.rx[0] + s.rx[1];
}

double IntegralCurve::log_flow(double t) const {
  if (steps_.empty()) {
    if (t != t0_) find(t);
    return 0.0;
  }
  const Step& s = find(t);
  return dense(s.rl, (t - s.t) / s.h);
}

std::vector<CurveSample> IntegralCurve::samples() const {
  std::vector<CurveSample> out;
  out.push_back({t0_, x0_});
  for (const Step& s : steps_) out.push_back({s.t + s.h, s.rx[0] + s.rx[1]});
  if (!steps_.empty()) out.back().t = t_end_;
  return out;
}

IntegralCurve integrate_until(const OdeSystem& system, double t0, double x0, double t1,
                              const IntegrateOptions& opts,
                              const std::function<bool(double, double)>& stop) {
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0))
    throw std::invalid_argument("rtol and atol must be positive");
  IntegralCurve c;
  c.t0_ = t0;
  c.x0_ = x0;
  c.t_end_ = t0;
  c.dir_ = t1 >= t0 ? 1 : -1;
  if (t1 == t0) return c;

  Eval ev{system};
  const double dir = c.dir_;
  const double span = std::fabs(t1 - t0);
  const double cap = opts.h_max > 0.0 ? opts.h_max : system.max_step;
  const double hmax = cap > 0.0 ? std::min(cap, span) : span;
  const double rtol = opts.rtol, atol = opts.atol;

  double t = t0, x = x0, lam = 0.0;
  double k1x, k1l;
  ev(t, x, k1x, k1l);

  // Initial step guess.
  double h;
  {
    double sk = atol + rtol * std::fabs(x);
    double dnf = (k1x / sk) * (k1x / sk);
    double dny = (x / sk) * (x / sk);
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    h = std::min(h, hmax);
    double x1 = x + dir * h * k1x, f2, fx2;
    ev(t + dir * h, x1, f2, fx2);
    double der2 = std::fabs(f2 - k1x) / sk / h;
    double der12 = std::max(der2, std::sqrt(dnf));
    double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100.0 * h, h1, hmax, 0.25 / std::max(std::fabs(k1x), 1e-300)});
  }

  const double beta = 0.04, expo1 = 0.2 - beta * 0.75;
  double facold = 1e-4;
  bool last_rejected = false;
  long steps = 0;

  while (dir * (t1 - t) > 0.0) {
    if (++steps > opts.max_steps)
      throw IntegrationError("step limit exceeded", t, x);
    if (h < 1e-14 * std::max(1.0, std::fabs(t)))
      throw IntegrationError("step size underflow at t=" + std::to_string(t) +
                                 ", x=" + std::to_string(x),
                             t, x);
    bool final_step = false;
    if (h >= std::fabs(t1 - t) * (1.0 - 1e-12)) {
      h = std::fabs(t1 - t);
      final_step = true;
    }
    double hs = dir * h;
    double k2x, k2l, k3x, k3l, k4x, k4l, k5x, k5l, k6x, k6l, k7x, k7l;
    ev(t + c2 * hs, x + hs * a21 * k1x, k2x, k2l);
    ev(t + c3 * hs, x + hs * (a31 * k1x + a32 * k2x), k3x, k3l);
    ev(t + c4 * hs, x + hs * (a41 * k1x + a42 * k2x + a43 * k3x), k4x, k4l);
    ev(t + c5 * hs, x + hs * (a51 * k1x + a52 * k2x + a53 * k3x + a54 * k4x), k5x, k5l);
    ev(t + hs, x + hs * (a61 * k1x + a62 * k2x + a63 * k3x + a64 * k4x + a65 * k5x), k6x, k6l);
    double xn = x + hs * (a71 * k1x + a73 * k3x + a74 * k4x + a75 * k5x + a76 * k6x);
    double ln = lam + hs * (a71 * k1l + a73 * k3l + a74 * k4l + a75 * k5l + a76 * k6l);
    double tn = final_step ? t1 : t + hs;
    ev(tn, xn, k7x, k7l);

    double errx = hs * (e1 * k1x + e3 * k3x + e4 * k4x + e5 * k5x + e6 * k6x + e7 * k7x);
    double sk = atol + rtol * std::max(std::fabs(x), std::fabs(xn));
    double errl = hs * (e1 * k1l + e3 * k3l + e4 * k4l + e5 * k5l + e6 * k6l + e7 * k7l);
    // error per unit step, so the log-flow error stays below rtol*|t-tau|*sup|a|
    double skl = rtol * h * std::max({1.0, std::fabs(k1l), std::fabs(k7l)});
    double err = std::max(std::fabs(errx) / sk, std::fabs(errl) / skl);

    if (std::fabs(xn - x) >= 0.25) {
      h *= 0.5 * 0.25 / std::fabs(xn - x);
      last_rejected = true;
      continue;
    }

    double fac11 = std::pow(std::max(err, 1e-300), expo1);
    double fac = fac11 / std::pow(facold, beta);
    fac = std::clamp(fac / 0.9, 0.1, 5.0);  // 1/facc2 .. 1/facc1 inverted below
    double hnew = h / fac;

    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      IntegralCurve::Step st;
      st.t = t;
      st.h = hs;
      double dx = xn - x, dl = ln - lam;
      st.rx[0] = x;
      st.rx[1] = dx;
      st.rx[2] = hs * k1x - dx;
      st.rx[3] = dx - hs * k7x - st.rx[2];
      st.rx[4] = hs * (d1 * k1x + d3 * k3x + d4 * k4x + d5 * k5x + d6 * k6x + d7 * k7x);
      st.rl[0] = lam;
      st.rl[1] = dl;
      st.rl[2] = hs * k1l - dl;
      st.rl[3] = dl - hs * k7l - st.rl[2];
      st.rl[4] = hs * (d1 * k1l + d3 * k3l + d4 * k4l + d5 * k5l + d6 * k6l + d7 * k7l);
      c.steps_.push_back(st);
      t = tn;
      x = xn;
      lam = ln;
      k1x = k7x;
      k1l = k7l;
      c.t_end_ = t;
      if (stop && stop(t, x)) break;
      hnew = std::min(hnew, hmax);
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = hnew;
    } else {
      h = h / std::min(5.0, fac11 / 0.9);
      last_rejected = true;
    }
  }
  return c;
}

IntegralCurve integrate_lifted(const OdeSystem& system, double t0, double x0, double t1,
                               const IntegrateOptions& opts) {
  return integrate_until(system, t0, x0, t1, opts, nullptr);
}

IntegralCurve integrate(const OdeSystem& system, double t0, CirclePoint x0, double t1,
                        const IntegrateOptions& opts) {
  return integrate_until(system, t0, x0.value, t1, opts, nullptr);
}

double variational(const OdeSystem&, const IntegralCurve& curve, double tau, double t) {
  return curve.log_flow(t, tau);
}

void write_csv(const IntegralCurve& curve, std::ostream& out) {
  out << "t,x,lifted_x\n";
  char buf[128];
  for (const auto& s : curve.samples()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.t, wrap01(s.lifted_x), s.lifted_x);
    out << buf;
  }
}

}  // namespace circdyn
