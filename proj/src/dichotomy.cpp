#include "circdyn/dichotomy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace circdyn {

const char* to_string(Semiaxis s) { return s == Semiaxis::kPlus ? "R_plus" : "R_minus"; }

const char* to_string(DichotomyKind k) {
  switch (k) {
    case DichotomyKind::kStable:
      return "stable";
    case DichotomyKind::kUnstable:
      return "unstable";
    default:
      return "marginal";
  }
}

namespace {

// max over i <= j of (v_j - v_i)
double max_rise(const std::vector<double>& v) {
  double best = 0.0, lo = v.empty() ? 0.0 : v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    best = std::max(best, x - lo);
  }
  return best;
}

}  // namespace

DichotomyEstimate fit_dichotomy(const std::vector<double>& L, double dt, double window,
                                double lambda_min, Semiaxis semiaxis) {
  const size_t n = L.size();
  const size_t kw = std::max<size_t>(1, static_cast<size_t>(std::ceil(window / dt - 1e-9)));
  if (n < kw + 1) throw DichotomyError("horizon shorter than one window");
  double max_slope = -std::numeric_limits<double>::infinity();
  double min_slope = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + kw < n; ++i) {
    for (size_t j = i + kw; j < n; ++j) {
      double s = (L[j] - L[i]) / ((j - i) * dt);
      max_slope = std::max(max_slope, s);
      min_slope = std::min(min_slope, s);
    }
  }
  DichotomyEstimate e;
  e.semiaxis = semiaxis;
  e.horizon = (n - 1) * dt;
  e.lambda_stable_fit = -max_slope;
  e.lambda_unstable_fit = min_slope;
  bool stable = e.lambda_stable_fit >= lambda_min;
  bool unstable = e.lambda_unstable_fit >= lambda_min;
  if (stable && unstable) throw DichotomyError("conflicting dichotomy fits");

  auto stable_logc = [&](double lam) {
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = L[i] + lam * i * dt;
    return max_rise(v);
  };
  auto unstable_logc = [&](double lam) {
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = lam * i * dt - L[i];
    return max_rise(v);
  };

  bool use_stable;
  if (stable) {
    e.kind = DichotomyKind::kStable;
    use_stable = true;
  } else if (unstable) {
    e.kind = DichotomyKind::kUnstable;
    use_stable = false;
  } else {
    e.kind = DichotomyKind::kMarginal;
    use_stable = e.lambda_stable_fit >= e.lambda_unstable_fit;
  }
  double lam = std::max(0.0, use_stable ? e.lambda_stable_fit : e.lambda_unstable_fit);
  double logc = use_stable ? stable_logc(lam) : unstable_logc(lam);
  e.lambda_hat = lam;
  e.C_hat = std::exp(logc);
  // worst violation of the fitted bound over all grid pairs
  e.max_residual = (use_stable ? stable_logc(lam) : unstable_logc(lam)) - logc;
  return e;
}

DichotomyEstimate estimate_on_interval(const IntegralCurve& curve, double t_a, double t_b,
                                       Semiaxis semiaxis, const DichotomyOptions& opts) {
  double dt0 = opts.grid_dt > 0.0 ? opts.grid_dt : opts.window / 20.0;
  size_t n = std::max<size_t>(1, static_cast<size_t>(std::llround((t_b - t_a) / dt0)));
  double dt = (t_b - t_a) / n;
  std::vector<double> L(n + 1);
  double base = curve.log_flow(t_a);
  for (size_t i = 0; i <= n; ++i) L[i] = curve.log_flow(i == n ? t_b : t_a + i * dt) - base;
  return fit_dichotomy(L, dt, opts.window, opts.lambda_min, semiaxis);
}

DichotomyEstimate estimate_dichotomy(const OdeSystem&, const IntegralCurve& curve,
                                     Semiaxis semiaxis, double horizon, double window,
                                     double lambda_min) {
  if (!(window > 0.0)) throw DichotomyError("window must be positive");
  if (horizon / window < 10.0 - 1e-9)
    throw DichotomyError("horizon too short: fewer than 10 windows");
  DichotomyOptions o;
  o.window = window;
  o.lambda_min = lambda_min;
  if (semiaxis == Semiaxis::kPlus) return estimate_on_interval(curve, 0.0, horizon, semiaxis, o);
  return estimate_on_interval(curve, -horizon, 0.0, semiaxis, o);
}

DichotomyEstimate classify_semiaxis(const IntegralCurve& curve, Semiaxis semiaxis,
                                    double horizon, const DichotomyOptions& opts) {
  if (!(opts.window > 0.0)) throw DichotomyError("window must be positive");
  if (horizon / opts.window < 10.0 - 1e-9)
    throw DichotomyError("horizon too short: fewer than 10 windows");
  const double t_a = semiaxis == Semiaxis::kPlus ? 0.0 : -horizon;
  double dt0 = opts.grid_dt > 0.0 ? opts.grid_dt : opts.window / 20.0;
  size_t n = std::max<size_t>(1, static_cast<size_t>(std::llround(horizon / dt0)));
  double dt = horizon / n;
  std::vector<double> L(n + 1);
  double base = curve.log_flow(t_a);
  for (size_t i = 0; i <= n; ++i)
    L[i] = curve.log_flow(i == n ? t_a + horizon : t_a + i * dt) - base;
  DichotomyEstimate full = fit_dichotomy(L, dt, opts.window, opts.lambda_min, semiaxis);
  if (full.kind != DichotomyKind::kMarginal) return full;

  // The far half of the semi-axis decides the kind; C then covers the transient.
  size_t half = n / 2;
  std::vector<double> far = semiaxis == Semiaxis::kPlus
                                ? std::vector<double>(L.begin() + half, L.end())
                                : std::vector<double>(L.begin(), L.begin() + (n - half) + 1);
  DichotomyEstimate tail = fit_dichotomy(far, dt, opts.window, opts.lambda_min, semiaxis);
  if (tail.kind == DichotomyKind::kMarginal) return full;
  DichotomyEstimate e = tail;
  e.horizon = horizon;
  std::vector<double> v(n + 1);
  for (size_t i = 0; i <= n; ++i)
    v[i] = tail.kind == DichotomyKind::kStable ? L[i] + e.lambda_hat * i * dt
                                               : e.lambda_hat * i * dt - L[i];
  e.C_hat = std::exp(max_rise(v));
  e.max_residual = 0.0;
  return e;
}

std::string to_json(const DichotomyEstimate& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"semiaxis\":\"%s\",\"kind\":\"%s\",\"C\":%.17g,\"lambda\":%.17g,"
                "\"horizon\":%.17g,\"max_residual\":%.17g}",
                to_string(e.semiaxis), to_string(e.kind), e.C_hat, e.lambda_hat, e.horizon,
                e.max_residual);
  return buf;
}

// ---------------------------------------------------------------------------

double LyapunovFunction::remainder(size_t i, double u) const {
  return f_internal(tau[i], gamma[i] + u) - f_internal(tau[i], gamma[i]) - a[i] * u;
}

namespace {

constexpr double kGlX[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                            0.9061798459386640};
constexpr double kGlW[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                            0.4786286704993665, 0.2369268850561891};

}  // namespace

LyapunovFunction lyapunov(const OdeSystem& system, const IntegralCurve& curve,
                          const DichotomyEstimate& est, const LyapunovOptions& opts) {
  int orient;
  if (est.kind == DichotomyKind::kStable && est.semiaxis == Semiaxis::kPlus) {
    orient = 1;
  } else if (est.kind == DichotomyKind::kUnstable && est.semiaxis == Semiaxis::kMinus) {
    orient = -1;
  } else {
    throw LyapunovError(std::string("no Lyapunov function for a ") + to_string(est.kind) +
                        " estimate on " + to_string(est.semiaxis));
  }
  if (!(est.lambda_hat > 0.0)) throw LyapunovError("non-positive dichotomy rate");

  LyapunovFunction ly;
  ly.orientation = orient;
  ly.system = system;
  ly.C_hat = est.C_hat;
  ly.lambda_hat = est.lambda_hat;

  const double H = orient > 0 ? curve.t_max() : -curve.t_min();
  if (!curve.covers(0.0) || H <= 0.0) throw LyapunovError("curve does not cover the semi-axis");
  const double dt = opts.dt;
  const size_t K = static_cast<size_t>(std::floor(H / dt + 1e-9));
  const double L0 = curve.log_flow(0.0);
  auto L = [&](double tau) { return curve.log_flow(orient * std::min(tau, H)) - L0; };

  // I(tau_k) = int_{tau_k}^{H} exp(2 Lambda(sigma, tau_k)) d sigma, by backward recursion.
  std::vector<double> I(K + 1, 0.0), Lk(K + 1);
  for (size_t k = 0; k <= K; ++k) Lk[k] = L(k * dt);
  double tail_piece = 0.0;
  {
    double t0 = K * dt;
    double len = H - t0;
    for (int q = 0; q < 5 && len > 0.0; ++q) {
      double s = t0 + 0.5 * len * (kGlX[q] + 1.0);
      tail_piece += 0.5 * len * kGlW[q] * std::exp(2.0 * (L(s) - Lk[K]));
    }
    I[K] = tail_piece;
  }
  for (size_t k = K; k-- > 0;) {
    double t0 = k * dt, cell = 0.0;
    for (int q = 0; q < 5; ++q) {
      double s = t0 + 0.5 * dt * (kGlX[q] + 1.0);
      cell += 0.5 * dt * kGlW[q] * std::exp(2.0 * (L(s) - Lk[k]));
    }
    I[k] = cell + std::exp(2.0 * (Lk[k + 1] - Lk[k])) * I[k + 1];
  }

  auto tail = [&](double tau) {
    return est.C_hat * est.C_hat * std::exp(-2.0 * est.lambda_hat * (H - tau)) /
           (2.0 * est.lambda_hat);
  };
  size_t kend;
  if (opts.t_end < 0.0) {
    if (tail(0.0) > opts.tail_max)
      throw LyapunovError("horizon too short: truncation tail exceeds tolerance");
    kend = 0;
    while (kend + 1 <= K && tail((kend + 1) * dt) <= opts.tail_max) ++kend;
  } else {
    kend = static_cast<size_t>(std::llround(opts.t_end / dt));
    if (kend > K || tail(kend * dt) > opts.tail_max)
      throw LyapunovError("horizon too short: truncation tail exceeds tolerance");
  }

  ly.tau.resize(kend + 1);
  ly.s.resize(kend + 1);
  ly.a.resize(kend + 1);
  ly.gamma.resize(kend + 1);
  for (size_t k = 0; k <= kend; ++k) {
    double tau = k * dt, t = orient * tau;
    ly.tau[k] = tau;
    ly.s[k] = std::sqrt(I[k]);
    ly.gamma[k] = curve.lifted(t);
    double f, fx;
    system.f_fx(t, ly.gamma[k], f, fx);
    ly.a[k] = orient * fx;
  }
  ly.truncation_tail = tail(kend * dt);

  // a0 over the whole quadrature range
  double a0 = 0.0;
  for (double tau = 0.0; tau <= H; tau += dt / 4) {
    double t = orient * tau, f, fx;
    system.f_fx(t, curve.lifted(t), f, fx);
    a0 = std::max(a0, std::fabs(fx));
  }
  ly.a0 = a0;
  ly.lower_bound = 1.0 / (2.0 * a0);
  ly.upper_bound = est.C_hat * est.C_hat / (2.0 * est.lambda_hat);
  ly.bounds_hold = true;
  for (size_t k = 0; k <= kend; ++k) {
    double s2 = I[k];
    if (s2 < ly.lower_bound * (1.0 - 1e-9) - ly.truncation_tail ||
        s2 > ly.upper_bound * (1.0 + 1e-6))
      ly.bounds_hold = false;
  }
  if (!ly.bounds_hold) throw LyapunovError("two-sided bound on s^2 violated");

  double res = 0.0;
  for (size_t k = 2; k + 2 <= kend; ++k) {
    double d = (-I[k + 2] + 8.0 * I[k + 1] - 8.0 * I[k - 1] + I[k - 2]) / (12.0 * dt);
    double r = std::fabs(d - (-1.0 - 2.0 * ly.a[k] * I[k])) / (2.0 * ly.s[k]);
    res = std::max(res, r);
  }
  ly.sprime_residual = res;

  for (double r : {1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1}) {
    double n = 0.0;
    for (size_t k = 0; k <= kend; ++k)
      for (double u : {r, -r}) n = std::max(n, std::fabs(ly.remainder(k, u)) / r);
    ly.nonlinearity_modulus.emplace_back(r, n);
  }
  return ly;
}

DecayReport lyapunov_decay_check(const OdeSystem&, const IntegralCurve&,
                                 const LyapunovFunction& lyap, double u_max, int samples,
                                 int max_halvings) {
  const int nu = 10;
  const size_t K = lyap.tau.size();
  const size_t nt = std::max<size_t>(1, std::min(K, static_cast<size_t>(
                                                        std::ceil(samples / (2.0 * nu)))));
  DecayReport rep;
  double amp = u_max;
  for (int h = 0; h <= max_halvings; ++h, amp *= 0.5) {
    double worst = -std::numeric_limits<double>::infinity();
    for (size_t it = 0; it < nt; ++it) {
      size_t k = nt == 1 ? 0 : it * (K - 1) / (nt - 1);
      double s2 = lyap.s[k] * lyap.s[k];
      for (int j = 1; j <= nu; ++j) {
        for (int sg : {1, -1}) {
          double u = sg * amp * j / nu;
          worst = std::max(worst, 2.0 * s2 * lyap.remainder(k, u) / u);
        }
      }
    }
    rep.tested.emplace_back(amp, worst);
    if (worst <= 0.5) {
      rep.max_ratio = worst;
      rep.admissible_u = amp;
      return rep;
    }
  }
  throw DecayCheckError("decay bound fails at every tested amplitude");
}

IsolatingNeighborhood isolating_neighborhood(const LyapunovFunction& lyap, const IntegralCurve&,
                                             double c, double admissible_u) {
  IsolatingNeighborhood nb;
  double margin = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < lyap.tau.size(); ++k) {
    double u = c / lyap.s[k];
    if (u > admissible_u * (1.0 + 1e-12))
      throw LyapunovError("collar level exceeds the admissible amplitude");
    nb.t.push_back(lyap.time_of(k));
    nb.upper.push_back(u);
    nb.lower.push_back(-u);
    double s2 = lyap.s[k] * lyap.s[k];
    for (double uu : {u, -u}) {
      double m = (1.0 - 2.0 * s2 * lyap.remainder(k, uu) / uu) * uu * uu;
      margin = std::min(margin, m);
    }
  }
  nb.transversality_margin = margin;
  if (!(margin > 0.0)) throw LyapunovError("collar is not transversal to the flow");
  if (lyap.orientation < 0) {
    std::reverse(nb.t.begin(), nb.t.end());
    std::reverse(nb.upper.begin(), nb.upper.end());
    std::reverse(nb.lower.begin(), nb.lower.end());
  }
  return nb;
}

}  // namespace circdyn
