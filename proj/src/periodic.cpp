#include "circdyn/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"

namespace circdyn {

namespace {

double resolve_period(const OdeSystem& system, std::optional<double> period) {
  if (period) return *period;
  if (auto p = system.period()) return *p;
  if (auto* e = dynamic_cast<const ExprField*>(system.field.get()))
    if (!e->rhs().depends_on('t')) return 1.0;
  throw PeriodicError("system " + system.label + " has no time period");
}

Stability classify(double multiplier) {
  if (multiplier > 1.0 + 1e-6) return Stability::kUnstable;
  if (multiplier < 1.0 - 1e-6) return Stability::kStable;
  return Stability::kNonhyperbolic;
}

}  // namespace

PoincareMap poincare_map(const OdeSystem& system, int grid_size, double tol,
                         std::optional<double> period) {
  if (grid_size < 4) throw PeriodicError("grid_size must be at least 4");
  PoincareMap P;
  P.system_ = system;
  P.period_ = resolve_period(system, period);
  if (!(P.period_ > 0.0)) throw PeriodicError("period must be positive");
  P.opts_.rtol = tol;
  P.opts_.atol = tol * 1e-3;

  const int n = grid_size;
  std::vector<double> y(n + 1);
  P.grid_.resize(n);
  for (int i = 0; i <= n; ++i) {
    double x = static_cast<double>(i) / n;
    y[i] = integrate_lifted(system, 0.0, x, P.period_, P.opts_).lifted_end();
    if (i < n) P.grid_[i] = x;
  }
  for (int i = 0; i < n; ++i)
    if (!(y[i + 1] > y[i]))
      throw PeriodicError("non-monotone Poincare samples near x = " +
                          std::to_string(P.grid_[i]) + "; tighten the integration tolerance");
  P.degree_ = static_cast<int>(std::lround(y[n] - y[0]));
  if (P.degree_ != 1 || std::abs(y[n] - y[0] - 1.0) > 1e-6)
    throw PeriodicError("Poincare map is not of degree one");
  P.samples_.assign(y.begin(), y.end() - 1);
  P.lift_ = PeriodicLift(P.grid_, P.samples_);

  for (int i = 0; i < n; ++i) {
    double x = (i + 0.5) / n;
    double exact = integrate_lifted(system, 0.0, x, P.period_, P.opts_).lifted_end();
    P.interpolation_error_ = std::max(P.interpolation_error_, std::abs(P.lift_(x) - exact));
  }
  return P;
}

double PoincareMap::iterate(double x, long n) const {
  for (long k = 0; k < n; ++k) x = lift_(x);
  return x;
}

double PoincareMap::exact(double x, long n, double* log_multiplier) const {
  auto c = integrate_lifted(system_, 0.0, x, n * period_, opts_);
  if (log_multiplier) *log_multiplier = c.log_flow(n * period_);
  return c.lifted_end();
}

double rotation_estimate(const PoincareMap& P, double x, long iterations) {
  return (P.iterate(x, iterations) - x) / static_cast<double>(iterations);
}

RotationNumber rotation_number(const PoincareMap& P, long iterations, int q_max) {
  if (iterations < 1) throw PeriodicError("iterations must be positive");
  const int starts = 16;
  double lo = INFINITY, hi = -INFINITY;
  for (int j = 0; j < starts; ++j) {
    double x = static_cast<double>(j) / starts;
    double d = P.iterate(x, iterations) - x;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  // Monotonicity of P^N bounds P^N(x) - x for every x by [lo - h, hi + h].
  RotationNumber r;
  r.iterations = iterations;
  const double N = static_cast<double>(iterations);
  r.value = 0.5 * (lo + hi) / N;
  r.error_bar = (0.5 * (hi - lo) + 1.0 / starts) / N + P.interpolation_error();

  // continued-fraction convergents
  long p0 = 1, q0 = 0, p1 = static_cast<long>(std::floor(r.value)), q1 = 1;
  double frac = r.value - std::floor(r.value);
  while (q1 <= q_max) {
    if (std::abs(r.value - static_cast<double>(p1) / q1) <= r.error_bar) {
      r.rational = std::make_pair(static_cast<int>(p1), static_cast<int>(q1));
      break;
    }
    if (frac < 1e-15) break;
    double inv = 1.0 / frac;
    long a = static_cast<long>(std::floor(inv));
    frac = inv - a;
    long p2 = a * p1 + p0, q2 = a * q1 + q0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
  }
  return r;
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::kStable: return "stable";
    case Stability::kUnstable: return "unstable";
    default: return "nonhyperbolic";
  }
}

namespace {

PeriodicOrbit make_orbit(const PoincareMap& P, double x, int q, int p) {
  PeriodicOrbit o;
  o.point = CirclePoint(x);
  o.q = q;
  o.p = p;
  const double T = P.period();
  auto c = integrate_lifted(P.system(), 0.0, x, q * T, P.integrate_options());
  o.multiplier = std::exp(c.log_flow(q * T));
  o.stability = classify(o.multiplier);
  o.residual = std::abs(c.lifted_end() - x - p);
  for (int k = 0; k < q; ++k) o.trace.push_back(wrap01(k == 0 ? x : c.lifted(k * T)));
  return o;
}

}  // namespace

std::vector<PeriodicOrbit> periodic_points(const PoincareMap& P, int q, int p, int scan_size) {
  if (q < 1) throw PeriodicError("q must be positive");
  if (scan_size < 8) throw PeriodicError("scan_size must be at least 8");
  const int n = scan_size;
  const double flat = 1e-9 + 10.0 * q * P.interpolation_error();
  const double tangency = 1e-6 + 10.0 * q * P.interpolation_error();
  std::vector<double> xs(n), g(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = static_cast<double>(i) / n;
    g[i] = P.iterate(xs[i], q) - xs[i] - p;
  }
  auto G = [&](int i) { return g[((i % n) + n) % n]; };
  auto exact_g = [&](double x) { return P.exact(x, q) - x - p; };

  struct Candidate {
    double x;
    bool family;
    bool tangent;
  };
  std::vector<Candidate> cand;
  std::vector<char> in_run(n, 0);
  bool all_flat = true;
  for (int i = 0; i < n; ++i) all_flat = all_flat && std::abs(g[i]) <= flat;
  if (all_flat) {
    cand.push_back({0.0, true, false});
  } else {
    // runs of at least two flat points: a continuum of solutions
    for (int i = 0; i < n; ++i) {
      if (std::abs(G(i)) > flat || std::abs(G(i - 1)) <= flat) continue;
      int len = 0;
      while (len < n && std::abs(G(i + len)) <= flat) ++len;
      if (len < 2) continue;
      for (int k = 0; k < len; ++k) in_run[(i + k) % n] = 1;
      cand.push_back({xs[i], true, false});
    }
    for (int i = 0; i < n; ++i) {
      int j = (i + 1) % n;
      if (in_run[i] || in_run[j]) continue;
      double a = xs[i], b = xs[i] + 1.0 / n;
      if (G(i) == 0.0) {
        cand.push_back({a, false, false});
        continue;
      }
      if (G(i) * G(i + 1) < 0.0) {
        double ga = exact_g(a), gb = exact_g(b);
        for (int widen = 0; widen < 2 && ga * gb > 0.0; ++widen) {
          a -= 1.0 / n;
          b += 1.0 / n;
          ga = exact_g(a);
          gb = exact_g(b);
        }
        if (ga * gb > 0.0) {
          cand.push_back({0.5 * (a + b), false, true});
          continue;
        }
        while (b - a > 1e-10) {
          double m = 0.5 * (a + b), gm = exact_g(m);
          if (gm == 0.0) {
            a = b = m;
            break;
          }
          if ((gm < 0.0) == (ga < 0.0)) {
            a = m;
            ga = gm;
          } else {
            b = m;
          }
        }
        cand.push_back({0.5 * (a + b), false, false});
      } else if (std::abs(G(i)) < tangency && std::abs(G(i)) <= std::abs(G(i - 1)) &&
                 std::abs(G(i)) <= std::abs(G(i + 1)) && G(i - 1) * G(i + 1) > 0.0 &&
                 G(i) * G(i - 1) > 0.0) {
        cand.push_back({a, false, true});
      }
    }
  }

  std::sort(cand.begin(), cand.end(),
            [](const Candidate& u, const Candidate& v) { return wrap01(u.x) < wrap01(v.x); });
  std::vector<PeriodicOrbit> out;
  for (const auto& c : cand) {
    bool seen = false;
    for (const auto& o : out)
      for (double t : o.trace) seen = seen || circle_distance(t, c.x) < 1e-7;
    if (seen) continue;
    PeriodicOrbit o = make_orbit(P, c.x, q, p);
    if (c.family || c.tangent) {
      o.stability = Stability::kNonhyperbolic;
      o.family = c.family;
    }
    out.push_back(std::move(o));
  }
  std::sort(out.begin(), out.end(), [](const PeriodicOrbit& u, const PeriodicOrbit& v) {
    return u.point.value < v.point.value;
  });
  return out;
}

EquippedSet equipped_set_from_periodic(const std::vector<PeriodicOrbit>& orbits) {
  EquippedSet e;
  for (const auto& o : orbits) {
    if (o.stability == Stability::kNonhyperbolic)
      throw PeriodicError("nonhyperbolic orbit at x = " + std::to_string(o.point.value));
    Label label = o.stability == Stability::kUnstable ? Label::kU : Label::kS;
    for (double t : o.trace) e.points.push_back({wrap01(t), label});
  }
  e.normalize();
  return e;
}

AlmostPeriodReport almost_periods(const std::function<double(double)>& x, double t0, double span,
                                  double epsilon, double l_max, double l_step) {
  if (!(epsilon > 0.0) || !(l_step > 0.0) || !(l_max >= l_step))
    throw PeriodicError("need epsilon > 0 and 0 < l_step <= l_max");
  if (span < 2.0 * l_max) throw PeriodicError("trace span shorter than 2 l_max");
  AlmostPeriodReport r;
  r.epsilon = epsilon;
  r.window_lo = t0;
  r.window_hi = t0 + span;
  r.l_max = l_max;
  r.l_step = l_step;

  const long N = static_cast<long>(std::floor(span / l_step + 1e-9));
  const long K = static_cast<long>(std::floor(l_max / l_step + 1e-9));
  std::vector<double> v(N + 1);
  for (long i = 0; i <= N; ++i) v[i] = wrap01(x(t0 + i * l_step));

  std::vector<long> accepted;
  for (long k = 1; k <= K; ++k) {
    bool ok = true;
    for (long i = 0; ok && i + k <= N; ++i) {
      double d = std::abs(v[i + k] - v[i]);
      ok = std::min(d, 1.0 - d) < epsilon;
    }
    if (ok) accepted.push_back(k);
  }
  long prev = 0, run_start = -1;
  for (size_t j = 0; j < accepted.size(); ++j) {
    long k = accepted[j];
    r.found_periods.push_back(k * l_step);
    r.max_gap = std::max(r.max_gap, (k - prev) * l_step);
    prev = k;
    if (run_start < 0) run_start = k;
    if (j + 1 == accepted.size() || accepted[j + 1] != k + 1) {
      r.clusters.push_back(0.5 * (run_start + k) * l_step);
      run_start = -1;
    }
  }
  r.max_gap = std::max(r.max_gap, l_max - prev * l_step);
  r.relatively_dense = !accepted.empty() && r.max_gap <= l_max / 5.0;
  return r;
}

AlmostPeriodReport almost_periods(const IntegralCurve& trajectory, double epsilon, double l_max,
                                  double l_step) {
  return almost_periods([&](double t) { return trajectory.lifted(t); }, trajectory.t_min(),
                        trajectory.t_max() - trajectory.t_min(), epsilon, l_max, l_step);
}

std::string to_json(const RotationNumber& r) {
  nlohmann::ordered_json j;
  j["rotation_number"] = r.value;
  j["error_bar"] = r.error_bar;
  j["iterations"] = r.iterations;
  if (r.rational)
    j["rational"] = {{"p", r.rational->first}, {"q", r.rational->second}};
  else
    j["rational"] = nullptr;
  return j.dump(2);
}

std::string to_json(const std::vector<PeriodicOrbit>& orbits) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& o : orbits) {
    nlohmann::ordered_json j;
    j["point"] = o.point.value;
    j["q"] = o.q;
    j["p"] = o.p;
    j["multiplier"] = o.multiplier;
    j["stability"] = to_string(o.stability);
    j["family"] = o.family;
    j["residual"] = o.residual;
    j["trace"] = o.trace;
    arr.push_back(j);
  }
  return arr.dump(2);
}

std::string to_json(const AlmostPeriodReport& r) {
  nlohmann::ordered_json j;
  j["epsilon"] = r.epsilon;
  j["window"] = {r.window_lo, r.window_hi};
  j["l_max"] = r.l_max;
  j["l_step"] = r.l_step;
  j["found_count"] = r.found_periods.size();
  j["clusters"] = r.clusters;
  j["max_gap"] = r.max_gap;
  j["relatively_dense"] = r.relatively_dense;
  j["found_periods"] = r.found_periods;
  return j.dump(2);
}

void write_orbits_csv(const std::vector<PeriodicOrbit>& orbits, std::ostream& out) {
  out << "point,q,p,multiplier,stability,residual\n";
  out.precision(17);
  for (const auto& o : orbits)
    out << o.point.value << ',' << o.q << ',' << o.p << ',' << o.multiplier << ','
        << to_string(o.stability) << ',' << o.residual << '\n';
}

}  // namespace circdyn
