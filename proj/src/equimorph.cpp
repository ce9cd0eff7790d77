#include "circdyn/equimorph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <set>

#include "circdyn/dichotomy.hpp"
#include "json.hpp"

namespace circdyn {

namespace {

constexpr double kGlX[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                            0.9061798459386640};
constexpr double kGlW[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                            0.4786286704993665, 0.2369268850561891};

template <class F>
double gl5(const F& f, double a, double b) {
  double m = 0.5 * (a + b), r = 0.5 * (b - a), s = 0.0;
  for (int q = 0; q < 5; ++q) s += kGlW[q] * f(m + r * kGlX[q]);
  return r * s;
}

double max_rise(const std::vector<double>& v) {
  double best = 0.0, lo = v.empty() ? 0.0 : v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    best = std::max(best, x - lo);
  }
  return best;
}

}  // namespace

LinearSystem LinearSystem::from_expression(const std::string& a, const ParamMap& params,
                                           const LinearOptions& opts) {
  std::set<std::string> names;
  for (const auto& [k, v] : params) names.insert(k);
  Expression e = Expression::parse(a, names);
  if (e.depends_on('x')) throw EquimorphError("coefficient a(t) must not depend on x");
  CompiledExpr c(e, params);
  return from_callable([c](double t) { return c(t, 0.0); }, a, opts);
}

LinearSystem LinearSystem::from_callable(std::function<double(double)> a, std::string label,
                                         const LinearOptions& opts) {
  LinearSystem s;
  s.a_ = std::move(a);
  s.label_ = std::move(label);
  s.build(opts);
  return s;
}

size_t LinearSystem::cell(double t) const {
  if (!(t >= t_lo_ - 1e-12) || !(t <= t_end_ + 1e-12))
    throw EquimorphError("time outside the tabulated range");
  double k = std::floor((t - t_lo_) / dt_);
  return static_cast<size_t>(std::clamp(k, 0.0, static_cast<double>(A_.size() - 2)));
}

double LinearSystem::A(double t) const {
  size_t k = cell(t);
  double tk = t_lo_ + k * dt_;
  return A_[k] + gl5(a_, tk, t);
}

double LinearSystem::s2(double t) const {
  if (t > t_hi_ + 1e-12) throw EquimorphError("time outside the tabulated range");
  size_t k = cell(t);
  double t1 = t_lo_ + (k + 1) * dt_, At = A(t);
  double head = gl5([&](double u) { return std::exp(2.0 * (A(u) - At)); }, t, t1);
  return head + std::exp(2.0 * (A_[k + 1] - At)) * I_[k + 1];
}

double LinearSystem::s(double t) const { return std::sqrt(s2(t)); }

void LinearSystem::build(const LinearOptions& o) {
  if (!(o.dt > 0.0) || !(o.t_hi > o.t_lo) || o.t_lo > 0.0 || o.t_hi < o.fit_horizon)
    throw EquimorphError("need dt > 0 and t_lo <= 0 <= fit_horizon <= t_hi");
  dt_ = o.dt;
  t_lo_ = o.t_lo;
  size_t K = static_cast<size_t>(std::ceil((o.t_hi - o.t_lo) / dt_ - 1e-9));
  t_hi_ = t_lo_ + K * dt_;

  // A(0) = 0 exactly; compensated sums outward from the origin node
  size_t k0 = static_cast<size_t>(std::llround(-t_lo_ / dt_));
  if (std::abs(t_lo_ + k0 * dt_) > 1e-9 * dt_)
    throw EquimorphError("t_lo must be a multiple of dt");
  double A_run = 0.0, A_comp = 0.0;
  auto add = [&](double x) {
    double t = A_run + x;
    A_comp += std::abs(A_run) >= std::abs(x) ? (A_run - t) + x : (x - t) + A_run;
    A_run = t;
    return A_run + A_comp;
  };
  auto fill_A = [&](size_t from, size_t to) {
    for (size_t k = from; k < to; ++k) {
      double tk = t_lo_ + k * dt_;
      A_[k + 1] = add(gl5(a_, tk, tk + dt_));
    }
  };
  A_.assign(K + 1, 0.0);
  fill_A(k0, K);
  double fwd_run = A_run, fwd_comp = A_comp;
  A_run = A_comp = 0.0;
  for (size_t k = k0; k-- > 0;) {
    double tk = t_lo_ + k * dt_;
    A_[k] = add(-gl5(a_, tk, tk + dt_));
  }
  A_run = fwd_run;
  A_comp = fwd_comp;
  t_end_ = t_hi_;

  // dichotomy constants on [0, fit_horizon]
  size_t nf = static_cast<size_t>(std::llround(o.fit_horizon / dt_));
  std::vector<double> L(nf + 1);
  for (size_t i = 0; i <= nf; ++i) L[i] = A(i * dt_);
  if (o.M && o.lambda) {
    M_ = *o.M;
    lambda_ = *o.lambda;
  } else {
    // fit on a coarser grid; C is then recomputed on the fine one
    size_t stride = std::max<size_t>(1, static_cast<size_t>(std::llround(o.window / 20.0 / dt_)));
    std::vector<double> Lc;
    for (size_t i = 0; i <= nf; i += stride) Lc.push_back(L[i]);
    auto est = fit_dichotomy(Lc, stride * dt_, o.window, 1e-6, Semiaxis::kPlus);
    if (est.kind != DichotomyKind::kStable)
      throw EquimorphError("linear system " + label_ + " is not of stable type on R+");
    lambda_ = o.lambda ? *o.lambda : est.lambda_hat;
    std::vector<double> v(nf + 1);
    for (size_t i = 0; i <= nf; ++i) v[i] = L[i] + lambda_ * i * dt_;
    M_ = o.M ? *o.M : std::exp(max_rise(v));
  }
  if (!(lambda_ > 0.0) || !(M_ > 0.0))
    throw EquimorphError("dichotomy constants must be positive");
  {
    std::vector<double> v(nf + 1);
    for (size_t i = 0; i <= nf; ++i) v[i] = L[i] + lambda_ * i * dt_;
    dichotomy_residual_ = std::max(0.0, max_rise(v) - std::log(M_));
  }

  a0_ = 0.0;
  for (size_t k = k0; k < K; ++k) {
    double tk = t_lo_ + k * dt_;
    a0_ = std::max({a0_, std::abs(a_(tk)), std::abs(a_(tk + 0.5 * dt_))});
  }
  a0_ = std::max(a0_, std::abs(a_(t_hi_)));
  {
    // refine the grid maximum of |a| by golden section around the best node
    size_t best = k0;
    for (size_t k = k0; k <= K; ++k)
      if (std::abs(a_(t_lo_ + k * dt_)) > std::abs(a_(t_lo_ + best * dt_))) best = k;
    double lo = std::max(0.0, t_lo_ + best * dt_ - dt_), hi = std::min(t_hi_, lo + 2.0 * dt_);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
      double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
      if (std::abs(a_(m1)) >= std::abs(a_(m2))) hi = m2; else lo = m1;
    }
    a0_ = std::max(a0_, std::abs(a_(0.5 * (lo + hi))));
  }

  // s^2 by backward recursion from far enough past t_hi that the tail is negligible
  double tail =
      std::log(std::max(1.0, M_ * M_ / (2.0 * lambda_) * 2.0 * a0_ * 1e16)) / (2.0 * lambda_);
  tail = std::min(tail, 2000.0);
  size_t Ke = K + static_cast<size_t>(std::ceil(tail / dt_));
  A_.resize(Ke + 1);
  fill_A(K, Ke);
  t_end_ = t_lo_ + Ke * dt_;
  I_.assign(Ke + 1, 0.0);
  for (size_t k = Ke; k-- > 0;) {
    double tk = t_lo_ + k * dt_;
    double Ak = A_[k];
    double c = gl5([&](double u) { return std::exp(2.0 * (A(u) - Ak)); }, tk, tk + dt_);
    I_[k] = c + std::exp(2.0 * (A_[k + 1] - Ak)) * I_[k + 1];
  }

  s2_inf_ = std::numeric_limits<double>::infinity();
  s2_sup_ = 0.0;
  for (size_t k = 0; k <= K; ++k) {
    s2_inf_ = std::min(s2_inf_, I_[k]);
    s2_sup_ = std::max(s2_sup_, I_[k]);
  }
  bounds_hold_ = true;
  double lo = 1.0 / (2.0 * a0_), hi = M_ * M_ / (2.0 * lambda_);
  for (size_t k = k0; k <= K; ++k)
    if (I_[k] < lo * (1 - 1e-9) || I_[k] > hi * (1 + 1e-9)) bounds_hold_ = false;
}

// ---------------------------------------------------------------------------

Crossing crossing_time(const SemiStrip& strip, double C, double tau) {
  const LinearSystem& L = *strip.system;
  const double Cs = strip.C_star;
  if (!(C > 0.0) || C > Cs) throw EquimorphError("C outside (0, C_star]");
  if (tau < L.t_lo() || tau > L.t_hi()) throw EquimorphError("tau outside the tabulated range");
  if (C == Cs) return {tau, 0.0};
  const double ls_tau = std::log(L.s(tau));
  // r(T) = ln of (C-coordinate at T) / C_star; strictly decreasing, r' = -1/(2 s^2)
  auto r = [&](double T) {
    return std::log(C / Cs) + 0.5 * std::log(L.s2(T)) + L.Lambda(T, tau) - ls_tau;
  };
  double hi = tau, lo = tau, back = 1.0;
  for (;;) {
    lo = std::max(tau - back, L.t_lo());
    if (r(lo) >= 0.0) break;
    hi = lo;
    if (lo == L.t_lo()) throw EquimorphError("crossing time below the tabulated range");
    if (back >= 1e3) throw EquimorphError("crossing bracket exceeds tau - T = 1e3");
    back = std::min(2.0 * back, 1e3);
  }
  // safeguarded Newton in [lo, hi]
  double T = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double v = r(T);
    if (v == 0.0) break;
    if (v > 0) lo = T;
    else hi = T;
    double next = T + 2.0 * L.s2(T) * v;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    double scale = std::max(1.0, std::abs(T));
    if (std::abs(next - T) <= 1e-15 * scale || hi - lo <= 4e-16 * scale) {
      T = next;
      break;
    }
    T = next;
  }
  Crossing c;
  c.T = T;
  c.residual = std::abs(C * L.s(T) * std::exp(L.Lambda(T, tau)) - Cs * L.s(tau));
  return c;
}

std::pair<double, double> phi_map(const SemiStrip& s1, const SemiStrip& s2, double C, double tau) {
  double T = crossing_time(s1, C, tau).T;
  const LinearSystem& B = *s2.system;
  double C1 =
      s2.C_star * std::exp(0.5 * (std::log(B.s2(tau)) - std::log(B.s2(T))) + B.Lambda(tau, T));
  return {C1, tau};
}

double phi_x(const SemiStrip& s1, const SemiStrip& s2, double x, double tau) {
  if (x == 0.0) return 0.0;
  double C = s1.system->s(tau) * std::abs(x);
  double C1 = phi_map(s1, s2, C, tau).first;
  return std::copysign(C1 / s2.system->s(tau), x);
}

// ---------------------------------------------------------------------------

bool EquimorphismReport::passed(double tol) const {
  if (!(conjugacy_residual <= tol) || !tau_preserved || !(boundary_residual <= tol) || !monotone)
    return false;
  for (const auto& m : modulus)
    if (!m.within_bound) return false;
  return derivative_bounds_hold && preimage_shrinks;
}

std::string EquimorphismReport::to_json() const {
  nlohmann::ordered_json j;
  j["conjugacy_residual"] = conjugacy_residual;
  j["conjugacy_oracle"] = conjugacy_oracle;
  j["tau_preserved"] = tau_preserved;
  j["boundary_residual"] = boundary_residual;
  j["monotone"] = monotone;
  j["d"] = d;
  j["collar"] = collar;
  nlohmann::ordered_json mod = nlohmann::ordered_json::array();
  for (const auto& m : modulus)
    mod.push_back({{"delta", m.delta},
                   {"sup_displacement", m.sup_displacement},
                   {"inner", m.inner},
                   {"outer", m.outer},
                   {"mixed", m.mixed},
                   {"bound", m.bound},
                   {"within_bound", m.within_bound}});
  j["modulus"] = mod;
  nlohmann::ordered_json pre = nlohmann::ordered_json::array();
  for (const auto& p : preimage) pre.push_back({{"v", p.v}, {"d1", p.d1}, {"d2", p.d2}});
  j["preimage"] = pre;
  j["preimage_shrinks"] = preimage_shrinks;
  j["derivative_bounds"] = {{"R1", R1}, {"R1_emp", R1_emp}, {"R2", R2}, {"R2_emp", R2_emp},
                            {"hold", derivative_bounds_hold}};
  j["lyapunov_bounds_hold"] = lyapunov_bounds_hold;
  j["passed"] = passed();
  return j.dump(2);
}

EquimorphismReport verify_equimorphism(const SemiStrip& s1, const SemiStrip& s2, int sample_count,
                                       const std::vector<double>& delta_grid,
                                       const VerifyOptions& o) {
  if (sample_count < 1) throw EquimorphError("sample_count must be positive");
  const LinearSystem& A = *s1.system;
  const LinearSystem& B = *s2.system;
  const double Cs = s1.C_star, C1s = s2.C_star, tmax = o.tau_max;
  EquimorphismReport rep;
  rep.d = o.d;
  rep.lyapunov_bounds_hold = A.bounds_hold() && B.bounds_hold();
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto C1_of = [&](double C, double tau) { return phi_map(s1, s2, C, tau).first; };

  // (i) images of points on one curve of system 1 lie on one curve of system 2
  const int npts = 8;
  const double span = 5.0;
  for (int n = 0; n < sample_count; ++n) {
    double C0 = Cs * (0.01 + 0.99 * U(rng)), t0 = tmax * U(rng);
    double y0 = C1_of(C0, t0) / B.s(t0);
    double y = y0, t = t0;
    const double h = 1e-3;
    for (int j = 0; j < npts; ++j) {
      double tj = t0 + span * j / (npts - 1);
      double Cj = C0 * A.s(tj) / A.s(t0) * std::exp(A.Lambda(tj, t0));
      double C1j = C1_of(Cj, tj);
      double pred = B.s(tj) * y0 * std::exp(B.Lambda(tj, t0));
      rep.conjugacy_residual = std::max(rep.conjugacy_residual, std::abs(C1j - pred));
      // RK4 of y' = b(t) y
      int steps = static_cast<int>(std::llround((tj - t) / h));
      for (int k = 0; k < steps; ++k) {
        double hh = (tj - t) / (steps - k);
        double k1 = B.a(t) * y, k2 = B.a(t + hh / 2) * (y + hh / 2 * k1);
        double k3 = B.a(t + hh / 2) * (y + hh / 2 * k2), k4 = B.a(t + hh) * (y + hh * k3);
        y += hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        t += hh;
      }
      t = tj;
      rep.conjugacy_oracle = std::max(rep.conjugacy_oracle, std::abs(C1j - B.s(tj) * y));
    }
  }

  // (ii) boundary, tau and monotonicity
  const int ntau = 41, nC = 40;
  for (int i = 0; i < ntau; ++i) {
    double tau = tmax * i / (ntau - 1);
    auto [c1, t1] = phi_map(s1, s2, Cs, tau);
    rep.boundary_residual = std::max(rep.boundary_residual, std::abs(c1 - C1s));
    if (t1 != tau) rep.tau_preserved = false;
    double prev = 0.0;
    for (int k = 1; k <= nC; ++k) {
      double c = C1_of(Cs * k / nC, tau);
      if (!(c > prev)) rep.monotone = false;
      prev = c;
    }
  }

  // derivative bounds on C >= d
  const double d = o.d;
  rep.R1 = 2.0 * C1s * A.s2_sup() / (d * B.s2_inf());
  rep.R2 = C1s * (Cs * A.s2_sup() / (B.s2_inf() * A.s2_inf()) + 1.0 / (2.0 * B.s2_inf()));
  const double h = o.fd_step;
  for (int i = 0; i <= 20; ++i) {
    double C = d + (Cs - d) * i / 20.0;
    for (int k = 0; k <= 20; ++k) {
      double tau = tmax * k / 20.0;
      double cl = std::max(d, C - h), ch = std::min(Cs, C + h);
      double gC = (C1_of(ch, tau) - C1_of(cl, tau)) / (ch - cl);
      double tl = std::max(0.0, tau - h), th = tau + h;
      double gT = (C1_of(C, th) - C1_of(C, tl)) / (th - tl);
      rep.R1_emp = std::max(rep.R1_emp, std::abs(gC));
      rep.R2_emp = std::max(rep.R2_emp, std::abs(gT));
    }
  }
  rep.derivative_bounds_hold = rep.R1_emp <= rep.R1 && rep.R2_emp <= rep.R2;

  // collar: images of C <= d stay below sup_tau C1(d, tau)
  for (int i = 0; i <= 200; ++i) rep.collar = std::max(rep.collar, C1_of(d, tmax * i / 200.0));

  // (iii) modulus of continuity by case
  for (double delta : delta_grid) {
    ModulusEntry m;
    m.delta = delta;
    for (int n = 0; n < sample_count; ++n) {
      double C = n % 2 ? Cs * U(rng) : d * U(rng);
      C = std::max(C, 1e-6 * Cs);
      double tau = tmax * U(rng);
      int du = static_cast<int>(U(rng) * 3) - 1, dv = static_cast<int>(U(rng) * 3) - 1;
      if (du == 0 && dv == 0) du = 1;
      double C2 = C + du * delta, tau2 = tau + dv * delta;
      if (C2 > Cs || C2 <= 0.0) C2 = C - du * delta;
      if (C2 > Cs || C2 <= 0.0) continue;
      if (tau2 < 0.0) tau2 = tau - dv * delta;
      double disp = std::max(std::abs(C1_of(C, tau) - C1_of(C2, tau2)), std::abs(tau - tau2));
      m.sup_displacement = std::max(m.sup_displacement, disp);
      bool in1 = C <= d, in2 = C2 <= d;
      double& slot = in1 && in2 ? m.inner : (!in1 && !in2 ? m.outer : m.mixed);
      slot = std::max(slot, disp);
    }
    double lip = (rep.R1 + rep.R2) * delta;
    double b_inner = std::max(rep.collar, delta), b_outer = std::max(lip, delta);
    double b_mixed = std::max(rep.collar + lip, delta);
    m.bound = std::max({b_inner, b_outer, b_mixed});
    const double slack = 1.0 + 1e-9;
    m.within_bound =
        m.inner <= b_inner * slack && m.outer <= b_outer * slack && m.mixed <= b_mixed * slack;
    rep.modulus.push_back(m);
  }

  // pre-images of the level lines C1 = v
  double prev_d2 = std::numeric_limits<double>::infinity();
  for (double f : {0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.001}) {
    PreimageEntry p;
    p.v = f * C1s;
    p.d1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ntau; ++i) {
      double c = phi_map(s2, s1, p.v, tmax * i / (ntau - 1)).first;
      p.d1 = std::min(p.d1, c);
      p.d2 = std::max(p.d2, c);
    }
    if (!(p.d2 < prev_d2)) rep.preimage_shrinks = false;
    prev_d2 = p.d2;
    rep.preimage.push_back(p);
  }
  return rep;
}

void write_phi_csv(const SemiStrip& s1, const SemiStrip& s2, int nC, int ntau, double tau_max,
                   std::ostream& out) {
  out << "C,tau,C1\n";
  char buf[96];
  for (int j = 0; j < ntau; ++j) {
    double tau = ntau > 1 ? tau_max * j / (ntau - 1) : 0.0;
    for (int i = 1; i <= nC; ++i) {
      double C = s1.C_star * i / nC;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", C, tau, phi_map(s1, s2, C, tau).first);
      out << buf;
    }
  }
}

}  // namespace circdyn
