#include "circdyn/bunch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"

namespace circdyn {

const char* to_string(BunchKind k) {
  return k == BunchKind::kStableRplus ? "stable_Rplus" : "unstable_Rminus";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kHolds: return "holds";
    case Verdict::kFails: return "fails";
    default: return "undetermined";
  }
}

namespace {

int dir_of(BunchKind k) { return k == BunchKind::kStableRplus ? 1 : -1; }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double endpoint(const OdeSystem& sys, double t0, double x0, double t1,
                const IntegrateOptions& opts) {
  return integrate_lifted(sys, t0, x0, t1, opts).lifted_end();
}

struct Cluster {
  size_t first = 0;
  size_t count = 0;
};

// x sorted in [0,1), e the lifted endpoints (increasing, e.back() < e.front() + 1).
std::vector<Cluster> cluster_endpoints(const std::vector<double>& x, const std::vector<double>& e,
                                       double tol) {
  const size_t n = e.size();
  std::vector<size_t> big;
  for (size_t i = 0; i < n; ++i) {
    double g = i + 1 < n ? e[i + 1] - e[i] : e[0] + 1.0 - e[n - 1];
    if (g > 10.0 * tol) {
      big.push_back(i);
    } else if (g > tol) {
      throw UndeterminedError(fmt("ambiguous clustering: gap %.3g after x = %.6f; refine the grid "
                                  "or extend the horizon",
                                  g, x[i]));
    }
  }
  if (big.empty()) throw UndeterminedError("no separating gap between grid endpoints");
  std::vector<Cluster> out;
  for (size_t j = 0; j < big.size(); ++j) {
    size_t b0 = big[j], b1 = big[(j + 1) % big.size()];
    Cluster c;
    c.first = (b0 + 1) % n;
    c.count = big.size() == 1 ? n : (b1 + n - b0) % n;
    if (c.count < 2)
      throw UndeterminedError(fmt("isolated grid curve at x = %.6f; shift the grid phase",
                                  x[c.first]));
    out.push_back(c);
  }
  return out;
}

struct Side {
  BunchKind kind;
  std::vector<double> x, e;
  std::vector<Bunch> bunches;
  std::vector<double> rep_x, rep_e;  // sorted by rep_x
};

std::vector<double> grid(int n, double phase) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = (i + phase) / n;
  return x;
}

std::vector<double> endpoints(const OdeSystem& sys, const std::vector<double>& x, double t1,
                              const IntegrateOptions& opts) {
  std::vector<double> e(x.size());
  for (size_t i = 0; i < x.size(); ++i) e[i] = endpoint(sys, 0.0, x[i], t1, opts);
  return e;
}

void build_bunches(Side& s, double tol) {
  auto clusters = cluster_endpoints(s.x, s.e, tol);
  const size_t n = s.x.size();
  std::vector<std::pair<double, Bunch>> tmp;
  for (const auto& c : clusters) {
    Bunch b;
    b.kind = s.kind;
    b.trace_begin = CirclePoint(s.x[c.first]);
    b.trace_end = CirclePoint(s.x[(c.first + c.count - 1) % n]);
    size_t r = (c.first + c.count / 2) % n;
    b.representative = CirclePoint(s.x[r]);
    b.grid_count = c.count;
    tmp.push_back({s.e[r], b});
  }
  std::sort(tmp.begin(), tmp.end(), [](const auto& a, const auto& b) {
    return a.second.representative.value < b.second.representative.value;
  });
  s.bunches.clear();
  s.rep_x.clear();
  s.rep_e.clear();
  for (auto& [e, b] : tmp) {
    s.rep_x.push_back(b.representative.value);
    s.rep_e.push_back(e);
    s.bunches.push_back(b);
  }
}

struct Bisection {
  double lo, hi;
  int iterations;
};

Bisection bisect(const OdeSystem& sys, double ts, double lo, double hi, double tref, double elo,
                 double ehi, double tol, double cluster_tol, const IntegrateOptions& opts) {
  if (!(hi > lo)) throw BunchError("empty bracket");
  if (ehi - elo <= 10.0 * cluster_tol)
    throw BunchError("bracket endpoints fall into the same cluster");
  int it = 0;
  while (hi - lo > tol) {
    if (++it > 60) throw BunchError("bisection exceeds 60 iterations without contraction");
    double mid = 0.5 * (lo + hi);
    double e = endpoint(sys, ts, mid, tref, opts);
    if (e - elo < ehi - e) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, hi, it};
}

// Tracks the final bracket until it spreads to 1e-2 and classifies the middle
// curve on that span.
void verify_boundary(const OdeSystem& sys, double ts, const Bisection& b, BunchKind kind,
                     const BunchParams& p, BoundaryPoint& out) {
  const int dir = dir_of(kind);
  const double t1 = ts + dir * p.horizon;
  auto clo = integrate_lifted(sys, ts, b.lo, t1, p.integrate);
  auto chi = integrate_lifted(sys, ts, b.hi, t1, p.integrate);
  double mid = 0.5 * (b.lo + b.hi);
  auto cm = integrate_lifted(sys, ts, mid, t1, p.integrate);
  const double dt = 0.01;
  double span = p.horizon;
  for (int k = 1; k * dt <= p.horizon; ++k) {
    double t = ts + dir * k * dt;
    if (chi.lifted(t) - clo.lifted(t) >= 1e-2) {
      span = k * dt;
      break;
    }
  }
  out.check_span = span;
  DichotomyOptions o = p.dichotomy;
  o.window = std::min(p.dichotomy.window, span / 10.0);
  o.grid_dt = 0.0;
  double ta = std::min(ts, ts + dir * span), tb = std::max(ts, ts + dir * span);
  out.check = estimate_on_interval(cm, ta, tb, dir > 0 ? Semiaxis::kPlus : Semiaxis::kMinus, o);
  out.verified = dir > 0 ? out.check.kind == DichotomyKind::kUnstable
                         : out.check.kind == DichotomyKind::kStable;
}

// Boundary j separates bunches j and j+1 (cyclically) at t = 0.
std::vector<BoundaryPoint> refine_side(const OdeSystem& sys, Side& s, const BunchParams& p) {
  const size_t k = s.rep_x.size();
  const int dir = dir_of(s.kind);
  std::vector<BoundaryPoint> out;
  for (size_t j = 0; j < k; ++j) {
    size_t jn = (j + 1) % k;
    double shift = jn <= j ? 1.0 : 0.0;
    double lo = s.rep_x[j], hi = s.rep_x[jn] + shift;
    auto b = bisect(sys, 0.0, lo, hi, dir * p.horizon, s.rep_e[j], s.rep_e[jn] + shift,
                    p.boundary_tol, p.cluster_tol, p.integrate);
    BoundaryPoint bp;
    bp.lifted = 0.5 * (b.lo + b.hi);
    bp.point = CirclePoint(bp.lifted);
    bp.iterations = b.iterations;
    verify_boundary(sys, 0.0, b, s.kind, p, bp);
    s.bunches[j].boundary_points.push_back(bp.point);
    if (k > 1) {
      auto& bps = s.bunches[jn].boundary_points;
      bps.insert(bps.begin(), bp.point);
    }
    out.push_back(bp);
  }
  return out;
}

Side make_side(const OdeSystem& sys, BunchKind kind, const BunchParams& p) {
  if (p.grid_size < 16) throw std::invalid_argument("grid_size must be at least 16");
  Side s{kind, grid(p.grid_size, p.phase), {}, {}, {}, {}};
  s.e = endpoints(sys, s.x, dir_of(kind) * p.horizon, p.integrate);
  build_bunches(s, p.cluster_tol);
  return s;
}

EquippedSet merge(const std::vector<BoundaryPoint>& u, const std::vector<BoundaryPoint>& s,
                  double separation) {
  EquippedSet e;
  for (const auto& b : u) e.points.push_back({b.point.value, Label::kU});
  for (const auto& b : s) e.points.push_back({b.point.value, Label::kS});
  e.normalize(separation);
  return e;
}

Witness witness(double x0, double t0, const char* semiaxis, const std::string& note,
                const DichotomyEstimate* est, double end) {
  Witness w;
  w.x0 = x0;
  w.t0 = t0;
  w.semiaxis = semiaxis;
  w.note = note;
  if (est) {
    w.lambda_stable_fit = est->lambda_stable_fit;
    w.lambda_unstable_fit = est->lambda_unstable_fit;
  }
  w.end_position = wrap01(end);
  return w;
}

constexpr size_t kMaxWitnesses = 16;

void add_witness(AssumptionResult& r, Witness w) {
  if (r.witnesses.size() < kMaxWitnesses) r.witnesses.push_back(std::move(w));
}

struct PassageResult {
  double max_short = 0.0, max_long = 0.0;
  bool incomplete = false;
  Witness worst;
  double worst_time = -1.0;
  double section_mismatch = 0.0;
};

// Passage times from the collar of each boundary curve to the collar of a
// bunch representative, for entry times on [0, 2L] (forward side) or
// [-2L, 0] (backward side).
PassageResult passage_times(const OdeSystem& sys, const Side& s,
                            const std::vector<BoundaryPoint>& bps, const BunchParams& p) {
  const int dir = dir_of(s.kind);
  const double L = p.passage_window, H = p.horizon, delta = p.passage_offset;
  const size_t k = s.rep_x.size();
  const double t_star = dir * 2.0 * L;
  std::vector<IntegralCurve> reps;
  for (double x : s.rep_x)
    reps.push_back(integrate_lifted(sys, 0.0, x, dir * (2.0 * L + H), p.integrate));

  PassageResult r;
  const int n_entry = static_cast<int>(std::llround(2.0 * L / p.passage_step));
  for (size_t j = 0; j < k; ++j) {
    size_t jn = (j + 1) % k;
    double shift = jn <= j ? 1.0 : 0.0;
    double tref = t_star + dir * H;
    auto b = bisect(sys, t_star, reps[j].lifted(t_star), reps[jn].lifted(t_star) + shift, tref,
                    reps[j].lifted(tref), reps[jn].lifted(tref) + shift, p.boundary_tol,
                    p.cluster_tol, p.integrate);
    // Back to the section along the contracting direction of the boundary curve.
    auto bc = integrate_lifted(sys, t_star, 0.5 * (b.lo + b.hi), 0.0, p.integrate);
    r.section_mismatch =
        std::max(r.section_mismatch, circle_distance(bc.lifted_end(), bps[j].point.value));
    for (int i = 0; i <= n_entry; ++i) {
      double te = dir * i * p.passage_step;
      for (double sg : {-1.0, 1.0}) {
        double x_start = bc.lifted(te) + sg * delta;
        auto near_rep = [&](double t, double x) {
          for (const auto& c : reps)
            if (circle_distance(x, c.lifted(t)) <= delta) return true;
          return false;
        };
        auto c = integrate_until(sys, te, x_start, te + dir * H, p.integrate, near_rep);
        bool done = near_rep(c.t_end(), c.lifted_end());
        double T = done ? std::abs(c.t_end() - te) : std::numeric_limits<double>::infinity();
        if (!done) r.incomplete = true;
        if (i * p.passage_step <= L + 1e-12) r.max_short = std::max(r.max_short, T);
        r.max_long = std::max(r.max_long, T);
        if (T > r.worst_time) {
          r.worst_time = T;
          r.worst = witness(x_start, te, dir > 0 ? "R_plus" : "R_minus",
                            done ? fmt("passage time %.4g", T)
                                 : std::string("passage not completed within the horizon"),
                            nullptr, c.lifted_end());
        }
      }
    }
  }
  return r;
}

}  // namespace

std::vector<Bunch> find_bunches(const OdeSystem& system, BunchKind kind,
                                const BunchParams& params) {
  Side s = make_side(system, kind, params);
  refine_side(system, s, params);
  return s.bunches;
}

std::vector<Bunch> find_bunches(const OdeSystem& system, BunchKind kind, int grid_size,
                                double horizon, double cluster_tol) {
  BunchParams p;
  p.grid_size = grid_size;
  p.horizon = horizon;
  p.cluster_tol = cluster_tol;
  return find_bunches(system, kind, p);
}

BoundaryPoint refine_boundary(const OdeSystem& system, double lo, double hi, BunchKind kind,
                              double horizon, double tol, const BunchParams& params) {
  BunchParams p = params;
  p.horizon = horizon;
  const double t1 = dir_of(kind) * horizon;
  double elo = endpoint(system, 0.0, lo, t1, p.integrate);
  double ehi = endpoint(system, 0.0, hi, t1, p.integrate);
  auto b = bisect(system, 0.0, lo, hi, t1, elo, ehi, tol, p.cluster_tol, p.integrate);
  BoundaryPoint bp;
  bp.lifted = 0.5 * (b.lo + b.hi);
  bp.point = CirclePoint(bp.lifted);
  bp.iterations = b.iterations;
  verify_boundary(system, 0.0, b, kind, p, bp);
  return bp;
}

EquippedSet equipped_set(const OdeSystem& system, const BunchParams& params) {
  Side st = make_side(system, BunchKind::kStableRplus, params);
  Side un = make_side(system, BunchKind::kUnstableRminus, params);
  auto u = refine_side(system, st, params);
  auto s = refine_side(system, un, params);
  try {
    return merge(u, s, params.separation);
  } catch (const std::invalid_argument& e) {
    throw BunchError(std::string("U-point and S-point not separated: ") + e.what());
  }
}

GradientLikeReport check_assumptions(const OdeSystem& sys, const BunchParams& p) {
  GradientLikeReport R;
  R.horizon = p.horizon;
  R.grid_size = p.grid_size;
  R.qualifier = fmt("holds (up to horizon %g, window doubling stable)", p.horizon);
  auto& A1 = R.assumption[0];
  auto& A2 = R.assumption[1];
  auto& A3 = R.assumption[2];
  auto& A4 = R.assumption[3];
  auto undetermined_from = [&](int first, const std::string& why) {
    for (int i = first; i < 4; ++i) {
      R.assumption[i].verdict = Verdict::kUndetermined;
      if (R.assumption[i].diagnostics.empty()) R.assumption[i].diagnostics = why;
    }
    return R;
  };
  if (p.grid_size < 16) throw std::invalid_argument("grid_size must be at least 16");

  // A1 on the grid, keeping endpoints for the clustering.
  Side st{BunchKind::kStableRplus, grid(p.grid_size, p.phase), {}, {}, {}, {}};
  Side un{BunchKind::kUnstableRminus, st.x, {}, {}, {}, {}};
  st.e.resize(st.x.size());
  un.e.resize(un.x.size());
  size_t marginal = 0;
  try {
    for (size_t i = 0; i < st.x.size(); ++i) {
      auto cf = integrate_lifted(sys, 0.0, st.x[i], p.horizon, p.integrate);
      auto cb = integrate_lifted(sys, 0.0, st.x[i], -p.horizon, p.integrate);
      st.e[i] = cf.lifted_end();
      un.e[i] = cb.lifted_end();
      auto ef = classify_semiaxis(cf, Semiaxis::kPlus, p.horizon, p.dichotomy);
      auto eb = classify_semiaxis(cb, Semiaxis::kMinus, p.horizon, p.dichotomy);
      if (ef.kind == DichotomyKind::kMarginal) {
        ++marginal;
        add_witness(A1, witness(st.x[i], 0.0, "R_plus", "no dichotomy", &ef, st.e[i]));
      }
      if (eb.kind == DichotomyKind::kMarginal) {
        ++marginal;
        add_witness(A1, witness(st.x[i], 0.0, "R_minus", "no dichotomy", &eb, un.e[i]));
      }
    }
  } catch (const std::exception& e) {
    A1.diagnostics = std::string("grid integration failed: ") + e.what();
    return undetermined_from(0, "grid integration failed");
  }
  A1.verdict = marginal ? Verdict::kFails : Verdict::kHolds;
  A1.diagnostics = fmt("%g semi-axis estimates without dichotomy out of %g", double(marginal),
                       2.0 * st.x.size());

  // A2: clusters on the grid and on its nested doubling.
  try {
    build_bunches(st, p.cluster_tol);
    build_bunches(un, p.cluster_tol);
    Side st2{BunchKind::kStableRplus, {}, {}, {}, {}, {}};
    Side un2{BunchKind::kUnstableRminus, {}, {}, {}, {}, {}};
    std::vector<double> xn = grid(p.grid_size, p.phase + 0.5);
    auto ef = endpoints(sys, xn, p.horizon, p.integrate);
    auto eb = endpoints(sys, xn, -p.horizon, p.integrate);
    std::vector<std::tuple<double, double, double>> rows;
    for (size_t i = 0; i < st.x.size(); ++i) rows.emplace_back(st.x[i], st.e[i], un.e[i]);
    for (size_t i = 0; i < xn.size(); ++i) {
      double w = wrap01(xn[i]), sh = w - xn[i];
      rows.emplace_back(w, ef[i] + sh, eb[i] + sh);
    }
    std::sort(rows.begin(), rows.end());
    for (auto [x, a, b] : rows) {
      st2.x.push_back(x);
      st2.e.push_back(a);
      un2.x.push_back(x);
      un2.e.push_back(b);
    }
    build_bunches(st2, p.cluster_tol);
    build_bunches(un2, p.cluster_tol);
    bool same = st2.bunches.size() == st.bunches.size() && un2.bunches.size() == un.bunches.size();
    A2.verdict = same ? Verdict::kHolds : Verdict::kFails;
    A2.diagnostics = fmt("stable bunches %g -> %g at doubled grid; ", double(st.bunches.size()),
                         double(st2.bunches.size())) +
                     fmt("unstable bunches %g -> %g", double(un.bunches.size()),
                         double(un2.bunches.size()));
  } catch (const UndeterminedError& e) {
    A2.diagnostics = e.what();
    return undetermined_from(1, "bunch structure undetermined");
  } catch (const std::exception& e) {
    A2.diagnostics = std::string("integration failed: ") + e.what();
    return undetermined_from(1, "bunch structure undetermined");
  }

  // Boundaries and A3.
  try {
    R.u_points = refine_side(sys, st, p);
    R.s_points = refine_side(sys, un, p);
  } catch (const std::exception& e) {
    A3.diagnostics = std::string("boundary refinement failed: ") + e.what();
    return undetermined_from(2, "boundaries undetermined");
  }
  R.stable_bunches = st.bunches;
  R.unstable_bunches = un.bunches;
  for (const auto& b : R.u_points)
    if (!b.verified) {
      A1.verdict = Verdict::kFails;
      add_witness(A1, witness(b.point.value, 0.0, "R_plus", "U-curve not of unstable type",
                              &b.check, b.lifted));
    }
  for (const auto& b : R.s_points)
    if (!b.verified) {
      A1.verdict = Verdict::kFails;
      add_witness(A1, witness(b.point.value, 0.0, "R_minus", "S-curve not of stable type",
                              &b.check, b.lifted));
    }

  bool a3 = true;
  try {
    for (const auto& b : R.u_points) {
      auto c = integrate_lifted(sys, 0.0, b.lifted, -p.horizon, p.integrate);
      auto e = classify_semiaxis(c, Semiaxis::kMinus, p.horizon, p.dichotomy);
      if (e.kind == DichotomyKind::kStable) {
        a3 = false;
        add_witness(A3, witness(b.point.value, 0.0, "R_minus", "U-curve of stable type on R_minus",
                                &e, c.lifted_end()));
      }
    }
    for (const auto& b : R.s_points) {
      auto c = integrate_lifted(sys, 0.0, b.lifted, p.horizon, p.integrate);
      auto e = classify_semiaxis(c, Semiaxis::kPlus, p.horizon, p.dichotomy);
      if (e.kind == DichotomyKind::kUnstable) {
        a3 = false;
        add_witness(A3, witness(b.point.value, 0.0, "R_plus", "S-curve of unstable type on R_plus",
                                &e, c.lifted_end()));
      }
    }
  } catch (const std::exception& e) {
    A3.diagnostics = std::string("integration failed: ") + e.what();
    return undetermined_from(2, "A3 undetermined");
  }
  std::optional<EquippedSet> eq;
  try {
    eq = merge(R.u_points, R.s_points, p.separation);
  } catch (const std::invalid_argument& e) {
    a3 = false;
    A3.diagnostics = std::string("separation violated: ") + e.what();
  }
  A3.verdict = a3 ? Verdict::kHolds : Verdict::kFails;
  if (A3.diagnostics.empty())
    A3.diagnostics = fmt("%g U-points, %g S-points", double(R.u_points.size()),
                         double(R.s_points.size()));

  if (A1.verdict != Verdict::kHolds || A2.verdict != Verdict::kHolds ||
      A3.verdict != Verdict::kHolds) {
    A4.verdict = Verdict::kUndetermined;
    A4.diagnostics = "skipped: requires assumptions 1-3";
    return R;
  }

  try {
    auto fw = passage_times(sys, st, R.u_points, p);
    auto bw = passage_times(sys, un, R.s_points, p);
    bool ok = true;
    for (const auto* r : {&fw, &bw}) {
      bool side_ok = !r->incomplete && r->max_long <= 1.1 * r->max_short + 0.25;
      if (!side_ok) {
        ok = false;
        add_witness(A4, r->worst);
      }
    }
    A4.verdict = ok ? Verdict::kHolds : Verdict::kFails;
    R.passage = PassageSummary{fw.max_short, fw.max_long, bw.max_short, bw.max_long,
                               p.passage_window};
    A4.diagnostics = fmt("forward max passage %.4g over [0,L], %.4g over [0,2L]; ", fw.max_short,
                         fw.max_long) +
                     fmt("backward %.4g, %.4g; ", bw.max_short, bw.max_long) +
                     fmt("L = %g, boundary mismatch at section %.2g", p.passage_window,
                         std::max(fw.section_mismatch, bw.section_mismatch));
  } catch (const std::exception& e) {
    A4.verdict = Verdict::kUndetermined;
    A4.diagnostics = std::string("passage computation failed: ") + e.what();
  }
  if (A4.verdict == Verdict::kHolds) R.equipped = eq;
  return R;
}

std::string equipped_csv(const EquippedSet& e) {
  std::string out = "position,label\n";
  char buf[64];
  for (const auto& p : e.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%c\n", p.position, p.label == Label::kU ? 'U' : 'S');
    out += buf;
  }
  return out;
}

std::string GradientLikeReport::to_json() const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["gradient_like"] = gradient_like();
  j["horizon"] = horizon;
  j["grid_size"] = grid_size;
  j["qualifier"] = qualifier;
  ordered_json as = ordered_json::array();
  for (int i = 0; i < 4; ++i) {
    ordered_json a;
    a["assumption"] = i + 1;
    a["verdict"] = to_string(assumption[i].verdict);
    a["diagnostics"] = assumption[i].diagnostics;
    ordered_json ws = ordered_json::array();
    for (const auto& w : assumption[i].witnesses)
      ws.push_back({{"x0", w.x0},
                    {"t0", w.t0},
                    {"semiaxis", w.semiaxis},
                    {"note", w.note},
                    {"lambda_stable_fit", w.lambda_stable_fit},
                    {"lambda_unstable_fit", w.lambda_unstable_fit},
                    {"end_position", w.end_position}});
    a["witnesses"] = ws;
    as.push_back(a);
  }
  j["assumptions"] = as;
  if (passage)
    j["passage"] = {{"window", passage->window},
                    {"forward", {passage->forward_short, passage->forward_long}},
                    {"backward", {passage->backward_short, passage->backward_long}}};
  auto bunches = [](const std::vector<Bunch>& v) {
    ordered_json arr = ordered_json::array();
    for (const auto& b : v) {
      ordered_json bp = ordered_json::array();
      for (auto p : b.boundary_points) bp.push_back(p.value);
      arr.push_back({{"kind", to_string(b.kind)},
                     {"trace", {b.trace_begin.value, b.trace_end.value}},
                     {"representative", b.representative.value},
                     {"boundary_points", bp},
                     {"grid_count", b.grid_count}});
    }
    return arr;
  };
  j["stable_bunches"] = bunches(stable_bunches);
  j["unstable_bunches"] = bunches(unstable_bunches);
  if (equipped) {
    auto w = word_of(*equipped);
    ordered_json pts = ordered_json::array();
    for (const auto& p : equipped->points)
      pts.push_back({{"position", p.position}, {"label", p.label == Label::kU ? "U" : "S"}});
    j["equipped_set"] = pts;
    j["word"] = w.canonical;
    j["n"] = w.n;
    j["m"] = w.m;
  } else {
    j["equipped_set"] = nullptr;
  }
  return j.dump(2);
}

}  // namespace circdyn
