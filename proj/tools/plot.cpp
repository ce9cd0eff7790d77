#include "plot.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace circdyn::cli {

namespace {

const double kTwoPi = 6.28318530717958647692;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* stroke(const std::string& klass) {
  if (klass == "U") return "#c0392b";
  if (klass == "S") return "#2763c4";
  return "#9a9a9a";
}

// Samples (t, lifted x) of the curve through (0, x0) over [-T, T].
std::vector<std::pair<double, double>> trace(const OdeSystem& s, double x0, double T, int n) {
  std::vector<std::pair<double, double>> out;
  IntegrateOptions o;
  o.rtol = 1e-7;
  o.atol = 1e-9;
  try {
    auto back = integrate_lifted(s, 0.0, x0, -T, o);
    auto fwd = integrate_lifted(s, 0.0, x0, T, o);
    for (int i = 0; i <= n; ++i) {
      double t = -T + 2.0 * T * i / n;
      out.emplace_back(t, t < 0 ? back.lifted(t) : fwd.lifted(t));
    }
  } catch (const std::exception&) {
    out.clear();
  }
  return out;
}

// Polyline pieces between wraps of x.
std::vector<std::vector<std::pair<double, double>>> split(
    const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::vector<std::pair<double, double>>> pieces(1);
  double k_prev = pts.empty() ? 0.0 : std::floor(pts.front().second);
  for (auto [t, x] : pts) {
    double k = std::floor(x);
    if (k != k_prev && !pieces.back().empty()) pieces.emplace_back();
    k_prev = k;
    pieces.back().emplace_back(t, x - k);
  }
  return pieces;
}

}  // namespace

std::string foliation_svg(const OdeSystem& system, const std::vector<MarkedCurve>& curves,
                          double T, const std::string& title) {
  const double W = 720, H = 360, pad = 30;
  auto X = [&](double t) { return pad + (t + T) / (2 * T) * (W - 2 * pad); };
  auto Y = [&](double x) { return H - pad - x * (H - 2 * pad); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  o << "<title>" << title << "</title>\n";
  o << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad
    << "\" height=\"" << H - 2 * pad << "\" fill=\"none\" stroke=\"#333\"/>\n";
  o << "<line x1=\"" << fmt(X(0)) << "\" y1=\"" << pad << "\" x2=\"" << fmt(X(0)) << "\" y2=\""
    << H - pad << "\" stroke=\"#333\" stroke-dasharray=\"4 3\"/>\n";
  o << "<text x=\"" << pad << "\" y=\"" << pad - 8 << "\" font-size=\"12\">" << title
    << "</text>\n";
  for (const auto& c : curves) {
    for (const auto& piece : split(trace(system, c.x0, T, 400))) {
      if (piece.size() < 2) continue;
      o << "<polyline class=\"" << c.klass << "\" fill=\"none\" stroke=\"" << stroke(c.klass)
        << "\" stroke-width=\"" << (c.klass == "fan" ? "0.6" : "1.6") << "\" points=\"";
      for (auto [t, x] : piece) o << fmt(X(t)) << ',' << fmt(Y(x)) << ' ';
      o << "\"/>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

std::string annulus_svg(const Autonomization& a, const std::string& title) {
  const double S = 480, c = S / 2, r_in = 70, r_out = 210;
  const double T = 3.0 * a.plan.half_width;
  auto R = [&](double t) { return r_in + (t + T) / (2 * T) * (r_out - r_in); };
  auto P = [&](double t, double x) {
    double r = R(t), th = kTwoPi * x;
    return fmt(c + r * std::cos(th)) + "," + fmt(c - r * std::sin(th));
  };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << S << "\" height=\"" << S
    << "\" viewBox=\"0 0 " << S << ' ' << S << "\">\n";
  o << "<title>" << title << "</title>\n";
  for (double r : {r_in, r_out})
    o << "<circle cx=\"" << c << "\" cy=\"" << c << "\" r=\"" << r
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

  std::vector<MarkedCurve> curves;
  for (int i = 0; i < 48; ++i) curves.push_back({(i + 0.5) / 48.0, "fan"});
  for (const auto& p : a.designed.points)
    curves.push_back({p.position, p.label == Label::kU ? "U" : "S"});
  for (const auto& m : curves) {
    auto pts = trace(a.system, m.x0, T, 300);
    if (pts.size() < 2) continue;
    o << "<polyline class=\"" << m.klass << "\" fill=\"none\" stroke=\"" << stroke(m.klass)
      << "\" stroke-width=\"" << (m.klass == "fan" ? "0.6" : "1.6") << "\" points=\"";
    for (auto [t, x] : pts) o << P(t, x) << ' ';
    o << "\"/>\n";
  }
  auto marks = [&](const ZeroField& f, double t) {
    for (const auto& z : f.spec().zeros) {
      double r = R(t), th = kTwoPi * z.position;
      const char* k = z.sign > 0 ? "U" : "S";
      o << "<circle class=\"" << k << "\" cx=\"" << fmt(c + r * std::cos(th)) << "\" cy=\""
        << fmt(c - r * std::sin(th)) << "\" r=\"4\" fill=\"" << stroke(k) << "\"/>\n";
    }
  };
  marks(*a.plan.f_minus, -T);
  marks(*a.plan.f_plus, T);
  o << "<text x=\"10\" y=\"20\" font-size=\"12\">" << title << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace circdyn::cli
