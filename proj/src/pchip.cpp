#include "circdyn/pchip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace circdyn {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw std::invalid_argument("monotone cubic needs matching knots");
  for (size_t i = 0; i + 1 < n; ++i)
    if (!(x_[i + 1] > x_[i])) throw std::invalid_argument("knots must be strictly increasing");
  std::vector<double> h(n - 1), d(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    d[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  m_.assign(n, 0.0);
  if (n == 2) {
    m_[0] = m_[1] = d[0];
    return;
  }
  for (size_t k = 1; k + 1 < n; ++k) {
    if (d[k - 1] * d[k] <= 0.0) continue;
    double w1 = 2 * h[k] + h[k - 1], w2 = h[k] + 2 * h[k - 1];
    m_[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double m = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(m) > std::abs(3 * d0)) return 3 * d0;
    return m;
  };
  m_[0] = end_slope(h[0], h[1], d[0], d[1]);
  m_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
}

size_t MonotoneCubic::cell(double u) const {
  size_t i = std::upper_bound(x_.begin(), x_.end(), u) - x_.begin();
  if (i == 0) return 0;
  return std::min(i - 1, x_.size() - 2);
}

double MonotoneCubic::operator()(double u) const {
  size_t i = cell(u);
  double h = x_[i + 1] - x_[i], s = (u - x_[i]) / h;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
}

double MonotoneCubic::derivative(double u) const {
  size_t i = cell(u);
  double h = x_[i + 1] - x_[i], s = (u - x_[i]) / h;
  double d00 = 6 * s * (s - 1) / h, d10 = (1 - s) * (1 - 3 * s);
  double d01 = -d00, d11 = s * (3 * s - 2);
  return d00 * y_[i] + d10 * m_[i] + d01 * y_[i + 1] + d11 * m_[i + 1];
}

PeriodicLift::PeriodicLift(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 1 || y.size() != n) throw std::invalid_argument("periodic lift needs knots");
  x0_ = x.front();
  if (!(x.back() < x0_ + 1.0) || !(y.back() < y.front() + 1.0))
    throw std::invalid_argument("periodic lift knots must span less than one period");
  std::vector<double> xe, ye;
  for (int k = -1; k <= 1; ++k)
    for (size_t i = 0; i < n; ++i) {
      xe.push_back(x[i] + k);
      ye.push_back(y[i] + k);
    }
  xe.push_back(x[0] + 2.0);
  ye.push_back(y[0] + 2.0);
  c_ = MonotoneCubic(xe, ye);
}

double PeriodicLift::operator()(double u) const {
  double k = std::floor(u - x0_);
  return c_(u - k) + k;
}

double PeriodicLift::derivative(double u) const { return c_.derivative(u - std::floor(u - x0_)); }

double PeriodicLift::inverse(double v) const {
  return degree_one_inverse([this](double u) { return (*this)(u); },
                            [this](double u) { return derivative(u); }, v, 1e-15);
}

double degree_one_inverse(const std::function<double(double)>& g,
                          const std::function<double(double)>& g_prime, double v, double tol) {
  return degree_one_inverse(
      [&](double u, double& gv, double& gd) {
        gv = g(u);
        gd = g_prime(u);
      },
      v, tol);
}

double degree_one_inverse(const std::function<void(double, double&, double&)>& jet, double v,
                          double tol, double u0) {
  double gv, d, u = u0;
  if (std::isnan(u)) {
    // g(u) - u is periodic, so v - (g(v) - v) is within one period of the root.
    jet(v, gv, d);
    u = v - (gv - v);
  }
  jet(u, gv, d);
  double r = gv - v;
  if (r == 0.0) return u;
  double lo = u, hi = u;
  if (r > 0) lo = u - std::ceil(r);
  else hi = u + std::ceil(-r);
  double r_prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 300; ++it) {
    if (r == 0.0) return u;
    if (r > 0) hi = u;
    else lo = u;
    bool newton = d > 0 && std::abs(r) <= 0.5 * r_prev;
    double next = newton ? u - r / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
      newton = false;
    }
    if (hi - lo <= 4e-16 * std::max(1.0, std::abs(u)) || (newton && std::abs(r) <= tol))
      return next;
    r_prev = std::abs(r);
    u = next;
    jet(u, gv, d);
    r = gv - v;
  }
  return u;
}

}  // namespace circdyn
