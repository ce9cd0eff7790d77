#include "circdyn/invariant.hpp"

#include <algorithm>
#include <cmath>

#include "circdyn/ode.hpp"

namespace circdyn {

int EquippedSet::n() const {
  auto is_u = [](const EquippedPoint& p) { return p.label == Label::kU; };
  return static_cast<int>(std::count_if(points.begin(), points.end(), is_u));
}

int EquippedSet::m() const { return static_cast<int>(points.size()) - n(); }

void EquippedSet::normalize(double separation) {
  for (auto& p : points) p.position = wrap01(p.position);
  std::sort(points.begin(), points.end(),
            [](const EquippedPoint& a, const EquippedPoint& b) { return a.position < b.position; });
  if (n() < 1 || m() < 1) throw std::invalid_argument("equipped set needs n >= 1 and m >= 1");
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const auto& q = points[(i + 1) % points.size()];
    if (points.size() > 1 && circle_distance(p.position, q.position) < separation)
      throw std::invalid_argument("equipped points closer than the separation tolerance");
  }
}

namespace {

// U sorts before S.
inline int rank(char c) { return c == 'U' ? 0 : 1; }

}  // namespace

size_t least_rotation_index(const std::string& word) {
  const size_t n = word.size();
  if (n == 0) return 0;
  std::vector<int> s(2 * n);
  for (size_t i = 0; i < 2 * n; ++i) s[i] = rank(word[i % n]);
  std::vector<long> f(2 * n, -1);
  long k = 0;
  for (long j = 1; j < static_cast<long>(2 * n); ++j) {
    int sj = s[j];
    long i = f[j - k - 1];
    while (i != -1 && sj != s[k + i + 1]) {
      if (sj < s[k + i + 1]) k = j - i - 1;
      i = f[i];
    }
    if (sj != s[k + i + 1]) {
      if (sj < s[k]) k = j;
      f[j - k] = -1;
    } else {
      f[j - k] = i + 1;
    }
  }
  return static_cast<size_t>(k) % n;
}

std::string least_rotation(const std::string& word) {
  size_t k = least_rotation_index(word);
  return word.substr(k) + word.substr(0, k);
}

std::string least_rotation_brute(const std::string& word) {
  auto less = [](const std::string& a, const std::string& b) {
    for (size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return rank(a[i]) < rank(b[i]);
    return false;
  };
  std::string best = word;
  for (size_t k = 1; k < word.size(); ++k) {
    std::string r = word.substr(k) + word.substr(0, k);
    if (less(r, best)) best = r;
  }
  return best;
}

UInvariant word_of(const EquippedSet& e) {
  UInvariant u;
  for (const auto& p : e.points) {
    u.word += p.label == Label::kU ? 'U' : 'S';
    (p.label == Label::kU ? u.n : u.m) += 1;
  }
  u.canonical = least_rotation(u.word);
  return u;
}

UInvariant invariant_from_token(const std::string& token) {
  UInvariant u;
  for (char c : token) {
    if (c != 'U' && c != 'S') throw std::invalid_argument("word letters must be U or S");
    (c == 'U' ? u.n : u.m) += 1;
  }
  if (u.n < 1 || u.m < 1) throw std::invalid_argument("word needs at least one U and one S");
  u.word = token;
  u.canonical = least_rotation(token);
  return u;
}

bool equivalent(const UInvariant& a, const UInvariant& b, bool allow_reflection) {
  if (a.n != b.n || a.m != b.m) return false;
  if (a.canonical == b.canonical) return true;
  if (!allow_reflection) return false;
  std::string rev(b.word.rbegin(), b.word.rend());
  return a.canonical == least_rotation(rev);
}

double CircleMap::lifted(double u) const {
  double k = std::floor(u - x.front());
  double v = u - k;  // in [x0, x0+1)
  size_t i = std::upper_bound(x.begin(), x.end(), v) - x.begin();  // >= 1
  double xa = x[i - 1], ya = y[i - 1];
  double xb = i < x.size() ? x[i] : x.front() + 1.0;
  double yb = i < y.size() ? y[i] : y.front() + 1.0;
  return ya + (yb - ya) * (v - xa) / (xb - xa) + k;
}

double CircleMap::operator()(double u) const { return wrap01(lifted(u)); }

CircleMap witness_homeomorphism(const EquippedSet& e1, const EquippedSet& e2) {
  UInvariant w1 = word_of(e1), w2 = word_of(e2);
  if (!equivalent(w1, w2, false)) throw NotEquivalentError("equipped sets are not equivalent");
  const size_t k = w1.word.size();
  size_t shift = 0;
  for (; shift < k; ++shift) {
    bool ok = true;
    for (size_t i = 0; i < k && ok; ++i) ok = w1.word[i] == w2.word[(i + shift) % k];
    if (ok) break;
  }
  CircleMap h;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + shift;
    h.x.push_back(e1.points[i].position);
    h.y.push_back(e2.points[j % k].position + (j >= k ? 1.0 : 0.0));
  }
  return h;
}

}  // namespace circdyn
