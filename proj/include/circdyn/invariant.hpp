// Equipped sets on the section t = 0 and their canonical cyclic words.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace circdyn {

enum class Label { kU, kS };

struct EquippedPoint {
  double position;  // in [0,1)
  Label label;
};

struct EquippedSet {
  std::vector<EquippedPoint> points;  // increasing positions

  int n() const;  // U count
  int m() const;  // S count
  // Sorts, then checks n,m >= 1 and pairwise separation; throws std::invalid_argument.
  void normalize(double separation = 1e-4);
};

struct UInvariant {
  std::string word;       // as read from the first point
  std::string canonical;  // least rotation with U < S
  int n = 0;
  int m = 0;
};

// Index of the least rotation (U < S) by Booth's linear-time algorithm.
size_t least_rotation_index(const std::string& word);
std::string least_rotation(const std::string& word);
// O(k^2) reference.
std::string least_rotation_brute(const std::string& word);

UInvariant word_of(const EquippedSet& e);
// Parses a token over {U,S}; throws std::invalid_argument on other letters or
// when n = 0 or m = 0.
UInvariant invariant_from_token(const std::string& token);

bool equivalent(const UInvariant& a, const UInvariant& b, bool allow_reflection = false);

// Degree-one piecewise-linear circle map through knots (x_i, y_i), x_i increasing
// in [x_0, x_0 + 1), y lifted and increasing with y_last < y_0 + 1.
struct CircleMap {
  std::vector<double> x, y;
  double lifted(double u) const;
  double operator()(double u) const;  // reduced to [0,1)
};

class NotEquivalentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

CircleMap witness_homeomorphism(const EquippedSet& e1, const EquippedSet& e2);

}  // namespace circdyn
