// SVG renderings of integral-curve fans. Output is deterministic text.
#pragma once

#include <string>
#include <vector>

#include "circdyn/construct.hpp"
#include "circdyn/ode.hpp"

namespace circdyn::cli {

struct MarkedCurve {
  double x0;          // at t = 0
  std::string klass;  // "U", "S" or "fan"
};

// Curves over (t, x) in [-T, T] x [0, 1); wraps split the polyline.
std::string foliation_svg(const OdeSystem& system, const std::vector<MarkedCurve>& curves,
                          double T, const std::string& title);

// Annulus picture of an autonomized word: t in [-T, T] runs from the inner to
// the outer circle, x is the angle.
std::string annulus_svg(const Autonomization& a, const std::string& title);

}  // namespace circdyn::cli
