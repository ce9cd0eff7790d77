// Stable and unstable bunches on the section t = 0, their boundary curves, the
// equipped set, and the gradient-like check.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "circdyn/dichotomy.hpp"
#include "circdyn/invariant.hpp"
#include "circdyn/ode.hpp"

namespace circdyn {

enum class BunchKind { kStableRplus, kUnstableRminus };
const char* to_string(BunchKind k);

// Clustering could not be decided from the grid; refine or extend the horizon.
class UndeterminedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BunchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bunch {
  BunchKind kind = BunchKind::kStableRplus;
  // First and last clustered grid points, read counterclockwise.
  CirclePoint trace_begin, trace_end;
  CirclePoint representative;
  std::vector<CirclePoint> boundary_points;
  size_t grid_count = 0;
};

struct BunchParams {
  int grid_size = 720;
  double horizon = 50.0;
  double cluster_tol = 1e-3;
  double separation = 1e-4;
  double boundary_tol = 1e-9;
  double phase = 0.25;  // grid x_i = (i + phase)/N
  DichotomyOptions dichotomy;
  // Passage-time test: entry times on [0, 2L] with the given step, start offset delta.
  double passage_window = 10.0;
  double passage_step = 0.25;
  double passage_offset = 0.01;
  IntegrateOptions integrate;
};

std::vector<Bunch> find_bunches(const OdeSystem& system, BunchKind kind, int grid_size,
                                double horizon, double cluster_tol);
std::vector<Bunch> find_bunches(const OdeSystem& system, BunchKind kind,
                                const BunchParams& params);

struct BoundaryPoint {
  double lifted = 0.0;  // at t = 0
  CirclePoint point;
  int iterations = 0;
  // Check on the span where the final bracket stays within 1e-2.
  DichotomyEstimate check;
  double check_span = 0.0;
  bool verified = false;  // opposite kind on the same semi-axis
};

// Bisection on the initial condition inside [lo, hi] (lifted, lo < hi) whose
// endpoints fall into different clusters at +-horizon.
BoundaryPoint refine_boundary(const OdeSystem& system, double lo, double hi, BunchKind kind,
                              double horizon, double tol = 1e-9,
                              const BunchParams& params = {});

EquippedSet equipped_set(const OdeSystem& system, const BunchParams& params = {});

enum class Verdict { kHolds, kFails, kUndetermined };
const char* to_string(Verdict v);

struct Witness {
  double x0 = 0.0;
  double t0 = 0.0;
  std::string semiaxis;
  std::string note;
  double lambda_stable_fit = 0.0;
  double lambda_unstable_fit = 0.0;
  double end_position = 0.0;
};

struct AssumptionResult {
  Verdict verdict = Verdict::kUndetermined;
  std::string diagnostics;
  std::vector<Witness> witnesses;
};

// Maximal passage times through the transitory strips, entry times on [0, L]
// and on [0, 2L] (backward side: [-L, 0] and [-2L, 0]).
struct PassageSummary {
  double forward_short = 0.0, forward_long = 0.0;
  double backward_short = 0.0, backward_long = 0.0;
  double window = 0.0;  // L
};

struct GradientLikeReport {
  AssumptionResult assumption[4];
  std::optional<PassageSummary> passage;
  std::optional<EquippedSet> equipped;
  std::vector<Bunch> stable_bunches, unstable_bunches;
  std::vector<BoundaryPoint> u_points, s_points;
  double horizon = 0.0;
  int grid_size = 0;
  std::string qualifier;

  bool gradient_like() const { return equipped.has_value(); }
  std::string to_json() const;
};

GradientLikeReport check_assumptions(const OdeSystem& system, const BunchParams& params = {});

// position,label rows with %.17g positions.
std::string equipped_csv(const EquippedSet& e);

}  // namespace circdyn
