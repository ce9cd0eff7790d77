// Command-line front end. Exit codes: 0 positive verdict, 1 negative verdict,
// 2 usage or input error, 3 numerical failure.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "circdyn/equimorph.hpp"
#include "circdyn/ode.hpp"

namespace circdyn::cli {

enum Exit { kOk = 0, kNegative = 1, kUsage = 2, kNumeric = 3 };

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A spec file path, or a library model name when no such file exists.
OdeSystem load_spec(const std::string& path_or_model);
// {"rhs": "a(t)", "params": {...}, "C_star": 1}
SemiStrip load_linear_spec(const std::string& path);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace circdyn::cli
