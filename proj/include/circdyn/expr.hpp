// Right-hand side expressions f(t,x): parsing, evaluation, differentiation.
#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace circdyn {

using ParamMap = std::map<std::string, double>;

class ParseError : public std::runtime_error {
 public:
  ParseError(size_t offset, std::string expected, const std::string& msg)
      : std::runtime_error(msg), offset_(offset), expected_(std::move(expected)) {}
  size_t offset() const { return offset_; }
  const std::string& expected() const { return expected_; }

 private:
  size_t offset_;
  std::string expected_;
};

// Domain errors and non-finite results; subexpression() is the printed
// offending node.
class EvalError : public std::runtime_error {
 public:
  EvalError(std::string subexpr, const std::string& msg)
      : std::runtime_error(msg), subexpr_(std::move(subexpr)) {}
  const std::string& subexpression() const { return subexpr_; }

 private:
  std::string subexpr_;
};

class DiffError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind { kNumber, kConstant, kVariable, kParameter, kUnary, kBinary };
enum class UnaryOp { kNeg, kSin, kCos, kTan, kExp, kLn, kTanh, kAbs, kSqrt };
enum class BinaryOp { kAdd, kSub, kMul, kDiv, kPow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double value = 0.0;  // kNumber, kConstant
  std::string name;    // kConstant, kVariable, kParameter
  UnaryOp uop = UnaryOp::kNeg;
  BinaryOp bop = BinaryOp::kAdd;
  NodePtr a, b;
};

class CompiledExpr;

class Expression {
 public:
  Expression() = default;
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  static Expression parse(const std::string& source);
  // Rejects identifiers outside the declared parameter set.
  static Expression parse(const std::string& source, const std::set<std::string>& params);
  static Expression number(double v);

  const NodePtr& root() const { return root_; }
  bool empty() const { return !root_; }

  std::string print() const;
  double eval(double t, double x, const ParamMap& params) const;
  Expression differentiate(char var) const;

  bool structurally_equal(const Expression& other) const;
  bool depends_on(char var) const;
  std::set<std::string> parameters() const;

 private:
  NodePtr root_;
};

std::string print_node(const NodePtr& n);

// Flat stack program with parameters bound to slots. Immutable after
// construction.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expression& e, const ParamMap& params);
  double operator()(double t, double x) const;

 private:
  enum class Code : unsigned char {
    kConst, kT, kX, kNeg, kSin, kCos, kTan, kExp, kLn, kTanh, kAbs, kSqrt,
    kAdd, kSub, kMul, kDiv, kPow
  };
  struct Instr {
    Code code;
    double value;
    const Node* node;
  };
  void emit(const NodePtr& n, const ParamMap& params);
  [[noreturn]] void fail(const Instr& in, const char* what) const;

  std::vector<Instr> prog_;
  size_t max_stack_ = 0;
  NodePtr keep_;
};

}  // namespace circdyn
