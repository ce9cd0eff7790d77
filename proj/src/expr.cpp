#include "circdyn/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

namespace circdyn {

namespace {

struct FuncEntry {
  const char* name;
  UnaryOp op;
};
constexpr FuncEntry kFuncs[] = {
    {"sin", UnaryOp::kSin},   {"cos", UnaryOp::kCos}, {"tan", UnaryOp::kTan},
    {"exp", UnaryOp::kExp},   {"ln", UnaryOp::kLn},   {"tanh", UnaryOp::kTanh},
    {"abs", UnaryOp::kAbs},   {"sqrt", UnaryOp::kSqrt}};

const char* unary_name(UnaryOp op) {
  for (const auto& f : kFuncs)
    if (f.op == op) return f.name;
  return "-";
}

NodePtr make_num(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kNumber;
  n->value = v;
  return n;
}

NodePtr make_named(NodeKind k, const std::string& name, double v = 0.0) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->name = name;
  n->value = v;
  return n;
}

NodePtr make_unary(UnaryOp op, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kUnary;
  n->uop = op;
  n->a = std::move(a);
  return n;
}

NodePtr make_binary(BinaryOp op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kBinary;
  n->bop = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  Parser(const std::string& s, const std::set<std::string>* allowed)
      : s_(s), allowed_(allowed) {}

  NodePtr run() {
    skip_ws();
    if (pos_ >= s_.size()) error("expression", "empty expression");
    NodePtr n = parse_expr();
    skip_ws();
    if (pos_ < s_.size()) error("operator or end of input", "unexpected character");
    return n;
  }

 private:
  [[noreturn]] void error(const std::string& expected, const std::string& what) {
    // offsets are reported 1-based; end of input is size()+1
    throw ParseError(pos_ + 1, expected,
                     what + " at offset " + std::to_string(pos_ + 1) + ", expected " + expected);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(BinaryOp::kAdd, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary(BinaryOp::kSub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(BinaryOp::kMul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(BinaryOp::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_unary(UnaryOp::kNeg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make_binary(BinaryOp::kPow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= s_.size()) error("operand", "unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      if (!accept(')')) error("\")\"", "unbalanced parenthesis");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    error("operand", "unexpected character");
  }

  NodePtr parse_number() {
    size_t start = pos_;
    auto digit = [&](size_t i) {
      return i < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i]));
    };
    bool any = false;
    while (digit(pos_)) ++pos_, any = true;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (digit(pos_)) ++pos_, any = true;
    }
    if (!any) {
      pos_ = start;
      error("number", "malformed number");
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      size_t k = pos_ + 1;
      if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
      if (digit(k)) {
        pos_ = k;
        while (digit(pos_)) ++pos_;
      }
    }
    double v = std::strtod(s_.substr(start, pos_ - start).c_str(), nullptr);
    if (pos_ < s_.size() &&
        (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '('))
      error("operator", "implicit multiplication is not supported");
    return make_num(v);
  }

  NodePtr parse_ident() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string id = s_.substr(start, pos_ - start);
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      for (const auto& f : kFuncs) {
        if (id == f.name) {
          ++pos_;
          NodePtr arg = parse_expr();
          if (!accept(')')) error("\")\"", "unbalanced parenthesis");
          return make_unary(f.op, arg);
        }
      }
      pos_ = start;
      error("known function", "unknown function '" + id + "'");
    }
    if (id == "pi") return make_named(NodeKind::kConstant, id, std::numbers::pi);
    if (id == "e") return make_named(NodeKind::kConstant, id, std::numbers::e);
    if (id == "t" || id == "x") return make_named(NodeKind::kVariable, id);
    if (allowed_ && !allowed_->count(id)) {
      pos_ = start;
      error("declared identifier", "unknown identifier '" + id + "'");
    }
    return make_named(NodeKind::kParameter, id);
  }

  const std::string& s_;
  const std::set<std::string>* allowed_;
  size_t pos_ = 0;
};

std::string format_number(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::kNumber:
      return n.value < 0 || std::signbit(n.value) ? 3 : 5;
    case NodeKind::kUnary:
      return n.uop == UnaryOp::kNeg ? 3 : 5;
    case NodeKind::kBinary:
      switch (n.bop) {
        case BinaryOp::kAdd:
        case BinaryOp::kSub:
          return 1;
        case BinaryOp::kMul:
        case BinaryOp::kDiv:
          return 2;
        case BinaryOp::kPow:
          return 4;
      }
      return 5;
    default:
      return 5;
  }
}

void print_rec(const NodePtr& n, int min_prec, std::string& out) {
  bool paren = precedence(*n) < min_prec;
  if (paren) out += '(';
  switch (n->kind) {
    case NodeKind::kNumber:
      out += format_number(n->value);
      break;
    case NodeKind::kConstant:
    case NodeKind::kVariable:
    case NodeKind::kParameter:
      out += n->name;
      break;
    case NodeKind::kUnary:
      if (n->uop == UnaryOp::kNeg) {
        out += '-';
        print_rec(n->a, 3, out);
      } else {
        out += unary_name(n->uop);
        out += '(';
        print_rec(n->a, 0, out);
        out += ')';
      }
      break;
    case NodeKind::kBinary: {
      static const char ops[] = {'+', '-', '*', '/', '^'};
      int p = precedence(*n);
      int lmin = n->bop == BinaryOp::kPow ? 5 : p;
      int rmin = n->bop == BinaryOp::kPow ? 3 : p + 1;
      print_rec(n->a, lmin, out);
      out += ops[static_cast<int>(n->bop)];
      print_rec(n->b, rmin, out);
      break;
    }
  }
  if (paren) out += ')';
}

bool equal_rec(const NodePtr& a, const NodePtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::kNumber:
      return a->value == b->value;
    case NodeKind::kConstant:
    case NodeKind::kVariable:
    case NodeKind::kParameter:
      return a->name == b->name;
    case NodeKind::kUnary:
      return a->uop == b->uop && equal_rec(a->a, b->a);
    case NodeKind::kBinary:
      return a->bop == b->bop && equal_rec(a->a, b->a) && equal_rec(a->b, b->b);
  }
  return false;
}

bool depends_rec(const NodePtr& n, char var) {
  switch (n->kind) {
    case NodeKind::kVariable:
      return n->name[0] == var;
    case NodeKind::kUnary:
      return depends_rec(n->a, var);
    case NodeKind::kBinary:
      return depends_rec(n->a, var) || depends_rec(n->b, var);
    default:
      return false;
  }
}

bool contains_abs(const NodePtr& n) {
  if (n->kind == NodeKind::kUnary)
    return n->uop == UnaryOp::kAbs || contains_abs(n->a);
  if (n->kind == NodeKind::kBinary) return contains_abs(n->a) || contains_abs(n->b);
  return false;
}

void collect_params(const NodePtr& n, std::set<std::string>& out) {
  if (n->kind == NodeKind::kParameter) out.insert(n->name);
  if (n->a) collect_params(n->a, out);
  if (n->b) collect_params(n->b, out);
}

// Constant-folding constructors used by differentiate.
bool is_num(const NodePtr& n, double v) { return n->kind == NodeKind::kNumber && n->value == v; }
bool is_num(const NodePtr& n) { return n->kind == NodeKind::kNumber; }

NodePtr f_neg(NodePtr a) {
  if (is_num(a)) return make_num(-a->value);
  return make_unary(UnaryOp::kNeg, a);
}
NodePtr f_add(NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b)) return make_num(a->value + b->value);
  if (is_num(a, 0.0)) return b;
  if (is_num(b, 0.0)) return a;
  return make_binary(BinaryOp::kAdd, a, b);
}
NodePtr f_sub(NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b)) return make_num(a->value - b->value);
  if (is_num(b, 0.0)) return a;
  if (is_num(a, 0.0)) return f_neg(b);
  return make_binary(BinaryOp::kSub, a, b);
}
NodePtr f_mul(NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b)) return make_num(a->value * b->value);
  if (is_num(a, 0.0) || is_num(b, 0.0)) return make_num(0.0);
  if (is_num(a, 1.0)) return b;
  if (is_num(b, 1.0)) return a;
  return make_binary(BinaryOp::kMul, a, b);
}
NodePtr f_div(NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b) && b->value != 0.0) return make_num(a->value / b->value);
  if (is_num(a, 0.0)) return make_num(0.0);
  if (is_num(b, 1.0)) return a;
  return make_binary(BinaryOp::kDiv, a, b);
}
NodePtr f_pow(NodePtr a, NodePtr b) {
  if (is_num(b, 1.0)) return a;
  if (is_num(b, 0.0)) return make_num(1.0);
  if (is_num(a) && is_num(b)) {
    double v = std::pow(a->value, b->value);
    if (std::isfinite(v)) return make_num(v);
  }
  return make_binary(BinaryOp::kPow, a, b);
}
NodePtr f_un(UnaryOp op, NodePtr a) { return make_unary(op, a); }

NodePtr diff_rec(const NodePtr& n, char var) {
  switch (n->kind) {
    case NodeKind::kNumber:
    case NodeKind::kConstant:
    case NodeKind::kParameter:
      return make_num(0.0);
    case NodeKind::kVariable:
      return make_num(n->name[0] == var ? 1.0 : 0.0);
    case NodeKind::kUnary: {
      NodePtr u = n->a;
      NodePtr du = diff_rec(u, var);
      switch (n->uop) {
        case UnaryOp::kNeg:
          return f_neg(du);
        case UnaryOp::kSin:
          return f_mul(du, f_un(UnaryOp::kCos, u));
        case UnaryOp::kCos:
          return f_neg(f_mul(du, f_un(UnaryOp::kSin, u)));
        case UnaryOp::kTan:
          return f_div(du, f_pow(f_un(UnaryOp::kCos, u), make_num(2.0)));
        case UnaryOp::kExp:
          return f_mul(du, f_un(UnaryOp::kExp, u));
        case UnaryOp::kLn:
          return f_div(du, u);
        case UnaryOp::kTanh:
          return f_mul(du, f_sub(make_num(1.0),
                                 f_pow(f_un(UnaryOp::kTanh, u), make_num(2.0))));
        case UnaryOp::kSqrt:
          return f_div(du, f_mul(make_num(2.0), f_un(UnaryOp::kSqrt, u)));
        case UnaryOp::kAbs:
          throw DiffError("abs is not differentiable");
      }
      break;
    }
    case NodeKind::kBinary: {
      const NodePtr& a = n->a;
      const NodePtr& b = n->b;
      NodePtr da = diff_rec(a, var);
      NodePtr db = diff_rec(b, var);
      switch (n->bop) {
        case BinaryOp::kAdd:
          return f_add(da, db);
        case BinaryOp::kSub:
          return f_sub(da, db);
        case BinaryOp::kMul:
          return f_add(f_mul(da, b), f_mul(a, db));
        case BinaryOp::kDiv:
          return f_div(f_sub(f_mul(da, b), f_mul(a, db)), f_pow(b, make_num(2.0)));
        case BinaryOp::kPow:
          if (!depends_rec(b, var)) {
            if (is_num(da, 0.0)) return make_num(0.0);
            return f_mul(f_mul(b, f_pow(a, f_sub(b, make_num(1.0)))), da);
          }
          return f_mul(make_binary(BinaryOp::kPow, a, b),
                       f_add(f_mul(db, f_un(UnaryOp::kLn, a)), f_div(f_mul(b, da), a)));
      }
      break;
    }
  }
  return make_num(0.0);
}

}  // namespace

Expression Expression::parse(const std::string& source) {
  Parser p(source, nullptr);
  return Expression(p.run());
}

Expression Expression::parse(const std::string& source, const std::set<std::string>& params) {
  Parser p(source, &params);
  return Expression(p.run());
}

Expression Expression::number(double v) { return Expression(make_num(v)); }

std::string print_node(const NodePtr& n) {
  std::string out;
  print_rec(n, 0, out);
  return out;
}

std::string Expression::print() const { return print_node(root_); }

double Expression::eval(double t, double x, const ParamMap& params) const {
  return CompiledExpr(*this, params)(t, x);
}

Expression Expression::differentiate(char var) const {
  if (var != 't' && var != 'x') throw DiffError("can only differentiate in t or x");
  if (contains_abs(root_)) throw DiffError("non-differentiable primitive abs present");
  return Expression(diff_rec(root_, var));
}

bool Expression::structurally_equal(const Expression& other) const {
  return equal_rec(root_, other.root_);
}

bool Expression::depends_on(char var) const { return depends_rec(root_, var); }

std::set<std::string> Expression::parameters() const {
  std::set<std::string> out;
  collect_params(root_, out);
  return out;
}

CompiledExpr::CompiledExpr(const Expression& e, const ParamMap& params) : keep_(e.root()) {
  emit(e.root(), params);
  size_t depth = 0;
  for (const auto& in : prog_) {
    if (in.code <= Code::kX) {
      ++depth;
    } else if (in.code >= Code::kAdd) {
      --depth;
    }
    max_stack_ = std::max(max_stack_, depth);
  }
}

void CompiledExpr::emit(const NodePtr& n, const ParamMap& params) {
  switch (n->kind) {
    case NodeKind::kNumber:
    case NodeKind::kConstant:
      prog_.push_back({Code::kConst, n->value, n.get()});
      return;
    case NodeKind::kVariable:
      prog_.push_back({n->name == "t" ? Code::kT : Code::kX, 0.0, n.get()});
      return;
    case NodeKind::kParameter: {
      auto it = params.find(n->name);
      if (it == params.end())
        throw EvalError(n->name, "parameter '" + n->name + "' is not bound");
      prog_.push_back({Code::kConst, it->second, n.get()});
      return;
    }
    case NodeKind::kUnary:
      emit(n->a, params);
      prog_.push_back({static_cast<Code>(static_cast<int>(Code::kNeg) + static_cast<int>(n->uop)),
                       0.0, n.get()});
      return;
    case NodeKind::kBinary:
      emit(n->a, params);
      emit(n->b, params);
      prog_.push_back({static_cast<Code>(static_cast<int>(Code::kAdd) + static_cast<int>(n->bop)),
                       0.0, n.get()});
      return;
  }
}

void CompiledExpr::fail(const Instr& in, const char* what) const {
  NodePtr holder(keep_, in.node);
  std::string sub = print_node(holder);
  throw EvalError(sub, std::string(what) + " in '" + sub + "'");
}

double CompiledExpr::operator()(double t, double x) const {
  double local[32] = {};
  std::vector<double> heap;
  double* st = local;
  if (max_stack_ > 32) {
    heap.resize(max_stack_);
    st = heap.data();
  }
  size_t sp = 0;
  for (const Instr& in : prog_) {
    double r;
    switch (in.code) {
      case Code::kConst:
        st[sp++] = in.value;
        continue;
      case Code::kT:
        st[sp++] = t;
        continue;
      case Code::kX:
        st[sp++] = x;
        continue;
      case Code::kNeg:
        st[sp - 1] = -st[sp - 1];
        continue;
      case Code::kSin:
        r = std::sin(st[sp - 1]);
        break;
      case Code::kCos:
        r = std::cos(st[sp - 1]);
        break;
      case Code::kTan:
        r = std::tan(st[sp - 1]);
        break;
      case Code::kExp:
        r = std::exp(st[sp - 1]);
        break;
      case Code::kLn:
        if (!(st[sp - 1] > 0.0)) fail(in, "logarithm of non-positive value");
        r = std::log(st[sp - 1]);
        break;
      case Code::kTanh:
        r = std::tanh(st[sp - 1]);
        break;
      case Code::kAbs:
        r = std::fabs(st[sp - 1]);
        break;
      case Code::kSqrt:
        if (st[sp - 1] < 0.0) fail(in, "square root of negative value");
        r = std::sqrt(st[sp - 1]);
        break;
      case Code::kAdd:
        --sp;
        r = st[sp - 1] + st[sp];
        break;
      case Code::kSub:
        --sp;
        r = st[sp - 1] - st[sp];
        break;
      case Code::kMul:
        --sp;
        r = st[sp - 1] * st[sp];
        break;
      case Code::kDiv:
        --sp;
        if (st[sp] == 0.0) fail(in, "division by zero");
        r = st[sp - 1] / st[sp];
        break;
      case Code::kPow:
        --sp;
        r = std::pow(st[sp - 1], st[sp]);
        break;
    }
    if (!std::isfinite(r)) fail(in, "non-finite result");
    st[sp - 1] = r;
  }
  return st[0];
}

}  // namespace circdyn
