#include "gz/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <set>
#include <sstream>

namespace gz {

namespace {

struct FnInfo {
  const char* name;
  Fn fn;
  int arity;
};

constexpr FnInfo kFunctions[] = {
    {"sin", Fn::Sin, 1},   {"cos", Fn::Cos, 1},   {"tan", Fn::Tan, 1},
    {"exp", Fn::Exp, 1},   {"log", Fn::Log, 1},   {"sqrt", Fn::Sqrt, 1},
    {"sinh", Fn::Sinh, 1}, {"cosh", Fn::Cosh, 1}, {"tanh", Fn::Tanh, 1},
    {"pow", Fn::Pow, 2},
};

const char* fn_name(Fn f) {
  for (const auto& info : kFunctions)
    if (info.fn == f) return info.name;
  return "?";
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

NodePtr make_node(Node n) { return std::make_shared<const Node>(std::move(n)); }

NodePtr make_const(double v) {
  Node n;
  n.kind = Node::Kind::Const;
  n.value = v;
  return make_node(std::move(n));
}

bool is_constant_tree(const NodePtr& n) {
  if (n->kind == Node::Kind::Var) return false;
  for (const auto& k : n->kids)
    if (!is_constant_tree(k)) return false;
  return true;
}

double fold_value(const NodePtr& n);

/// Marks an exponent as an integer power when it is a constant integral value.
void classify_exponent(Node& pow_node) {
  const NodePtr& ex = pow_node.kids[1];
  if (!is_constant_tree(ex)) return;
  double v = 0.0;
  try {
    v = fold_value(ex);
  } catch (const DomainError&) {
    return;
  }
  if (std::isfinite(v) && v == std::round(v) && std::fabs(v) <= 1024.0) {
    pow_node.int_exponent = true;
    pow_node.exponent = static_cast<int>(v);
  }
}

double fold_value(const NodePtr& n) {
  // Constant trees are evaluated as order-0 jets over a dummy coordinate.
  Expression e(n, {"_"}, "");
  const double zero = 0.0;
  return eval_jet(e, std::span<const double>(&zero, 1), 0).value();
}

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars,
         const std::map<std::string, double>& params)
      : src_(src), vars_(vars), params_(params) {}

  NodePtr run() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expression");
    NodePtr e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("operator or end of input");
    return e;
  }

 private:
  std::string_view src_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& params_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& expected) {
    std::ostringstream os;
    os << "syntax error at position " << pos_ << ": expected " << expected;
    if (pos_ < src_.size())
      os << ", found '" << src_[pos_] << "'";
    else
      os << ", found end of input";
    throw SyntaxError(pos_, expected, os.str());
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr binary(Node::Kind k, NodePtr a, NodePtr b) {
    Node n;
    n.kind = k;
    n.kids = {std::move(a), std::move(b)};
    if (k == Node::Kind::Pow) classify_exponent(n);
    return make_node(std::move(n));
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = binary(Node::Kind::Add, lhs, term());
      else if (accept('-'))
        lhs = binary(Node::Kind::Sub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*'))
        lhs = binary(Node::Kind::Mul, lhs, factor());
      else if (accept('/'))
        lhs = binary(Node::Kind::Div, lhs, factor());
      else
        return lhs;
    }
  }

  // A leading minus applies to the whole power, so -x^2 is -(x^2).
  NodePtr factor() {
    if (accept('-')) {
      NodePtr inner = factor();
      if (inner->kind == Node::Kind::Const) return make_const(-inner->value);
      Node n;
      n.kind = Node::Kind::Neg;
      n.kids = {inner};
      return make_node(std::move(n));
    }
    NodePtr base = atom();
    if (accept('^')) return binary(Node::Kind::Pow, base, factor());
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("number, identifier or '('");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) fail("')'");
      return e;
    }
    fail("number, identifier or '('");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t nd = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      nd += digits();
    }
    if (nd == 0) {
      pos_ = start;
      fail("digits");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // 'e' belongs to something else
    }
    const std::string text(src_.substr(start, pos_ - start));
    return make_const(std::strtod(text.c_str(), nullptr));
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      const FnInfo* info = nullptr;
      for (const auto& f : kFunctions)
        if (name == f.name) info = &f;
      if (!info) throw UnknownIdentifier(name);
      ++pos_;
      std::vector<NodePtr> args;
      args.push_back(expr());
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) fail("',' or ')'");
      if (static_cast<int>(args.size()) != info->arity)
        throw ArityError(name, static_cast<int>(args.size()), info->arity);
      Node n;
      n.kind = Node::Kind::Call;
      n.fn = info->fn;
      n.kids = std::move(args);
      if (n.fn == Fn::Pow) classify_exponent(n);
      return make_node(std::move(n));
    }
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) {
        Node n;
        n.kind = Node::Kind::Var;
        n.var = static_cast<int>(i);
        return make_node(std::move(n));
      }
    if (auto it = params_.find(name); it != params_.end()) return make_const(it->second);
    if (name == "pi") return make_const(std::numbers::pi);
    if (name == "e") return make_const(std::numbers::e);
    throw UnknownIdentifier(name);
  }
};

struct Evaluator {
  std::span<const double> x;
  int order;
  const std::vector<std::string>& vars;

  [[noreturn]] void domain(const NodePtr& n, const std::string& what) const {
    std::ostringstream os;
    os << "domain error: " << what << " in '" << node_to_string(n, vars) << "' at (";
    for (std::size_t i = 0; i < x.size(); ++i)
      os << (i ? ", " : "") << vars[i] << "=" << format_double(x[i]);
    os << ")";
    throw DomainError(os.str());
  }

  Jet checked(const NodePtr& n, Jet j) const {
    if (!j.all_finite()) domain(n, "non-finite result");
    return j;
  }

  Jet power(const NodePtr& n, const Jet& base, const NodePtr& ex_node) const {
    if (n->int_exponent) {
      if (n->exponent < 0 && base.value() == 0.0) domain(n, "zero to a negative power");
      return checked(n, ipow(base, n->exponent));
    }
    if (base.value() <= 0.0) domain(n, "non-integer power of a non-positive base");
    const Jet ex = eval(ex_node);
    return checked(n, gz::exp(ex * gz::log(base)));
  }

  Jet eval(const NodePtr& n) const {
    const int d = static_cast<int>(x.size());
    switch (n->kind) {
      case Node::Kind::Const:
        return Jet::constant(d, order, n->value);
      case Node::Kind::Var:
        return Jet::variable(d, order, n->var, x[n->var]);
      case Node::Kind::Neg:
        return -eval(n->kids[0]);
      case Node::Kind::Add:
        return eval(n->kids[0]) + eval(n->kids[1]);
      case Node::Kind::Sub:
        return eval(n->kids[0]) - eval(n->kids[1]);
      case Node::Kind::Mul:
        return checked(n, eval(n->kids[0]) * eval(n->kids[1]));
      case Node::Kind::Div: {
        const Jet den = eval(n->kids[1]);
        if (den.value() == 0.0) domain(n, "division by zero");
        return checked(n, eval(n->kids[0]) / den);
      }
      case Node::Kind::Pow:
        return power(n, eval(n->kids[0]), n->kids[1]);
      case Node::Kind::Call:
        break;
    }
    const Jet u = eval(n->kids[0]);
    switch (n->fn) {
      case Fn::Sin:
        return gz::sin(u);
      case Fn::Cos:
        return gz::cos(u);
      case Fn::Tan:
        if (std::cos(u.value()) == 0.0) domain(n, "tan at a pole");
        return checked(n, gz::tan(u));
      case Fn::Exp:
        return checked(n, gz::exp(u));
      case Fn::Log:
        if (u.value() <= 0.0) domain(n, "log of a non-positive value");
        return checked(n, gz::log(u));
      case Fn::Sqrt:
        if (u.value() < 0.0) domain(n, "sqrt of a negative value");
        if (u.value() == 0.0 && order > 0) domain(n, "sqrt is not differentiable at 0");
        return checked(n, gz::sqrt(u));
      case Fn::Sinh:
        return checked(n, gz::sinh(u));
      case Fn::Cosh:
        return checked(n, gz::cosh(u));
      case Fn::Tanh:
        return gz::tanh(u);
      case Fn::Pow:
        return power(n, u, n->kids[1]);
    }
    domain(n, "unknown function");
  }
};

NodePtr substitute_node(const NodePtr& n, const std::vector<NodePtr>& repl) {
  if (n->kind == Node::Kind::Var) return repl[n->var];
  if (n->kids.empty()) return n;
  Node copy = *n;
  for (auto& k : copy.kids) k = substitute_node(k, repl);
  return make_node(std::move(copy));
}

}  // namespace

Expression::Expression(NodePtr root, std::vector<std::string> variables, std::string source)
    : root_(std::move(root)),
      vars_(std::make_shared<const std::vector<std::string>>(std::move(variables))),
      source_(std::move(source)) {}

Expression Expression::constant(double v, std::vector<std::string> variables) {
  NodePtr c = make_const(v);
  std::string src = node_to_string(c, variables);
  return Expression(c, std::move(variables), src);
}

bool Expression::is_zero_constant() const {
  return root_ && root_->kind == Node::Kind::Const && root_->value == 0.0;
}

std::string Expression::to_string() const { return node_to_string(root_, *vars_); }

Expression Expression::substitute(const std::vector<Expression>& replacement) const {
  std::vector<NodePtr> repl;
  for (const auto& r : replacement) repl.push_back(r.root());
  const auto& newvars = replacement.empty() ? *vars_ : replacement.front().variables();
  NodePtr root = substitute_node(root_, repl);
  std::string src = node_to_string(root, newvars);
  return Expression(root, newvars, src);
}

std::string node_to_string(const NodePtr& n, const std::vector<std::string>& vars) {
  auto bin = [&](const char* op) {
    return "(" + node_to_string(n->kids[0], vars) + " " + op + " " +
           node_to_string(n->kids[1], vars) + ")";
  };
  switch (n->kind) {
    case Node::Kind::Const:
      return std::signbit(n->value) ? "(" + format_double(n->value) + ")"
                                    : format_double(n->value);
    case Node::Kind::Var:
      return vars[n->var];
    case Node::Kind::Neg:
      return "(-" + node_to_string(n->kids[0], vars) + ")";
    case Node::Kind::Add:
      return bin("+");
    case Node::Kind::Sub:
      return bin("-");
    case Node::Kind::Mul:
      return bin("*");
    case Node::Kind::Div:
      return bin("/");
    case Node::Kind::Pow:
      return "(" + node_to_string(n->kids[0], vars) + "^" + node_to_string(n->kids[1], vars) +
             ")";
    case Node::Kind::Call: {
      std::string s = std::string(fn_name(n->fn)) + "(";
      for (std::size_t i = 0; i < n->kids.size(); ++i)
        s += (i ? ", " : "") + node_to_string(n->kids[i], vars);
      return s + ")";
    }
  }
  return "?";
}

bool structurally_equal(const NodePtr& a, const NodePtr& b) {
  if (a->kind != b->kind || a->kids.size() != b->kids.size()) return false;
  switch (a->kind) {
    case Node::Kind::Const:
      if (!(a->value == b->value) || std::signbit(a->value) != std::signbit(b->value))
        return false;
      break;
    case Node::Kind::Var:
      if (a->var != b->var) return false;
      break;
    case Node::Kind::Call:
      if (a->fn != b->fn) return false;
      break;
    default:
      break;
  }
  if (a->int_exponent != b->int_exponent || a->exponent != b->exponent) return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!structurally_equal(a->kids[i], b->kids[i])) return false;
  return true;
}

Expression parse(std::string_view source, const std::vector<std::string>& variables,
                 const std::map<std::string, double>& params) {
  if (variables.empty()) throw SchemaError("expression needs at least one coordinate");
  std::set<std::string> seen;
  for (const auto& v : variables)
    if (!seen.insert(v).second) throw SchemaError("duplicate coordinate name '" + v + "'");
  if (static_cast<int>(variables.size()) > kMaxDim)
    throw SchemaError("at most " + std::to_string(kMaxDim) + " coordinates are supported");
  Parser p(source, variables, params);
  NodePtr root = p.run();
  return Expression(root, variables, std::string(source));
}

Jet eval_jet(const Expression& e, std::span<const double> point, int order) {
  if (static_cast<int>(point.size()) != e.dim())
    throw std::invalid_argument("point dimension does not match the expression");
  if (order < 0 || order > kMaxOrder) throw std::invalid_argument("jet order must be 0..3");
  Evaluator ev{point, order, e.variables()};
  return ev.eval(e.root());
}

double eval_value(const Expression& e, std::span<const double> point) {
  return eval_jet(e, point, 0).value();
}

Expression linear_combination(const std::vector<double>& coeffs,
                              const std::vector<Expression>& terms,
                              const std::vector<std::string>& variables) {
  NodePtr acc;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (coeffs[i] == 0.0 || terms[i].is_zero_constant()) continue;
    NodePtr t = terms[i].root();
    if (coeffs[i] != 1.0) {
      Node m;
      m.kind = Node::Kind::Mul;
      m.kids = {make_const(coeffs[i]), t};
      t = make_node(std::move(m));
    }
    if (!acc) {
      acc = t;
    } else {
      Node s;
      s.kind = Node::Kind::Add;
      s.kids = {acc, t};
      acc = make_node(std::move(s));
    }
  }
  if (!acc) acc = make_const(0.0);
  std::string src = node_to_string(acc, variables);
  return Expression(acc, variables, src);
}

Expression random_polynomial(const std::vector<std::string>& variables, int degree,
                             std::mt19937_64& rng) {
  const int d = static_cast<int>(variables.size());
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::string text;
  std::vector<int> e(d, 0);
  // Enumerate exponent vectors with total degree ≤ degree (odometer order).
  for (;;) {
    int total = 0;
    for (int v : e) total += v;
    if (total <= degree) {
      std::string term = format_double(coef(rng));
      for (int k = 0; k < d; ++k)
        if (e[k] > 0) term += "*" + variables[k] + "^" + std::to_string(e[k]);
      text += (text.empty() ? "" : " + ") + std::string("(") + term + ")";
    }
    int k = 0;
    while (k < d && ++e[k] > degree) e[k++] = 0;
    if (k == d) break;
  }
  return parse(text, variables);
}

}  // namespace gz
