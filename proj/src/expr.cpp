#include "finslerlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "finslerlab/errors.hpp"

namespace finslerlab {

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string text;
  int pos;  // 1-based
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    const int pos = static_cast<int>(i) + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      std::string text = s.substr(i, j - i);
      if (text == ".") throw SyntaxError(pos, "malformed number");
      out.push_back({Tok::Number, text, pos});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), pos});
      i = j;
      continue;
    }
    Tok k;
    switch (c) {
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '/': k = Tok::Slash; break;
      case '^': k = Tok::Caret; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      default: throw SyntaxError(pos, std::string("unexpected character '") + c + "'");
    }
    out.push_back({k, std::string(1, c), pos});
    ++i;
  }
  out.push_back({Tok::End, "", static_cast<int>(s.size()) + 1});
  return out;
}

NodePtr make_node(NodeKind kind, int pos, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->position = pos;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_constant(double v, int pos) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = v;
  n->position = pos;
  return n;
}

// Exact rational value of a plain decimal literal such as "0.25" or "3".
Rational decimal_to_rational(const std::string& text, int pos) {
  if (text.find_first_of("eE") != std::string::npos) throw SyntaxError(pos, "exponent must be a plain rational literal");
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool after_dot = false;
  int digits = 0;
  for (char c : text) {
    if (c == '.') {
      after_dot = true;
      continue;
    }
    if (++digits > 15) throw SyntaxError(pos, "exponent literal has too many digits");
    num = num * 10 + (c - '0');
    if (after_dot) den *= 10;
  }
  return Rational(num, den);
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars) : toks_(tokenize(text)), vars_(vars) {}

  NodePtr parse() {
    NodePtr e = expr();
    if (peek().kind != Tok::End) {
      if (peek().kind == Tok::RParen) throw SyntaxError(peek().pos, "unbalanced ')'");
      throw SyntaxError(peek().pos, "unexpected token '" + peek().text + "'");
    }
    return e;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& take() { return toks_[i_++]; }

  void expect(Tok k, const char* what) {
    if (peek().kind != k) {
      if (peek().kind == Tok::End) throw SyntaxError(peek().pos, std::string("expected ") + what + " before end of input");
      throw SyntaxError(peek().pos, std::string("expected ") + what);
    }
    ++i_;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const Token& op = take();
      NodePtr rhs = term();
      lhs = make_node(op.kind == Tok::Plus ? NodeKind::Add : NodeKind::Sub, op.pos, lhs, rhs);
    }
    return lhs;
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const Token& op = take();
      NodePtr rhs = unary();
      lhs = make_node(op.kind == Tok::Star ? NodeKind::Mul : NodeKind::Div, op.pos, lhs, rhs);
    }
    return lhs;
  }

  NodePtr unary() {
    if (peek().kind == Tok::Minus) {
      const Token& op = take();
      return make_node(NodeKind::Neg, op.pos, unary());
    }
    if (peek().kind == Tok::Plus) {
      take();
      return unary();
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    while (peek().kind == Tok::Caret) {
      const Token& op = take();
      auto n = std::make_shared<Node>();
      n->kind = NodeKind::Pow;
      n->position = op.pos;
      n->lhs = base;
      n->exponent = exponent();
      base = n;
    }
    return base;
  }

  Rational exponent() {
    bool paren = false;
    if (peek().kind == Tok::LParen) {
      paren = true;
      take();
    }
    bool negative = false;
    if (peek().kind == Tok::Minus || peek().kind == Tok::Plus) negative = take().kind == Tok::Minus;
    if (peek().kind != Tok::Number) {
      if (peek().kind == Tok::End) throw SyntaxError(peek().pos, "expected exponent before end of input");
      throw SyntaxError(peek().pos, "exponent must be a rational literal");
    }
    const Token& num = take();
    Rational r = decimal_to_rational(num.text, num.pos);
    if (paren && peek().kind == Tok::Slash) {
      take();
      if (peek().kind != Tok::Number) throw SyntaxError(peek().pos, "expected denominator");
      const Token& den = take();
      Rational d = decimal_to_rational(den.text, den.pos);
      if (d.num == 0) throw SyntaxError(den.pos, "zero denominator in exponent");
      r = Rational(r.num * d.den, r.den * d.num);
    }
    if (paren) expect(Tok::RParen, "')'");
    return negative ? Rational(-r.num, r.den) : r;
  }

  NodePtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        take();
        char* end = nullptr;
        double v = std::strtod(t.text.c_str(), &end);
        return make_constant(v, t.pos);
      }
      case Tok::Ident: {
        take();
        static const std::map<std::string, NodeKind> funcs{
            {"sqrt", NodeKind::Sqrt}, {"sin", NodeKind::Sin}, {"cos", NodeKind::Cos}, {"exp", NodeKind::Exp}};
        auto f = funcs.find(t.text);
        if (f != funcs.end()) {
          if (peek().kind != Tok::LParen) throw SyntaxError(peek().pos, "expected '(' after " + t.text);
          take();
          NodePtr arg = expr();
          expect(Tok::RParen, "')'");
          return make_node(f->second, t.pos, arg);
        }
        if (t.text == "pi") return make_constant(std::numbers::pi, t.pos);
        for (std::size_t k = 0; k < vars_.size(); ++k) {
          if (vars_[k] == t.text) {
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::Variable;
            n->name = t.text;
            n->var_index = static_cast<int>(k);
            n->position = t.pos;
            return n;
          }
        }
        throw Error(ErrorKind::UnknownVariable,
                    "'" + t.text + "' at position " + std::to_string(t.pos) + " is not a declared variable");
      }
      case Tok::LParen: {
        take();
        NodePtr e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::End: throw SyntaxError(t.pos, "unexpected end of input");
      default: throw SyntaxError(t.pos, "unexpected token '" + t.text + "'");
    }
  }

  std::vector<Token> toks_;
  const std::vector<std::string>& vars_;
  std::size_t i_ = 0;
};

[[noreturn]] void rethrow_at(const Error& e, const Node& n) {
  throw Error(e.kind(), std::string(e.what()) + " (expression position " + std::to_string(n.position) + ")");
}

double int_power(double a, std::int64_t n) {
  double result = 1.0;
  double base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

double eval_plain(const Node& n, std::span<const double> v) {
  switch (n.kind) {
    case NodeKind::Constant: return n.value;
    case NodeKind::Variable: return v[static_cast<std::size_t>(n.var_index)];
    case NodeKind::Neg: return -eval_plain(*n.lhs, v);
    case NodeKind::Add: return eval_plain(*n.lhs, v) + eval_plain(*n.rhs, v);
    case NodeKind::Sub: return eval_plain(*n.lhs, v) - eval_plain(*n.rhs, v);
    case NodeKind::Mul: return eval_plain(*n.lhs, v) * eval_plain(*n.rhs, v);
    case NodeKind::Div: {
      double a = eval_plain(*n.lhs, v);
      double b = eval_plain(*n.rhs, v);
      if (std::abs(b) < kEpsilonDiv) rethrow_at(Error(ErrorKind::DivisionNearZero, "divisor near zero"), n);
      return a / b;
    }
    case NodeKind::Sqrt: {
      double a = eval_plain(*n.lhs, v);
      if (!(a > 0.0)) rethrow_at(Error(ErrorKind::DomainError, "sqrt of non-positive value"), n);
      return std::sqrt(a);
    }
    case NodeKind::Sin: return std::sin(eval_plain(*n.lhs, v));
    case NodeKind::Cos: return std::cos(eval_plain(*n.lhs, v));
    case NodeKind::Exp: return std::exp(eval_plain(*n.lhs, v));
    case NodeKind::Pow: {
      double a = eval_plain(*n.lhs, v);
      const Rational& r = n.exponent;
      if (r.is_integer()) {
        if (r.num >= 0) return int_power(a, r.num);
        if (std::abs(a) < kEpsilonDiv) rethrow_at(Error(ErrorKind::DivisionNearZero, "negative power of near-zero value"), n);
        return 1.0 / int_power(a, -r.num);
      }
      if (!(a > 0.0)) rethrow_at(Error(ErrorKind::DomainError, "fractional power of non-positive value"), n);
      if (r.num == 1 && r.den == 2) return std::sqrt(a);
      return std::pow(a, r.to_double());
    }
  }
  return 0.0;
}

TaylorValue eval_series(const Node& n, std::span<const TaylorValue> v) {
  switch (n.kind) {
    case NodeKind::Constant: return TaylorValue::constant(v[0].basis(), n.value);
    case NodeKind::Variable: return v[static_cast<std::size_t>(n.var_index)];
    default: break;
  }
  TaylorValue a = eval_series(*n.lhs, v);
  try {
    switch (n.kind) {
      case NodeKind::Neg: return -a;
      case NodeKind::Sqrt: return sqrt(a);
      case NodeKind::Sin: return sin(a);
      case NodeKind::Cos: return cos(a);
      case NodeKind::Exp: return exp(a);
      case NodeKind::Pow: return pow(a, n.exponent);
      default: break;
    }
  } catch (const Error& e) {
    rethrow_at(e, n);
  }
  TaylorValue b = eval_series(*n.rhs, v);
  try {
    switch (n.kind) {
      case NodeKind::Add: return a + b;
      case NodeKind::Sub: return a - b;
      case NodeKind::Mul: return a * b;
      case NodeKind::Div: return a / b;
      default: break;
    }
  } catch (const Error& e) {
    rethrow_at(e, n);
  }
  throw Error(ErrorKind::EvaluationError, "unknown node kind");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_exponent(const Rational& r) {
  if (r.is_integer() && r.num >= 0) return std::to_string(r.num);
  if (r.is_integer()) return "(" + std::to_string(r.num) + ")";
  return "(" + std::to_string(r.num) + "/" + std::to_string(r.den) + ")";
}

void print(const Node& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Constant:
      if (n.value < 0) {
        out += "(-" + format_double(-n.value) + ")";
      } else {
        out += format_double(n.value);
      }
      return;
    case NodeKind::Variable: out += n.name; return;
    case NodeKind::Neg:
      out += "(-";
      print(*n.lhs, out);
      out += ")";
      return;
    case NodeKind::Sqrt:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp: {
      const char* name = n.kind == NodeKind::Sqrt ? "sqrt" : n.kind == NodeKind::Sin ? "sin" : n.kind == NodeKind::Cos ? "cos" : "exp";
      out += name;
      out += "(";
      print(*n.lhs, out);
      out += ")";
      return;
    }
    case NodeKind::Pow:
      out += "(";
      print(*n.lhs, out);
      out += " ^ " + format_exponent(n.exponent) + ")";
      return;
    default: {
      const char* op = n.kind == NodeKind::Add ? " + " : n.kind == NodeKind::Sub ? " - " : n.kind == NodeKind::Mul ? " * " : " / ";
      out += "(";
      print(*n.lhs, out);
      out += op;
      print(*n.rhs, out);
      out += ")";
      return;
    }
  }
}

bool node_depends(const Node& n, const std::string& name) {
  if (n.kind == NodeKind::Variable) return n.name == name;
  if (n.lhs && node_depends(*n.lhs, name)) return true;
  if (n.rhs && node_depends(*n.rhs, name)) return true;
  return false;
}

NodePtr substitute_node(const NodePtr& n, const std::map<std::string, Expr>& repl, const std::vector<std::string>& new_vars) {
  if (n->kind == NodeKind::Constant) return n;
  if (n->kind == NodeKind::Variable) {
    auto it = repl.find(n->name);
    if (it != repl.end()) return it->second.root();
    for (std::size_t k = 0; k < new_vars.size(); ++k) {
      if (new_vars[k] == n->name) {
        auto v = std::make_shared<Node>(*n);
        v->var_index = static_cast<int>(k);
        return v;
      }
    }
    throw Error(ErrorKind::UnknownVariable, "'" + n->name + "' has no replacement and is not in the new variable list");
  }
  auto copy = std::make_shared<Node>(*n);
  if (n->lhs) copy->lhs = substitute_node(n->lhs, repl, new_vars);
  if (n->rhs) copy->rhs = substitute_node(n->rhs, repl, new_vars);
  return copy;
}

}  // namespace

Expr::Expr(NodePtr root, std::vector<std::string> vars) : root_(std::move(root)), vars_(std::move(vars)) {}

Expr Expr::parse(const std::string& text, const std::vector<std::string>& declared_vars) {
  bool blank = true;
  for (char c : text) blank = blank && std::isspace(static_cast<unsigned char>(c));
  if (blank) throw SyntaxError(1, "empty expression");
  Parser p(text, declared_vars);
  return Expr(p.parse(), declared_vars);
}

Expr Expr::constant(double v, std::vector<std::string> vars) { return Expr(make_constant(v, 0), std::move(vars)); }

Expr Expr::variable(const std::string& name, std::vector<std::string> vars) {
  return parse(name, vars);
}

int Expr::var_index(const std::string& name) const {
  for (std::size_t k = 0; k < vars_.size(); ++k) {
    if (vars_[k] == name) return static_cast<int>(k);
  }
  return -1;
}

bool Expr::depends_on(const std::string& name) const { return root_ && node_depends(*root_, name); }

double Expr::eval(std::span<const double> values) const {
  if (values.size() != vars_.size()) throw Error(ErrorKind::EvaluationError, "value count does not match variable count");
  return eval_plain(*root_, values);
}

TaylorValue Expr::eval_taylor(std::span<const TaylorValue> values) const {
  if (values.size() != vars_.size() || values.empty()) {
    throw Error(ErrorKind::EvaluationError, "binding count does not match variable count");
  }
  for (const auto& v : values) {
    if (v.num_vars() != values[0].num_vars() || v.order() != values[0].order()) {
      throw Error(ErrorKind::OperandMismatch, "bindings differ in num_vars or order");
    }
  }
  return eval_series(*root_, values);
}

TaylorValue Expr::eval_taylor(const std::map<std::string, TaylorValue>& bindings) const {
  std::vector<TaylorValue> values;
  values.reserve(vars_.size());
  for (const auto& name : vars_) {
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      if (node_depends(*root_, name)) throw Error(ErrorKind::UnknownVariable, "no binding for '" + name + "'");
      if (bindings.empty()) throw Error(ErrorKind::EvaluationError, "no bindings");
      values.push_back(TaylorValue::zero(bindings.begin()->second.basis()));
      continue;
    }
    values.push_back(it->second);
  }
  return eval_taylor(values);
}

std::string Expr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

Expr Expr::substitute(const std::map<std::string, Expr>& replacements, const std::vector<std::string>& new_vars) const {
  for (const auto& [name, e] : replacements) {
    if (e.vars() != new_vars) throw Error(ErrorKind::OperandMismatch, "replacement for '" + name + "' uses a different variable list");
  }
  return Expr(substitute_node(root_, replacements, new_vars), new_vars);
}

bool structurally_equal(const NodePtr& a, const NodePtr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::Constant: return a->value == b->value;
    case NodeKind::Variable: return a->name == b->name;
    case NodeKind::Pow: return a->exponent == b->exponent && structurally_equal(a->lhs, b->lhs);
    default: return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
  }
}

namespace {

Expr combine(NodeKind kind, const Expr& a, const Expr& b) {
  if (a.vars() != b.vars()) throw Error(ErrorKind::OperandMismatch, "expressions use different variable lists");
  return Expr(make_node(kind, 0, a.root(), b.root()), a.vars());
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) { return combine(NodeKind::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return combine(NodeKind::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return combine(NodeKind::Mul, a, b); }

HomogeneityReport check_homogeneity(const Expr& e, const std::vector<std::string>& s_vars, int degree,
                                    const std::vector<std::vector<double>>& sample_points, double lambda,
                                    double tolerance) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::DomainError, "homogeneity check needs lambda > 0");
  std::vector<int> s_idx;
  for (const auto& name : s_vars) {
    int k = e.var_index(name);
    if (k < 0) throw Error(ErrorKind::UnknownVariable, "'" + name + "' is not a variable of the expression");
    s_idx.push_back(k);
  }
  HomogeneityReport rep;
  const double scale = std::pow(lambda, degree);
  for (const auto& pt : sample_points) {
    auto scaled = pt;
    for (int k : s_idx) scaled[static_cast<std::size_t>(k)] *= lambda;
    double f;
    double fl;
    try {
      f = e.eval(pt);
      fl = e.eval(scaled);
    } catch (const Error& err) {
      throw Error(ErrorKind::EvaluationError, std::string("homogeneity sample: ") + err.what());
    }
    double r = std::abs(fl - scale * f) / std::max(1.0, std::abs(f));
    rep.max_residual = std::max(rep.max_residual, r);
  }
  rep.pass = rep.max_residual <= tolerance;
  return rep;
}

}  // namespace finslerlab
