#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "finslerlab/jets.hpp"

namespace finslerlab {

enum class NodeKind { Constant, Variable, Neg, Sqrt, Sin, Cos, Exp, Add, Sub, Mul, Div, Pow };

struct Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;       // Constant
  std::string name;         // Variable
  int var_index = -1;       // Variable: position in the declared list
  Rational exponent;        // Pow
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
  int position = 0;         // 1-based offset of the node in the source text
};

using NodePtr = std::shared_ptr<const Node>;

// Immutable parsed scalar expression over a declared variable list.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, std::vector<std::string> vars);

  static Expr parse(const std::string& text, const std::vector<std::string>& declared_vars);
  static Expr constant(double v, std::vector<std::string> vars);
  static Expr variable(const std::string& name, std::vector<std::string> vars);

  const NodePtr& root() const { return root_; }
  const std::vector<std::string>& vars() const { return vars_; }
  int var_index(const std::string& name) const;
  bool depends_on(const std::string& name) const;

  double eval(std::span<const double> values) const;
  TaylorValue eval_taylor(std::span<const TaylorValue> values) const;
  TaylorValue eval_taylor(const std::map<std::string, TaylorValue>& bindings) const;

  // Fully parenthesized text that reparses to the same tree.
  std::string to_string() const;

  // Replace variables by expressions over new_vars. Variables without a
  // replacement must also appear in new_vars.
  Expr substitute(const std::map<std::string, Expr>& replacements, const std::vector<std::string>& new_vars) const;

 private:
  NodePtr root_;
  std::vector<std::string> vars_;
};

bool structurally_equal(const NodePtr& a, const NodePtr& b);
inline bool structurally_equal(const Expr& a, const Expr& b) { return structurally_equal(a.root(), b.root()); }

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);

struct HomogeneityReport {
  double max_residual = 0.0;
  bool pass = false;
};

// Residual max |f(t, lambda s) - lambda^degree f(t, s)| / max(1, |f(t, s)|)
// over the sample points (each a full value vector in e.vars() order).
HomogeneityReport check_homogeneity(const Expr& e, const std::vector<std::string>& s_vars, int degree,
                                    const std::vector<std::vector<double>>& sample_points, double lambda,
                                    double tolerance = 1e-10);

}  // namespace finslerlab
