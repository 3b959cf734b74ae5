#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace finslerlab {

// Exact rational exponent for pow. Always stored normalized with den > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);

  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

// Graded enumeration of all multi-indices of total degree <= order. The
// ordering of a degree block does not depend on the order, so a basis of
// lower order is a prefix of a higher one. Index 0 is the constant term and
// index 1 + v is the linear monomial of variable v.
class MultiIndexBasis {
 public:
  static std::shared_ptr<const MultiIndexBasis> get(int num_vars, int order);

  MultiIndexBasis(int num_vars, int order);

  int num_vars() const { return num_vars_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(degree_.size()); }
  int degree(int idx) const { return degree_[static_cast<std::size_t>(idx)]; }
  std::span<const int> exponents(int idx) const {
    return {exps_.data() + static_cast<std::size_t>(idx) * static_cast<std::size_t>(num_vars_),
            static_cast<std::size_t>(num_vars_)};
  }
  // First index of degree d; degree_begin(order + 1) == size().
  int degree_begin(int d) const { return block_start_[static_cast<std::size_t>(d)]; }
  // Index of m + e_var, or -1 if that exceeds the order.
  int raise(int var, int idx) const {
    return raise_[static_cast<std::size_t>(idx) * static_cast<std::size_t>(num_vars_) +
                  static_cast<std::size_t>(var)];
  }
  // -1 when the total degree exceeds the order.
  int index_of(std::span<const int> multi_index) const;
  double factorial_product(int idx) const { return factorial_[static_cast<std::size_t>(idx)]; }

  // Product table: for left index i, the pairs (j, k) with e_i + e_j = e_k.
  std::span<const int> product_right(int i) const {
    return {prod_j_.data() + prod_start_[static_cast<std::size_t>(i)],
            static_cast<std::size_t>(prod_start_[static_cast<std::size_t>(i) + 1] -
                                     prod_start_[static_cast<std::size_t>(i)])};
  }
  std::span<const int> product_result(int i) const {
    return {prod_k_.data() + prod_start_[static_cast<std::size_t>(i)],
            static_cast<std::size_t>(prod_start_[static_cast<std::size_t>(i) + 1] -
                                     prod_start_[static_cast<std::size_t>(i)])};
  }

 private:
  int num_vars_;
  int order_;
  std::vector<int> degree_;
  std::vector<int> exps_;
  std::vector<int> block_start_;
  std::vector<int> raise_;
  std::vector<double> factorial_;
  std::vector<std::size_t> prod_start_;
  std::vector<int> prod_j_;
  std::vector<int> prod_k_;
};

using BasisPtr = std::shared_ptr<const MultiIndexBasis>;

inline constexpr double kEpsilonDiv = 1e-12;

// Truncated multivariate Taylor expansion at a base point. Coefficients follow
// the Taylor convention: the entry for multi-index m is d^m f / m!.
class TaylorValue {
 public:
  TaylorValue() = default;
  TaylorValue(BasisPtr basis, std::vector<double> coeffs);

  static TaylorValue constant(const BasisPtr& basis, double value);
  static TaylorValue zero(const BasisPtr& basis) { return constant(basis, 0.0); }

  const BasisPtr& basis() const { return basis_; }
  int num_vars() const { return basis_->num_vars(); }
  int order() const { return basis_->order(); }
  std::span<const double> coeffs() const { return c_; }
  std::span<double> coeffs_mut() { return c_; }

  double value() const { return c_[0]; }
  double coeff(int idx) const { return c_[static_cast<std::size_t>(idx)]; }
  double coeff(std::span<const int> multi_index) const;
  // True partial derivative at the base point.
  double partial_coeff(std::span<const int> multi_index) const;
  double d(int var) const;
  double d2(int v, int w) const;
  double d3(int u, int v, int w) const;

  // Series of the derivative with respect to var, truncated at order - 1.
  TaylorValue series_derivative(int var) const;
  // Drop terms above the given order.
  TaylorValue truncated(int order) const;
  // Keep only the constant term.
  TaylorValue constant_part() const { return constant(basis_, c_[0]); }

  TaylorValue& operator+=(const TaylorValue& o);
  TaylorValue& operator-=(const TaylorValue& o);
  TaylorValue& operator*=(double k);
  TaylorValue& operator+=(double k) {
    c_[0] += k;
    return *this;
  }

 private:
  BasisPtr basis_;
  std::vector<double> c_;
};

TaylorValue lift_variable(int var_index, double value, int num_vars, int order);
TaylorValue lift_variable(int var_index, double value, const BasisPtr& basis);

TaylorValue operator+(const TaylorValue& a, const TaylorValue& b);
TaylorValue operator-(const TaylorValue& a, const TaylorValue& b);
TaylorValue operator*(const TaylorValue& a, const TaylorValue& b);
TaylorValue operator-(const TaylorValue& a);
TaylorValue operator*(double k, const TaylorValue& a);
TaylorValue operator*(const TaylorValue& a, double k);
TaylorValue operator+(const TaylorValue& a, double k);
TaylorValue divide(const TaylorValue& a, const TaylorValue& b, double eps_div = kEpsilonDiv);
TaylorValue operator/(const TaylorValue& a, const TaylorValue& b);

enum class ArithKind { Add, Sub, Mul, Div, Neg };
TaylorValue arith(ArithKind kind, const TaylorValue& a, const TaylorValue* b = nullptr);

enum class ElementaryKind { Sqrt, Sin, Cos, Exp, PowRational };
TaylorValue elementary(ElementaryKind kind, const TaylorValue& a, Rational exponent = {});

TaylorValue sqrt(const TaylorValue& a);
TaylorValue sin(const TaylorValue& a);
TaylorValue cos(const TaylorValue& a);
TaylorValue exp(const TaylorValue& a);
TaylorValue pow(const TaylorValue& a, Rational r);

// f(args): f is expanded around the constant terms of args; the result lives
// in the basis of args (which must all share one basis).
TaylorValue compose(const TaylorValue& f, std::span<const TaylorValue> args);

using TaylorMatrix = std::vector<std::vector<TaylorValue>>;

TaylorMatrix matmul(const TaylorMatrix& a, const TaylorMatrix& b);
TaylorMatrix taylor_matrix_inverse(const TaylorMatrix& m, double max_condition = 1e12);

}  // namespace finslerlab
