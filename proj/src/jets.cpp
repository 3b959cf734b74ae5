#include "finslerlab/jets.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <utility>

#include "finslerlab/errors.hpp"

namespace finslerlab {

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (d == 0) throw Error(ErrorKind::DomainError, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

namespace {

void enumerate_degree(int nvars, int var, int remaining, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
  if (var == nvars - 1) {
    cur[static_cast<std::size_t>(var)] = remaining;
    out.push_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[static_cast<std::size_t>(var)] = e;
    enumerate_degree(nvars, var + 1, remaining - e, cur, out);
  }
  cur[static_cast<std::size_t>(var)] = 0;
}

}  // namespace

MultiIndexBasis::MultiIndexBasis(int num_vars, int order) : num_vars_(num_vars), order_(order) {
  if (num_vars < 1) throw Error(ErrorKind::IndexOutOfRange, "num_vars must be positive");
  if (order < 0) throw Error(ErrorKind::OrderExceeded, "negative truncation order");

  std::vector<std::vector<int>> all;
  block_start_.clear();
  for (int d = 0; d <= order; ++d) {
    block_start_.push_back(static_cast<int>(all.size()));
    std::vector<int> cur(static_cast<std::size_t>(num_vars), 0);
    enumerate_degree(num_vars, 0, d, cur, all);
  }
  block_start_.push_back(static_cast<int>(all.size()));

  std::map<std::vector<int>, int> lookup;
  const auto n = all.size();
  exps_.reserve(n * static_cast<std::size_t>(num_vars));
  for (std::size_t i = 0; i < n; ++i) {
    lookup.emplace(all[i], static_cast<int>(i));
    int deg = 0;
    double fac = 1.0;
    for (int e : all[i]) {
      exps_.push_back(e);
      deg += e;
      for (int k = 2; k <= e; ++k) fac *= k;
    }
    degree_.push_back(deg);
    factorial_.push_back(fac);
  }

  raise_.assign(n * static_cast<std::size_t>(num_vars), -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (degree_[i] == order) continue;
    for (int v = 0; v < num_vars; ++v) {
      auto m = all[i];
      ++m[static_cast<std::size_t>(v)];
      raise_[i * static_cast<std::size_t>(num_vars) + static_cast<std::size_t>(v)] = lookup.at(m);
    }
  }

  prod_start_.push_back(0);
  std::vector<int> sum(static_cast<std::size_t>(num_vars));
  for (std::size_t i = 0; i < n; ++i) {
    const int room = order - degree_[i];
    const int jend = block_start_[static_cast<std::size_t>(room) + 1];
    for (int j = 0; j < jend; ++j) {
      for (int v = 0; v < num_vars; ++v) {
        sum[static_cast<std::size_t>(v)] = all[i][static_cast<std::size_t>(v)] +
                                           all[static_cast<std::size_t>(j)][static_cast<std::size_t>(v)];
      }
      prod_j_.push_back(j);
      prod_k_.push_back(lookup.at(sum));
    }
    prod_start_.push_back(prod_j_.size());
  }
}

std::shared_ptr<const MultiIndexBasis> MultiIndexBasis::get(int num_vars, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const MultiIndexBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(num_vars, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto basis = std::make_shared<const MultiIndexBasis>(num_vars, order);
  cache.emplace(key, basis);
  return basis;
}

int MultiIndexBasis::index_of(std::span<const int> multi_index) const {
  if (static_cast<int>(multi_index.size()) != num_vars_) {
    throw Error(ErrorKind::IndexOutOfRange, "multi-index length does not match num_vars");
  }
  int idx = 0;
  for (int v = 0; v < num_vars_; ++v) {
    int e = multi_index[static_cast<std::size_t>(v)];
    if (e < 0) throw Error(ErrorKind::IndexOutOfRange, "negative exponent in multi-index");
    for (int k = 0; k < e; ++k) {
      idx = raise(v, idx);
      if (idx < 0) return -1;
    }
  }
  return idx;
}

TaylorValue::TaylorValue(BasisPtr basis, std::vector<double> coeffs)
    : basis_(std::move(basis)), c_(std::move(coeffs)) {
  if (!basis_) throw Error(ErrorKind::OperandMismatch, "null basis");
  if (static_cast<int>(c_.size()) != basis_->size()) {
    throw Error(ErrorKind::OperandMismatch, "coefficient count does not match basis");
  }
}

TaylorValue TaylorValue::constant(const BasisPtr& basis, double value) {
  std::vector<double> c(static_cast<std::size_t>(basis->size()), 0.0);
  c[0] = value;
  return TaylorValue(basis, std::move(c));
}

double TaylorValue::coeff(std::span<const int> multi_index) const {
  int idx = basis_->index_of(multi_index);
  if (idx < 0) throw Error(ErrorKind::OrderExceeded, "multi-index degree exceeds order");
  return c_[static_cast<std::size_t>(idx)];
}

double TaylorValue::partial_coeff(std::span<const int> multi_index) const {
  int idx = basis_->index_of(multi_index);
  if (idx < 0) throw Error(ErrorKind::OrderExceeded, "multi-index degree exceeds order");
  return c_[static_cast<std::size_t>(idx)] * basis_->factorial_product(idx);
}

double TaylorValue::d(int var) const {
  if (var < 0 || var >= num_vars()) throw Error(ErrorKind::IndexOutOfRange, "variable index");
  if (order() < 1) throw Error(ErrorKind::OrderExceeded, "first derivative needs order >= 1");
  return c_[static_cast<std::size_t>(1 + var)];
}

double TaylorValue::d2(int v, int w) const {
  if (order() < 2) throw Error(ErrorKind::OrderExceeded, "second derivative needs order >= 2");
  int idx = basis_->raise(w, basis_->raise(v, 0));
  return c_[static_cast<std::size_t>(idx)] * basis_->factorial_product(idx);
}

double TaylorValue::d3(int u, int v, int w) const {
  if (order() < 3) throw Error(ErrorKind::OrderExceeded, "third derivative needs order >= 3");
  int idx = basis_->raise(w, basis_->raise(v, basis_->raise(u, 0)));
  return c_[static_cast<std::size_t>(idx)] * basis_->factorial_product(idx);
}

TaylorValue TaylorValue::series_derivative(int var) const {
  if (var < 0 || var >= num_vars()) throw Error(ErrorKind::IndexOutOfRange, "variable index");
  if (order() == 0) throw Error(ErrorKind::OrderExceeded, "derivative of an order-0 series");
  auto lower = MultiIndexBasis::get(num_vars(), order() - 1);
  std::vector<double> out(static_cast<std::size_t>(lower->size()));
  for (int i = 0; i < lower->size(); ++i) {
    int up = basis_->raise(var, i);
    int e = basis_->exponents(i)[static_cast<std::size_t>(var)];
    out[static_cast<std::size_t>(i)] = (e + 1) * c_[static_cast<std::size_t>(up)];
  }
  return TaylorValue(lower, std::move(out));
}

TaylorValue TaylorValue::truncated(int order) const {
  if (order > this->order()) throw Error(ErrorKind::OrderExceeded, "cannot raise truncation order");
  if (order == this->order()) return *this;
  auto lower = MultiIndexBasis::get(num_vars(), order);
  return TaylorValue(lower, std::vector<double>(c_.begin(), c_.begin() + lower->size()));
}

namespace {

void require_same(const TaylorValue& a, const TaylorValue& b) {
  if (a.basis() != b.basis()) {
    if (a.num_vars() != b.num_vars() || a.order() != b.order()) {
      throw Error(ErrorKind::OperandMismatch, "operands differ in num_vars or order");
    }
  }
}

}  // namespace

TaylorValue& TaylorValue::operator+=(const TaylorValue& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

TaylorValue& TaylorValue::operator-=(const TaylorValue& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

TaylorValue& TaylorValue::operator*=(double k) {
  for (double& v : c_) v *= k;
  return *this;
}

TaylorValue lift_variable(int var_index, double value, const BasisPtr& basis) {
  if (var_index < 0 || var_index >= basis->num_vars()) {
    throw Error(ErrorKind::IndexOutOfRange, "lift_variable: variable index out of range");
  }
  TaylorValue r = TaylorValue::constant(basis, value);
  if (basis->order() >= 1) r.coeffs_mut()[static_cast<std::size_t>(1 + var_index)] = 1.0;
  return r;
}

TaylorValue lift_variable(int var_index, double value, int num_vars, int order) {
  if (num_vars < 1 || var_index < 0 || var_index >= num_vars) {
    throw Error(ErrorKind::IndexOutOfRange, "lift_variable: variable index out of range");
  }
  return lift_variable(var_index, value, MultiIndexBasis::get(num_vars, order));
}

TaylorValue operator+(const TaylorValue& a, const TaylorValue& b) {
  TaylorValue r = a;
  r += b;
  return r;
}

TaylorValue operator-(const TaylorValue& a, const TaylorValue& b) {
  TaylorValue r = a;
  r -= b;
  return r;
}

TaylorValue operator-(const TaylorValue& a) {
  TaylorValue r = a;
  r *= -1.0;
  return r;
}

TaylorValue operator*(double k, const TaylorValue& a) {
  TaylorValue r = a;
  r *= k;
  return r;
}

TaylorValue operator*(const TaylorValue& a, double k) { return k * a; }

TaylorValue operator+(const TaylorValue& a, double k) {
  TaylorValue r = a;
  r += k;
  return r;
}

TaylorValue operator*(const TaylorValue& a, const TaylorValue& b) {
  require_same(a, b);
  const auto& basis = *a.basis();
  std::vector<double> out(static_cast<std::size_t>(basis.size()), 0.0);
  auto ca = a.coeffs();
  auto cb = b.coeffs();
  for (int i = 0; i < basis.size(); ++i) {
    const double ai = ca[static_cast<std::size_t>(i)];
    if (ai == 0.0) continue;
    auto js = basis.product_right(i);
    auto ks = basis.product_result(i);
    for (std::size_t q = 0; q < js.size(); ++q) {
      out[static_cast<std::size_t>(ks[q])] += ai * cb[static_cast<std::size_t>(js[q])];
    }
  }
  return TaylorValue(a.basis(), std::move(out));
}

TaylorValue divide(const TaylorValue& a, const TaylorValue& b, double eps_div) {
  require_same(a, b);
  const double b0 = b.value();
  if (std::abs(b0) < eps_div) throw Error(ErrorKind::DivisionNearZero, "divisor constant term near zero");
  const auto& basis = *a.basis();
  TaylorValue q = TaylorValue::zero(a.basis());
  for (int d = 0; d <= basis.order(); ++d) {
    TaylorValue r = a - b * q;
    auto cq = q.coeffs_mut();
    auto cr = r.coeffs();
    for (int k = basis.degree_begin(d); k < basis.degree_begin(d + 1); ++k) {
      cq[static_cast<std::size_t>(k)] = cr[static_cast<std::size_t>(k)] / b0;
    }
  }
  return q;
}

TaylorValue operator/(const TaylorValue& a, const TaylorValue& b) { return divide(a, b); }

TaylorValue arith(ArithKind kind, const TaylorValue& a, const TaylorValue* b) {
  if (kind != ArithKind::Neg && b == nullptr) {
    throw Error(ErrorKind::OperandMismatch, "binary operation needs two operands");
  }
  switch (kind) {
    case ArithKind::Add: return a + *b;
    case ArithKind::Sub: return a - *b;
    case ArithKind::Mul: return a * *b;
    case ArithKind::Div: return divide(a, *b);
    case ArithKind::Neg: return -a;
  }
  throw Error(ErrorKind::OperandMismatch, "unknown arithmetic kind");
}

namespace {

// sum_k f[k] * (a - a0)^k by Horner; the shifted series is nilpotent so the
// sum terminates at the truncation order.
TaylorValue horner(const TaylorValue& a, const std::vector<double>& f) {
  TaylorValue da = a;
  da.coeffs_mut()[0] = 0.0;
  TaylorValue r = TaylorValue::constant(a.basis(), f.back());
  for (int k = static_cast<int>(f.size()) - 2; k >= 0; --k) {
    r = r * da;
    r += f[static_cast<std::size_t>(k)];
  }
  return r;
}

// Generalized binomial coefficients times a0^(r - k), k = 0..K.
std::vector<double> power_coeffs(double a0, double r, int order) {
  std::vector<double> f(static_cast<std::size_t>(order) + 1);
  double binom = 1.0;
  for (int k = 0; k <= order; ++k) {
    // sqrt goes through std::sqrt so order 0 matches plain evaluation bit for bit
    const double base = r == 0.5 ? std::sqrt(a0) / std::pow(a0, k) : std::pow(a0, r - k);
    f[static_cast<std::size_t>(k)] = binom * base;
    binom *= (r - k) / (k + 1);
  }
  return f;
}

// Kept out of line so the compiler cannot fuse them into sincos, whose last
// bit may differ from sin and cos called separately.
[[gnu::noinline]] double sin_of(double x) { return std::sin(x); }
[[gnu::noinline]] double cos_of(double x) { return std::cos(x); }

TaylorValue integer_power(const TaylorValue& a, std::int64_t n) {
  TaylorValue result = TaylorValue::constant(a.basis(), 1.0);
  TaylorValue base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

}  // namespace

TaylorValue elementary(ElementaryKind kind, const TaylorValue& a, Rational exponent) {
  const int K = a.order();
  const double a0 = a.value();
  std::vector<double> f(static_cast<std::size_t>(K) + 1);
  switch (kind) {
    case ElementaryKind::Sqrt:
      if (!(a0 > 0.0)) throw Error(ErrorKind::DomainError, "sqrt of non-positive constant term");
      return horner(a, power_coeffs(a0, 0.5, K));
    case ElementaryKind::Sin:
    case ElementaryKind::Cos: {
      const double s = sin_of(a0);
      const double c = cos_of(a0);
      // derivative cycle of sin: s, c, -s, -c; cos is shifted by one
      const double cyc[4] = {s, c, -s, -c};
      const int shift = kind == ElementaryKind::Sin ? 0 : 1;
      double fact = 1.0;
      for (int k = 0; k <= K; ++k) {
        if (k > 0) fact *= k;
        f[static_cast<std::size_t>(k)] = cyc[(k + shift) % 4] / fact;
      }
      return horner(a, f);
    }
    case ElementaryKind::Exp: {
      const double e = std::exp(a0);
      double fact = 1.0;
      for (int k = 0; k <= K; ++k) {
        if (k > 0) fact *= k;
        f[static_cast<std::size_t>(k)] = e / fact;
      }
      return horner(a, f);
    }
    case ElementaryKind::PowRational: {
      if (exponent.is_integer()) {
        if (exponent.num >= 0) return integer_power(a, exponent.num);
        if (std::abs(a0) < kEpsilonDiv) {
          throw Error(ErrorKind::DivisionNearZero, "negative power of a near-zero constant term");
        }
        return divide(TaylorValue::constant(a.basis(), 1.0), integer_power(a, -exponent.num));
      }
      if (!(a0 > 0.0)) throw Error(ErrorKind::DomainError, "fractional power of non-positive constant term");
      return horner(a, power_coeffs(a0, exponent.to_double(), K));
    }
  }
  throw Error(ErrorKind::DomainError, "unknown elementary function");
}

TaylorValue sqrt(const TaylorValue& a) { return elementary(ElementaryKind::Sqrt, a); }
TaylorValue sin(const TaylorValue& a) { return elementary(ElementaryKind::Sin, a); }
TaylorValue cos(const TaylorValue& a) { return elementary(ElementaryKind::Cos, a); }
TaylorValue exp(const TaylorValue& a) { return elementary(ElementaryKind::Exp, a); }
TaylorValue pow(const TaylorValue& a, Rational r) { return elementary(ElementaryKind::PowRational, a, r); }

TaylorValue compose(const TaylorValue& f, std::span<const TaylorValue> args) {
  if (static_cast<int>(args.size()) != f.num_vars()) {
    throw Error(ErrorKind::OperandMismatch, "compose: argument count does not match num_vars");
  }
  if (args.empty()) throw Error(ErrorKind::OperandMismatch, "compose: no arguments");
  const BasisPtr& outer = args[0].basis();
  for (const auto& a : args) require_same(a, args[0]);
  const int top = std::min(f.order(), outer->order());

  // powers[v][e] = (arg_v - arg_v(0))^e
  std::vector<std::vector<TaylorValue>> powers(args.size());
  for (std::size_t v = 0; v < args.size(); ++v) {
    TaylorValue dv = args[v];
    dv.coeffs_mut()[0] = 0.0;
    powers[v].push_back(TaylorValue::constant(outer, 1.0));
    for (int e = 1; e <= top; ++e) powers[v].push_back(powers[v].back() * dv);
  }

  const auto& inner = *f.basis();
  TaylorValue out = TaylorValue::zero(outer);
  auto cf = f.coeffs();
  for (int i = 0; i < inner.degree_begin(top + 1); ++i) {
    const double c = cf[static_cast<std::size_t>(i)];
    if (c == 0.0) continue;
    auto m = inner.exponents(i);
    TaylorValue term = TaylorValue::constant(outer, c);
    bool first = true;
    for (std::size_t v = 0; v < m.size(); ++v) {
      if (m[v] == 0) continue;
      if (first) {
        term = c * powers[v][static_cast<std::size_t>(m[v])];
        first = false;
      } else {
        term = term * powers[v][static_cast<std::size_t>(m[v])];
      }
    }
    out += term;
  }
  return out;
}

TaylorMatrix matmul(const TaylorMatrix& a, const TaylorMatrix& b) {
  const std::size_t n = a.size();
  const std::size_t inner = b.size();
  if (n == 0 || inner == 0 || a[0].size() != inner) {
    throw Error(ErrorKind::OperandMismatch, "matmul: incompatible shapes");
  }
  const std::size_t m = b[0].size();
  TaylorMatrix out(n, std::vector<TaylorValue>(m, TaylorValue::zero(a[0][0].basis())));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < inner; ++k) out[i][j] += a[i][k] * b[k][j];
    }
  }
  return out;
}

TaylorMatrix taylor_matrix_inverse(const TaylorMatrix& m, double max_condition) {
  const std::size_t n = m.size();
  if (n == 0) throw Error(ErrorKind::OperandMismatch, "empty matrix");
  for (const auto& row : m) {
    if (row.size() != n) throw Error(ErrorKind::OperandMismatch, "matrix is not square");
  }
  const BasisPtr& basis = m[0][0].basis();
  Eigen::MatrixXd m0(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j].value();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m0);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > max_condition) {
    throw Error(ErrorKind::SingularMatrix, "constant-term matrix is singular or ill-conditioned");
  }
  Eigen::MatrixXd inv0 = m0.inverse();

  TaylorMatrix x(n, std::vector<TaylorValue>(n, TaylorValue::zero(basis)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      x[i][j] = TaylorValue::constant(basis, inv0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  if (basis->order() == 0) return x;

  // Newton: X <- X (2I - M X); each step doubles the number of correct orders.
  int steps = 0;
  while ((1 << steps) < basis->order() + 1) ++steps;
  for (int it = 0; it < steps; ++it) {
    TaylorMatrix mx = matmul(m, x);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        mx[i][j] *= -1.0;
        if (i == j) mx[i][j] += 2.0;
      }
    }
    x = matmul(x, mx);
  }
  return x;
}

}  // namespace finslerlab
