#include "finslerlab/finsler.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "finslerlab/errors.hpp"

namespace finslerlab {

std::vector<std::string> coordinate_vars(int dim, const CoordNames& names) {
  std::vector<std::string> v;
  for (int i = 1; i <= dim; ++i) v.push_back(names.position + std::to_string(i));
  for (int i = 1; i <= dim; ++i) v.push_back(names.fiber + std::to_string(i));
  return v;
}

const char* to_string(CatalogKind kind) {
  switch (kind) {
    case CatalogKind::Custom: return "custom";
    case CatalogKind::Euclidean: return "euclidean";
    case CatalogKind::Riemannian: return "riemannian";
    case CatalogKind::Randers: return "randers";
    case CatalogKind::LocallyMinkowski: return "locally_minkowski";
    case CatalogKind::RoundSphere: return "round_sphere";
  }
  return "custom";
}

FinslerStructure::FinslerStructure(int dim, Expr f_squared, std::string label, CatalogKind kind)
    : dim_(dim), f2_(std::move(f_squared)), label_(std::move(label)), kind_(kind) {
  if (dim < 1) throw Error(ErrorKind::ConfigError, "structure dimension must be positive");
  if (static_cast<int>(f2_.vars().size()) != 2 * dim) {
    throw Error(ErrorKind::DimensionMismatch, "F^2 must be declared over 2*dim variables");
  }
}

FinslerStructure FinslerStructure::from_text(int dim, const std::string& f_squared, const std::string& label,
                                             const CoordNames& names) {
  return FinslerStructure(dim, Expr::parse(f_squared, coordinate_vars(dim, names)), label);
}

void FinslerStructure::check_point(const BasePoint& pt) const {
  if (static_cast<int>(pt.t.size()) != dim_ || static_cast<int>(pt.s.size()) != dim_) {
    throw Error(ErrorKind::DimensionMismatch, "base point dimension does not match the structure");
  }
  double n2 = 0.0;
  for (double v : pt.s) n2 += v * v;
  if (std::sqrt(n2) < kEpsilonZeroSection) throw Error(ErrorKind::ZeroSection, "fiber coordinate on the zero section");
  if (domain_) {
    for (int i = 0; i < dim_; ++i) {
      const auto& iv = (*domain_)[static_cast<std::size_t>(i)];
      const double x = pt.t[static_cast<std::size_t>(i)];
      if (!(x > iv.lo && x < iv.hi)) throw Error(ErrorKind::DomainError, "position outside the structure domain");
    }
  }
}

double FinslerStructure::f_squared_at(const BasePoint& pt) const {
  check_point(pt);
  std::vector<double> v = pt.t;
  v.insert(v.end(), pt.s.begin(), pt.s.end());
  return f2_.eval(v);
}

double FinslerStructure::F(const BasePoint& pt) const {
  double f2 = f_squared_at(pt);
  if (!(f2 > 0.0)) throw Error(ErrorKind::DomainError, "F^2 is not positive");
  return std::sqrt(f2);
}

namespace {

std::string quadratic_form(const std::vector<std::vector<std::string>>& m, const std::string& fiber) {
  std::ostringstream os;
  const std::size_t n = m.size();
  bool first = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (m[i][j] == "0") continue;
      if (!first) os << " + ";
      first = false;
      os << "(" << m[i][j] << ")*" << fiber << i + 1 << "*" << fiber << j + 1;
    }
  }
  if (first) return "0";
  return os.str();
}

void require_square(const std::vector<std::vector<std::string>>& m) {
  if (m.empty()) throw Error(ErrorKind::ConfigError, "empty metric matrix");
  for (const auto& row : m) {
    if (row.size() != m.size()) throw Error(ErrorKind::ConfigError, "metric matrix is not square");
  }
}

}  // namespace

FinslerStructure euclidean(int dim, const CoordNames& names) {
  std::ostringstream os;
  for (int i = 1; i <= dim; ++i) os << (i > 1 ? " + " : "") << names.fiber << i << "^2";
  return FinslerStructure(dim, Expr::parse(os.str(), coordinate_vars(dim, names)), "euclidean",
                          CatalogKind::Euclidean);
}

FinslerStructure riemannian(const std::vector<std::vector<std::string>>& metric, const std::string& label,
                            const CoordNames& names) {
  require_square(metric);
  const int dim = static_cast<int>(metric.size());
  for (std::size_t i = 0; i < metric.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (metric[i][j] != metric[j][i]) throw Error(ErrorKind::ConfigError, "metric matrix is not symmetric");
    }
  }
  auto vars = coordinate_vars(dim, names);
  auto e = Expr::parse(quadratic_form(metric, names.fiber), vars);
  return FinslerStructure(dim, e, label, CatalogKind::Riemannian);
}

FinslerStructure randers(const std::vector<std::vector<std::string>>& alpha, const std::vector<std::string>& beta,
                         const std::string& label, const CoordNames& names) {
  require_square(alpha);
  const int dim = static_cast<int>(alpha.size());
  if (static_cast<int>(beta.size()) != dim) throw Error(ErrorKind::ConfigError, "beta length does not match alpha");
  std::ostringstream b;
  for (int i = 0; i < dim; ++i) b << (i ? " + " : "") << "(" << beta[static_cast<std::size_t>(i)] << ")*" << names.fiber << i + 1;
  std::string text = "(sqrt(" + quadratic_form(alpha, names.fiber) + ") + " + b.str() + ")^2";
  auto vars = coordinate_vars(dim, names);
  FinslerStructure fs(dim, Expr::parse(text, vars), label, CatalogKind::Randers);
  RandersData d;
  for (const auto& row : alpha) {
    std::vector<Expr> r;
    for (const auto& e : row) r.push_back(Expr::parse(e, vars));
    d.alpha.push_back(r);
  }
  for (const auto& e : beta) d.beta.push_back(Expr::parse(e, vars));
  fs.set_randers(std::move(d));
  return fs;
}

FinslerStructure randers_default(double b, const CoordNames& names) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", b);
  const std::string p = names.position;
  return randers({{"1", "0"}, {"0", "1 + 0.5*sin(" + p + "1)^2"}},
                 {std::string(buf) + "*cos(" + p + "2)", std::string(buf) + "*sin(" + p + "2)"}, "randers", names);
}

FinslerStructure locally_minkowski(int dim, const std::string& f_squared, const std::string& label,
                                   const CoordNames& names) {
  auto e = Expr::parse(f_squared, coordinate_vars(dim, names));
  for (int i = 1; i <= dim; ++i) {
    if (e.depends_on(names.position + std::to_string(i))) {
      throw Error(ErrorKind::ConfigError, "locally Minkowski F^2 must depend on the fiber coordinates only");
    }
  }
  return FinslerStructure(dim, e, label, CatalogKind::LocallyMinkowski);
}

FinslerStructure quartic_minkowski(const CoordNames& names) {
  const std::string y = names.fiber;
  return locally_minkowski(2, "(" + y + "1^4 + " + y + "1^2*" + y + "2^2 + " + y + "2^4)^(1/2)", "quartic_minkowski",
                           names);
}

FinslerStructure round_sphere(const CoordNames& names) {
  const std::string p = names.position;
  const std::string y = names.fiber;
  auto e = Expr::parse(y + "1^2 + sin(" + p + "1)^2*" + y + "2^2", coordinate_vars(2, names));
  FinslerStructure fs(2, e, "round_sphere", CatalogKind::RoundSphere);
  const double inf = std::numeric_limits<double>::infinity();
  fs.set_domain({{0.0, M_PI}, {-inf, inf}});
  return fs;
}

TaylorValue expand_f_squared(const FinslerStructure& fs, const BasePoint& pt, int order) {
  fs.check_point(pt);
  const int p = fs.dim();
  auto basis = MultiIndexBasis::get(2 * p, order);
  std::vector<TaylorValue> lifted;
  for (int i = 0; i < p; ++i) lifted.push_back(lift_variable(i, pt.t[static_cast<std::size_t>(i)], basis));
  for (int i = 0; i < p; ++i) lifted.push_back(lift_variable(p + i, pt.s[static_cast<std::size_t>(i)], basis));
  return fs.f_squared().eval_taylor(lifted);
}

TaylorValue expand_fiber(const FinslerStructure& fs, const BasePoint& pt, int order) {
  fs.check_point(pt);
  const int p = fs.dim();
  auto basis = MultiIndexBasis::get(p, order);
  std::vector<TaylorValue> lifted;
  for (int i = 0; i < p; ++i) lifted.push_back(TaylorValue::constant(basis, pt.t[static_cast<std::size_t>(i)]));
  for (int i = 0; i < p; ++i) lifted.push_back(lift_variable(i, pt.s[static_cast<std::size_t>(i)], basis));
  return fs.f_squared().eval_taylor(lifted);
}

Tensor metric_tensor(const FinslerStructure& fs, const BasePoint& pt) {
  const int p = fs.dim();
  auto f2 = expand_fiber(fs, pt, 2);
  Tensor g({p, p});
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b <= a; ++b) {
      g(a, b) = 0.5 * f2.d2(a, b);
      g(b, a) = g(a, b);
    }
  }
  return g;
}

double min_eigenvalue(const Tensor& m) {
  const int n = m.extent(0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Tensor inverse_matrix(const Tensor& m) {
  const int n = m.extent(0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = m(i, j);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularMetric, "metric tensor is singular");
  Eigen::MatrixXd inv = lu.inverse();
  Tensor out({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = inv(i, j);
  return out;
}

CartanTensor cartan_tensor(const FinslerStructure& fs, const BasePoint& pt) {
  const int p = fs.dim();
  auto f2 = expand_fiber(fs, pt, 3);
  Tensor g({p, p});
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) g(a, b) = 0.5 * f2.d2(a, b);
  Tensor ginv = inverse_matrix(g);
  CartanTensor c{Tensor({p, p, p}), Tensor({p, p, p})};
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int e = 0; e < p; ++e) c.lower(a, b, e) = 0.25 * f2.d3(a, b, e);
  for (int b = 0; b < p; ++b)
    for (int a = 0; a < p; ++a)
      for (int e = 0; e < p; ++e) {
        double sum = 0.0;
        for (int l = 0; l < p; ++l) sum += ginv(b, l) * c.lower(l, a, e);
        c.mixed(b, a, e) = sum;
      }
  return c;
}

std::vector<BasePoint> sample_points(const SampleSpec& spec) {
  if (spec.t_box.size() != spec.s_box.size()) throw Error(ErrorKind::ConfigError, "t and s boxes differ in dimension");
  Rng rng(spec.seed);
  std::vector<BasePoint> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < spec.count) {
    if (++attempts > 1000 * std::max(1, spec.count)) throw Error(ErrorKind::ConfigError, "sampling box only yields zero-section points");
    BasePoint pt{rng.uniform(spec.t_box), rng.uniform(spec.s_box)};
    double n2 = 0.0;
    for (double v : pt.s) n2 += v * v;
    if (std::sqrt(n2) < kEpsilonZeroSection) continue;
    out.push_back(std::move(pt));
  }
  return out;
}

const CheckResult* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ValidationReport validate_structure(const FinslerStructure& fs, const SampleSpec& spec, double tolerance) {
  const int p = fs.dim();
  ValidationReport rep;
  rep.label = fs.label();
  auto pts = sample_points(spec);
  rep.samples = static_cast<int>(pts.size());

  CheckResult homog{"f_squared_homogeneity", 0.0, tolerance, true, ""};
  CheckResult euler{"euler_identity", 0.0, tolerance, true, ""};
  CheckResult contraction{"cartan_contraction", 0.0, tolerance, true, ""};
  CheckResult g_homog{"metric_homogeneity", 0.0, tolerance, true, ""};
  CheckResult pd{"positive_definite", 0.0, kMinEigenvalue, true, ""};
  CheckResult positive{"f_squared_positive", 0.0, 0.0, true, ""};
  std::optional<CheckResult> beta_norm;
  if (fs.randers()) beta_norm = CheckResult{"randers_beta_norm", 0.0, 1.0, true, ""};
  double min_eig = std::numeric_limits<double>::infinity();
  double min_f2 = std::numeric_limits<double>::infinity();

  auto fail = [](CheckResult& c, const std::string& finding) {
    c.pass = false;
    if (c.finding.empty()) c.finding = finding;
  };

  std::vector<std::string> s_names(fs.vars().begin() + p, fs.vars().end());
  for (const auto& pt : pts) {
    try {
      fs.check_point(pt);
      std::vector<double> v = pt.t;
      v.insert(v.end(), pt.s.begin(), pt.s.end());
      for (double lambda : {0.5, 2.0, 7.0}) {
        auto h = check_homogeneity(fs.f_squared(), s_names, 2, {v}, lambda, tolerance);
        homog.max_residual = std::max(homog.max_residual, h.max_residual);
      }

      const double f2 = fs.f_squared_at(pt);
      min_f2 = std::min(min_f2, f2);

      auto c = cartan_tensor(fs, pt);
      Tensor g = metric_tensor(fs, pt);
      double gss = 0.0;
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) gss += g(a, b) * pt.s[static_cast<std::size_t>(a)] * pt.s[static_cast<std::size_t>(b)];
      euler.max_residual = std::max(euler.max_residual, std::abs(f2 - gss) / std::max(1.0, std::abs(f2)));

      double smax = 0.0;
      for (double x : pt.s) smax = std::max(smax, std::abs(x));
      const double cscale = std::max(1.0, c.lower.max_abs() * smax);
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          double sum = 0.0;
          for (int m = 0; m < p; ++m) sum += c.lower(a, b, m) * pt.s[static_cast<std::size_t>(m)];
          contraction.max_residual = std::max(contraction.max_residual, std::abs(sum) / cscale);
        }

      for (double lambda : {0.5, 2.0, 7.0}) {
        BasePoint scaled = pt;
        for (double& x : scaled.s) x *= lambda;
        g_homog.max_residual = std::max(g_homog.max_residual, scaled_residual(metric_tensor(fs, scaled), g));
      }

      min_eig = std::min(min_eig, min_eigenvalue(g));

      if (beta_norm) {
        const auto& d = *fs.randers();
        Tensor a({p, p});
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < p; ++j) a(i, j) = d.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(v);
        Tensor ainv = inverse_matrix(a);
        double n2 = 0.0;
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < p; ++j)
            n2 += ainv(i, j) * d.beta[static_cast<std::size_t>(i)].eval(v) * d.beta[static_cast<std::size_t>(j)].eval(v);
        beta_norm->max_residual = std::max(beta_norm->max_residual, std::sqrt(std::max(0.0, n2)));
      }
    } catch (const Error& e) {
      for (auto* c : {&homog, &euler, &contraction, &g_homog, &pd, &positive}) fail(*c, to_string(e.kind()));
      if (beta_norm) fail(*beta_norm, to_string(e.kind()));
    }
  }

  if (homog.max_residual > tolerance) fail(homog, "not 2-homogeneous");
  if (euler.max_residual > tolerance) fail(euler, "Euler identity violated");
  if (contraction.max_residual > tolerance) fail(contraction, "C contracted with s is not zero");
  if (g_homog.max_residual > tolerance) fail(g_homog, "metric tensor not 0-homogeneous");
  pd.max_residual = min_eig;
  if (!(min_eig >= kMinEigenvalue)) fail(pd, to_string(ErrorKind::NotPositiveDefinite));
  positive.max_residual = min_f2;
  if (!(min_f2 > 0.0)) fail(positive, to_string(ErrorKind::NotPositiveDefinite));
  if (beta_norm && !(beta_norm->max_residual < 1.0)) fail(*beta_norm, to_string(ErrorKind::NotPositiveDefinite));

  rep.checks = {homog, euler, contraction, g_homog, pd, positive};
  if (beta_norm) rep.checks.push_back(*beta_norm);
  rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const CheckResult& c) { return c.pass; });
  return rep;
}

}  // namespace finslerlab
