#pragma once

#include <optional>
#include <string>
#include <vector>

#include "finslerlab/expr.hpp"
#include "finslerlab/jets.hpp"
#include "finslerlab/sampling.hpp"
#include "finslerlab/tensor.hpp"

namespace finslerlab {

inline constexpr double kEpsilonZeroSection = 1e-8;
inline constexpr double kMinEigenvalue = 1e-10;

// Prefixes of the coordinate names: (t, s) on a source, (x, y) on a target.
struct CoordNames {
  std::string position = "t";
  std::string fiber = "s";
};

inline const CoordNames kSourceNames{"t", "s"};
inline const CoordNames kTargetNames{"x", "y"};

std::vector<std::string> coordinate_vars(int dim, const CoordNames& names);

enum class CatalogKind { Custom, Euclidean, Riemannian, Randers, LocallyMinkowski, RoundSphere };

const char* to_string(CatalogKind kind);

struct RandersData {
  std::vector<std::vector<Expr>> alpha;  // a_ij(position)
  std::vector<Expr> beta;                // b_i(position)
};

struct BasePoint {
  std::vector<double> t;
  std::vector<double> s;
};

class FinslerStructure {
 public:
  FinslerStructure(int dim, Expr f_squared, std::string label, CatalogKind kind = CatalogKind::Custom);

  static FinslerStructure from_text(int dim, const std::string& f_squared, const std::string& label,
                                    const CoordNames& names = kSourceNames);

  int dim() const { return dim_; }
  const Expr& f_squared() const { return f2_; }
  const std::string& label() const { return label_; }
  CatalogKind kind() const { return kind_; }
  const std::vector<std::string>& vars() const { return f2_.vars(); }

  const std::optional<RandersData>& randers() const { return randers_; }
  void set_randers(RandersData d) { randers_ = std::move(d); }
  const std::optional<Box>& domain() const { return domain_; }
  void set_domain(Box b) { domain_ = std::move(b); }

  // Throws ZeroSection or DomainError for points outside TM\{0} or the box.
  void check_point(const BasePoint& pt) const;
  double f_squared_at(const BasePoint& pt) const;
  double F(const BasePoint& pt) const;

 private:
  int dim_;
  Expr f2_;
  std::string label_;
  CatalogKind kind_;
  std::optional<RandersData> randers_;
  std::optional<Box> domain_;
};

// Catalog. Matrix and covector entries are expressions in the position
// coordinates; locally Minkowski expressions are in the fiber coordinates.
FinslerStructure euclidean(int dim, const CoordNames& names = kSourceNames);
FinslerStructure riemannian(const std::vector<std::vector<std::string>>& metric, const std::string& label,
                            const CoordNames& names = kSourceNames);
FinslerStructure randers(const std::vector<std::vector<std::string>>& alpha, const std::vector<std::string>& beta,
                         const std::string& label, const CoordNames& names = kSourceNames);
// Two-dimensional Randers metric with alpha = diag(1, 1 + sin(t1)^2 / 2) and
// beta = b (cos t2, sin t2); its beta-norm never exceeds b.
FinslerStructure randers_default(double b, const CoordNames& names = kSourceNames);
FinslerStructure locally_minkowski(int dim, const std::string& f_squared, const std::string& label,
                                   const CoordNames& names = kSourceNames);
// F^2 = (s1^4 + s1^2 s2^2 + s2^4)^(1/2), strictly convex and not quadratic.
FinslerStructure quartic_minkowski(const CoordNames& names = kSourceNames);
// diag(1, sin(t1)^2) on 0 < t1 < pi.
FinslerStructure round_sphere(const CoordNames& names = kSourceNames);

// Expansion of F^2 at pt in the 2p variables (t, s).
TaylorValue expand_f_squared(const FinslerStructure& fs, const BasePoint& pt, int order);
// Expansion in the fiber variables only, position held fixed.
TaylorValue expand_fiber(const FinslerStructure& fs, const BasePoint& pt, int order);

// g_{ab} = 1/2 d^2 F^2 / ds^a ds^b
Tensor metric_tensor(const FinslerStructure& fs, const BasePoint& pt);

struct CartanTensor {
  Tensor lower;  // C_{abc} = 1/4 d^3 F^2 / ds^a ds^b ds^c
  Tensor mixed;  // C^b_{ae} = g^{bl} C_{lae}, index order (b, a, e)
};

CartanTensor cartan_tensor(const FinslerStructure& fs, const BasePoint& pt);

double min_eigenvalue(const Tensor& symmetric);
Tensor inverse_matrix(const Tensor& m);  // SingularMetric on failure

struct SampleSpec {
  std::uint64_t seed = 1;
  int count = 64;
  Box t_box;
  Box s_box;
};

// Seeded uniform points in the boxes, rejecting |s| below the zero-section guard.
std::vector<BasePoint> sample_points(const SampleSpec& spec);

struct CheckResult {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string finding;  // error kind or short note when the check fails
};

struct ValidationReport {
  std::string label;
  int samples = 0;
  std::vector<CheckResult> checks;
  bool all_pass = false;

  const CheckResult* find(const std::string& name) const;
};

ValidationReport validate_structure(const FinslerStructure& fs, const SampleSpec& spec, double tolerance = 1e-10);

}  // namespace finslerlab
