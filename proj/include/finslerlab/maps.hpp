#pragma once

#include <string>
#include <vector>

#include "finslerlab/curves.hpp"
#include "finslerlab/expr.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/tensor.hpp"

namespace finslerlab {

inline constexpr double kSigmaMin = 1e-8;
inline constexpr double kAffineTolerance = 1e-8;

// phi: M^p -> N^n, components are expressions in t1..tp.
class SmoothMap {
 public:
  SmoothMap(int source_dim, std::vector<Expr> components);
  static SmoothMap from_text(int source_dim, const std::vector<std::string>& components,
                             const CoordNames& names = kSourceNames);
  static SmoothMap identity(int dim, const CoordNames& names = kSourceNames);

  int source_dim() const { return p_; }
  int target_dim() const { return static_cast<int>(components_.size()); }
  const std::vector<Expr>& components() const { return components_; }

 private:
  int p_;
  std::vector<Expr> components_;
};

struct MapDifferentials {
  Tensor jacobian;  // (i, a) = d phi^i / dt^a
  Tensor hessian;   // (i, a, b)
  BasePoint pushed;  // (phi(t), dphi(s)) on TN
};

// TargetZeroSection when dphi(s) is on the target zero section.
MapDifferentials map_differentials(const SmoothMap& m, const BasePoint& pt, bool require_fiber = true);

struct NondegeneracyReport {
  std::vector<double> sigma_min;
  bool pass = true;
};

NondegeneracyReport nondegeneracy_check(const SmoothMap& m, const std::vector<BasePoint>& pts,
                                        double threshold = kSigmaMin);

struct AffineResidual {
  Tensor tau;  // (i, a, b)
  double sup = 0.0;
  bool nondegenerate = true;
};

AffineResidual affine_residual(const FinslerStructure& src, const FinslerStructure& tgt, const SmoothMap& m,
                               const BasePoint& pt);

struct IsometryReport {
  double scalar_residual = 0.0;  // |F - F~(phi, dphi s)| / max(1, F)
  double tensor_residual = 0.0;  // g vs phi* g~, scaled
  bool pass = false;
};

IsometryReport isometry_check(const FinslerStructure& src, const FinslerStructure& tgt, const SmoothMap& m,
                              const std::vector<BasePoint>& pts, double tolerance = 1e-10);

struct TensionField {
  std::vector<double> tau;       // simplified form, canonical
  std::vector<double> tau_full;  // three-brace form with Rund coefficients
  double cross_residual = 0.0;
};

TensionField tension_field(const FinslerStructure& src, const FinslerStructure& tgt, const SmoothMap& m,
                           const BasePoint& pt);

struct TransportReport {
  double sup_residual = 0.0;
  double witness_time = 0.0;
  GeodesicTrace source;
};

// Integrates a source autoparallel, maps it through phi and evaluates the
// target autoparallel residual x'' + N~(x, x') x' along the image.
TransportReport autoparallel_transport_test(const FinslerStructure& src, const FinslerStructure& tgt,
                                            const SmoothMap& m, const CurveState& initial, double t_final,
                                            double tol = kDefaultCurveTolerance, int samples = 101);

}  // namespace finslerlab
