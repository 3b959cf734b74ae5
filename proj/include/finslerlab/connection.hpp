#pragma once

#include <string>
#include <vector>

#include "finslerlab/finsler.hpp"
#include "finslerlab/jets.hpp"
#include "finslerlab/tensor.hpp"

namespace finslerlab {

inline constexpr int kDefaultOrder = 6;
inline constexpr double kSprayTolerance = 1e-8;
inline constexpr double kCartanNlcTolerance = 1e-9;
inline constexpr double kBerwaldTolerance = 1e-8;

// Row-major table of series sharing one basis.
struct SeriesTable {
  std::vector<int> shape;
  std::vector<TaylorValue> data;

  bool empty() const { return data.empty(); }
  template <class... Idx>
  TaylorValue& operator()(Idx... idx) {
    return data[flat({static_cast<int>(idx)...})];
  }
  template <class... Idx>
  const TaylorValue& operator()(Idx... idx) const {
    return data[flat({static_cast<int>(idx)...})];
  }
  std::size_t flat(std::initializer_list<int> idx) const {
    std::size_t off = 0;
    std::size_t axis = 0;
    for (int i : idx) off = off * static_cast<std::size_t>(shape[axis++]) + static_cast<std::size_t>(i);
    return off;
  }
  int order() const { return data.front().order(); }

  Tensor values() const;
  // First partials with respect to every expansion variable, appended as a
  // trailing axis.
  Tensor gradient() const;
};

// Everything of the base manifold at one point, from a single expansion of
// F^2 in the 2p variables (t, s). Objects whose derivative count exceeds the
// truncation order are left empty; the accessors below throw OrderExceeded.
//
// Index order: upper indices first, then lower.
//   gamma, B, Gamma, Ncol: (upper, lower1, lower2); N: (upper, lower)
//   torsion: (a, b, c); curvature and P: (a, b, c, e)
struct BaseGeometry {
  int dim = 0;
  int order = 0;
  BasePoint pt;

  TaylorValue f2;
  SeriesTable g_series, ginv_series, gamma_series, G_series, N_series, B_series, Ncol_series, C_mixed_series;

  Tensor g, ginv;
  Tensor C, C_mixed;
  Tensor gamma;        // formal Christoffel symbols
  Tensor G;            // spray, from 1/2 gamma s s
  Tensor G_sprayE;     // spray, from the energy Euler-Lagrange form
  Tensor N;            // dG/ds
  Tensor N_cartan;     // gamma s - C gamma s s
  Tensor Gamma;        // generalized Christoffel symbols (Rund)
  Tensor B;            // d^2 G / ds ds
  Tensor B_rund;       // Gamma + C_{|0}
  Tensor Ncol;         // N^c_{a:b}
  Tensor dN_dt;        // (c, a, e) = dN^c_a / dt^e
  Tensor dB_dt;        // (c, a, b, e) = dB^c_{ab} / dt^e
  Tensor dNcol_dt;     // (c, a, b, e)
  Tensor dNcol_ds;     // (c, a, b, e)
  Tensor torsion;      // bR^a_{bc}
  Tensor curvature;    // bR^a_{bce}
  Tensor P;            // bP^a_{bce} = dB^a_{bc} / ds^e

  const Tensor& require(const Tensor& t, const char* name) const;
};

BaseGeometry compute_geometry(const FinslerStructure& fs, const BasePoint& pt, int order = kDefaultOrder);

// Residuals between alternative formulas for the same object,
// each as max|a-b| / max(1, |a|, |b|).
struct DualResiduals {
  double spray = 0.0;        // 1/2 gamma s s vs Euler-Lagrange form
  double cartan_nlc = 0.0;   // gamma s - C gamma s s vs dG/ds
  double berwald = 0.0;      // Gamma + C_{|0} vs d^2 G / ds ds
  double n_gamma_s = 0.0;    // N vs Gamma s
  double two_g_ns = 0.0;     // 2G vs N s
};

DualResiduals dual_residuals(const BaseGeometry& geo);

Tensor formal_christoffel(const FinslerStructure& fs, const BasePoint& pt);
Tensor spray(const FinslerStructure& fs, const BasePoint& pt);
Tensor nonlinear_cartan(const FinslerStructure& fs, const BasePoint& pt);
Tensor generalized_christoffel(const FinslerStructure& fs, const BasePoint& pt);
Tensor berwald_coeffs(const FinslerStructure& fs, const BasePoint& pt);

struct BerwaldTensors {
  Tensor torsion;
  Tensor curvature;
  Tensor P;
};

BerwaldTensors berwald_torsion_curvature(const FinslerStructure& fs, const BasePoint& pt, int order = kDefaultOrder);

enum class FieldKind { Metric, Direction, FinslerNorm, CartanMixed, UserScalar, UserVector, UserCovector, UserTensor };

// Field for the horizontal covariant derivative. User fields list their
// components as expressions in the structure variables; UserTensor carries a
// variance string such as "ul" and is only accepted for "", "u" and "l".
struct TensorFieldSpec {
  FieldKind kind = FieldKind::Metric;
  std::vector<Expr> components;
  std::string variance;
};

// Output: the field's indices followed by the derivative index.
Tensor rund_h_covariant(const FinslerStructure& fs, const BasePoint& pt, const TensorFieldSpec& field);
Tensor rund_h_covariant(const BaseGeometry& geo, const FinslerStructure& fs, const TensorFieldSpec& field);

}  // namespace finslerlab
