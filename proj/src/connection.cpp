#include "finslerlab/connection.hpp"

#include <cmath>

#include "finslerlab/errors.hpp"

namespace finslerlab {

Tensor SeriesTable::values() const {
  Tensor out(shape);
  auto d = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) d[i] = data[i].value();
  return out;
}

Tensor SeriesTable::gradient() const {
  const int nv = data.front().num_vars();
  if (order() < 1) throw Error(ErrorKind::OrderExceeded, "gradient of an order-0 table");
  auto sh = shape;
  sh.push_back(nv);
  Tensor out(sh);
  auto d = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int v = 0; v < nv; ++v) d[i * static_cast<std::size_t>(nv) + static_cast<std::size_t>(v)] = data[i].d(v);
  }
  return out;
}

const Tensor& BaseGeometry::require(const Tensor& t, const char* name) const {
  if (t.size() == 0) {
    throw Error(ErrorKind::OrderExceeded,
                std::string(name) + " needs a higher truncation order than " + std::to_string(order));
  }
  return t;
}

namespace {

SeriesTable make_table(std::vector<int> shape, const BasisPtr& basis) {
  std::size_t n = 1;
  for (int e : shape) n *= static_cast<std::size_t>(e);
  return SeriesTable{std::move(shape), std::vector<TaylorValue>(n, TaylorValue::zero(basis))};
}

}  // namespace

BaseGeometry compute_geometry(const FinslerStructure& fs, const BasePoint& pt, int order) {
  const int p = fs.dim();
  const int K = order;
  if (K < 2) throw Error(ErrorKind::OrderExceeded, "geometry needs truncation order >= 2");
  BaseGeometry geo;
  geo.dim = p;
  geo.order = K;
  geo.pt = pt;
  geo.f2 = expand_f_squared(fs, pt, K);
  const auto& f2 = geo.f2;
  auto s_of = [&](int a) { return pt.s[static_cast<std::size_t>(a)]; };

  // fundamental tensor and its inverse, order K-2
  auto basis2 = MultiIndexBasis::get(2 * p, K - 2);
  geo.g_series = make_table({p, p}, basis2);
  for (int a = 0; a < p; ++a) {
    auto da = f2.series_derivative(p + a);
    for (int b = a; b < p; ++b) {
      auto gab = 0.5 * da.series_derivative(p + b);
      geo.g_series(a, b) = gab;
      geo.g_series(b, a) = gab;
    }
  }
  TaylorMatrix gm(static_cast<std::size_t>(p));
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) gm[static_cast<std::size_t>(a)].push_back(geo.g_series(a, b));
  TaylorMatrix gi;
  try {
    gi = taylor_matrix_inverse(gm);
  } catch (const Error& e) {
    throw Error(ErrorKind::SingularMetric, e.what());
  }
  geo.ginv_series = make_table({p, p}, basis2);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) geo.ginv_series(a, b) = gi[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  geo.g = geo.g_series.values();
  geo.ginv = geo.ginv_series.values();

  // spray from the energy functional: G = g^{cm}/4 (d2F2/ds^m dt^n s^n - dF2/dt^m)
  geo.G_sprayE = Tensor({p});
  for (int c = 0; c < p; ++c) {
    double sum = 0.0;
    for (int m = 0; m < p; ++m) {
      double bracket = -f2.d(m);
      for (int n = 0; n < p; ++n) bracket += f2.d2(p + m, n) * s_of(n);
      sum += geo.ginv(c, m) * bracket;
    }
    geo.G_sprayE(c) = 0.25 * sum;
  }

  if (K < 3) return geo;

  // t-derivatives of g, Cartan tensor, formal Christoffel symbols: order K-3
  auto basis3 = MultiIndexBasis::get(2 * p, K - 3);
  SeriesTable dg = make_table({p, p, p}, basis3);  // (e, a, b) = dg_ab / dt^e
  SeriesTable c_lower = make_table({p, p, p}, basis3);
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int e = 0; e < p; ++e) {
        dg(e, a, b) = geo.g_series(a, b).series_derivative(e);
        c_lower(a, b, e) = 0.5 * geo.g_series(a, b).series_derivative(p + e);
      }
  geo.C = c_lower.values();

  geo.C_mixed_series = make_table({p, p, p}, basis3);
  for (int b = 0; b < p; ++b)
    for (int a = 0; a < p; ++a)
      for (int e = 0; e < p; ++e) {
        TaylorValue sum = TaylorValue::zero(basis3);
        for (int l = 0; l < p; ++l) sum += geo.ginv_series(b, l).truncated(K - 3) * c_lower(l, a, e);
        geo.C_mixed_series(b, a, e) = sum;
      }
  geo.C_mixed = geo.C_mixed_series.values();

  geo.gamma_series = make_table({p, p, p}, basis3);
  for (int m = 0; m < p; ++m)
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) {
        TaylorValue sum = TaylorValue::zero(basis3);
        for (int e = 0; e < p; ++e) {
          sum += geo.ginv_series(m, e).truncated(K - 3) * (dg(b, e, a) + dg(a, e, b) - dg(e, a, b));
        }
        sum *= 0.5;
        geo.gamma_series(m, a, b) = sum;
        geo.gamma_series(m, b, a) = sum;
      }
  geo.gamma = geo.gamma_series.values();

  std::vector<TaylorValue> s_lift;
  for (int a = 0; a < p; ++a) s_lift.push_back(lift_variable(p + a, s_of(a), basis3));
  geo.G_series = make_table({p}, basis3);
  for (int m = 0; m < p; ++m) {
    TaylorValue sum = TaylorValue::zero(basis3);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) sum += geo.gamma_series(m, a, b) * s_lift[static_cast<std::size_t>(a)] * s_lift[static_cast<std::size_t>(b)];
    geo.G_series(m) = 0.5 * sum;
  }
  geo.G = geo.G_series.values();

  // nonlinear Cartan connection as printed: gamma s - C gamma s s
  geo.N_cartan = Tensor({p, p});
  std::vector<double> gss(static_cast<std::size_t>(p), 0.0);
  for (int e = 0; e < p; ++e)
    for (int m = 0; m < p; ++m)
      for (int n = 0; n < p; ++n) gss[static_cast<std::size_t>(e)] += geo.gamma(e, m, n) * s_of(m) * s_of(n);
  for (int b = 0; b < p; ++b)
    for (int a = 0; a < p; ++a) {
      double v = 0.0;
      for (int e = 0; e < p; ++e) v += geo.gamma(b, a, e) * s_of(e) - geo.C_mixed(b, a, e) * gss[static_cast<std::size_t>(e)];
      geo.N_cartan(b, a) = v;
    }

  if (K < 4) return geo;

  // N = dG/ds, order K-4
  auto basis4 = MultiIndexBasis::get(2 * p, K - 4);
  geo.N_series = make_table({p, p}, basis4);
  for (int m = 0; m < p; ++m)
    for (int a = 0; a < p; ++a) geo.N_series(m, a) = geo.G_series(m).series_derivative(p + a);
  geo.N = geo.N_series.values();

  // generalized Christoffel symbols from delta-derivatives of g
  Tensor dgd({p, p, p});  // (m, a, b) = delta g_ma / delta t^b
  for (int m = 0; m < p; ++m)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        double v = dg(b, m, a).value();
        for (int e = 0; e < p; ++e) v -= geo.N(e, b) * geo.g_series(m, a).d(p + e);
        dgd(m, a, b) = v;
      }
  geo.Gamma = Tensor({p, p, p});
  for (int c = 0; c < p; ++c)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        double v = 0.0;
        for (int m = 0; m < p; ++m) v += geo.ginv(c, m) * (dgd(m, a, b) + dgd(m, b, a) - dgd(a, b, m));
        geo.Gamma(c, a, b) = 0.5 * v;
      }

  // Berwald coefficients through the Rund connection: Gamma + C_{|0}
  geo.B_rund = geo.Gamma;
  for (int c = 0; c < p; ++c)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        double v = 0.0;
        for (int m = 0; m < p; ++m) {
          const auto& cm = geo.C_mixed_series(c, a, b);
          double dcm = cm.d(m);
          for (int e = 0; e < p; ++e) dcm -= geo.N(e, m) * cm.d(p + e);
          for (int e = 0; e < p; ++e) {
            dcm += geo.C_mixed(e, a, b) * geo.Gamma(c, e, m) - geo.C_mixed(c, e, b) * geo.Gamma(e, a, m) -
                   geo.C_mixed(c, a, e) * geo.Gamma(e, b, m);
          }
          v += dcm * s_of(m);
        }
        geo.B_rund(c, a, b) += v;
      }

  if (K < 5) return geo;

  // B = dN/ds and N_{a:b}, order K-5
  auto basis5 = MultiIndexBasis::get(2 * p, K - 5);
  geo.B_series = make_table({p, p, p}, basis5);
  for (int c = 0; c < p; ++c)
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) {
        auto v = geo.N_series(c, a).series_derivative(p + b);
        geo.B_series(c, a, b) = v;
        geo.B_series(c, b, a) = v;
      }
  geo.B = geo.B_series.values();

  geo.dN_dt = Tensor({p, p, p});
  for (int c = 0; c < p; ++c)
    for (int a = 0; a < p; ++a)
      for (int e = 0; e < p; ++e) geo.dN_dt(c, a, e) = geo.N_series(c, a).d(e);

  geo.torsion = Tensor({p, p, p});
  auto deltaN = [&](int a, int b, int c) {  // delta N^a_b / delta t^c
    double v = geo.N_series(a, b).d(c);
    for (int e = 0; e < p; ++e) v -= geo.N(e, c) * geo.N_series(a, b).d(p + e);
    return v;
  };
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c) geo.torsion(a, b, c) = deltaN(a, b, c) - deltaN(a, c, b);

  geo.Ncol_series = make_table({p, p, p}, basis5);
  for (int c = 0; c < p; ++c)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        TaylorValue v = geo.N_series(c, a).series_derivative(b);
        for (int d = 0; d < p; ++d) v += geo.N_series(d, a).truncated(K - 5) * geo.B_series(c, d, b);
        for (int g = 0; g < p; ++g) v -= geo.N_series(c, g).truncated(K - 5) * geo.B_series(g, a, b);
        geo.Ncol_series(c, a, b) = v;
      }
  geo.Ncol = geo.Ncol_series.values();

  if (K < 6) return geo;

  geo.dB_dt = Tensor({p, p, p, p});
  geo.P = Tensor({p, p, p, p});
  geo.dNcol_dt = Tensor({p, p, p, p});
  geo.dNcol_ds = Tensor({p, p, p, p});
  for (int c = 0; c < p; ++c)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b)
        for (int e = 0; e < p; ++e) {
          geo.dB_dt(c, a, b, e) = geo.B_series(c, a, b).d(e);
          geo.P(c, a, b, e) = geo.B_series(c, a, b).d(p + e);
          geo.dNcol_dt(c, a, b, e) = geo.Ncol_series(c, a, b).d(e);
          geo.dNcol_ds(c, a, b, e) = geo.Ncol_series(c, a, b).d(p + e);
        }

  geo.curvature = Tensor({p, p, p, p});
  auto deltaB = [&](int a, int b, int c, int e) {  // delta B^a_{bc} / delta t^e
    double v = geo.dB_dt(a, b, c, e);
    for (int m = 0; m < p; ++m) v -= geo.N(m, e) * geo.P(a, b, c, m);
    return v;
  };
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c)
        for (int e = 0; e < p; ++e) {
          double v = deltaB(a, b, c, e) - deltaB(a, b, e, c);
          for (int m = 0; m < p; ++m) v += geo.B(m, b, c) * geo.B(a, m, e) - geo.B(m, b, e) * geo.B(a, m, c);
          geo.curvature(a, b, c, e) = v;
        }
  return geo;
}

DualResiduals dual_residuals(const BaseGeometry& geo) {
  const int p = geo.dim;
  DualResiduals r;
  r.spray = scaled_residual(geo.require(geo.G, "spray"), geo.G_sprayE);
  r.cartan_nlc = scaled_residual(geo.require(geo.N, "nonlinear connection"), geo.N_cartan);
  r.berwald = scaled_residual(geo.require(geo.B, "Berwald coefficients"), geo.B_rund);
  Tensor gs({p, p});
  Tensor ns({p});
  for (int c = 0; c < p; ++c) {
    for (int a = 0; a < p; ++a) {
      double v = 0.0;
      for (int m = 0; m < p; ++m) v += geo.Gamma(c, a, m) * geo.pt.s[static_cast<std::size_t>(m)];
      gs(c, a) = v;
      ns(c) += geo.N(c, a) * geo.pt.s[static_cast<std::size_t>(a)];
    }
  }
  r.n_gamma_s = scaled_residual(geo.N, gs);
  r.two_g_ns = scaled_residual(2.0 * geo.G, ns);
  return r;
}

Tensor formal_christoffel(const FinslerStructure& fs, const BasePoint& pt) {
  return compute_geometry(fs, pt, 3).gamma;
}

Tensor spray(const FinslerStructure& fs, const BasePoint& pt) {
  auto geo = compute_geometry(fs, pt, 3);
  double r = scaled_residual(geo.G, geo.G_sprayE);
  if (r > kSprayTolerance) {
    throw Error(ErrorKind::SprayMismatch, "spray formulas disagree by " + std::to_string(r));
  }
  return geo.G;
}

Tensor nonlinear_cartan(const FinslerStructure& fs, const BasePoint& pt) {
  auto geo = compute_geometry(fs, pt, 4);
  double r = scaled_residual(geo.N, geo.N_cartan);
  if (r > kCartanNlcTolerance) {
    throw Error(ErrorKind::CrossCheckFailure, "nonlinear connection differs from dG/ds by " + std::to_string(r));
  }
  return geo.N_cartan;
}

Tensor generalized_christoffel(const FinslerStructure& fs, const BasePoint& pt) {
  return compute_geometry(fs, pt, 4).Gamma;
}

Tensor berwald_coeffs(const FinslerStructure& fs, const BasePoint& pt) {
  auto geo = compute_geometry(fs, pt, 5);
  double r = scaled_residual(geo.B, geo.B_rund);
  if (r > kBerwaldTolerance) {
    throw Error(ErrorKind::CrossCheckFailure, "Berwald coefficient formulas disagree by " + std::to_string(r));
  }
  return geo.B;
}

BerwaldTensors berwald_torsion_curvature(const FinslerStructure& fs, const BasePoint& pt, int order) {
  auto geo = compute_geometry(fs, pt, order);
  return {geo.require(geo.torsion, "Berwald torsion"), geo.require(geo.curvature, "Berwald curvature"),
          geo.require(geo.P, "Berwald P-curvature")};
}

Tensor rund_h_covariant(const FinslerStructure& fs, const BasePoint& pt, const TensorFieldSpec& field) {
  return rund_h_covariant(compute_geometry(fs, pt, 4), fs, field);
}

Tensor rund_h_covariant(const BaseGeometry& geo, const FinslerStructure& fs, const TensorFieldSpec& field) {
  const int p = geo.dim;
  const auto& Gam = geo.require(geo.Gamma, "generalized Christoffel symbols");
  const auto& N = geo.N;
  // delta f / delta t^c for a series in (t, s)
  auto delta = [&](const TaylorValue& f, int c) {
    double v = f.d(c);
    for (int e = 0; e < p; ++e) v -= N(e, c) * f.d(p + e);
    return v;
  };
  auto user_series = [&](std::size_t k) {
    auto basis = MultiIndexBasis::get(2 * p, 1);
    std::vector<TaylorValue> lifted;
    for (int i = 0; i < p; ++i) lifted.push_back(lift_variable(i, geo.pt.t[static_cast<std::size_t>(i)], basis));
    for (int i = 0; i < p; ++i) lifted.push_back(lift_variable(p + i, geo.pt.s[static_cast<std::size_t>(i)], basis));
    return field.components.at(k).eval_taylor(lifted);
  };

  FieldKind kind = field.kind;
  if (kind == FieldKind::UserTensor) {
    if (field.variance.empty()) {
      kind = FieldKind::UserScalar;
    } else if (field.variance == "u") {
      kind = FieldKind::UserVector;
    } else if (field.variance == "l") {
      kind = FieldKind::UserCovector;
    } else {
      throw Error(ErrorKind::UnsupportedVariance, "variance '" + field.variance + "' is not supported");
    }
  }

  switch (kind) {
    case FieldKind::Metric: {
      Tensor out({p, p, p});
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b)
          for (int c = 0; c < p; ++c) {
            double v = delta(geo.g_series(a, b), c);
            for (int e = 0; e < p; ++e) v -= geo.g(e, b) * Gam(e, a, c) + geo.g(a, e) * Gam(e, b, c);
            out(a, b, c) = v;
          }
      return out;
    }
    case FieldKind::Direction: {
      Tensor out({p, p});
      for (int a = 0; a < p; ++a)
        for (int c = 0; c < p; ++c) {
          // delta s^a / delta t^c = -N^a_c
          double v = -N(a, c);
          for (int e = 0; e < p; ++e) v += geo.pt.s[static_cast<std::size_t>(e)] * Gam(a, e, c);
          out(a, c) = v;
        }
      return out;
    }
    case FieldKind::FinslerNorm: {
      auto F = sqrt(geo.f2.truncated(1));
      Tensor out({p});
      for (int c = 0; c < p; ++c) out(c) = delta(F, c);
      return out;
    }
    case FieldKind::CartanMixed: {
      Tensor out({p, p, p, p});
      for (int g = 0; g < p; ++g)
        for (int a = 0; a < p; ++a)
          for (int b = 0; b < p; ++b)
            for (int m = 0; m < p; ++m) {
              double v = delta(geo.C_mixed_series(g, a, b), m);
              for (int e = 0; e < p; ++e) {
                v += geo.C_mixed(e, a, b) * Gam(g, e, m) - geo.C_mixed(g, e, b) * Gam(e, a, m) -
                     geo.C_mixed(g, a, e) * Gam(e, b, m);
              }
              out(g, a, b, m) = v;
            }
      return out;
    }
    case FieldKind::UserScalar: {
      if (field.components.size() != 1) throw Error(ErrorKind::DimensionMismatch, "scalar field needs one component");
      auto f = user_series(0);
      Tensor out({p});
      for (int c = 0; c < p; ++c) out(c) = delta(f, c);
      return out;
    }
    case FieldKind::UserVector:
    case FieldKind::UserCovector: {
      if (static_cast<int>(field.components.size()) != p) {
        throw Error(ErrorKind::DimensionMismatch, "vector field needs dim components");
      }
      std::vector<TaylorValue> comp;
      for (int a = 0; a < p; ++a) comp.push_back(user_series(static_cast<std::size_t>(a)));
      Tensor out({p, p});
      for (int a = 0; a < p; ++a)
        for (int c = 0; c < p; ++c) {
          double v = delta(comp[static_cast<std::size_t>(a)], c);
          for (int e = 0; e < p; ++e) {
            if (kind == FieldKind::UserVector) {
              v += comp[static_cast<std::size_t>(e)].value() * Gam(a, e, c);
            } else {
              v -= comp[static_cast<std::size_t>(e)].value() * Gam(e, a, c);
            }
          }
          out(a, c) = v;
        }
      return out;
    }
    case FieldKind::UserTensor: break;
  }
  (void)fs;
  throw Error(ErrorKind::UnsupportedVariance, "unsupported field");
}

}  // namespace finslerlab
