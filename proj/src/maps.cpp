#include "finslerlab/maps.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "finslerlab/connection.hpp"
#include "finslerlab/errors.hpp"

namespace finslerlab {

SmoothMap::SmoothMap(int source_dim, std::vector<Expr> components) : p_(source_dim), components_(std::move(components)) {
  if (components_.empty()) throw Error(ErrorKind::ConfigError, "map needs at least one component");
  for (const auto& c : components_) {
    if (static_cast<int>(c.vars().size()) != p_) {
      throw Error(ErrorKind::DimensionMismatch, "map components must be expressions in the source positions");
    }
  }
}

SmoothMap SmoothMap::from_text(int source_dim, const std::vector<std::string>& components, const CoordNames& names) {
  std::vector<std::string> vars;
  for (int a = 1; a <= source_dim; ++a) vars.push_back(names.position + std::to_string(a));
  std::vector<Expr> out;
  for (const auto& c : components) out.push_back(Expr::parse(c, vars));
  return SmoothMap(source_dim, std::move(out));
}

SmoothMap SmoothMap::identity(int dim, const CoordNames& names) {
  std::vector<std::string> comps;
  for (int a = 1; a <= dim; ++a) comps.push_back(names.position + std::to_string(a));
  return from_text(dim, comps, names);
}

MapDifferentials map_differentials(const SmoothMap& m, const BasePoint& pt, bool require_fiber) {
  const int p = m.source_dim();
  const int n = m.target_dim();
  if (static_cast<int>(pt.t.size()) != p || static_cast<int>(pt.s.size()) != p) {
    throw Error(ErrorKind::DimensionMismatch, "point dimension differs from the map source");
  }
  auto basis = MultiIndexBasis::get(p, 2);
  std::vector<TaylorValue> lifted;
  for (int a = 0; a < p; ++a) lifted.push_back(lift_variable(a, pt.t[static_cast<std::size_t>(a)], basis));
  MapDifferentials out{Tensor({n, p}), Tensor({n, p, p}), BasePoint{std::vector<double>(static_cast<std::size_t>(n)),
                                                                     std::vector<double>(static_cast<std::size_t>(n))}};
  for (int i = 0; i < n; ++i) {
    auto f = m.components()[static_cast<std::size_t>(i)].eval_taylor(lifted);
    out.pushed.t[static_cast<std::size_t>(i)] = f.value();
    double y = 0.0;
    for (int a = 0; a < p; ++a) {
      out.jacobian(i, a) = f.d(a);
      y += f.d(a) * pt.s[static_cast<std::size_t>(a)];
      for (int b = 0; b < p; ++b) out.hessian(i, a, b) = f.d2(a, b);
    }
    out.pushed.s[static_cast<std::size_t>(i)] = y;
  }
  if (require_fiber) {
    double ny = 0.0;
    for (double y : out.pushed.s) ny += y * y;
    if (std::sqrt(ny) < kEpsilonZeroSection) {
      throw Error(ErrorKind::TargetZeroSection, "dphi(s) lies on the target zero section");
    }
  }
  return out;
}

namespace {

double smallest_singular_value(const Tensor& jac) {
  const int n = jac.extent(0);
  const int p = jac.extent(1);
  Eigen::MatrixXd J(n, p);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a) J(i, a) = jac(i, a);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  return svd.singularValues().minCoeff();
}

struct MapGeometry {
  MapDifferentials diff;
  BaseGeometry src;
  BaseGeometry tgt;
  Tensor tau;
};

MapGeometry map_geometry(const FinslerStructure& src, const FinslerStructure& tgt, const SmoothMap& m,
                         const BasePoint& pt) {
  const int p = m.source_dim();
  const int n = m.target_dim();
  if (src.dim() != p || tgt.dim() != n) throw Error(ErrorKind::DimensionMismatch, "map and structure dimensions differ");
  src.check_point(pt);
  MapGeometry mg{map_differentials(m, pt), compute_geometry(src, pt, 5), {}, Tensor({n, p, p})};
  mg.tgt = compute_geometry(tgt, mg.diff.pushed, 5);
  const auto& J = mg.diff.jacobian;
  const auto& H = mg.diff.hessian;
  const auto& B = mg.src.B;
  const auto& Bt = mg.tgt.B;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) {
        double v = H(i, a, b);
        for (int g = 0; g < p; ++g) v -= B(g, a, b) * J(i, g);
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) v += Bt(i, j, k) * J(j, a) * J(k, b);
        mg.tau(i, a, b) = v;
        mg.tau(i, b, a) = v;
      }
  return mg;
}

}  // namespace

NondegeneracyReport nondegeneracy_check(const SmoothMap& m, const std::vector<BasePoint>& pts, double threshold) {
  if (m.source_dim() > m.target_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "nondegeneracy needs source dimension <= target dimension");
  }
  NondegeneracyReport rep;
  for (const auto& pt : pts) {
    double s = smallest_singular_value(map_differentials(m, pt, false).jacobian);
    rep.sigma_min.push_back(s);
    if (!(s >= threshold)) rep.pass = false;
  }
  return rep;
}

AffineResidual affine_residual(const FinslerStructure& src, const FinslerStructure& tgt, const SmoothMap& m,
                               const BasePoint& pt) {
  auto mg = map_geometry(src, tgt, m, pt);
  AffineResidual out;
  out.sup = mg.tau.max_abs();
  out.tau = std::move(mg.tau);
  out.nondegenerate = m.source_dim() <= m.target_dim() && smallest_singular_value(mg.diff.jacobian) >= kSigmaMin;
  return out;
}

IsometryReport isometry_check(const FinslerStructure& src, const FinslerStructure& tgt, const SmoothMap& m,
                              const std::vector<BasePoint>& pts, double tolerance) {
  const int p = m.source_dim();
  const int n = m.target_dim();
  if (p != n || src.dim() != p || tgt.dim() != n) {
    throw Error(ErrorKind::DimensionMismatch, "isometry needs equal dimensions");
  }
  IsometryReport rep;
  for (const auto& pt : pts) {
    auto diff = map_differentials(m, pt);
    if (smallest_singular_value(diff.jacobian) < kSigmaMin) {
      throw Error(ErrorKind::SingularJacobian, "map Jacobian is singular at a sample");
    }
    const double f = src.F(pt);
    rep.scalar_residual = std::max(rep.scalar_residual, std::abs(f - tgt.F(diff.pushed)) / std::max(1.0, f));
    auto g = metric_tensor(src, pt);
    auto gt = metric_tensor(tgt, diff.pushed);
    Tensor pull({p, p});
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        double v = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) v += gt(i, j) * diff.jacobian(i, a) * diff.jacobian(j, b);
        pull(a, b) = v;
      }
    rep.tensor_residual = std::max(rep.tensor_residual, scaled_residual(g, pull));
  }
  rep.pass = rep.scalar_residual <= tolerance && rep.tensor_residual <= tolerance;
  return rep;
}

TensionField tension_field(const FinslerStructure& src, const FinslerStructure& tgt, const SmoothMap& m,
                           const BasePoint& pt) {
  const int p = m.source_dim();
  const int n = m.target_dim();
  auto mg = map_geometry(src, tgt, m, pt);
  const auto& J = mg.diff.jacobian;
  const auto& H = mg.diff.hessian;
  const auto& tau = mg.tau;
  const auto& ginv = mg.src.ginv;
  const auto& s = pt.s;
  const auto& tg = mg.tgt;
  // C~^i_{jkl} = g~^{im} dC~_{jkl}/dy^m with C~_{jkl} = 1/2 dg~_{jk}/dy^l
  Tensor c4({n, n, n, n});
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        std::vector<double> dc(static_cast<std::size_t>(n));
        for (int q = 0; q < n; ++q) dc[static_cast<std::size_t>(q)] = 0.5 * tg.g_series(j, k).d2(n + l, n + q);
        for (int i = 0; i < n; ++i) {
          double v = 0.0;
          for (int q = 0; q < n; ++q) v += tg.ginv(i, q) * dc[static_cast<std::size_t>(q)];
          c4(i, j, k, l) = v;
        }
      }
  // Rund-form braces of the full expression
  Tensor brace({n, p, p});
  for (int j = 0; j < n; ++j)
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b) {
        double v = H(j, a, b);
        for (int mu = 0; mu < p; ++mu) v -= mg.src.Gamma(mu, a, b) * J(j, mu);
        for (int q = 0; q < n; ++q)
          for (int r = 0; r < n; ++r) v += tg.Gamma(j, q, r) * J(q, a) * J(r, b);
        brace(j, a, b) = v;
      }
  auto assemble = [&](const Tensor& second) {
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
          const double gab = ginv(a, b);
          double term = tau(i, a, b);
          for (int j = 0; j < n; ++j) {
            double ts = 0.0;
            double tss = 0.0;
            for (int g = 0; g < p; ++g) {
              ts += second(j, b, g) * s[static_cast<std::size_t>(g)];
              for (int e = 0; e < p; ++e) tss += second(j, g, e) * s[static_cast<std::size_t>(g)] * s[static_cast<std::size_t>(e)];
            }
            for (int k = 0; k < n; ++k) {
              term += 4.0 * tg.C_mixed(i, j, k) * J(k, a) * ts;
              for (int l = 0; l < n; ++l) term += c4(i, j, k, l) * J(k, a) * J(l, b) * tss;
            }
          }
          v += gab * term;
        }
      out[static_cast<std::size_t>(i)] = v;
    }
    return out;
  };
  TensionField tf;
  tf.tau = assemble(tau);
  tf.tau_full = assemble(brace);
  tf.cross_residual = scaled_residual(std::span<const double>(tf.tau), std::span<const double>(tf.tau_full));
  return tf;
}

TransportReport autoparallel_transport_test(const FinslerStructure& src, const FinslerStructure& tgt,
                                            const SmoothMap& m, const CurveState& initial, double t_final,
                                            double tol, int samples) {
  const int p = m.source_dim();
  const int n = m.target_dim();
  TransportReport rep;
  rep.source = integrate_autoparallel(src, initial, t_final, {tol, samples});
  for (const auto& st : rep.source.samples) {
    BasePoint pt{st.position, st.velocity};
    auto diff = map_differentials(m, pt);
    auto acc = autoparallel_rhs(src, st);
    std::vector<double> xdd(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int a = 0; a < p; ++a) {
        v += diff.jacobian(i, a) * acc[static_cast<std::size_t>(a)];
        for (int b = 0; b < p; ++b) v += diff.hessian(i, a, b) * st.velocity[static_cast<std::size_t>(a)] * st.velocity[static_cast<std::size_t>(b)];
      }
      xdd[static_cast<std::size_t>(i)] = v;
    }
    CurveState image{st.time, diff.pushed.t, diff.pushed.s};
    auto target_acc = autoparallel_rhs(tgt, image);
    double r = 0.0;
    for (int i = 0; i < n; ++i) r = std::max(r, std::abs(xdd[static_cast<std::size_t>(i)] - target_acc[static_cast<std::size_t>(i)]));
    if (r > rep.sup_residual) {
      rep.sup_residual = r;
      rep.witness_time = st.time;
    }
  }
  return rep;
}

}  // namespace finslerlab
