#include "finslerlab/connection.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "fd_oracle.hpp"
#include "finslerlab/errors.hpp"

using namespace finslerlab;

namespace {

SampleSpec spec_for(const FinslerStructure& fs, std::uint64_t seed, int count = 16) {
  if (fs.kind() == CatalogKind::RoundSphere) {
    return SampleSpec{seed, count, {{0.5, 2.6}, {-3.0, 3.0}}, uniform_box(2, -2.0, 2.0)};
  }
  return SampleSpec{seed, count, uniform_box(fs.dim(), -1.5, 1.5), uniform_box(fs.dim(), -2.0, 2.0)};
}

std::vector<FinslerStructure> catalog() {
  return {round_sphere(), randers_default(0.3), quartic_minkowski(),
          riemannian({{"1 + t2^2", "0.2*t1"}, {"0.2*t1", "2 + sin(t1)"}}, "warped"),
          randers({{"1 + 0.3*t2^2", "0"}, {"0", "1"}}, {"0.2*cos(t1*t2)", "0.1*t1"}, "randers_mixed")};
}

// Christoffel symbols of the round sphere metric ds^2 = dt1^2 + sin(t1)^2 dt2^2.
double sphere_christoffel(int a, int b, int c, double t1) {
  if (a == 0 && b == 1 && c == 1) return -std::sin(t1) * std::cos(t1);
  if (a == 1 && ((b == 0 && c == 1) || (b == 1 && c == 0))) return std::cos(t1) / std::sin(t1);
  return 0.0;
}

double sphere_riemann(int a, int b, int c, int e, double t1) {
  auto dgam = [&](int x, int y, int z, int var) {
    if (var != 0) return 0.0;
    fd::Fn f = [&](const std::vector<double>& v) { return sphere_christoffel(x, y, z, v[0]); };
    return fd::partial(f, {t1}, {0});
  };
  double v = dgam(a, b, c, e) - dgam(a, b, e, c);
  for (int m = 0; m < 2; ++m) {
    v += sphere_christoffel(m, b, c, t1) * sphere_christoffel(a, m, e, t1) -
         sphere_christoffel(m, b, e, t1) * sphere_christoffel(a, m, c, t1);
  }
  return v;
}

}  // namespace

TEST(Connection, SphereChristoffelSymbols) {
  BasePoint pt{{0.9, 0.4}, {0.7, -1.3}};
  auto gam = formal_christoffel(round_sphere(), pt);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) EXPECT_NEAR(gam(a, b, c), sphere_christoffel(a, b, c, 0.9), 1e-14);
}

TEST(Connection, SphereCurvatureMatchesOracle) {
  for (double t1 : {0.6, 1.1, 2.2}) {
    BasePoint pt{{t1, -0.3}, {0.4, 0.9}};
    auto bt = berwald_torsion_curvature(round_sphere(), pt);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int e = 0; e < 2; ++e) {
            EXPECT_NEAR(bt.curvature(a, b, c, e), sphere_riemann(a, b, c, e, t1), 1e-8);
          }
    double s2 = std::sin(t1) * std::sin(t1);
    EXPECT_NEAR(bt.curvature(0, 1, 0, 1), -s2, 1e-12);
    EXPECT_NEAR(bt.curvature(0, 1, 1, 0), s2, 1e-12);
    EXPECT_NEAR(bt.curvature(1, 0, 0, 1), 1.0, 1e-12);
    EXPECT_NEAR(bt.curvature(1, 0, 1, 0), -1.0, 1e-12);
    EXPECT_LE(bt.P.max_abs(), 1e-12);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          double ref = 0.0;
          for (int m = 0; m < 2; ++m) ref += pt.s[static_cast<std::size_t>(m)] * sphere_riemann(a, m, b, c, t1);
          EXPECT_NEAR(bt.torsion(a, b, c), ref, 1e-8);
        }
  }
}

TEST(Connection, RiemannianReduction) {
  auto fs = riemannian({{"1 + t2^2", "0.2*t1"}, {"0.2*t1", "2 + sin(t1)"}}, "warped");
  for (const auto& pt : sample_points(spec_for(fs, 5))) {
    auto geo = compute_geometry(fs, pt);
    EXPECT_LE(max_abs_diff(geo.B, geo.gamma), 1e-12);
    EXPECT_LE(max_abs_diff(geo.Gamma, geo.gamma), 1e-12);
    EXPECT_LE(geo.C.max_abs(), 1e-13);
    EXPECT_LE(geo.P.max_abs(), 1e-11);
  }
}

TEST(Connection, SprayMatchesFiniteDifferenceOracle) {
  auto fs = randers_default(0.3);
  BasePoint pt{{0.4, -0.7}, {1.1, 0.5}};
  fd::Fn f = [&fs](const std::vector<double>& v) { return fs.f_squared().eval(v); };
  std::vector<double> v{0.4, -0.7, 1.1, 0.5};
  Tensor g({2, 2});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) g(a, b) = 0.5 * fd::partial(f, v, {2 + a, 2 + b});
  auto gi = inverse_matrix(g);
  auto G = spray(fs, pt);
  for (int c = 0; c < 2; ++c) {
    double ref = 0.0;
    for (int m = 0; m < 2; ++m) {
      double bracket = -fd::partial(f, v, {m});
      for (int n = 0; n < 2; ++n) bracket += fd::partial(f, v, {2 + m, n}) * v[static_cast<std::size_t>(2 + n)];
      ref += 0.25 * gi(c, m) * bracket;
    }
    EXPECT_NEAR(G(c), ref, 1e-7);
  }
}

TEST(Connection, DualFormulasAgreeOnCatalog) {
  for (const auto& fs : catalog()) {
    for (const auto& pt : sample_points(spec_for(fs, 11))) {
      auto r = dual_residuals(compute_geometry(fs, pt));
      EXPECT_LE(r.spray, kSprayTolerance) << fs.label();
      EXPECT_LE(r.cartan_nlc, kCartanNlcTolerance) << fs.label();
      EXPECT_LE(r.berwald, kBerwaldTolerance) << fs.label();
      EXPECT_LE(r.n_gamma_s, 1e-9) << fs.label();
      EXPECT_LE(r.two_g_ns, 1e-12) << fs.label();
    }
  }
}

TEST(Connection, RundConnectionIsMetricCompatible) {
  for (const auto& fs : catalog()) {
    for (const auto& pt : sample_points(spec_for(fs, 12, 8))) {
      auto geo = compute_geometry(fs, pt, 4);
      EXPECT_LE(rund_h_covariant(geo, fs, {FieldKind::Metric, {}, ""}).max_abs(), 1e-9) << fs.label();
      EXPECT_LE(rund_h_covariant(geo, fs, {FieldKind::Direction, {}, ""}).max_abs(), 1e-9) << fs.label();
      EXPECT_LE(rund_h_covariant(geo, fs, {FieldKind::FinslerNorm, {}, ""}).max_abs(), 1e-9) << fs.label();
    }
  }
}

TEST(Connection, HorizontalDerivativeOfUserFields) {
  auto fs = randers_default(0.3);
  BasePoint pt{{0.2, 0.5}, {0.6, -1.0}};
  auto geo = compute_geometry(fs, pt, 4);
  // F^2 as a user scalar is parallel, like F
  auto d = rund_h_covariant(geo, fs, {FieldKind::UserScalar, {fs.f_squared()}, ""});
  EXPECT_LE(d.max_abs(), 1e-9);
  // the direction field entered by hand agrees with the built-in one
  const auto& vars = fs.vars();
  TensorFieldSpec dir{FieldKind::UserTensor, {Expr::parse("s1", vars), Expr::parse("s2", vars)}, "u"};
  EXPECT_LE(rund_h_covariant(geo, fs, dir).max_abs(), 1e-9);
  // s_a = g_ab s^b is parallel as a covector
  TensorFieldSpec low{FieldKind::UserCovector, {}, ""};
  for (int a = 0; a < 2; ++a) {
    auto e = Expr::parse(a == 0 ? "s1" : "s2", vars);
    low.components.push_back(e);
  }
  auto dl = rund_h_covariant(geo, fs, low);
  EXPECT_GT(dl.max_abs(), 1e-6);  // coordinate components s^a are not a covector field
  try {
    rund_h_covariant(geo, fs, {FieldKind::UserTensor, {}, "ul"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedVariance);
  }
}

TEST(Connection, CartanTensorHorizontalDerivativeFeedsBerwald) {
  auto fs = quartic_minkowski();
  BasePoint pt{{0.0, 0.0}, {0.8, 0.3}};
  auto geo = compute_geometry(fs, pt);
  // locally Minkowski: every connection coefficient vanishes
  EXPECT_LE(geo.B.max_abs(), 1e-14);
  EXPECT_LE(rund_h_covariant(geo, fs, {FieldKind::CartanMixed, {}, ""}).max_abs(), 1e-14);
}

TEST(Connection, HomogeneityDegrees) {
  for (const auto& fs : catalog()) {
    for (const auto& pt : sample_points(spec_for(fs, 13, 6))) {
      auto geo = compute_geometry(fs, pt);
      for (double lambda : {0.5, 3.0}) {
        BasePoint sc = pt;
        for (double& x : sc.s) x *= lambda;
        auto geo2 = compute_geometry(fs, sc);
        EXPECT_LE(scaled_residual(geo2.G, lambda * lambda * geo.G), 1e-11) << fs.label();
        EXPECT_LE(scaled_residual(geo2.N, lambda * geo.N), 1e-11) << fs.label();
        EXPECT_LE(scaled_residual(geo2.B, geo.B), 1e-10) << fs.label();
        EXPECT_LE(scaled_residual(geo2.curvature, geo.curvature), 1e-9) << fs.label();
        EXPECT_LE(scaled_residual(lambda * geo2.P, geo.P), 1e-9) << fs.label();
      }
    }
  }
}

TEST(Connection, PCurvatureSymmetry) {
  auto fs = randers_default(0.3);
  for (const auto& pt : sample_points(spec_for(fs, 14, 6))) {
    auto P = compute_geometry(fs, pt).P;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int e = 0; e < 2; ++e) {
            EXPECT_NEAR(P(a, b, c, e), P(a, c, b, e), 1e-12);
            EXPECT_NEAR(P(a, b, c, e), P(a, b, e, c), 1e-9);
          }
  }
}

TEST(Connection, LinearCoordinateChangeCovariance) {
  // t = A^{-1} u, s = A^{-1} v with A = [[2, 1], [1, 1]], A^{-1} = [[1, -1], [-1, 2]]
  const double A[2][2] = {{2, 1}, {1, 1}};
  const double Ai[2][2] = {{1, -1}, {-1, 2}};
  auto fs = randers_default(0.3);
  const auto& vars = fs.vars();
  std::map<std::string, Expr> repl{{"t1", Expr::parse("t1 - t2", vars)},
                                   {"t2", Expr::parse("-t1 + 2*t2", vars)},
                                   {"s1", Expr::parse("s1 - s2", vars)},
                                   {"s2", Expr::parse("-s1 + 2*s2", vars)}};
  FinslerStructure moved(2, fs.f_squared().substitute(repl, vars), "moved");
  BasePoint pt{{0.3, -0.2}, {0.5, 1.0}};
  BasePoint up{{A[0][0] * 0.3 + A[0][1] * -0.2, A[1][0] * 0.3 + A[1][1] * -0.2},
               {A[0][0] * 0.5 + A[0][1] * 1.0, A[1][0] * 0.5 + A[1][1] * 1.0}};
  auto geo = compute_geometry(fs, pt);
  auto bar = compute_geometry(moved, up);
  Tensor B({2, 2, 2});
  Tensor R({2, 2, 2, 2});
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        double v = 0.0;
        for (int m = 0; m < 2; ++m)
          for (int n = 0; n < 2; ++n)
            for (int r = 0; r < 2; ++r) v += A[c][m] * geo.B(m, n, r) * Ai[n][a] * Ai[r][b];
        B(c, a, b) = v;
        for (int e = 0; e < 2; ++e) {
          double w = 0.0;
          for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n)
              for (int r = 0; r < 2; ++r)
                for (int q = 0; q < 2; ++q) w += A[c][m] * geo.curvature(m, n, r, q) * Ai[n][a] * Ai[r][b] * Ai[q][e];
          R(c, a, b, e) = w;
        }
      }
  EXPECT_LE(scaled_residual(bar.B, B), 1e-10);
  EXPECT_LE(scaled_residual(bar.curvature, R), 1e-9);
}

TEST(Connection, OrderBudget) {
  auto fs = randers_default(0.3);
  BasePoint pt{{0.1, 0.2}, {1.0, 0.4}};
  auto geo = compute_geometry(fs, pt, 5);
  EXPECT_GT(geo.B.size(), 0u);
  try {
    geo.require(geo.P, "P");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OrderExceeded);
  }
  EXPECT_THROW(berwald_torsion_curvature(fs, pt, 5), Error);
  EXPECT_THROW(compute_geometry(fs, pt, 1), Error);
}
