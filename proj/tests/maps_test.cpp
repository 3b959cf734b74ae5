#include "finslerlab/maps.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "finslerlab/connection.hpp"
#include "finslerlab/errors.hpp"

using namespace finslerlab;

namespace {

SampleSpec spec(int p, std::uint64_t seed, int count = 16) {
  return SampleSpec{seed, count, uniform_box(p, -1.0, 1.0), uniform_box(p, -2.0, 2.0)};
}

// rotation by 0.6 rad, written out with its numeric entries
const double kC = std::cos(0.6);
const double kS = std::sin(0.6);

SmoothMap rotation() {
  char a[128], b[128];
  std::snprintf(a, sizeof a, "%.17g*t1 - %.17g*t2", kC, kS);
  std::snprintf(b, sizeof b, "%.17g*t1 + %.17g*t2", kS, kC);
  return SmoothMap::from_text(2, {a, b});
}

FinslerStructure flat_riemannian() {
  return riemannian({{"2", "0.5"}, {"0.5", "1"}}, "flat");
}

}  // namespace

TEST(Maps, DifferentialsOfLinearMap) {
  auto m = SmoothMap::from_text(2, {"2*t1 - t2", "0.5*t2", "t1 + t2"});
  auto d = map_differentials(m, {{0.3, 0.4}, {1.0, 2.0}});
  EXPECT_EQ(d.jacobian(0, 0), 2.0);
  EXPECT_EQ(d.jacobian(0, 1), -1.0);
  EXPECT_EQ(d.jacobian(1, 1), 0.5);
  EXPECT_EQ(d.hessian.max_abs(), 0.0);
  EXPECT_NEAR(d.pushed.t[0], 0.2, 1e-15);
  EXPECT_NEAR(d.pushed.s[2], 3.0, 1e-15);
}

TEST(Maps, DifferentialsOfIdentityAndQuadratic) {
  auto id = map_differentials(SmoothMap::identity(2), {{0.3, 0.4}, {1.0, 2.0}});
  EXPECT_EQ(id.jacobian(0, 0), 1.0);
  EXPECT_EQ(id.jacobian(0, 1), 0.0);
  EXPECT_EQ(id.hessian.max_abs(), 0.0);
  auto q = map_differentials(SmoothMap::from_text(2, {"t1^2", "t2"}), {{0.3, 0.4}, {1.0, 2.0}});
  EXPECT_EQ(q.hessian(0, 0, 0), 2.0);
}

TEST(Maps, TargetZeroSection) {
  auto m = SmoothMap::from_text(2, {"t1 + t2", "t1 + t2"});
  try {
    map_differentials(m, {{0.0, 0.0}, {1.0, -1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TargetZeroSection);
  }
}

TEST(Maps, Nondegeneracy) {
  auto pts = sample_points(spec(2, 1, 4));
  auto id = nondegeneracy_check(SmoothMap::identity(2), pts);
  EXPECT_TRUE(id.pass);
  for (double s : id.sigma_min) EXPECT_NEAR(s, 1.0, 1e-15);
  auto diag = nondegeneracy_check(SmoothMap::from_text(1, {"t1", "t1"}), {{{0.2}, {1.0}}});
  EXPECT_TRUE(diag.pass);
  EXPECT_NEAR(diag.sigma_min[0], std::sqrt(2.0), 1e-15);
  auto bad = nondegeneracy_check(SmoothMap::from_text(2, {"t1*t2", "0"}), {{{0.0, 0.0}, {1.0, 1.0}}});
  EXPECT_FALSE(bad.pass);
  EXPECT_THROW(nondegeneracy_check(SmoothMap::from_text(2, {"t1"}), pts), Error);
}

TEST(Maps, AffineResidualExamples) {
  BasePoint pt{{0.3, -0.2}, {0.7, 0.4}};
  auto id = affine_residual(flat_riemannian(), quartic_minkowski(), SmoothMap::identity(2), pt);
  EXPECT_LE(id.sup, 1e-10);
  auto lin = affine_residual(euclidean(2), euclidean(3), SmoothMap::from_text(2, {"t1 - t2", "3*t2", "t1"}), pt);
  EXPECT_EQ(lin.sup, 0.0);
  auto quad = affine_residual(euclidean(2), euclidean(2), SmoothMap::from_text(2, {"t1^2", "t2"}), pt);
  EXPECT_EQ(quad.tau(0, 0, 0), 2.0);
  EXPECT_EQ(quad.tau(0, 0, 1), 0.0);
  EXPECT_EQ(quad.tau(1, 0, 0), 0.0);
}

TEST(Maps, AffineResidualIsSymmetric) {
  auto m = SmoothMap::from_text(2, {"t1 + 0.1*t2^2", "t2 - 0.2*t1*t2"});
  for (const auto& pt : sample_points(spec(2, 2, 8))) {
    auto r = affine_residual(randers_default(0.3), randers_default(0.2), m, pt);
    for (int i = 0; i < 2; ++i) EXPECT_EQ(r.tau(i, 0, 1), r.tau(i, 1, 0));
  }
}

TEST(Maps, IsometryExamples) {
  auto pts = sample_points(spec(2, 3));
  auto same = isometry_check(randers_default(0.3), randers_default(0.3), SmoothMap::identity(2), pts);
  EXPECT_TRUE(same.pass);
  EXPECT_EQ(same.scalar_residual, 0.0);
  auto rot = isometry_check(euclidean(2), euclidean(2), rotation(), pts);
  EXPECT_LE(rot.scalar_residual, 1e-12);
  EXPECT_LE(rot.tensor_residual, 1e-12);
  auto tilted = randers({{"1", "0"}, {"0", "1"}}, {"0.3", "0"}, "tilted");
  auto bad = isometry_check(tilted, tilted, rotation(), pts);
  EXPECT_FALSE(bad.pass);
  EXPECT_THROW(isometry_check(euclidean(2), euclidean(2), SmoothMap::from_text(2, {"t1", "t1"}), pts), Error);
}

TEST(Maps, IsometryImpliesAffine) {
  // pushforward of a Randers structure along x = A t, A = [[2, 1], [1, 1]]
  auto src = randers_default(0.3);
  const auto& vars = src.vars();
  std::map<std::string, Expr> repl{{"t1", Expr::parse("t1 - t2", vars)},
                                   {"t2", Expr::parse("-t1 + 2*t2", vars)},
                                   {"s1", Expr::parse("s1 - s2", vars)},
                                   {"s2", Expr::parse("-s1 + 2*s2", vars)}};
  FinslerStructure tgt(2, src.f_squared().substitute(repl, vars), "pushed");
  auto m = SmoothMap::from_text(2, {"2*t1 + t2", "t1 + t2"});
  auto pts = sample_points(spec(2, 4));
  auto iso = isometry_check(src, tgt, m, pts);
  EXPECT_TRUE(iso.pass) << iso.scalar_residual << " " << iso.tensor_residual;
  for (const auto& pt : pts) EXPECT_LE(affine_residual(src, tgt, m, pt).sup, 1e-8);
  EXPECT_LE(affine_residual(euclidean(2), euclidean(2), rotation(), pts[0]).sup, 1e-8);
}

TEST(Maps, TensionExamples) {
  BasePoint pt{{0.3, -0.2}, {0.7, 0.4}};
  auto id = tension_field(flat_riemannian(), quartic_minkowski(), SmoothMap::identity(2), pt);
  for (double v : id.tau) EXPECT_LE(std::abs(v), 1e-8);
  auto quad = tension_field(euclidean(2), euclidean(2), SmoothMap::from_text(2, {"t1^2", "t2"}), pt);
  EXPECT_EQ(quad.tau[0], 2.0);
  EXPECT_EQ(quad.tau[1], 0.0);
}

TEST(Maps, TensionFormsAgreeOnRandersTarget) {
  auto m = SmoothMap::from_text(2, {"t1 + 0.1*t2^2", "t2 - 0.2*t1*t2"});
  for (const auto& pt : sample_points(spec(2, 5, 8))) {
    auto tf = tension_field(randers_default(0.3), randers_default(0.25), m, pt);
    EXPECT_LE(tf.cross_residual, 1e-8);
  }
}

TEST(Maps, IdentityCriterion) {
  auto a = riemannian({{"1 + t2^2", "0.2*t1"}, {"0.2*t1", "2 + sin(t1)"}}, "warped");
  auto b = FinslerStructure::from_text(2, "(1 + t2^2)*s1^2 + 0.4*t1*s1*s2 + (2 + sin(t1))*s2^2", "warped_expanded");
  auto id = SmoothMap::identity(2);
  for (const auto& pt : sample_points(spec(2, 6, 8))) {
    EXPECT_LE(affine_residual(a, b, id, pt).sup, 1e-8);
    EXPECT_LE(max_abs_diff(spray(a, pt), spray(b, pt)), 1e-12);
  }
  double worst = 0.0;
  double spray_gap = 0.0;
  for (const auto& pt : sample_points(spec(2, 7, 8))) {
    worst = std::max(worst, affine_residual(euclidean(2), randers_default(0.3), id, pt).sup);
    spray_gap = std::max(spray_gap, max_abs_diff(spray(euclidean(2), pt), spray(randers_default(0.3), pt)));
  }
  EXPECT_GE(worst, 1e-2);
  EXPECT_GE(spray_gap, 1e-2);
}

TEST(Maps, TransportAlongAutoparallels) {
  CurveState init{0.0, {0.1, 0.2}, {0.6, 0.8}};
  auto lin = autoparallel_transport_test(euclidean(2), euclidean(2), SmoothMap::from_text(2, {"2*t1 - t2", "t1 + 3*t2"}),
                                         init, 1.0);
  EXPECT_LE(lin.sup_residual, 10 * 1e-8);
  auto id = autoparallel_transport_test(flat_riemannian(), quartic_minkowski(), SmoothMap::identity(2), init, 1.0);
  EXPECT_LE(id.sup_residual, 10 * 1e-8);
  auto quad = autoparallel_transport_test(euclidean(2), euclidean(2), SmoothMap::from_text(2, {"t1^2", "t2"}), init, 1.0);
  EXPECT_GE(quad.sup_residual, 1e-2);
}

TEST(Maps, AffineCurveIsTargetAutoparallel) {
  auto line = FinslerStructure::from_text(1, "s1^2", "line");
  auto curve = SmoothMap::from_text(1, {"2*t1", "3*t1 + 1"});
  BasePoint pt{{0.4}, {1.0}};
  EXPECT_LE(affine_residual(line, euclidean(2), curve, pt).sup, 1e-12);
  auto rep = autoparallel_transport_test(line, euclidean(2), curve, {0.0, {0.0}, {1.0}}, 1.0);
  EXPECT_LE(rep.sup_residual, 1e-10);
  // a great circle of the sphere parametrized by arc length is affine from the line
  auto circle = SmoothMap::from_text(1, {"1.5707963267948966", "t1"});
  auto sph = round_sphere();
  EXPECT_LE(affine_residual(line, sph, circle, pt).sup, 1e-12);
}
