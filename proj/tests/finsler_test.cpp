#include "finslerlab/finsler.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "fd_oracle.hpp"
#include "finslerlab/errors.hpp"

using namespace finslerlab;

namespace {

fd::Fn f2_fn(const FinslerStructure& fs) {
  return [&fs](const std::vector<double>& v) { return fs.f_squared().eval(v); };
}

std::vector<double> joined(const BasePoint& pt) {
  auto v = pt.t;
  v.insert(v.end(), pt.s.begin(), pt.s.end());
  return v;
}

SampleSpec spec_for(int p, std::uint64_t seed, double tlo = -1.5, double thi = 1.5) {
  return SampleSpec{seed, 64, uniform_box(p, tlo, thi), uniform_box(p, -2.0, 2.0)};
}

std::vector<FinslerStructure> catalog() {
  return {euclidean(2), round_sphere(), randers_default(0.3), quartic_minkowski(),
          riemannian({{"1 + t2^2", "0.2*t1"}, {"0.2*t1", "2 + sin(t1)"}}, "warped")};
}

SampleSpec spec_for(const FinslerStructure& fs, std::uint64_t seed) {
  if (fs.kind() == CatalogKind::RoundSphere) {
    return SampleSpec{seed, 64, {{0.5, 2.6}, {-3.0, 3.0}}, uniform_box(2, -2.0, 2.0)};
  }
  return spec_for(fs.dim(), seed);
}

}  // namespace

TEST(Finsler, EuclideanMetricIsIdentity) {
  auto fs = euclidean(3);
  auto g = metric_tensor(fs, {{0.1, 0.2, 0.3}, {1.0, -2.0, 0.5}});
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) EXPECT_EQ(g(a, b), a == b ? 1.0 : 0.0);
}

TEST(Finsler, RiemannianRecoversMatrix) {
  auto fs = riemannian({{"1 + t2^2", "0.2*t1"}, {"0.2*t1", "2 + sin(t1)"}}, "warped");
  BasePoint pt{{0.7, -0.4}, {0.3, 1.1}};
  auto g = metric_tensor(fs, pt);
  EXPECT_NEAR(g(0, 0), 1 + 0.16, 1e-15);
  EXPECT_NEAR(g(0, 1), 0.14, 1e-15);
  EXPECT_NEAR(g(1, 0), 0.14, 1e-15);
  EXPECT_NEAR(g(1, 1), 2 + std::sin(0.7), 1e-15);
  auto c = cartan_tensor(fs, pt);
  EXPECT_EQ(c.lower.max_abs(), 0.0);
}

TEST(Finsler, RandersMetricMatchesFiniteDifferenceHessian) {
  auto fs = FinslerStructure::from_text(2, "(sqrt(s1^2+s2^2) + 0.3*s1)^2", "randers_flat");
  BasePoint pt{{0.0, 0.0}, {1.0, 0.0}};
  auto g = metric_tensor(fs, pt);
  auto f = f2_fn(fs);
  auto v = joined(pt);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double ref = 0.5 * fd::partial(f, v, {2 + a, 2 + b});
      EXPECT_LE(std::abs(g(a, b) - ref), 1e-6 * std::max(1.0, std::abs(ref))) << a << b;
    }
  auto c = cartan_tensor(fs, pt);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double sum = 0.0;
      for (int m = 0; m < 2; ++m) sum += c.lower(a, b, m) * pt.s[static_cast<std::size_t>(m)];
      EXPECT_NEAR(sum, 0.0, 1e-12);
    }
}

TEST(Finsler, QuarticCartanMatchesFiniteDifferences) {
  auto fs = quartic_minkowski();
  BasePoint pt{{0.3, 0.1}, {0.8, -0.6}};
  auto c = cartan_tensor(fs, pt);
  auto f = f2_fn(fs);
  auto v = joined(pt);
  EXPECT_GT(c.lower.max_abs(), 1e-2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int e = 0; e < 2; ++e) {
        double ref = 0.25 * fd::partial(f, v, {2 + a, 2 + b, 2 + e});
        EXPECT_LE(std::abs(c.lower(a, b, e) - ref), 1e-6 * std::max(1.0, std::abs(ref)));
      }
  auto g = metric_tensor(fs, pt);
  auto ginv = inverse_matrix(g);
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a)
      for (int e = 0; e < 2; ++e) {
        double ref = ginv(b, 0) * c.lower(0, a, e) + ginv(b, 1) * c.lower(1, a, e);
        EXPECT_NEAR(c.mixed(b, a, e), ref, 1e-15);
      }
}

TEST(Finsler, CartanTotallySymmetric) {
  auto fs = randers_default(0.3);
  auto c = cartan_tensor(fs, {{0.4, 1.2}, {0.9, -0.3}});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int e = 0; e < 2; ++e) {
        EXPECT_EQ(c.lower(a, b, e), c.lower(b, a, e));
        EXPECT_EQ(c.lower(a, b, e), c.lower(a, e, b));
      }
}

TEST(Finsler, PointGuards) {
  auto fs = round_sphere();
  try {
    metric_tensor(fs, {{1.0, 0.0}, {0.0, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroSection);
  }
  try {
    metric_tensor(fs, {{-0.5, 0.0}, {1.0, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}

TEST(Finsler, LocallyMinkowskiRejectsPositionDependence) {
  EXPECT_THROW(locally_minkowski(2, "s1^2 + t1^2*s2^2", "bad"), Error);
}

TEST(Finsler, ValidateEuclidean) {
  auto rep = validate_structure(euclidean(2), spec_for(2, 3));
  EXPECT_TRUE(rep.all_pass);
  for (const auto& c : rep.checks) {
    if (c.name == "positive_definite" || c.name == "f_squared_positive") continue;
    // zero up to the rounding of lambda = 7 rescaling
    EXPECT_LE(c.max_residual, 1e-13) << c.name;
  }
}

TEST(Finsler, ValidateRanders) {
  auto rep = validate_structure(randers_default(0.3), spec_for(2, 4));
  EXPECT_TRUE(rep.all_pass);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.max_residual;
  ASSERT_NE(rep.find("randers_beta_norm"), nullptr);
  EXPECT_LE(rep.find("randers_beta_norm")->max_residual, 0.3 + 1e-15);
}

TEST(Finsler, ValidateBrokenStructure) {
  auto fs = FinslerStructure::from_text(2, "s1^2+s2^2+t1*s1", "broken");
  auto rep = validate_structure(fs, spec_for(2, 5));
  EXPECT_FALSE(rep.all_pass);
  EXPECT_FALSE(rep.find("f_squared_homogeneity")->pass);
}

TEST(Finsler, ValidateRandersTooLarge) {
  auto rep = validate_structure(randers_default(1.2), spec_for(2, 6));
  EXPECT_FALSE(rep.all_pass);
  EXPECT_FALSE(rep.find("randers_beta_norm")->pass);
  EXPECT_EQ(rep.find("randers_beta_norm")->finding, "NotPositiveDefinite");
}

TEST(Finsler, SamplingIsDeterministic) {
  auto a = sample_points(spec_for(3, 77));
  auto b = sample_points(spec_for(3, 77));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].s, b[i].s);
  }
  auto c = sample_points(spec_for(3, 78));
  EXPECT_NE(a[0].t, c[0].t);
}

TEST(Finsler, CatalogIdentitiesAtSamples) {
  for (const auto& fs : catalog()) {
    for (const auto& pt : sample_points(spec_for(fs, 21))) {
      auto g = metric_tensor(fs, pt);
      EXPECT_GT(min_eigenvalue(g), kMinEigenvalue) << fs.label();
      for (int a = 0; a < fs.dim(); ++a)
        for (int b = 0; b < fs.dim(); ++b) EXPECT_EQ(g(a, b), g(b, a));
      double f2 = fs.f_squared_at(pt);
      double gss = 0.0;
      for (int a = 0; a < fs.dim(); ++a)
        for (int b = 0; b < fs.dim(); ++b) gss += g(a, b) * pt.s[static_cast<std::size_t>(a)] * pt.s[static_cast<std::size_t>(b)];
      EXPECT_LE(std::abs(f2 - gss), 1e-10 * std::max(1.0, f2)) << fs.label();
      auto c = cartan_tensor(fs, pt);
      for (int a = 0; a < fs.dim(); ++a)
        for (int b = 0; b < fs.dim(); ++b) {
          double sum = 0.0;
          for (int m = 0; m < fs.dim(); ++m) sum += c.lower(a, b, m) * pt.s[static_cast<std::size_t>(m)];
          EXPECT_LE(std::abs(sum), 1e-10) << fs.label();
        }
      for (double lambda : {0.5, 2.0, 7.0}) {
        BasePoint scaled = pt;
        for (double& x : scaled.s) x *= lambda;
        EXPECT_LE(scaled_residual(metric_tensor(fs, scaled), g), 1e-10) << fs.label();
      }
    }
  }
}
