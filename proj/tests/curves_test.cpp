#include "finslerlab/curves.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "finslerlab/errors.hpp"

using namespace finslerlab;

namespace {

constexpr double kPi = std::numbers::pi;

// Great circle on the unit sphere through the equator point of longitude 0,
// leaving at angle psi to the equator, in (colatitude, longitude).
std::pair<double, double> great_circle(double psi, double tau) {
  const double y = std::sin(tau) * std::cos(psi);
  const double z = std::sin(tau) * std::sin(psi);
  const double x = std::cos(tau);
  return {std::acos(z), std::atan2(y, x)};
}

}  // namespace

TEST(Curves, EuclideanRhsVanishes) {
  auto acc = autoparallel_rhs(euclidean(2), {0.0, {0.3, -1.0}, {1.0, 2.0}});
  EXPECT_EQ(acc[0], 0.0);
  EXPECT_EQ(acc[1], 0.0);
}

TEST(Curves, SphereEquatorRhs) {
  auto acc = autoparallel_rhs(round_sphere(), {0.0, {kPi / 2, 0.4}, {0.0, 1.0}});
  EXPECT_NEAR(acc[0], 0.0, 1e-15);
  EXPECT_NEAR(acc[1], 0.0, 1e-15);
}

TEST(Curves, RhsFormsAgree) {
  auto fs = randers_default(0.3);
  CurveState st{0.0, {0.4, -0.8}, {0.9, 0.35}};
  auto n = autoparallel_rhs(fs, st, RhsForm::Nonlinear);
  auto r = autoparallel_rhs(fs, st, RhsForm::Rund);
  auto f = autoparallel_rhs(fs, st, RhsForm::Formal);
  for (int a = 0; a < 2; ++a) {
    EXPECT_NEAR(n[static_cast<std::size_t>(a)], r[static_cast<std::size_t>(a)], 1e-10);
    EXPECT_NEAR(n[static_cast<std::size_t>(a)], f[static_cast<std::size_t>(a)], 1e-10);
  }
}

TEST(Curves, ZeroVelocityRejected) {
  try {
    autoparallel_rhs(euclidean(2), {0.0, {0.0, 0.0}, {0.0, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVelocity);
  }
  EXPECT_THROW(integrate_autoparallel(euclidean(2), {0.0, {0.0, 0.0}, {0.0, 0.0}}, 1.0), Error);
}

TEST(Curves, EuclideanStraightLine) {
  auto tr = integrate_autoparallel(euclidean(2), {0.0, {0.0, 0.0}, {1.0, 1.0}}, 1.0);
  const auto& end = tr.samples.back();
  EXPECT_EQ(end.time, 1.0);
  EXPECT_NEAR(end.position[0], 1.0, 1e-9);
  EXPECT_NEAR(end.position[1], 1.0, 1e-9);
  for (std::size_t i = 1; i < tr.samples.size(); ++i) EXPECT_GT(tr.samples[i].time, tr.samples[i - 1].time);
}

TEST(Curves, SphereEquatorStaysOnEquator) {
  auto tr = integrate_autoparallel(round_sphere(), {0.0, {kPi / 2, 0.0}, {0.0, 1.0}}, 2 * kPi, {1e-8, 200});
  double drift = 0.0;
  for (const auto& st : tr.samples) drift = std::max(drift, std::abs(st.position[0] - kPi / 2));
  EXPECT_LE(drift, 1e-6);
  EXPECT_NEAR(tr.samples.back().position[1], 2 * kPi, 1e-6);
}

TEST(Curves, SphereGreatCircle) {
  const double psi = 0.7;
  auto tr = integrate_autoparallel(round_sphere(), {0.0, {kPi / 2, 0.0}, {-std::sin(psi), std::cos(psi)}}, 2.0,
                                   {1e-10, 41});
  for (const auto& st : tr.samples) {
    auto [colat, lon] = great_circle(psi, st.time);
    EXPECT_NEAR(st.position[0], colat, 1e-8);
    EXPECT_NEAR(st.position[1], lon, 1e-8);
  }
}

TEST(Curves, RandersConstantSpeed) {
  auto fs = randers_default(0.3);
  auto tr = integrate_autoparallel(fs, {0.0, {0.2, -0.4}, {0.8, 0.6}}, 3.0, {1e-8, 61});
  EXPECT_LE(speed_drift(tr), 10 * 1e-8);
}

TEST(Curves, TimeRescaling) {
  auto fs = randers_default(0.3);
  auto a = integrate_autoparallel(fs, {0.0, {0.2, -0.4}, {0.8, 0.6}}, 2.0);
  auto b = integrate_autoparallel(fs, {0.0, {0.2, -0.4}, {1.6, 1.2}}, 1.0);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(a.samples.back().position[static_cast<std::size_t>(i)],
                b.samples.back().position[static_cast<std::size_t>(i)], 10 * 1e-8);
  }
}

TEST(Curves, AlternativeFormsDefineSameTrajectory) {
  auto fs = randers_default(0.3);
  CurveState init{0.0, {0.2, -0.4}, {0.8, 0.6}};
  auto tr = integrate_autoparallel(fs, init, 2.0);
  EXPECT_LE(form_residual(fs, tr, RhsForm::Rund), 10 * 1e-8);
  EXPECT_LE(form_residual(fs, tr, RhsForm::Formal), 10 * 1e-8);
  IntegrateOptions rund;
  rund.form = RhsForm::Rund;
  auto tr2 = integrate_autoparallel(fs, init, 2.0, rund);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(tr.samples.back().position[static_cast<std::size_t>(i)],
                tr2.samples.back().position[static_cast<std::size_t>(i)], 10 * 1e-8);
  }
}

TEST(Curves, DenseOutputAccelerationSatisfiesForm) {
  auto fs = randers_default(0.3);
  auto tr = integrate_autoparallel(fs, {0.0, {0.2, -0.4}, {0.8, 0.6}}, 2.0, {1e-8, 101});
  EXPECT_LE(form_residual(fs, tr, RhsForm::Rund), 1e-5);
}

TEST(Curves, EnergyOfStraightLine) {
  auto tr = integrate_autoparallel(euclidean(2), {0.0, {0.0, 0.0}, {1.0, 1.0}}, 1.0, {1e-8, 11});
  EXPECT_NEAR(energy(euclidean(2), tr), 2.0, 1e-12);
}

TEST(Curves, EnergyOfGeodesicAndPerturbation) {
  auto fs = randers_default(0.3);
  const double T = 1.5;
  auto tr = integrate_autoparallel(fs, {0.0, {0.2, -0.4}, {0.8, 0.6}}, T, {1e-10, 201});
  const double f0 = tr.speed.front();
  const double e = energy(fs, tr);
  EXPECT_NEAR(e, f0 * f0 * T, 1e-8);
  GeodesicTrace bent = tr;
  for (auto& st : bent.samples) {
    const double w = std::sin(kPi * st.time / T);
    const double dw = kPi / T * std::cos(kPi * st.time / T);
    st.position[0] += 0.05 * w;
    st.position[1] -= 0.03 * w;
    st.velocity[0] += 0.05 * dw;
    st.velocity[1] -= 0.03 * dw;
  }
  EXPECT_GT(energy(fs, bent), e);
}

TEST(Curves, ParallelMatchesSequential) {
  auto fs = randers_default(0.3);
  std::vector<CurveState> init{{0.0, {0.2, -0.4}, {0.8, 0.6}}, {0.0, {0.0, 0.5}, {-0.3, 1.0}},
                               {0.0, {-0.7, 0.1}, {0.5, -0.5}}};
  auto many = integrate_many(fs, init, 1.0);
  for (std::size_t i = 0; i < init.size(); ++i) {
    auto one = integrate_autoparallel(fs, init[i], 1.0);
    EXPECT_EQ(many[i].samples.back().position, one.samples.back().position);
  }
}

TEST(Curves, CsvColumns) {
  auto tr = integrate_autoparallel(euclidean(2), {0.0, {0.0, 0.0}, {1.0, 1.0}}, 1.0, {1e-8, 3});
  std::ostringstream os;
  write_trace_csv(os, tr);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "time,t1,t2,v1,v2,speed_F");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  EXPECT_EQ(rows, 3);
}
