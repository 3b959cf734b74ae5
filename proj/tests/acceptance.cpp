// Acceptance run: one [PASS]/[FAIL] line per criterion, exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "finslerlab/app.hpp"
#include "finslerlab/connection.hpp"
#include "finslerlab/curves.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/jetspace.hpp"
#include "finslerlab/maps.hpp"
#include "finslerlab/parallel.hpp"

using namespace finslerlab;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "=%.3g", value);
    if (!detail.empty()) detail += ", ";
    detail += what + buf;
    if (!ok) {
      pass = false;
      detail += " (!)";
    }
  }
};

SampleSpec spec_for(const FinslerStructure& fs, std::uint64_t seed, int count) {
  SampleSpec s{seed, count, uniform_box(fs.dim(), -1.0, 1.0), uniform_box(fs.dim(), -2.0, 2.0)};
  if (fs.kind() == CatalogKind::RoundSphere) s.t_box[0] = Interval{0.3, kPi - 0.3};
  return s;
}

JetSampleSpec jet_spec(const FinslerStructure& src, const FinslerStructure& tgt, std::uint64_t seed, int count) {
  auto s = default_jet_spec(src.dim(), tgt.dim(), seed, count);
  if (src.kind() == CatalogKind::RoundSphere) s.t_box[0] = Interval{0.3, kPi - 0.3};
  if (tgt.kind() == CatalogKind::RoundSphere) s.x_box[0] = Interval{0.3, kPi - 0.3};
  return s;
}

Outcome structure_identities() {
  Outcome o;
  for (const auto& fs : {euclidean(2), round_sphere(), randers_default(0.3), quartic_minkowski()}) {
    auto rep = validate_structure(fs, spec_for(fs, 101, 64), 1e-10);
    double worst = 0.0;
    for (const char* name : {"euler_identity", "f_squared_homogeneity", "cartan_contraction", "metric_homogeneity"}) {
      worst = std::max(worst, rep.find(name)->max_residual);
    }
    o.require(rep.samples == 64 && worst <= 1e-10, fs.label(), worst);
  }
  return o;
}

std::vector<FinslerStructure> catalog() {
  return {euclidean(2), round_sphere(), randers_default(0.3), quartic_minkowski(),
          riemannian({{"1 + t2^2", "0.2*t1"}, {"0.2*t1", "2 + sin(t1)"}}, "warped")};
}

Outcome dual_formulas() {
  Outcome o;
  for (const auto& fs : catalog()) {
    double worst = 0.0;
    for (const auto& pt : sample_points(spec_for(fs, 202, 16))) {
      auto r = dual_residuals(compute_geometry(fs, pt));
      worst = std::max({worst, r.spray, r.cartan_nlc, r.berwald, r.n_gamma_s, r.two_g_ns});
    }
    o.require(worst <= 1e-8, fs.label(), worst);
  }
  return o;
}

Outcome rund_compatibility() {
  Outcome o;
  for (const auto& fs : {randers_default(0.3), round_sphere()}) {
    double worst = 0.0;
    for (const auto& pt : sample_points(spec_for(fs, 303, 16))) {
      auto geo = compute_geometry(fs, pt, 4);
      for (auto kind : {FieldKind::Metric, FieldKind::Direction, FieldKind::FinslerNorm}) {
        worst = std::max(worst, rund_h_covariant(geo, fs, {kind, {}, ""}).max_abs());
      }
    }
    o.require(worst <= 1e-8, fs.label(), worst);
  }
  return o;
}

Outcome riemannian_reduction() {
  Outcome o;
  double b_gamma = 0.0, p_max = 0.0, riemann = 0.0;
  for (const auto& pt : sample_points(spec_for(round_sphere(), 404, 16))) {
    auto geo = compute_geometry(round_sphere(), pt);
    const double sn = std::sin(pt.t[0]);
    const double cs = std::cos(pt.t[0]);
    // Christoffel symbols and Riemann tensor of diag(1, sin^2 t1), by hand
    double chr[2][2][2] = {};
    chr[0][1][1] = -sn * cs;
    chr[1][0][1] = chr[1][1][0] = cs / sn;
    Tensor R({2, 2, 2, 2});
    R(0, 1, 0, 1) = -sn * sn;
    R(0, 1, 1, 0) = sn * sn;
    R(1, 0, 0, 1) = 1.0;
    R(1, 0, 1, 0) = -1.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          b_gamma = std::max({b_gamma, std::abs(geo.B(a, b, c) - geo.gamma(a, b, c)),
                              std::abs(geo.B(a, b, c) - chr[a][b][c])});
        }
    p_max = std::max(p_max, geo.P.max_abs());
    riemann = std::max(riemann, max_abs_diff(geo.curvature, R));
  }
  o.require(b_gamma <= 1e-10, "B-gamma", b_gamma);
  o.require(p_max <= 1e-10, "P", p_max);
  o.require(riemann <= 1e-8, "R-hand", riemann);
  return o;
}

Outcome berwald_symmetry() {
  Outcome o;
  double worst = 0.0;
  auto fs = randers_default(0.3);
  for (const auto& pt : sample_points(spec_for(fs, 505, 32))) {
    auto P = compute_geometry(fs, pt).P;
    const double scale = std::max(1.0, P.max_abs());
    for_each_index(P.shape(), [&](std::span<const int> k) {
      const double v = P.at(k);
      const int perms[5][3] = {{1, 3, 2}, {2, 1, 3}, {2, 3, 1}, {3, 1, 2}, {3, 2, 1}};
      for (const auto& pm : perms) {
        std::vector<int> q{k[0], k[static_cast<std::size_t>(pm[0])], k[static_cast<std::size_t>(pm[1])],
                           k[static_cast<std::size_t>(pm[2])]};
        worst = std::max(worst, std::abs(v - P.at(q)) / scale);
      }
    });
  }
  o.require(worst <= 1e-9, "P-sym", worst);
  return o;
}

Outcome geodesics() {
  Outcome o;
  auto line = integrate_autoparallel(euclidean(2), {0.0, {0.0, 0.0}, {1.0, 1.0}}, 1.0, {1e-8});
  const auto& end = line.samples.back().position;
  const double err = std::max(std::abs(end[0] - 1.0), std::abs(end[1] - 1.0));
  o.require(err <= 1e-9, "line", err);
  auto eq = integrate_autoparallel(round_sphere(), {0.0, {kPi / 2, 0.0}, {0.0, 1.0}}, 2 * kPi, {1e-8, 201});
  double drift = 0.0;
  for (const auto& st : eq.samples) drift = std::max(drift, std::abs(st.position[0] - kPi / 2));
  o.require(drift <= 1e-6, "equator", drift);
  auto rd = integrate_autoparallel(randers_default(0.3), {0.0, {0.1, 0.2}, {0.6, 0.8}}, 3.0, {1e-8, 101});
  o.require(speed_drift(rd) <= 1e-5, "randers-speed", speed_drift(rd));
  return o;
}

SmoothMap rotation() {
  char a[128], b[128];
  std::snprintf(a, sizeof a, "%.17g*t1 - %.17g*t2", std::cos(0.6), std::sin(0.6));
  std::snprintf(b, sizeof b, "%.17g*t1 + %.17g*t2", std::sin(0.6), std::cos(0.6));
  return SmoothMap::from_text(2, {a, b});
}

Outcome affine_maps() {
  Outcome o;
  auto e2 = euclidean(2);
  auto rot = rotation();
  auto pts = sample_points(spec_for(e2, 606, 32));
  auto iso = isometry_check(e2, euclidean(2, kTargetNames), rot, pts, 1e-10);
  o.require(iso.pass, "rot-iso", std::max(iso.scalar_residual, iso.tensor_residual));
  double rot_aff = 0.0;
  for (const auto& pt : pts) rot_aff = std::max(rot_aff, affine_residual(e2, euclidean(2, kTargetNames), rot, pt).sup);
  o.require(rot_aff <= 1e-8, "rot-affine", rot_aff);

  auto flat = riemannian({{"2", "0.5"}, {"0.5", "1"}}, "flat");
  auto mink = quartic_minkowski(kTargetNames);
  auto id = SmoothMap::identity(2);
  double tau = 0.0, tension = 0.0;
  for (const auto& pt : sample_points(spec_for(flat, 607, 32))) {
    tau = std::max(tau, affine_residual(flat, mink, id, pt).sup);
    for (double v : tension_field(flat, mink, id, pt).tau) tension = std::max(tension, std::abs(v));
  }
  o.require(tau <= 1e-10, "id-tau", tau);
  o.require(tension <= 1e-8, "id-tension", tension);

  auto quad = SmoothMap::from_text(2, {"t1^2", "t2"});
  auto q = affine_residual(e2, euclidean(2, kTargetNames), quad, {{0.3, -0.2}, {0.7, 0.4}});
  o.require(q.tau(0, 0, 0) == 2.0, "quad-tau111", q.tau(0, 0, 0));
  const CurveState unit{0.0, {0.1, 0.2}, {0.6, 0.8}};
  auto qt = autoparallel_transport_test(e2, euclidean(2, kTargetNames), quad, unit, 1.0);
  o.require(qt.sup_residual >= 1e-2, "quad-transport", qt.sup_residual);

  double transport = 0.0;
  transport = std::max(transport, autoparallel_transport_test(e2, euclidean(2, kTargetNames), rot, unit, 1.0).sup_residual);
  transport = std::max(transport, autoparallel_transport_test(flat, mink, id, unit, 1.0).sup_residual);
  auto lin = SmoothMap::from_text(2, {"t1 - t2", "3*t2", "t1"});
  transport = std::max(transport, autoparallel_transport_test(e2, euclidean(3, kTargetNames), lin, unit, 1.0).sup_residual);
  o.require(transport <= 1e-5, "affine-transport", transport);
  return o;
}

Outcome identity_criterion() {
  Outcome o;
  auto a = riemannian({{"1 + t2^2", "0.2*t1"}, {"0.2*t1", "2 + sin(t1)"}}, "warped");
  auto b = FinslerStructure::from_text(2, "(1 + x2^2)*y1^2 + 0.4*x1*y1*y2 + (2 + sin(x1))*y2^2", "warped_expanded",
                                       kTargetNames);
  auto id = SmoothMap::identity(2);
  double same = 0.0;
  for (const auto& pt : sample_points(spec_for(a, 707, 32))) same = std::max(same, affine_residual(a, b, id, pt).sup);
  o.require(same <= 1e-8, "equal-sprays", same);
  double fwd = 0.0, bwd = 0.0;
  for (const auto& pt : sample_points(spec_for(a, 708, 32))) {
    fwd = std::max(fwd, affine_residual(euclidean(2), randers_default(0.3, kTargetNames), id, pt).sup);
    bwd = std::max(bwd, affine_residual(randers_default(0.3), euclidean(2, kTargetNames), id, pt).sup);
  }
  o.require(fwd >= 1e-2, "euclid->randers", fwd);
  o.require(bwd >= 1e-2, "randers->euclid", bwd);
  return o;
}

struct JetPair {
  const char* name;
  FinslerStructure src, tgt;
};

std::vector<JetPair> jet_pairs() {
  return {{"euclid", euclidean(2), euclidean(3, kTargetNames)},
          {"sphere-euclid", round_sphere(), euclidean(2, kTargetNames)},
          {"randers-sphere", randers_default(0.3), round_sphere(kTargetNames)},
          {"randers-randers", randers_default(0.3), randers_default(0.25, kTargetNames)}};
}

Outcome jet_cross_validation() {
  Outcome o;
  for (const auto& pr : jet_pairs()) {
    auto rep = cross_validate(pr.src, pr.tgt, jet_spec(pr.src, pr.tgt, 42, 100));
    double worst = 0.0, largest = 0.0;
    for (const auto& b : rep.blocks) {
      worst = std::max(worst, b.max_rel_residual);
      largest = std::max(largest, b.max_abs_closed);
    }
    o.require(rep.overall_pass && rep.samples == 100 && rep.blocks.size() == 45, pr.name, worst);
    if (std::string(pr.name) == "euclid") o.require(largest <= 1e-12 && worst <= 1e-12, "euclid-max", largest);
  }
  return o;
}

Outcome structural_checks() {
  Outcome o;
  for (const auto& pr : jet_pairs()) {
    auto pts = sample_jet_points(jet_spec(pr.src, pr.tgt, 42, 100), pr.src, pr.tgt);
    std::vector<double> worst(pts.size(), 0.0);
    parallel_for(pts.size(), [&](std::size_t i) {
      auto closed = closed_blocks(compute_jet_geometry(pr.src, pr.tgt, pts[i]));
      for (const auto& c : structural_identities(closed, pr.src.dim(), pr.tgt.dim())) {
        worst[i] = std::max(worst[i], c.max_deviation);
      }
    });
    double w = 0.0;
    for (double v : worst) w = std::max(w, v);
    o.require(w == 0.0 && pts.size() == 100, pr.name, w);
  }
  return o;
}

Outcome determinism() {
  Outcome o;
  const std::string path = std::string(FINSLERLAB_SCENARIO_DIR) + "/randers_sphere.json";
  std::string outputs[2];
  int codes[2];
  for (int r = 0; r < 2; ++r) {
    const char* argv[] = {"finslerlab", "jet-report", path.c_str(), "--seed", "42"};
    std::ostringstream out, err;
    codes[r] = app::run(5, argv, out, err);
    outputs[r] = out.str();
  }
  o.require(codes[0] == 0 && codes[1] == 0, "exit", codes[0] + codes[1]);
  o.require(!outputs[0].empty() && outputs[0] == outputs[1], "identical", outputs[0] == outputs[1] ? 1.0 : 0.0);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"structure identities", structure_identities},
      {"dual-formula identities", dual_formulas},
      {"Rund compatibility", rund_compatibility},
      {"Riemannian reduction", riemannian_reduction},
      {"Berwald P symmetry", berwald_symmetry},
      {"geodesics", geodesics},
      {"affine maps", affine_maps},
      {"identity-map criterion", identity_criterion},
      {"jet cross-validation", jet_cross_validation},
      {"jet structural identities", structural_checks},
      {"report determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
