#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "finslerlab/app.hpp"
#include "finslerlab/curves.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/jetspace.hpp"
#include "finslerlab/maps.hpp"
#include "finslerlab/parallel.hpp"

namespace finslerlab::app {

using Json = nlohmann::ordered_json;

namespace {

// Fixed 17-digit numbers keep reports byte-identical across runs.
void write_json(std::ostream& out, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << pad << Json(it.key()).dump() << ": ";
        write_json(out, it.value(), indent + 2);
      }
      out << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      bool scalars = true;
      for (const auto& v : j) scalars = scalars && !v.is_structured();
      if (scalars) {
        out << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out << ", ";
          write_json(out, j[i], indent + 2);
        }
        out << "]";
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        write_json(out, j[i], indent + 2);
      }
      out << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out << "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf;
      return;
    }
    default:
      out << j.dump();
  }
}

void emit(const Json& report, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    write_json(out, report, 0);
    out << "\n";
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot write " + out_path);
  write_json(f, report, 0);
  f << "\n";
}

Json box_json(const std::vector<double>& v) { return Json(v); }

Json check_json(const CheckResult& c) {
  Json j;
  j["name"] = c.name;
  j["max_residual"] = c.max_residual;
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  if (!c.finding.empty()) j["finding"] = c.finding;
  return j;
}

Box fiber_box(const Scenario& sc, const std::string& key, int dim, double half) {
  if (auto it = sc.boxes.find(key); it != sc.boxes.end()) {
    if (static_cast<int>(it->second.size()) != dim) {
      throw Error(ErrorKind::ConfigError, "sampling." + key + " has the wrong size");
    }
    return it->second;
  }
  return uniform_box(dim, -half, half);
}

FinslerStructure source_of(const Scenario& sc) { return build_structure(sc.source, kSourceNames); }

FinslerStructure target_of(const Scenario& sc) {
  if (!sc.target) throw Error(ErrorKind::ConfigError, "scenario needs a target structure");
  return build_structure(*sc.target, kTargetNames);
}

SmoothMap map_of(const Scenario& sc, const FinslerStructure& src, const FinslerStructure& tgt) {
  if (!sc.map) throw Error(ErrorKind::ConfigError, "scenario needs a map");
  if (static_cast<int>(sc.map->size()) != tgt.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "map has " + std::to_string(sc.map->size()) +
                                                  " components, target dimension is " + std::to_string(tgt.dim()));
  }
  return SmoothMap::from_text(src.dim(), *sc.map);
}

bool config_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::SyntaxError:
    case ErrorKind::UnknownVariable:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::ZeroVelocity:
      return true;
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------

int cmd_validate(const Scenario& sc, const std::string& out_path, std::ostream& out) {
  std::vector<std::pair<FinslerStructure, SampleSpec>> items;
  const int count = sc.count.value_or(64);
  auto src = source_of(sc);
  items.push_back({src, SampleSpec{sc.seed, count, position_box(sc, "t_box", src), fiber_box(sc, "s_box", src.dim(), 2.0)}});
  if (sc.target) {
    auto tgt = target_of(sc);
    items.push_back(
        {tgt, SampleSpec{sc.seed, count, position_box(sc, "x_box", tgt), fiber_box(sc, "y_box", tgt.dim(), 2.0)}});
  }
  Json report;
  report["command"] = "validate";
  report["scenario"] = sc.name;
  report["seed"] = sc.seed;
  Json structures = Json::array();
  bool pass = true;
  for (const auto& [fs, spec] : items) {
    auto rep = validate_structure(fs, spec, sc.tolerance("structure"));
    Json s;
    s["label"] = rep.label;
    s["samples"] = rep.samples;
    Json checks = Json::array();
    for (const auto& c : rep.checks) checks.push_back(check_json(c));
    s["checks"] = checks;
    s["all_pass"] = rep.all_pass;
    structures.push_back(s);
    pass = pass && rep.all_pass;
  }
  report["structures"] = structures;
  report["pass"] = pass;
  emit(report, out_path, out);
  return pass ? kExitPass : kExitChecksFailed;
}

struct GeodesicFlags {
  std::vector<double> t0, v0;
  std::optional<double> tmax, tol;
  std::optional<int> samples;
  std::string csv;
};

int cmd_geodesic(const Scenario& sc, const GeodesicFlags& flags, const std::string& out_path, std::ostream& out) {
  auto fs = source_of(sc);
  InitialCurve c = sc.geodesic.value_or(InitialCurve{});
  if (!flags.t0.empty()) c.t0 = flags.t0;
  if (!flags.v0.empty()) c.v0 = flags.v0;
  if (flags.tmax) c.tmax = *flags.tmax;
  if (flags.tol) c.tol = *flags.tol;
  if (flags.samples) c.samples = *flags.samples;
  if (static_cast<int>(c.t0.size()) != fs.dim() || static_cast<int>(c.v0.size()) != fs.dim()) {
    throw Error(ErrorKind::ConfigError, "geodesic needs t0 and v0 of the source dimension");
  }
  IntegrateOptions opts;
  opts.tol = c.tol;
  opts.samples = c.samples;
  auto trace = integrate_autoparallel(fs, CurveState{0.0, c.t0, c.v0}, c.tmax, opts);
  if (!flags.csv.empty()) {
    std::ofstream f(flags.csv, std::ios::binary);
    if (!f) throw Error(ErrorKind::ConfigError, "cannot write " + flags.csv);
    write_trace_csv(f, trace);
  }
  const auto& last = trace.samples.back();
  Json report;
  report["command"] = "geodesic";
  report["scenario"] = sc.name;
  report["structure"] = fs.label();
  report["t_final"] = c.tmax;
  report["tol"] = c.tol;
  report["samples"] = trace.samples.size();
  report["endpoint"] = {{"position", box_json(last.position)}, {"velocity", box_json(last.velocity)}};
  report["speed_initial"] = trace.speed.front();
  report["speed_drift"] = speed_drift(trace);
  report["energy"] = energy(fs, trace);
  report["stats"] = {{"accepted", trace.stats.accepted},
                     {"rejected", trace.stats.rejected},
                     {"evaluations", trace.stats.evaluations}};
  if (!flags.csv.empty()) report["csv"] = flags.csv;
  emit(report, out_path, out);
  return kExitPass;
}

int cmd_affine(const Scenario& sc, const std::string& out_path, std::ostream& out) {
  auto src = source_of(sc);
  auto tgt = target_of(sc);
  auto m = map_of(sc, src, tgt);
  std::vector<std::string> checks = sc.checks;
  if (checks.empty()) checks = {"affine", "tension", "transport"};
  auto wants = [&](const char* c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };
  for (const auto& c : checks) {
    if (c != "affine" && c != "tension" && c != "transport" && c != "isometry") {
      throw Error(ErrorKind::ConfigError, "unknown check " + c);
    }
  }
  auto pts = sample_points(SampleSpec{sc.seed, sc.count.value_or(64), position_box(sc, "t_box", src),
                                      fiber_box(sc, "s_box", src.dim(), 2.0)});
  struct PointEval {
    AffineResidual affine;
    TensionField tension;
    std::string skipped;
  };
  std::vector<PointEval> evals(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      if (wants("affine")) evals[i].affine = affine_residual(src, tgt, m, pts[i]);
      if (wants("tension")) evals[i].tension = tension_field(src, tgt, m, pts[i]);
    } catch (const Error& e) {
      if (config_kind(e.kind())) throw;
      evals[i].skipped = to_string(e.kind());
    }
  });

  Json report;
  report["command"] = "affine";
  report["scenario"] = sc.name;
  report["source"] = src.label();
  report["target"] = tgt.label();
  report["seed"] = sc.seed;
  report["samples"] = pts.size();
  Json skipped = Json::array();
  std::size_t used = 0;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (!evals[i].skipped.empty()) skipped.push_back({{"point", i}, {"finding", evals[i].skipped}});
    else ++used;
  }
  report["skipped"] = skipped;
  bool pass = used > 0;

  if (wants("affine")) {
    double sup = 0.0;
    std::size_t witness = 0;
    int degenerate = 0;
    for (std::size_t i = 0; i < evals.size(); ++i) {
      if (!evals[i].skipped.empty()) continue;
      if (!evals[i].affine.nondegenerate) ++degenerate;
      if (evals[i].affine.sup >= sup) {
        sup = evals[i].affine.sup;
        witness = i;
      }
    }
    const double tol = sc.tolerance("affine");
    Json a;
    a["tau_sup"] = sup;
    a["tolerance"] = tol;
    a["degenerate_points"] = degenerate;
    a["verdict"] = sup <= tol ? "affine" : "not-affine";
    if (used > 0) {
      const auto& tau = evals[witness].affine.tau;
      a["witness"] = {{"t", box_json(pts[witness].t)},
                      {"s", box_json(pts[witness].s)},
                      {"tau", std::vector<double>(tau.data().begin(), tau.data().end())}};
    }
    a["pass"] = sup <= tol;
    pass = pass && sup <= tol;
    report["affine"] = a;
  }
  if (wants("tension")) {
    double sup = 0.0, cross = 0.0;
    std::size_t witness = 0;
    for (std::size_t i = 0; i < evals.size(); ++i) {
      if (!evals[i].skipped.empty()) continue;
      for (double v : evals[i].tension.tau) {
        if (std::abs(v) >= sup) {
          sup = std::abs(v);
          witness = i;
        }
      }
      cross = std::max(cross, evals[i].tension.cross_residual);
    }
    const double tol = sc.tolerance("tension");
    Json t;
    t["tension_sup"] = sup;
    t["form_cross_residual"] = cross;
    t["tolerance"] = tol;
    if (used > 0) t["witness"] = {{"t", box_json(pts[witness].t)}, {"tension", evals[witness].tension.tau}};
    t["pass"] = sup <= tol;
    pass = pass && sup <= tol;
    report["tension"] = t;
  }
  if (wants("transport")) {
    InitialCurve c = sc.transport.value_or(InitialCurve{});
    if (c.t0.empty()) {
      for (const auto& iv : position_box(sc, "t_box", src)) c.t0.push_back(0.5 * (iv.lo + iv.hi));
    }
    if (c.v0.empty()) {
      c.v0.assign(static_cast<std::size_t>(src.dim()), 0.0);
      c.v0[0] = 1.0;
      const double F = src.F(BasePoint{c.t0, c.v0});
      c.v0[0] = 1.0 / F;  // unit speed
    }
    if (static_cast<int>(c.t0.size()) != src.dim() || static_cast<int>(c.v0.size()) != src.dim()) {
      throw Error(ErrorKind::ConfigError, "transport needs t0 and v0 of the source dimension");
    }
    auto tr = autoparallel_transport_test(src, tgt, m, CurveState{0.0, c.t0, c.v0}, c.tmax, c.tol, c.samples);
    const double tol = sc.tolerance("transport");
    Json t;
    t["t0"] = c.t0;
    t["v0"] = c.v0;
    t["t_final"] = c.tmax;
    t["sup_residual"] = tr.sup_residual;
    t["witness_time"] = tr.witness_time;
    t["tolerance"] = tol;
    t["pass"] = tr.sup_residual <= tol;
    pass = pass && tr.sup_residual <= tol;
    report["transport"] = t;
  }
  if (wants("isometry")) {
    auto iso = isometry_check(src, tgt, m, pts, sc.tolerance("isometry"));
    Json t;
    t["scalar_residual"] = iso.scalar_residual;
    t["tensor_residual"] = iso.tensor_residual;
    t["tolerance"] = sc.tolerance("isometry");
    t["pass"] = iso.pass;
    pass = pass && iso.pass;
    report["isometry"] = t;
  }
  report["pass"] = pass;
  emit(report, out_path, out);
  return pass ? kExitPass : kExitChecksFailed;
}

int cmd_jet_report(const Scenario& sc, const std::string& fault, std::optional<std::uint64_t> seed,
                   std::optional<int> count, const std::string& out_path, std::ostream& out, std::ostream& err) {
  auto src = source_of(sc);
  auto tgt = target_of(sc);
  const int p = src.dim();
  const int n = tgt.dim();
  auto spec = default_jet_spec(p, n, seed.value_or(sc.seed), count.value_or(sc.count.value_or(100)));
  spec.t_box = position_box(sc, "t_box", src);
  spec.x_box = position_box(sc, "x_box", tgt);
  spec.s_box = fiber_box(sc, "s_box", p, 2.0);
  spec.xa_box = fiber_box(sc, "xa_box", n * p, 1.0);
  spec.ya_box = fiber_box(sc, "ya_box", n * p, 1.0);
  JetEvalOptions opts;
  opts.corrupt_block = fault;
  const double tol = sc.tolerance("jet");
  auto rep = cross_validate(src, tgt, spec, opts, tol);
  Json report;
  report["scenario"] = sc.name;
  report["seed"] = rep.seed;
  report["samples"] = rep.samples;
  report["tolerance"] = tol;
  Json blocks = Json::array();
  std::vector<std::string> failing;
  for (const auto& b : rep.blocks) {
    Json jb;
    jb["label"] = b.label;
    jb["shape"] = b.shape;
    jb["max_abs_closed"] = b.max_abs_closed;
    jb["max_rel_residual"] = b.max_rel_residual;
    jb["pass"] = b.pass;
    blocks.push_back(jb);
    if (!b.pass) failing.push_back(b.label);
  }
  report["blocks"] = blocks;
  if (!rep.point_failures.empty()) report["point_failures"] = rep.point_failures;
  report["overall_pass"] = rep.overall_pass;
  emit(report, out_path, out);
  if (rep.overall_pass) return kExitPass;
  std::string list;
  for (const auto& l : failing) list += (list.empty() ? "" : " ") + l;
  if (!failing.empty()) err << "failing blocks: " << list << "\n";
  for (const auto& f : rep.point_failures) err << f << "\n";
  return kExitChecksFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App cli{"finslerlab: Finsler geometry workbench"};
  cli.require_subcommand(1);
  std::string scenario_path, out_path;

  auto* validate = cli.add_subcommand("validate", "check the structure identities of a scenario's structures");
  auto* geodesic = cli.add_subcommand("geodesic", "integrate a source autoparallel and write its trace");
  auto* affine = cli.add_subcommand("affine", "affine, tension, transport and isometry checks of a map");
  auto* jet = cli.add_subcommand("jet-report", "closed vs general d-torsion and d-curvature blocks");
  for (auto* sub : {validate, geodesic, affine, jet}) {
    sub->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sub->add_option("--out", out_path, "write the JSON report here instead of stdout");
  }
  GeodesicFlags gflags;
  double tmax = 0.0, tol = 0.0;
  int samples = 0;
  geodesic->add_option("--t0", gflags.t0, "initial position, comma separated")->delimiter(',');
  geodesic->add_option("--v0", gflags.v0, "initial velocity, comma separated")->delimiter(',');
  auto* tmax_opt = geodesic->add_option("--tmax", tmax, "final time");
  auto* tol_opt = geodesic->add_option("--tol", tol, "integrator tolerance");
  auto* samples_opt = geodesic->add_option("--samples", samples, "uniform output samples (0: one per step)");
  geodesic->add_option("--csv", gflags.csv, "write the trace CSV here");
  std::string fault;
  std::uint64_t seed = 0;
  int count = 0;
  jet->add_option("--inject-fault", fault, "perturb one closed-form block (test hook)");
  auto* seed_opt = jet->add_option("--seed", seed, "override the sampling seed");
  auto* count_opt = jet->add_option("--count", count, "override the number of jet points");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e, out, err);
    return code == 0 ? kExitPass : kExitConfig;
  }
  if (tmax_opt->count()) gflags.tmax = tmax;
  if (tol_opt->count()) gflags.tol = tol;
  if (samples_opt->count()) gflags.samples = samples;

  try {
    const Scenario sc = load_scenario(scenario_path);
    if (validate->parsed()) return cmd_validate(sc, out_path, out);
    if (geodesic->parsed()) return cmd_geodesic(sc, gflags, out_path, out);
    if (affine->parsed()) return cmd_affine(sc, out_path, out);
    return cmd_jet_report(sc, fault, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
                          count_opt->count() ? std::optional<int>(count) : std::nullopt, out_path, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return config_kind(e.kind()) ? kExitConfig : kExitChecksFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace finslerlab::app
