#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "finslerlab/app.hpp"
#include "finslerlab/errors.hpp"

namespace finslerlab::app {

using nlohmann::json;

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> d = {
      {"structure", 1e-10}, {"affine", kAffineTolerance}, {"tension", 1e-8}, {"isometry", 1e-10},
      {"transport", 1e-5},  {"jet", 1e-7},               {"curve", kDefaultCurveTolerance}};
  return d;
}

double Scenario::tolerance(const std::string& key) const {
  if (auto it = tolerances.find(key); it != tolerances.end()) return it->second;
  return default_tolerances().at(key);
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

Box parse_box(const json& j, const std::string& what) {
  if (!j.is_array()) config_error(what + " must be an array of [lo, hi] pairs");
  Box box;
  for (const auto& iv : j) {
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number()) {
      config_error(what + " entries must be [lo, hi] number pairs");
    }
    Interval v{iv[0].get<double>(), iv[1].get<double>()};
    if (!(v.lo <= v.hi)) config_error(what + " has an interval with lo > hi");
    box.push_back(v);
  }
  return box;
}

std::vector<double> parse_vector(const json& j, const std::string& what) {
  if (!j.is_array()) config_error(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) config_error(what + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> parse_strings(const json& j, const std::string& what) {
  if (!j.is_array()) config_error(what + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (v.is_string()) out.push_back(v.get<std::string>());
    else if (v.is_number()) out.push_back(v.dump());
    else config_error(what + " must be an array of strings");
  }
  return out;
}

StructureSpec parse_structure(const json& j, const std::string& what) {
  if (!j.is_object()) config_error(what + " must be an object");
  StructureSpec s;
  s.catalog = j.value("catalog", "");
  s.dim = j.value("dim", 0);
  s.label = j.value("label", "");
  s.f_squared = j.value("f_squared", "");
  if (j.contains("metric")) {
    for (const auto& row : j.at("metric")) s.matrix.push_back(parse_strings(row, what + ".metric"));
  }
  if (j.contains("alpha")) {
    for (const auto& row : j.at("alpha")) s.matrix.push_back(parse_strings(row, what + ".alpha"));
  }
  if (j.contains("beta")) s.beta = parse_strings(j.at("beta"), what + ".beta");
  if (j.contains("b")) s.b = j.at("b").get<double>();
  if (j.contains("domain")) s.domain = parse_box(j.at("domain"), what + ".domain");
  return s;
}

InitialCurve parse_curve(const json& j, const std::string& what) {
  InitialCurve c;
  if (j.contains("t0")) c.t0 = parse_vector(j.at("t0"), what + ".t0");
  if (j.contains("v0")) c.v0 = parse_vector(j.at("v0"), what + ".v0");
  c.tmax = j.value("tmax", c.tmax);
  c.tol = j.value("tol", c.tol);
  c.samples = j.value("samples", c.samples);
  return c;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    if (!j.is_object()) config_error("scenario must be a JSON object");
    Scenario sc;
    sc.name = j.value("name", "scenario");
    if (!j.contains("source")) config_error("scenario needs a source structure");
    sc.source = parse_structure(j.at("source"), "source");
    if (j.contains("target")) sc.target = parse_structure(j.at("target"), "target");
    if (j.contains("map")) {
      const auto& m = j.at("map");
      sc.map = parse_strings(m.is_object() ? m.at("components") : m, "map.components");
    }
    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      sc.seed = s.value("seed", sc.seed);
      if (s.contains("count")) sc.count = s.at("count").get<int>();
      for (const char* key : {"t_box", "s_box", "x_box", "y_box", "xa_box", "ya_box"}) {
        if (s.contains(key)) sc.boxes[key] = parse_box(s.at(key), std::string("sampling.") + key);
      }
    }
    if (j.contains("tolerances")) {
      for (const auto& [k, v] : j.at("tolerances").items()) {
        if (!default_tolerances().count(k)) config_error("unknown tolerance " + k);
        sc.tolerances[k] = v.get<double>();
      }
    }
    if (j.contains("checks")) sc.checks = parse_strings(j.at("checks"), "checks");
    if (j.contains("geodesic")) sc.geodesic = parse_curve(j.at("geodesic"), "geodesic");
    if (j.contains("transport")) sc.transport = parse_curve(j.at("transport"), "transport");
    if (sc.count && *sc.count < 1) config_error("sampling.count must be positive");
    return sc;
  } catch (const json::exception& e) {
    config_error(std::string("scenario field has the wrong type: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

FinslerStructure build_structure(const StructureSpec& spec, const CoordNames& names) {
  const auto& c = spec.catalog;
  auto fs = [&]() -> FinslerStructure {
    if (c.empty() || c == "custom") {
      if (spec.dim < 1 || spec.f_squared.empty()) config_error("custom structure needs dim and f_squared");
      return FinslerStructure::from_text(spec.dim, spec.f_squared, spec.label.empty() ? "custom" : spec.label, names);
    }
    if (c == "euclidean") return euclidean(spec.dim > 0 ? spec.dim : 2, names);
    if (c == "riemannian") {
      if (spec.matrix.empty()) config_error("riemannian structure needs a metric");
      return riemannian(spec.matrix, spec.label.empty() ? "riemannian" : spec.label, names);
    }
    if (c == "randers") {
      if (spec.b) return randers_default(*spec.b, names);
      if (spec.matrix.empty() || spec.beta.empty()) config_error("randers structure needs b, or alpha and beta");
      return randers(spec.matrix, spec.beta, spec.label.empty() ? "randers" : spec.label, names);
    }
    if (c == "locally_minkowski") {
      if (spec.dim < 1 || spec.f_squared.empty()) config_error("locally_minkowski needs dim and f_squared");
      return locally_minkowski(spec.dim, spec.f_squared, spec.label.empty() ? "locally_minkowski" : spec.label, names);
    }
    if (c == "quartic_minkowski") return quartic_minkowski(names);
    if (c == "round_sphere") return round_sphere(names);
    config_error("unknown catalog entry " + c);
  }();
  if (spec.dim > 0 && spec.dim != fs.dim()) config_error("dim does not match the catalog structure");
  if (spec.domain) {
    if (static_cast<int>(spec.domain->size()) != fs.dim()) config_error("domain size does not match dim");
    fs.set_domain(*spec.domain);
  }
  return fs;
}

Box position_box(const Scenario& sc, const std::string& key, const FinslerStructure& fs) {
  if (auto it = sc.boxes.find(key); it != sc.boxes.end()) {
    if (static_cast<int>(it->second.size()) != fs.dim()) config_error("sampling." + key + " has the wrong size");
    return it->second;
  }
  Box box = uniform_box(fs.dim(), -1.0, 1.0);
  if (!fs.domain()) return box;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto d = (*fs.domain())[i];
    const bool finite = std::isfinite(d.lo) && std::isfinite(d.hi);
    // keep well inside bounded coordinate ranges
    if (finite) box[i] = {d.lo + 0.15 * (d.hi - d.lo), d.hi - 0.15 * (d.hi - d.lo)};
    else if (std::isfinite(d.lo)) box[i] = {d.lo + 0.1, d.lo + 2.1};
    else if (std::isfinite(d.hi)) box[i] = {d.hi - 2.1, d.hi - 0.1};
  }
  return box;
}

}  // namespace finslerlab::app
