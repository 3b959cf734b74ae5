#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finslerlab/finsler.hpp"
#include "finslerlab/maps.hpp"
#include "finslerlab/sampling.hpp"

namespace finslerlab::app {

inline constexpr int kExitPass = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitConfig = 2;

struct StructureSpec {
  std::string catalog;  // empty: raw f_squared
  int dim = 0;
  std::string label;
  std::string f_squared;
  std::vector<std::vector<std::string>> matrix;  // riemannian metric or randers alpha
  std::vector<std::string> beta;
  std::optional<double> b;  // randers default family
  std::optional<Box> domain;
};

struct InitialCurve {
  std::vector<double> t0, v0;
  double tmax = 1.0;
  double tol = 1e-8;
  int samples = 101;
};

struct Scenario {
  std::string name;
  StructureSpec source;
  std::optional<StructureSpec> target;
  std::optional<std::vector<std::string>> map;
  std::uint64_t seed = 42;
  std::optional<int> count;
  std::map<std::string, Box> boxes;  // t_box, s_box, x_box, y_box, xa_box, ya_box
  std::map<std::string, double> tolerances;
  std::vector<std::string> checks;
  std::optional<InitialCurve> geodesic;
  std::optional<InitialCurve> transport;

  double tolerance(const std::string& key) const;
};

// Tolerance defaults, overridable per scenario under "tolerances".
const std::map<std::string, double>& default_tolerances();

// ConfigError carrying the byte position for malformed JSON.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

FinslerStructure build_structure(const StructureSpec& spec, const CoordNames& names);

// Sampling box for a structure: the scenario box if given, otherwise a
// default clipped to the interior of the structure's domain.
Box position_box(const Scenario& sc, const std::string& key, const FinslerStructure& fs);

// Full command line: argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace finslerlab::app
