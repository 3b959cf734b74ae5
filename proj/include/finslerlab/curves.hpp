#pragma once

#include <iosfwd>
#include <vector>

#include "finslerlab/finsler.hpp"

namespace finslerlab {

inline constexpr double kDefaultCurveTolerance = 1e-8;
inline constexpr double kRhsCrossCheck = 1e-10;

struct CurveState {
  double time = 0.0;
  std::vector<double> position;
  std::vector<double> velocity;
};

struct IntegratorStats {
  int accepted = 0;
  int rejected = 0;
  int evaluations = 0;
};

struct GeodesicTrace {
  std::vector<CurveState> samples;
  std::vector<std::vector<double>> acceleration;  // per sample
  std::vector<double> speed;                      // F(c, c') per sample
  IntegratorStats stats;
};

// Nonlinear: -N(t, v) v (checked against -2G). Rund: -Gamma(t, v) v v.
// Formal: -gamma(t) v v.
enum class RhsForm { Nonlinear, Rund, Formal };

std::vector<double> autoparallel_rhs(const FinslerStructure& fs, const CurveState& state,
                                     RhsForm form = RhsForm::Nonlinear);

struct IntegrateOptions {
  double tol = kDefaultCurveTolerance;
  int samples = 0;  // 0: one sample per accepted step; otherwise uniform dense output
  RhsForm form = RhsForm::Nonlinear;
  int max_steps = 1000000;
};

// Dormand-Prince 5(4) with PI step control, atol = rtol = tol.
GeodesicTrace integrate_autoparallel(const FinslerStructure& fs, const CurveState& initial, double t_final,
                                     const IntegrateOptions& options = {});

// Independent curves integrated in parallel.
std::vector<GeodesicTrace> integrate_many(const FinslerStructure& fs, const std::vector<CurveState>& initial,
                                          double t_final, const IntegrateOptions& options = {});

// Composite quadrature of F^2 over the samples: Simpson on uniform odd-count
// grids, trapezoid otherwise.
double energy(const FinslerStructure& fs, const GeodesicTrace& trace);

// max over samples of |a + Q(x, v)| / max(1, |a|) where Q is the quadratic
// term of the chosen form and a the stored acceleration.
double form_residual(const FinslerStructure& fs, const GeodesicTrace& trace, RhsForm form);

// max |F - F(start)| / F(start)
double speed_drift(const GeodesicTrace& trace);

void write_trace_csv(std::ostream& out, const GeodesicTrace& trace);

}  // namespace finslerlab
