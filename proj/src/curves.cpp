#include "finslerlab/curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "finslerlab/connection.hpp"
#include "finslerlab/errors.hpp"
#include "finslerlab/parallel.hpp"

namespace finslerlab {

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

using Vec = std::vector<double>;

struct System {
  const FinslerStructure& fs;
  RhsForm form;
  int p;
  int evaluations = 0;

  Vec operator()(double time, const Vec& y) {
    ++evaluations;
    CurveState st{time, Vec(y.begin(), y.begin() + p), Vec(y.begin() + p, y.end())};
    auto acc = autoparallel_rhs(fs, st, form);
    Vec out(y.size());
    std::copy(y.begin() + p, y.end(), out.begin());
    std::copy(acc.begin(), acc.end(), out.begin() + p);
    return out;
  }
};

Vec axpy(const Vec& y, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
  Vec out = y;
  for (const auto& [c, k] : terms) {
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
  }
  return out;
}

struct Dense {
  Vec r1, r2, r3, r4, r5;
  double t0 = 0.0, h = 0.0;

  void eval(double time, Vec& y, Vec& dy) const {
    const double th = (time - t0) / h;
    const double th1 = 1.0 - th;
    y.resize(r1.size());
    dy.resize(r1.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
      const double T = r4[i] + th1 * r5[i];
      const double S = r3[i] + th * T;
      const double Q = r2[i] + th1 * S;
      y[i] = r1[i] + th * Q;
      const double dT = -r5[i];
      const double dS = T + th * dT;
      const double dQ = -S + th1 * dS;
      dy[i] = (Q + th * dQ) / h;
    }
  }
};

}  // namespace

std::vector<double> autoparallel_rhs(const FinslerStructure& fs, const CurveState& state, RhsForm form) {
  const int p = fs.dim();
  if (static_cast<int>(state.position.size()) != p || static_cast<int>(state.velocity.size()) != p) {
    throw Error(ErrorKind::DimensionMismatch, "curve state dimension differs from the structure");
  }
  if (norm(state.velocity) < kEpsilonZeroSection) {
    throw Error(ErrorKind::ZeroVelocity, "velocity reached the zero section at time " + std::to_string(state.time));
  }
  BasePoint pt{state.position, state.velocity};
  std::vector<double> acc(static_cast<std::size_t>(p), 0.0);
  const auto& v = state.velocity;
  if (form == RhsForm::Nonlinear) {
    auto geo = compute_geometry(fs, pt, 4);
    Tensor twoG({p});
    for (int a = 0; a < p; ++a) {
      double s = 0.0;
      for (int b = 0; b < p; ++b) s += geo.N(a, b) * v[static_cast<std::size_t>(b)];
      acc[static_cast<std::size_t>(a)] = -s;
      twoG(a) = -2.0 * geo.G(a);
    }
    double r = scaled_residual(std::span<const double>(acc), twoG.data());
    if (r > kRhsCrossCheck) {
      throw Error(ErrorKind::CrossCheckFailure, "N v and 2G disagree by " + std::to_string(r));
    }
    return acc;
  }
  auto geo = compute_geometry(fs, pt, form == RhsForm::Rund ? 4 : 3);
  const Tensor& coeff = form == RhsForm::Rund ? geo.Gamma : geo.gamma;
  for (int a = 0; a < p; ++a) {
    double s = 0.0;
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c) s += coeff(a, b, c) * v[static_cast<std::size_t>(b)] * v[static_cast<std::size_t>(c)];
    acc[static_cast<std::size_t>(a)] = -s;
  }
  return acc;
}

GeodesicTrace integrate_autoparallel(const FinslerStructure& fs, const CurveState& initial, double t_final,
                                     const IntegrateOptions& opt) {
  const int p = fs.dim();
  if (!(opt.tol > 0.0)) throw Error(ErrorKind::ConfigError, "tolerance must be positive");
  if (norm(initial.velocity) < kEpsilonZeroSection) {
    throw Error(ErrorKind::ZeroVelocity, "initial velocity is on the zero section");
  }
  const double t0 = initial.time;
  const double span = t_final - t0;
  if (!(span > 0.0)) throw Error(ErrorKind::ConfigError, "final time must exceed the initial time");
  const double atol = opt.tol;
  const double rtol = opt.tol;
  const std::size_t n = static_cast<std::size_t>(2 * p);

  System sys{fs, opt.form, p};
  GeodesicTrace trace;
  auto record = [&](double time, const Vec& y, const Vec& dy) {
    CurveState st{time, Vec(y.begin(), y.begin() + p), Vec(y.begin() + p, y.end())};
    trace.acceleration.emplace_back(dy.begin() + p, dy.end());
    trace.speed.push_back(fs.F(BasePoint{st.position, st.velocity}));
    trace.samples.push_back(std::move(st));
  };

  Vec y(n);
  std::copy(initial.position.begin(), initial.position.end(), y.begin());
  std::copy(initial.velocity.begin(), initial.velocity.end(), y.begin() + p);
  Vec k1 = sys(t0, y);

  std::vector<double> grid;
  if (opt.samples > 0) {
    const int m = std::max(opt.samples, 2);
    for (int i = 0; i < m; ++i) grid.push_back(t0 + span * i / (m - 1));
    grid.back() = t_final;
  }
  std::size_t next_sample = 0;
  if (opt.samples > 0) {
    record(t0, y, k1);
    next_sample = 1;
  } else {
    record(t0, y, k1);
  }

  auto err_scale = [&](std::size_t i, const Vec& a, const Vec& b) {
    return atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
  };
  // initial step (Hairer-Wanner hinit)
  double h;
  {
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = atol + rtol * std::abs(y[i]);
      dnf += (k1[i] / sk) * (k1[i] / sk);
      dny += (y[i] / sk) * (y[i] / sk);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, span);
    Vec y1 = axpy(y, h, {{1.0, &k1}});
    Vec k2 = sys(t0 + h, y1);
    double der2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk = atol + rtol * std::abs(y[i]);
      der2 += ((k2[i] - k1[i]) / sk) * ((k2[i] - k1[i]) / sk);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100 * h, h1, span});
  }

  constexpr double safe = 0.9, facl = 0.2, facr = 10.0, beta = 0.04;
  const double expo1 = 0.2 - beta * 0.75;
  double facold = 1e-4;
  double t = t0;
  bool last = false;
  bool reject = false;
  for (int step = 0;; ++step) {
    if (step >= opt.max_steps) throw Error(ErrorKind::StepSizeUnderflow, "step budget exhausted");
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      throw Error(ErrorKind::StepSizeUnderflow, "step size underflow at time " + std::to_string(t));
    }
    if (t + 1.01 * h >= t_final) {
      h = t_final - t;
      last = true;
    }
    Vec k2 = sys(t + c2 * h, axpy(y, h, {{a21, &k1}}));
    Vec k3 = sys(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
    Vec k4 = sys(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    Vec k5 = sys(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    Vec k6 = sys(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    Vec y1 = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    Vec k7 = sys(t + h, y1);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double r = e / err_scale(i, y, y1);
      err += r * r;
    }
    err = std::sqrt(err / static_cast<double>(n));
    const double fac11 = std::pow(err, expo1);
    double fac = fac11 / std::pow(facold, beta);
    fac = std::max(1.0 / facr, std::min(1.0 / facl, fac / safe));
    double hnew = h / fac;
    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      ++trace.stats.accepted;
      Dense dense;
      dense.t0 = t;
      dense.h = h;
      dense.r1 = y;
      dense.r2.resize(n);
      dense.r3.resize(n);
      dense.r4.resize(n);
      dense.r5.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        dense.r2[i] = y1[i] - y[i];
        dense.r3[i] = h * k1[i] - dense.r2[i];
        dense.r4[i] = dense.r2[i] - h * k7[i] - dense.r3[i];
        dense.r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      const double tnew = last ? t_final : t + h;
      if (opt.samples > 0) {
        while (next_sample < grid.size() && grid[next_sample] <= tnew) {
          if (grid[next_sample] == tnew) {
            record(tnew, y1, k7);
          } else {
            Vec ys, dys;
            dense.eval(grid[next_sample], ys, dys);
            record(grid[next_sample], ys, dys);
          }
          ++next_sample;
        }
      } else {
        record(tnew, y1, k7);
      }
      y = std::move(y1);
      k1 = std::move(k7);
      t = tnew;
      if (last) break;
      if (std::abs(hnew) > span) hnew = span;
      if (reject) hnew = std::min(hnew, h);
      reject = false;
    } else {
      hnew = h / std::min(1.0 / facl, fac11 / safe);
      reject = true;
      last = false;
      if (trace.stats.accepted >= 1) ++trace.stats.rejected;
    }
    h = hnew;
  }
  trace.stats.evaluations = sys.evaluations;
  return trace;
}

std::vector<GeodesicTrace> integrate_many(const FinslerStructure& fs, const std::vector<CurveState>& initial,
                                          double t_final, const IntegrateOptions& options) {
  std::vector<GeodesicTrace> out(initial.size());
  parallel_for(initial.size(), [&](std::size_t i) { out[i] = integrate_autoparallel(fs, initial[i], t_final, options); });
  return out;
}

double energy(const FinslerStructure& fs, const GeodesicTrace& trace) {
  const auto& s = trace.samples;
  if (s.size() < 2) throw Error(ErrorKind::ConfigError, "energy needs at least two samples");
  std::vector<double> f2;
  for (const auto& st : s) f2.push_back(fs.f_squared_at(BasePoint{st.position, st.velocity}));
  const double h = (s.back().time - s.front().time) / static_cast<double>(s.size() - 1);
  bool uniform = s.size() % 2 == 1;
  for (std::size_t i = 1; uniform && i < s.size(); ++i) {
    uniform = std::abs((s[i].time - s[i - 1].time) - h) <= 1e-9 * std::max(1.0, std::abs(h));
  }
  double total = 0.0;
  if (uniform) {
    for (std::size_t i = 0; i + 2 < s.size(); i += 2) total += h / 3.0 * (f2[i] + 4.0 * f2[i + 1] + f2[i + 2]);
  } else {
    for (std::size_t i = 1; i < s.size(); ++i) total += 0.5 * (s[i].time - s[i - 1].time) * (f2[i] + f2[i - 1]);
  }
  return total;
}

double form_residual(const FinslerStructure& fs, const GeodesicTrace& trace, RhsForm form) {
  double worst = 0.0;
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    auto rhs = autoparallel_rhs(fs, trace.samples[i], form);
    const auto& a = trace.acceleration[i];
    double amax = 0.0;
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      amax = std::max(amax, std::abs(a[k]));
      d = std::max(d, std::abs(a[k] - rhs[k]));
    }
    worst = std::max(worst, d / std::max(1.0, amax));
  }
  return worst;
}

double speed_drift(const GeodesicTrace& trace) {
  const double f0 = trace.speed.front();
  double worst = 0.0;
  for (double f : trace.speed) worst = std::max(worst, std::abs(f - f0) / f0);
  return worst;
}

void write_trace_csv(std::ostream& out, const GeodesicTrace& trace) {
  if (trace.samples.empty()) return;
  const std::size_t p = trace.samples.front().position.size();
  out << "time";
  for (std::size_t i = 1; i <= p; ++i) out << ",t" << i;
  for (std::size_t i = 1; i <= p; ++i) out << ",v" << i;
  out << ",speed_F\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < trace.samples.size(); ++k) {
    const auto& st = trace.samples[k];
    put(st.time);
    for (double v : st.position) {
      out << ',';
      put(v);
    }
    for (double v : st.velocity) {
      out << ',';
      put(v);
    }
    out << ',';
    put(trace.speed[k]);
    out << '\n';
  }
}

}  // namespace finslerlab
