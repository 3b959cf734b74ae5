#include "finslerlab/jetspace.hpp"

#include <cmath>
#include <functional>

#include "finslerlab/errors.hpp"
#include "finslerlab/parallel.hpp"

namespace finslerlab {

std::vector<double> JetPoint::fiber() const {
  std::vector<double> y(static_cast<std::size_t>(n()), 0.0);
  for (int i = 0; i < n(); ++i)
    for (int a = 0; a < p(); ++a) y[static_cast<std::size_t>(i)] += ya(i, a) * s[static_cast<std::size_t>(a)];
  return y;
}

JetPoint prolongation(const SmoothMap& m, const BasePoint& pt) {
  auto d = map_differentials(m, pt);
  JetPoint jp{pt.t, pt.s, d.pushed.t, {}, {}};
  for (int i = 0; i < m.target_dim(); ++i)
    for (int a = 0; a < m.source_dim(); ++a) jp.x_alpha.push_back(d.jacobian(i, a));
  jp.y_a = jp.x_alpha;
  return jp;
}

namespace {

void check_jet_point(const JetPoint& jp, int p, int n) {
  if (jp.p() != p || static_cast<int>(jp.s.size()) != p || jp.n() != n ||
      static_cast<int>(jp.x_alpha.size()) != n * p || static_cast<int>(jp.y_a.size()) != n * p) {
    throw Error(ErrorKind::DimensionMismatch, "jet point dimensions differ from the structures");
  }
}

BasePoint target_point(const JetPoint& jp) {
  BasePoint bp{jp.x, jp.fiber()};
  double ny = 0.0;
  for (double y : bp.s) ny += y * y;
  if (std::sqrt(ny) < kEpsilonZeroSection) {
    throw Error(ErrorKind::TargetZeroSection, "y_a s^a lies on the target zero section");
  }
  return bp;
}

std::vector<int> shape_of(const std::string& sig, int p, int n) {
  std::vector<int> shape;
  for (char c : sig) shape.push_back(c == 'n' ? n : p);
  return shape;
}

}  // namespace

JetGeometry compute_jet_geometry(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp,
                                 int order) {
  check_jet_point(jp, src.dim(), tgt.dim());
  BasePoint sp{jp.t, jp.s};
  src.check_point(sp);
  auto tp = target_point(jp);
  tgt.check_point(tp);
  return JetGeometry{jp, compute_geometry(src, sp, order), compute_geometry(tgt, tp, order)};
}

TemporalNlc berwald_temporal_nlc(const FinslerStructure& src, const JetPoint& jp) {
  const int p = src.dim();
  const int n = jp.n();
  check_jet_point(jp, p, n);
  auto geo = compute_geometry(src, BasePoint{jp.t, jp.s}, 5);
  const auto& B = geo.require(geo.B, "Berwald coefficients");
  const auto& Nc = geo.Ncol;
  TemporalNlc out{Tensor({n, p, p}), Tensor({n, p, p}), Tensor({n, p, p}), Tensor({n, p, p}), Tensor({n, 2 * p, 2 * p})};
  for (int j = 0; j < n; ++j)
    for (int b = 0; b < p; ++b)
      for (int a = 0; a < p; ++a) {
        double m1 = 0.0, m2 = 0.0, m3 = 0.0;
        for (int g = 0; g < p; ++g) m1 -= B(g, a, b) * jp.xa(j, g);
        for (int c = 0; c < p; ++c) {
          m1 -= Nc(c, a, b) * jp.ya(j, c);
          m2 -= B(c, a, b) * jp.ya(j, c);
          m3 -= B(c, b, a) * jp.ya(j, c);
        }
        out.M1(j, b, a) = m1;
        out.M2(j, b, a) = m2;
        out.M3(j, b, a) = m3;
      }
  // -Gamma^C_{AB} X^j_C over the unified table
  auto gamma = [&](int C, int A, int Bi) -> double {
    if (C < p) return (A < p && Bi < p) ? B(C, A, Bi) : 0.0;
    if (A < p && Bi < p) return Nc(C - p, A, Bi);
    if (A >= p && Bi < p) return B(C - p, A - p, Bi);
    if (A < p && Bi >= p) return B(C - p, A, Bi - p);
    return 0.0;
  };
  for (int j = 0; j < n; ++j)
    for (int Bi = 0; Bi < 2 * p; ++Bi)
      for (int A = 0; A < 2 * p; ++A) {
        double v = 0.0;
        for (int C = 0; C < 2 * p; ++C) v -= gamma(C, A, Bi) * (C < p ? jp.xa(j, C) : jp.ya(j, C - p));
        out.unified(j, Bi, A) = v;
      }
  return out;
}

SpatialNlc berwald_spatial_nlc(const FinslerStructure& tgt, const JetPoint& jp) {
  const int n = tgt.dim();
  const int p = jp.p();
  check_jet_point(jp, p, n);
  auto tp = target_point(jp);
  tgt.check_point(tp);
  auto geo = compute_geometry(tgt, tp, 5);
  const auto& Bt = geo.B;
  SpatialNlc out{Tensor({n, p, n}), Tensor({n, p, n})};
  for (int j = 0; j < n; ++j)
    for (int b = 0; b < p; ++b)
      for (int i = 0; i < n; ++i) {
        double v1 = 0.0, v2 = 0.0;
        for (int k = 0; k < n; ++k) {
          v1 += Bt(j, i, k) * jp.xa(k, b);
          v2 += Bt(j, i, k) * jp.ya(k, b);
        }
        out.N1(j, b, i) = v1;
        out.N2(j, b, i) = v2;
      }
  return out;
}

JetConnection jet_dconnection(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp) {
  const int p = src.dim();
  const int n = tgt.dim();
  JetConnection c;
  c.M = berwald_temporal_nlc(src, jp);
  c.N = berwald_spatial_nlc(tgt, jp);
  auto sg = compute_geometry(src, BasePoint{jp.t, jp.s}, 5);
  auto tg = compute_geometry(tgt, target_point(jp), 5);
  const auto& B = sg.B;
  c.Ncol = sg.Ncol;
  c.Gbar1 = B;
  c.Gbar2 = sg.Ncol;
  c.Gbar3 = B;  // B^a_{b gamma}
  c.Gbar4 = B;  // B^a_{beta c}
  c.G1 = Tensor({n, p, p, n, p});
  c.G2 = Tensor({n, p, p, n, p});
  c.G3 = Tensor({n, p, p, n, p});
  c.G4 = Tensor({n, p, p, n, p});
  c.L = tg.B;
  c.L1 = Tensor({n, p, p, n, n});
  c.L2 = Tensor({n, p, p, n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i != j) continue;
      for (int up = 0; up < p; ++up)
        for (int lo = 0; lo < p; ++lo)
          for (int g = 0; g < p; ++g) {
            c.G1(i, up, lo, j, g) = -B(up, g, lo);
            c.G2(i, up, lo, j, g) = -sg.Ncol(up, g, lo);
            c.G3(i, up, lo, j, g) = -B(up, g, lo);
            c.G4(i, up, lo, j, g) = -B(up, g, lo);
          }
    }
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < p; ++a)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          c.L1(i, a, a, j, k) = tg.B(i, j, k);
          c.L2(i, a, a, j, k) = tg.B(i, j, k);
        }
  return c;
}

const std::vector<std::pair<std::string, std::string>>& block_signatures() {
  static const std::vector<std::pair<std::string, std::string>> sigs = {
      {"T1", "lgg"},     {"T2", "nlgnn"},   {"T3", "nllnn"},   {"T4", "nggg"},    {"T5", "nggl"},
      {"T6", "nglg"},    {"T7", "nlgg"},    {"T8", "nlgl"},    {"T9", "nllg"},    {"T10", "nggn"},
      {"T11", "ngln"},   {"T12", "nlgn"},   {"T13", "nlln"},   {"T14", "ngnn"},   {"T15", "nlnn"},
      {"C1", "gggg"},    {"C2", "lggg"},    {"C3", "gggl"},    {"C4", "lggl"},    {"C5", "gglg"},
      {"C6", "lglg"},    {"C7", "llgg"},    {"C8", "llgl"},    {"C9", "lllg"},    {"C10", "nngn"},
      {"C11", "nnln"},   {"C12", "nnnn"},   {"C13", "nlnnn"},  {"C14", "nggngg"}, {"C15", "nggngl"},
      {"C16", "nggnlg"}, {"C17", "nlgngg"}, {"C18", "nlgngl"}, {"C19", "nlgnlg"}, {"C20", "nllngg"},
      {"C21", "nllngl"}, {"C22", "nllnlg"}, {"C23", "nggngn"}, {"C24", "nggnln"}, {"C25", "nllngn"},
      {"C26", "nllnln"}, {"C27", "nggnnn"}, {"C28", "nllnnn"}, {"C29", "nglgnnn"}, {"C30", "nlllnnn"}};
  return sigs;
}

const Block& find_block(const BlockSet& set, const std::string& label) {
  for (const auto& b : set)
    if (b.label == label) return b;
  throw Error(ErrorKind::ConfigError, "unknown block " + label);
}

// ---------------------------------------------------------------------------
// Closed forms

namespace {

using Idx = std::span<const int>;

class ClosedEvaluator {
 public:
  explicit ClosedEvaluator(const JetGeometry& g)
      : jp_(g.jp), p_(g.jp.p()), n_(g.jp.n()), src_(g.src), tgt_(g.tgt), Y_(g.jp.fiber()) {
    const auto& B = src_.require(src_.B, "Berwald coefficients");
    Bs_ = Tensor({p_, p_});
    for (int c = 0; c < p_; ++c)
      for (int b = 0; b < p_; ++b)
        for (int a = 0; a < p_; ++a) Bs_(c, b) += B(c, b, a) * jp_.s[static_cast<std::size_t>(a)];
  }

  BlockSet run() {
    const auto& B = src_.B;
    const auto& N = src_.N;
    const auto& Nc = src_.Ncol;
    const auto& dNt = src_.require(src_.dNcol_dt, "derivatives of N_{:}");
    const auto& dNs = src_.dNcol_ds;
    const auto& dBt = src_.dB_dt;
    const auto& P = src_.require(src_.P, "Berwald P-curvature");
    const auto& R = src_.curvature;
    const auto& tors = src_.torsion;
    const auto& Bt = tgt_.B;
    const auto& Nt = tgt_.N;
    const auto& Pt = tgt_.require(tgt_.P, "target P-curvature");
    const auto& Rt = tgt_.curvature;
    const int p = p_;
    const int n = n_;
    auto xa = [&](int i, int a) { return jp_.xa(i, a); };
    auto ya = [&](int i, int a) { return jp_.ya(i, a); };
    auto s = [&](int a) { return jp_.s[static_cast<std::size_t>(a)]; };
    auto Y = [&](int i) { return Y_[static_cast<std::size_t>(i)]; };
    auto delta = [](int a, int b) { return a == b; };

    BlockSet out;
    add(out, "T1", [&](Idx k) { return tors(k[0], k[1], k[2]); });
    add(out, "T2", [&](Idx k) {
      double v = 0.0;
      for (int q = 0; q < n; ++q) v += Pt(k[0], k[3], q, k[4]) * xa(q, k[2]);
      return v * s(k[1]);
    });
    add(out, "T3", [&](Idx k) {
      double v = 0.0;
      for (int q = 0; q < n; ++q) v += Pt(k[0], k[3], q, k[4]) * ya(q, k[2]);
      return v * s(k[1]);
    });
    // R^e_{mu a b} + P^e_{mu a c} N^c_b - P^e_{mu b c} N^c_a
    auto rpn = [&](int e, int mu, int a, int b) {
      double x = 0.0, y = 0.0;
      for (int c = 0; c < p; ++c) {
        x += P(e, mu, a, c) * N(c, b);
        y += P(e, mu, b, c) * N(c, a);
      }
      return R(e, mu, a, b) + x - y;
    };
    add_antisym(out, "T4", 2, 3, [&](Idx k) {
      const int m = k[0], mu = k[1], al = k[2], be = k[3];
      double xpart = 0.0;
      for (int e = 0; e < p; ++e) xpart -= rpn(e, mu, al, be) * xa(m, e);
      auto f = [&](int c, int a, int b) {
        double v = dNt(c, b, mu, a);
        for (int d = 0; d < p; ++d) v += Nc(d, b, mu) * B(c, d, a);
        for (int g = 0; g < p; ++g) v -= Nc(c, b, g) * B(g, a, mu);
        return v;
      };
      double ypart = 0.0;
      for (int c = 0; c < p; ++c) ypart += (f(c, al, be) - f(c, be, al)) * ya(m, c);
      return xpart + ypart;
    });
    add(out, "T5", [&](Idx k) {
      const int m = k[0], mu = k[1], al = k[2], b = k[3];
      double v = 0.0;
      for (int e = 0; e < p; ++e) v -= P(e, mu, al, b) * xa(m, e);
      for (int c = 0; c < p; ++c) {
        double w = dBt(c, b, mu, al) - dNs(c, al, mu, b);
        for (int d = 0; d < p; ++d) w += B(d, b, mu) * B(c, d, al);
        for (int g = 0; g < p; ++g) w -= B(g, al, mu) * B(c, g, b);
        v += w * ya(m, c);
      }
      return v;
    });
    add(out, "T6", [&](Idx k) {
      const int m = k[0], mu = k[1], a = k[2], be = k[3];
      double v = 0.0;
      for (int e = 0; e < p; ++e) v += P(e, mu, a, be) * xa(m, e);
      for (int c = 0; c < p; ++c) {
        double w = dBt(c, a, mu, be) - dNs(c, be, mu, a);
        for (int d = 0; d < p; ++d) w += B(d, a, mu) * B(c, d, be);
        for (int g = 0; g < p; ++g) w -= B(g, be, mu) * B(c, g, a);
        v -= w * ya(m, c);
      }
      return v;
    });
    add_antisym(out, "T7", 2, 3, [&](Idx k) {
      double v = 0.0;
      for (int d = 0; d < p; ++d) v -= rpn(d, k[1], k[2], k[3]) * ya(k[0], d);
      return v;
    });
    add(out, "T8", [&](Idx k) {
      double v = 0.0;
      for (int d = 0; d < p; ++d) v -= P(d, k[1], k[2], k[3]) * ya(k[0], d);
      return v;
    });
    add(out, "T9", [&](Idx k) {
      double v = 0.0;
      for (int d = 0; d < p; ++d) v += P(d, k[1], k[2], k[3]) * ya(k[0], d);
      return v;
    });
    add(out, "T10", [&](Idx k) {
      const int m = k[0], mu = k[1], al = k[2], j = k[3];
      double v = 0.0;
      for (int q = 0; q < n; ++q)
        for (int l = 0; l < n; ++l)
          for (int c = 0; c < p; ++c) v -= Pt(m, j, q, l) * Bs_(c, al) * xa(q, mu) * ya(l, c);
      return v;
    });
    add(out, "T11", [&](Idx k) {
      double v = 0.0;
      for (int q = 0; q < n; ++q)
        for (int l = 0; l < n; ++l) v -= Pt(k[0], k[3], q, l) * xa(q, k[1]) * ya(l, k[2]);
      return v;
    });
    add(out, "T12", [&](Idx k) {
      const int m = k[0], c = k[1], al = k[2], j = k[3];
      double v = 0.0;
      for (int q = 0; q < n; ++q)
        for (int l = 0; l < n; ++l)
          for (int d = 0; d < p; ++d) v -= Pt(m, j, q, l) * Bs_(d, al) * ya(q, c) * ya(l, d);
      return v;
    });
    add(out, "T13", [&](Idx k) {
      double v = 0.0;
      for (int q = 0; q < n; ++q)
        for (int l = 0; l < n; ++l) v -= Pt(k[0], k[3], q, l) * ya(q, k[1]) * ya(l, k[2]);
      return v;
    });
    // [R~ + P~ N~ - P~ N~]^m_{kij} - [P~ B~ - P~ B~]^m_{kij,q} Y^q
    auto w14 = [&](int m, int q, int i, int j) {
      double x = 0.0, y = 0.0;
      for (int l = 0; l < n; ++l) {
        x += Pt(m, q, i, l) * Nt(l, j);
        y += Pt(m, q, j, l) * Nt(l, i);
      }
      double first = Rt(m, q, i, j) + x - y;
      double second = 0.0;
      for (int l = 0; l < n; ++l)
        for (int r = 0; r < n; ++r) second += (Pt(m, q, i, l) * Bt(l, j, r) - Pt(m, q, j, l) * Bt(l, i, r)) * Y(r);
      return first - second;
    };
    add_antisym(out, "T14", 2, 3, [&](Idx k) {
      double v = 0.0;
      for (int q = 0; q < n; ++q) v += w14(k[0], q, k[2], k[3]) * xa(q, k[1]);
      return v;
    });
    add_antisym(out, "T15", 2, 3, [&](Idx k) {
      double v = 0.0;
      for (int q = 0; q < n; ++q) v += w14(k[0], q, k[2], k[3]) * ya(q, k[1]);
      return v;
    });

    add_antisym(out, "C1", 2, 3, [&](Idx k) { return rpn(k[0], k[1], k[2], k[3]); });
    add_antisym(out, "C2", 2, 3, [&](Idx k) {
      const int d = k[0], al = k[1];
      auto h = [&](int be, int ga) {
        double v = dNt(d, al, be, ga);
        for (int c = 0; c < p; ++c) v += Nc(c, al, be) * B(d, c, ga);
        for (int mu = 0; mu < p; ++mu) v -= Nc(d, mu, be) * B(mu, al, ga);
        return v;
      };
      return h(k[2], k[3]) - h(k[3], k[2]);
    });
    add(out, "C3", [&](Idx k) { return P(k[0], k[1], k[2], k[3]); });
    add(out, "C4", [&](Idx k) {
      const int d = k[0], al = k[1], be = k[2], c = k[3];
      double v = dNs(d, al, be, c) - dBt(d, al, c, be);
      for (int mu = 0; mu < p; ++mu) v += B(mu, al, be) * B(d, mu, c);
      for (int f = 0; f < p; ++f) v -= B(f, al, c) * B(d, f, be);
      return v;
    });
    add(out, "C5", [&](Idx k) { return -P(k[0], k[1], k[2], k[3]); });
    add(out, "C6", [&](Idx k) {
      const int d = k[0], al = k[1], b = k[2], ga = k[3];
      double v = dBt(d, al, b, ga) - dNs(d, al, ga, b);
      for (int c = 0; c < p; ++c) v += B(c, al, b) * B(d, c, ga);
      for (int mu = 0; mu < p; ++mu) v -= B(mu, al, ga) * B(d, mu, b);
      return v;
    });
    add(out, "C7", [&](Idx k) { return rpn(k[0], k[1], k[2], k[3]); });
    add(out, "C8", [&](Idx k) { return P(k[0], k[1], k[2], k[3]); });
    add(out, "C9", [&](Idx k) { return -P(k[0], k[1], k[2], k[3]); });
    add(out, "C10", [&](Idx k) {
      const int l = k[0], i = k[1], be = k[2], q = k[3];
      double v = 0.0;
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < p; ++c) v -= Pt(l, i, q, j) * Bs_(c, be) * ya(j, c);
      return v;
    });
    add(out, "C11", [&](Idx k) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) v -= Pt(k[0], k[1], k[3], j) * ya(j, k[2]);
      return v;
    });
    add(out, "C12", [&](Idx k) {
      const int l = k[0], i = k[1], j = k[2], q = k[3];
      double x = 0.0, y = 0.0;
      for (int r = 0; r < n; ++r) {
        x += Pt(l, i, j, r) * Nt(r, q);
        y += Pt(l, i, q, r) * Nt(r, j);
      }
      double z = 0.0;
      for (int r = 0; r < n; ++r)
        for (int u = 0; u < n; ++u) z += (Pt(l, i, q, r) * Bt(r, j, u) - Pt(l, i, j, r) * Bt(r, q, u)) * Y(u);
      return Rt(l, i, j, q) + x - y + z;
    });
    add(out, "C13", [&](Idx k) { return Pt(k[0], k[2], k[3], k[4]) * s(k[1]); });

    const Tensor& c1 = find_block(out, "C1").value;
    const Tensor& c3 = find_block(out, "C3").value;
    const Tensor& c5 = find_block(out, "C5").value;
    const Tensor& c7 = find_block(out, "C7").value;
    const Tensor& c8 = find_block(out, "C8").value;
    const Tensor& c9 = find_block(out, "C9").value;
    // copies: the vector grows below
    const Tensor C1 = c1, C3 = c3, C5 = c5, C7 = c7, C8 = c8, C9 = c9;
    const Tensor C10 = find_block(out, "C10").value;
    const Tensor C11 = find_block(out, "C11").value;
    const Tensor C12 = find_block(out, "C12").value;
    const Tensor C13 = find_block(out, "C13").value;
    auto minus_delta = [&](const Tensor& t) {
      return [&t, &delta](Idx k) { return delta(k[0], k[3]) ? -t(k[1], k[2], k[4], k[5]) : 0.0; };
    };
    add(out, "C14", minus_delta(C1));
    add(out, "C15", minus_delta(C3));
    add(out, "C16", minus_delta(C5));
    add(out, "C17", [&](Idx k) {
      const int l = k[0], a = k[1], e = k[2], i = k[3];
      if (!delta(l, i)) return 0.0;
      auto h = [&](int be, int ga) {
        double v = dNt(a, be, e, ga);
        for (int c = 0; c < p; ++c) v += Nc(c, be, e) * B(a, c, ga);
        for (int mu = 0; mu < p; ++mu) v -= Nc(a, be, mu) * B(mu, e, ga);
        return v;
      };
      return -(h(k[4], k[5]) - h(k[5], k[4]));
    });
    add(out, "C18", [&](Idx k) {
      const int l = k[0], a = k[1], e = k[2], i = k[3], be = k[4], c = k[5];
      if (!delta(l, i)) return 0.0;
      double v = dNs(a, be, e, c) - dBt(a, c, e, be);
      for (int mu = 0; mu < p; ++mu) v += B(mu, be, e) * B(a, mu, c);
      for (int d = 0; d < p; ++d) v -= B(d, c, e) * B(a, d, be);
      return -v;
    });
    add(out, "C19", [&](Idx k) {
      const int l = k[0], a = k[1], e = k[2], i = k[3], b = k[4], ga = k[5];
      if (!delta(l, i)) return 0.0;
      double v = dBt(a, b, e, ga) - dNs(a, ga, e, b);
      for (int c = 0; c < p; ++c) v += B(c, b, e) * B(a, c, ga);
      for (int mu = 0; mu < p; ++mu) v -= B(mu, ga, e) * B(a, mu, b);
      return -v;
    });
    add(out, "C20", minus_delta(C7));
    add(out, "C21", minus_delta(C8));
    add(out, "C22", minus_delta(C9));
    auto delta_r = [&](const Tensor& t) {
      return [&t, &delta](Idx k) { return delta(k[1], k[2]) ? t(k[0], k[3], k[4], k[5]) : 0.0; };
    };
    add(out, "C23", delta_r(C10));
    add(out, "C24", delta_r(C11));
    add(out, "C25", delta_r(C10));
    add(out, "C26", delta_r(C11));
    add(out, "C27", delta_r(C12));
    add(out, "C28", delta_r(C12));
    auto delta_p = [&](Idx k) { return delta(k[1], k[3]) ? C13(k[0], k[2], k[4], k[5], k[6]) : 0.0; };
    add(out, "C29", delta_p);
    add(out, "C30", delta_p);
    return out;
  }

 private:
  std::string signature(const std::string& label) const {
    for (const auto& [l, sig] : block_signatures())
      if (l == label) return sig;
    throw Error(ErrorKind::ConfigError, "unknown block " + label);
  }

  void add(BlockSet& out, const std::string& label, const std::function<double(Idx)>& f) {
    auto sig = signature(label);
    Tensor t(shape_of(sig, p_, n_));
    for_each_index(t.shape(), [&](Idx k) { t.at(k) = f(k); });
    out.push_back(Block{label, sig, std::move(t)});
  }

  // Evaluates a block that is antisymmetric in axes u < v on the upper
  // triangle and fills the rest by negation.
  void add_antisym(BlockSet& out, const std::string& label, int u, int v, const std::function<double(Idx)>& f) {
    auto sig = signature(label);
    Tensor t(shape_of(sig, p_, n_));
    for_each_index(t.shape(), [&](Idx k) {
      if (k[static_cast<std::size_t>(u)] <= k[static_cast<std::size_t>(v)]) t.at(k) = f(k);
    });
    for_each_index(t.shape(), [&](Idx k) {
      if (k[static_cast<std::size_t>(u)] > k[static_cast<std::size_t>(v)]) {
        std::vector<int> sw(k.begin(), k.end());
        std::swap(sw[static_cast<std::size_t>(u)], sw[static_cast<std::size_t>(v)]);
        t.at(k) = -t.at(sw);
      }
    });
    out.push_back(Block{label, sig, std::move(t)});
  }

  const JetPoint& jp_;
  int p_, n_;
  const BaseGeometry& src_;
  const BaseGeometry& tgt_;
  std::vector<double> Y_;
  Tensor Bs_;  // B^c_{b a} s^a
};

// ---------------------------------------------------------------------------
// General formulas over an order-1 lift of all jet coordinates

class GeneralEvaluator {
 public:
  explicit GeneralEvaluator(const JetGeometry& g) : g_(g), p_(g.jp.p()), n_(g.jp.n()), P2_(2 * p_) {
    const int p = p_, n = n_, P2 = P2_;
    V_ = P2 + n + 2 * n * p;
    auto basis = MultiIndexBasis::get(V_, 1);
    const auto& jp = g.jp;
    if (g.src.B_series.empty() || g.src.B_series.order() < 1 || g.tgt.B_series.order() < 1) {
      throw Error(ErrorKind::OrderExceeded, "general jet formulas need first derivatives of B on both manifolds");
    }
    for (int A = 0; A < P2; ++A) {
      T_.push_back(lift_variable(A, A < p ? jp.t[static_cast<std::size_t>(A)] : jp.s[static_cast<std::size_t>(A - p)], basis));
    }
    for (int i = 0; i < n; ++i) x_.push_back(lift_variable(P2 + i, jp.x[static_cast<std::size_t>(i)], basis));
    for (int j = 0; j < n; ++j)
      for (int B = 0; B < P2; ++B) {
        X_.push_back(lift_variable(varX(j, B), B < p ? jp.xa(j, B) : jp.ya(j, B - p), basis));
      }

    // Gamma^C_{AB}(t, s)
    const auto zero = TaylorValue::zero(basis);
    gam_.assign(static_cast<std::size_t>(P2 * P2 * P2), zero);
    auto inner = [&](const TaylorValue& f) { return compose(f, std::span<const TaylorValue>(T_)); };
    for (int C = 0; C < P2; ++C)
      for (int A = 0; A < P2; ++A)
        for (int B = 0; B < P2; ++B) {
          const TaylorValue* src = nullptr;
          if (C < p && A < p && B < p) src = &g.src.B_series(C, A, B);
          if (C >= p && A < p && B < p) src = &g.src.Ncol_series(C - p, A, B);
          if (C >= p && A >= p && B < p) src = &g.src.B_series(C - p, A - p, B);
          if (C >= p && A < p && B >= p) src = &g.src.B_series(C - p, A, B - p);
          if (src) gam(C, A, B) = inner(*src);
        }

    // B~^k_{ij}(x, y_a s^a)
    std::vector<TaylorValue> targs(x_);
    for (int i = 0; i < n; ++i) {
      TaylorValue y = zero;
      for (int a = 0; a < p; ++a) y += X(i, p + a) * T_[static_cast<std::size_t>(p + a)];
      targs.push_back(y);
    }
    bt_.assign(static_cast<std::size_t>(n * n * n), zero);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) bt(k, i, j) = compose(g.tgt.B_series(k, i, j), std::span<const TaylorValue>(targs));

    // M^{(j)}_{(B)A} = -Gamma^C_{AB} X^j_C, N^{(j)}_{(B)i} = B~^j_{ik} X^k_B
    M_.assign(static_cast<std::size_t>(n * P2 * P2), zero);
    for (int j = 0; j < n; ++j)
      for (int B = 0; B < P2; ++B)
        for (int A = 0; A < P2; ++A) {
          TaylorValue v = zero;
          for (int C = 0; C < P2; ++C) v -= gam(C, A, B) * X(j, C);
          M(j, B, A) = v;
        }
    N_.assign(static_cast<std::size_t>(n * P2 * n), zero);
    for (int j = 0; j < n; ++j)
      for (int B = 0; B < P2; ++B)
        for (int i = 0; i < n; ++i) {
          TaylorValue v = zero;
          for (int k = 0; k < n; ++k) v += bt(j, i, k) * X(k, B);
          N(j, B, i) = v;
        }
  }

  BlockSet run() {
    const int p = p_, n = n_, P2 = P2_;
    // adapted derivatives of Gamma and B~
    Tensor dTG({P2, P2, P2, P2}), dxG({P2, P2, P2, n}), Gv({P2, P2, P2});
    for (int C = 0; C < P2; ++C)
      for (int A = 0; A < P2; ++A)
        for (int B = 0; B < P2; ++B) {
          const auto& f = gam(C, A, B);
          Gv(C, A, B) = f.value();
          for (int E = 0; E < P2; ++E) dTG(C, A, B, E) = dT(f, E);
          for (int i = 0; i < n; ++i) dxG(C, A, B, i) = dx(f, i);
        }
    Tensor dTB({n, n, n, P2}), dxB({n, n, n, n}), dXB({n, n, n, n, P2}), Bv({n, n, n});
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const auto& f = bt(l, i, j);
          Bv(l, i, j) = f.value();
          for (int E = 0; E < P2; ++E) dTB(l, i, j, E) = dT(f, E);
          for (int k = 0; k < n; ++k) {
            dxB(l, i, j, k) = dx(f, k);
            for (int G = 0; G < P2; ++G) dXB(l, i, j, k, G) = f.d(varX(k, G));
          }
        }
    // G^{(i)(B)}_{(A)(j)C} = -delta^i_j Gamma^B_{CA}; L^{(i)(B)}_{(A)(j)k} = delta^B_A B~^i_{jk}
    auto Gf = [&](int i, int Bu, int Al, int j, int C) { return i == j ? -Gv(Bu, C, Al) : 0.0; };
    auto Lf = [&](int i, int Bu, int Al, int j, int k) { return Bu == Al ? Bv(i, j, k) : 0.0; };

    Tensor T({P2, P2, P2});
    for_each_index(T.shape(), [&](Idx k) { T.at(k) = Gv(k[0], k[1], k[2]) - Gv(k[0], k[2], k[1]); });
    Tensor P3({n, P2, P2, n, n});  // (m, B, M, i, j)
    for_each_index(P3.shape(), [&](Idx k) {
      const int m = k[0], B = k[1], Mi = k[2], i = k[3], j = k[4];
      P3.at(k) = N(m, Mi, i).d(varX(j, B)) - Lf(m, B, Mi, j, i);
    });
    Tensor R4({n, P2, P2, P2});  // (m, M, A, B)
    for_each_index(R4.shape(), [&](Idx k) {
      R4.at(k) = dT(M(k[0], k[1], k[2]), k[3]) - dT(M(k[0], k[1], k[3]), k[2]);
    });
    Tensor R5({n, P2, P2, n});  // (m, M, A, j)
    for_each_index(R5.shape(), [&](Idx k) {
      R5.at(k) = dx(M(k[0], k[1], k[2]), k[3]) - dT(N(k[0], k[1], k[3]), k[2]);
    });
    Tensor R6({n, P2, n, n});  // (m, M, i, j)
    for_each_index(R6.shape(), [&](Idx k) {
      R6.at(k) = dx(N(k[0], k[1], k[2]), k[3]) - dx(N(k[0], k[1], k[3]), k[2]);
    });
    Tensor Rbar({P2, P2, P2, P2});  // (D, A, B, C)
    for_each_index(Rbar.shape(), [&](Idx k) {
      const int D = k[0], A = k[1], B = k[2], C = k[3];
      double v = dTG(D, A, B, C) - dTG(D, A, C, B);
      for (int Mi = 0; Mi < P2; ++Mi) v += Gv(Mi, A, B) * Gv(D, Mi, C) - Gv(Mi, A, C) * Gv(D, Mi, B);
      Rbar.at(k) = v;
    });
    Tensor R2c({n, n, P2, n});  // (l, i, B, k)
    for_each_index(R2c.shape(), [&](Idx k) { R2c.at(k) = -dTB(k[0], k[1], k[3], k[2]); });
    Tensor R3c({n, n, n, n});  // (l, i, j, k)
    for_each_index(R3c.shape(), [&](Idx k) {
      const int l = k[0], i = k[1], j = k[2], q = k[3];
      double v = dxB(l, i, j, q) - dxB(l, i, q, j);
      for (int m = 0; m < n; ++m) v += Bv(m, i, j) * Bv(l, m, q) - Bv(m, i, q) * Bv(l, m, j);
      R3c.at(k) = v;
    });
    Tensor P4c({n, P2, n, n, n});  // (l, G, i, j, k)
    for_each_index(P4c.shape(), [&](Idx k) { P4c.at(k) = dXB(k[0], k[2], k[3], k[4], k[1]); });
    Tensor R5c({n, P2, P2, n, P2, P2});  // (l, A, D, i, B, C)
    for_each_index(R5c.shape(), [&](Idx k) {
      const int l = k[0], A = k[1], D = k[2], i = k[3], B = k[4], C = k[5];
      // dT of G^{(l)(A)}_{(D)(i)B} = -delta^l_i dT Gamma^A_{BD}
      double v = (l == i ? -dTG(A, B, D, C) : 0.0) - (l == i ? -dTG(A, C, D, B) : 0.0);
      for (int m = 0; m < n; ++m)
        for (int Mi = 0; Mi < P2; ++Mi) {
          v += Gf(m, A, Mi, i, B) * Gf(l, Mi, D, m, C) - Gf(m, A, Mi, i, C) * Gf(l, Mi, D, m, B);
        }
      R5c.at(k) = v;
    });
    Tensor R6c({n, P2, P2, n, P2, n});  // (l, A, D, i, B, k)
    for_each_index(R6c.shape(), [&](Idx k) {
      const int l = k[0], A = k[1], D = k[2], i = k[3], B = k[4], q = k[5];
      double v = (l == i ? -dxG(A, B, D, q) : 0.0) - (A == D ? dTB(l, i, q, B) : 0.0);
      for (int m = 0; m < n; ++m)
        for (int Mi = 0; Mi < P2; ++Mi) {
          v += Gf(m, A, Mi, i, B) * Lf(l, Mi, D, m, q) - Lf(m, A, Mi, i, q) * Gf(l, Mi, D, m, B);
        }
      R6c.at(k) = v;
    });
    Tensor R7c({n, P2, P2, n, n, n});  // (l, A, D, i, j, k)
    for_each_index(R7c.shape(), [&](Idx k) {
      const int l = k[0], A = k[1], D = k[2], i = k[3], j = k[4], q = k[5];
      double v = A == D ? dxB(l, i, j, q) - dxB(l, i, q, j) : 0.0;
      for (int m = 0; m < n; ++m)
        for (int Mi = 0; Mi < P2; ++Mi) {
          v += Lf(m, A, Mi, i, j) * Lf(l, Mi, D, m, q) - Lf(m, A, Mi, i, q) * Lf(l, Mi, D, m, j);
        }
      R7c.at(k) = v;
    });
    Tensor P8c({n, P2, P2, P2, n, n, n});  // (l, A, G, D, i, j, k)
    for_each_index(P8c.shape(), [&](Idx k) {
      P8c.at(k) = k[1] == k[3] ? dXB(k[0], k[4], k[5], k[6], k[2]) : 0.0;
    });

    const std::vector<std::pair<const char*, const Tensor*>> source = {
        {"T1", &T},     {"T2", &P3},    {"T3", &P3},    {"T4", &R4},    {"T5", &R4},    {"T6", &R4},
        {"T7", &R4},    {"T8", &R4},    {"T9", &R4},    {"T10", &R5},   {"T11", &R5},   {"T12", &R5},
        {"T13", &R5},   {"T14", &R6},   {"T15", &R6},   {"C1", &Rbar},  {"C2", &Rbar},  {"C3", &Rbar},
        {"C4", &Rbar},  {"C5", &Rbar},  {"C6", &Rbar},  {"C7", &Rbar},  {"C8", &Rbar},  {"C9", &Rbar},
        {"C10", &R2c},  {"C11", &R2c},  {"C12", &R3c},  {"C13", &P4c},  {"C14", &R5c},  {"C15", &R5c},
        {"C16", &R5c},  {"C17", &R5c},  {"C18", &R5c},  {"C19", &R5c},  {"C20", &R5c},  {"C21", &R5c},
        {"C22", &R5c},  {"C23", &R6c},  {"C24", &R6c},  {"C25", &R6c},  {"C26", &R6c},  {"C27", &R7c},
        {"C28", &R7c},  {"C29", &P8c},  {"C30", &P8c}};
    BlockSet out;
    const auto& sigs = block_signatures();
    for (std::size_t b = 0; b < sigs.size(); ++b) {
      const auto& [label, sig] = sigs[b];
      const Tensor& full = *source[b].second;
      Tensor t(shape_of(sig, p, n));
      std::vector<int> fk(sig.size());
      for_each_index(t.shape(), [&](Idx k) {
        for (std::size_t a = 0; a < sig.size(); ++a) fk[a] = k[a] + (sig[a] == 'l' ? p : 0);
        t.at(k) = full.at(fk);
      });
      out.push_back(Block{label, sig, std::move(t)});
    }
    return out;
  }

 private:
  int varX(int j, int B) const {
    const int base = P2_ + n_;
    return B < p_ ? base + j * p_ + B : base + n_ * p_ + j * p_ + (B - p_);
  }
  const TaylorValue& X(int j, int B) const { return X_[static_cast<std::size_t>(j * P2_ + B)]; }
  TaylorValue& gam(int C, int A, int B) { return gam_[static_cast<std::size_t>((C * P2_ + A) * P2_ + B)]; }
  TaylorValue& bt(int k, int i, int j) { return bt_[static_cast<std::size_t>((k * n_ + i) * n_ + j)]; }
  TaylorValue& M(int j, int B, int A) { return M_[static_cast<std::size_t>((j * P2_ + B) * P2_ + A)]; }
  TaylorValue& N(int j, int B, int i) { return N_[static_cast<std::size_t>((j * P2_ + B) * n_ + i)]; }

  // delta^J / delta T^A
  double dT(const TaylorValue& f, int A) {
    double v = f.d(A);
    for (int j = 0; j < n_; ++j)
      for (int B = 0; B < P2_; ++B) v -= M(j, B, A).value() * f.d(varX(j, B));
    return v;
  }
  // delta^J / delta x^i
  double dx(const TaylorValue& f, int i) {
    double v = f.d(P2_ + i);
    for (int j = 0; j < n_; ++j)
      for (int B = 0; B < P2_; ++B) v -= N(j, B, i).value() * f.d(varX(j, B));
    return v;
  }

  const JetGeometry& g_;
  int p_, n_, P2_, V_ = 0;
  std::vector<TaylorValue> T_, x_, X_;
  std::vector<TaylorValue> gam_, bt_, M_, N_;
};

BlockSet torsions_of(BlockSet all) {
  all.resize(15);
  return all;
}

BlockSet curvatures_of(BlockSet all) {
  return BlockSet(std::make_move_iterator(all.begin() + 15), std::make_move_iterator(all.end()));
}

}  // namespace

BlockSet closed_blocks(const JetGeometry& geo, const JetEvalOptions& options) {
  auto out = ClosedEvaluator(geo).run();
  if (!options.corrupt_block.empty()) {
    bool found = false;
    for (auto& b : out) {
      if (b.label == options.corrupt_block) {
        b.value.data()[0] += 1.0;
        found = true;
      }
    }
    if (!found) throw Error(ErrorKind::ConfigError, "unknown block to corrupt: " + options.corrupt_block);
  }
  return out;
}

BlockSet general_blocks(const JetGeometry& geo) { return GeneralEvaluator(geo).run(); }

BlockSet dtorsions_closed(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp) {
  return torsions_of(closed_blocks(compute_jet_geometry(src, tgt, jp)));
}

BlockSet dcurvatures_closed(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp) {
  return curvatures_of(closed_blocks(compute_jet_geometry(src, tgt, jp)));
}

BlockSet dtorsions_general(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp) {
  return torsions_of(general_blocks(compute_jet_geometry(src, tgt, jp)));
}

BlockSet dcurvatures_general(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp) {
  return curvatures_of(general_blocks(compute_jet_geometry(src, tgt, jp)));
}

JetSampleSpec default_jet_spec(int p, int n, std::uint64_t seed, int count) {
  JetSampleSpec s;
  s.seed = seed;
  s.count = count;
  s.t_box = uniform_box(p, -1.0, 1.0);
  s.s_box = uniform_box(p, -2.0, 2.0);
  s.x_box = uniform_box(n, -1.0, 1.0);
  s.xa_box = uniform_box(n * p, -1.0, 1.0);
  s.ya_box = uniform_box(n * p, -1.0, 1.0);
  return s;
}

std::vector<JetPoint> sample_jet_points(const JetSampleSpec& spec, const FinslerStructure& src,
                                        const FinslerStructure& tgt) {
  const int p = src.dim();
  const int n = tgt.dim();
  if (static_cast<int>(spec.t_box.size()) != p || static_cast<int>(spec.s_box.size()) != p ||
      static_cast<int>(spec.x_box.size()) != n || static_cast<int>(spec.xa_box.size()) != n * p ||
      static_cast<int>(spec.ya_box.size()) != n * p) {
    throw Error(ErrorKind::ConfigError, "jet sampling boxes do not match the dimensions");
  }
  Rng rng(spec.seed);
  std::vector<JetPoint> out;
  const long budget = 1000L * std::max(spec.count, 1);
  for (long attempt = 0; static_cast<int>(out.size()) < spec.count; ++attempt) {
    if (attempt >= budget) throw Error(ErrorKind::ConfigError, "jet sampling rejected too many points");
    JetPoint jp{rng.uniform(spec.t_box), rng.uniform(spec.s_box), rng.uniform(spec.x_box), rng.uniform(spec.xa_box),
                rng.uniform(spec.ya_box)};
    try {
      src.check_point(BasePoint{jp.t, jp.s});
      tgt.check_point(target_point(jp));
    } catch (const Error&) {
      continue;
    }
    out.push_back(std::move(jp));
  }
  return out;
}

CrossCheckReport cross_validate(const FinslerStructure& src, const FinslerStructure& tgt, const JetSampleSpec& spec,
                                const JetEvalOptions& options, double tolerance) {
  if (!options.corrupt_block.empty()) {
    bool known = false;
    for (const auto& sig : block_signatures()) known = known || sig.first == options.corrupt_block;
    if (!known) throw Error(ErrorKind::ConfigError, "unknown block to corrupt: " + options.corrupt_block);
  }
  auto pts = sample_jet_points(spec, src, tgt);
  struct PointResult {
    std::vector<double> residual, max_abs;
    std::string error;
  };
  std::vector<PointResult> results(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      auto geo = compute_jet_geometry(src, tgt, pts[i]);
      auto closed = closed_blocks(geo, options);
      auto general = general_blocks(geo);
      for (std::size_t b = 0; b < closed.size(); ++b) {
        results[i].residual.push_back(scaled_residual(closed[b].value, general[b].value));
        results[i].max_abs.push_back(closed[b].value.max_abs());
      }
    } catch (const Error& e) {
      results[i].error = e.what();
    }
  });
  CrossCheckReport rep;
  rep.seed = spec.seed;
  rep.samples = static_cast<int>(pts.size());
  const auto& sigs = block_signatures();
  for (const auto& [label, sig] : sigs) rep.blocks.push_back(BlockCheck{label, shape_of(sig, src.dim(), tgt.dim())});
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.error.empty()) {
      rep.point_failures.push_back("point " + std::to_string(i) + ": " + r.error);
      continue;
    }
    for (std::size_t b = 0; b < sigs.size(); ++b) {
      rep.blocks[b].max_rel_residual = std::max(rep.blocks[b].max_rel_residual, r.residual[b]);
      rep.blocks[b].max_abs_closed = std::max(rep.blocks[b].max_abs_closed, r.max_abs[b]);
    }
  }
  rep.overall_pass = rep.samples > 0 && rep.point_failures.empty();
  for (auto& b : rep.blocks) {
    b.pass = b.max_rel_residual <= tolerance;
    rep.overall_pass = rep.overall_pass && b.pass;
  }
  return rep;
}

std::vector<StructuralCheck> structural_identities(const BlockSet& closed, int p, int n) {
  std::vector<StructuralCheck> out;
  auto get = [&](const char* l) -> const Tensor& { return find_block(closed, l).value; };
  // lhs(k) == factor(k) * rhs(map(k))
  auto factor_check = [&](const std::string& name, const Tensor& lhs, const std::function<double(Idx)>& expected) {
    double dev = 0.0;
    for_each_index(lhs.shape(), [&](Idx k) { dev = std::max(dev, std::abs(lhs.at(k) - expected(k))); });
    out.push_back({name, dev});
  };
  auto minus_delta = [&](const char* lhs, const char* rhs) {
    const Tensor& r = get(rhs);
    factor_check(std::string(lhs) + " = -delta " + rhs, get(lhs),
                 [&r](Idx k) { return k[0] == k[3] ? -r(k[1], k[2], k[4], k[5]) : 0.0; });
  };
  minus_delta("C14", "C1");
  minus_delta("C15", "C3");
  minus_delta("C16", "C5");
  minus_delta("C20", "C7");
  minus_delta("C21", "C8");
  minus_delta("C22", "C9");
  auto delta_r = [&](const char* lhs, const char* rhs) {
    const Tensor& r = get(rhs);
    factor_check(std::string(lhs) + " = delta " + rhs, get(lhs),
                 [&r](Idx k) { return k[1] == k[2] ? r(k[0], k[3], k[4], k[5]) : 0.0; });
  };
  delta_r("C23", "C10");
  delta_r("C24", "C11");
  delta_r("C25", "C10");
  delta_r("C26", "C11");
  delta_r("C27", "C12");
  delta_r("C28", "C12");
  for (const char* l : {"C29", "C30"}) {
    const Tensor& r = get("C13");
    factor_check(std::string(l) + " = delta C13", get(l),
                 [&r](Idx k) { return k[1] == k[3] ? r(k[0], k[2], k[4], k[5], k[6]) : 0.0; });
  }
  auto antisym = [&](const char* l, int u, int v) {
    const Tensor& t = get(l);
    double dev = 0.0;
    for_each_index(t.shape(), [&](Idx k) {
      std::vector<int> sw(k.begin(), k.end());
      std::swap(sw[static_cast<std::size_t>(u)], sw[static_cast<std::size_t>(v)]);
      dev = std::max(dev, std::abs(t.at(k) + t.at(sw)));
    });
    out.push_back({std::string(l) + " antisymmetric", dev});
  };
  antisym("T1", 1, 2);
  antisym("T4", 2, 3);
  antisym("T7", 2, 3);
  antisym("T14", 2, 3);
  antisym("T15", 2, 3);
  antisym("C1", 2, 3);
  antisym("C2", 2, 3);
  (void)p;
  (void)n;
  return out;
}

}  // namespace finslerlab
