#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finslerlab/connection.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/maps.hpp"
#include "finslerlab/sampling.hpp"
#include "finslerlab/tensor.hpp"

namespace finslerlab {

inline constexpr double kJetTolerance = 1e-7;

// Point of J^1(TM, N): (t, s, x, x_alpha, y_a). x_alpha and y_a are stored
// row-major as (i, alpha) and (i, a).
struct JetPoint {
  std::vector<double> t, s, x, x_alpha, y_a;

  int p() const { return static_cast<int>(t.size()); }
  int n() const { return static_cast<int>(x.size()); }
  double xa(int i, int a) const { return x_alpha[static_cast<std::size_t>(i * p() + a)]; }
  double ya(int i, int a) const { return y_a[static_cast<std::size_t>(i * p() + a)]; }
  // y^i = y^i_a s^a
  std::vector<double> fiber() const;
};

// 1-jet prolongation of a map: x = phi(t), x_alpha = y_a = dphi.
JetPoint prolongation(const SmoothMap& m, const BasePoint& pt);

// Unified indices A = 0..2p-1 run over (alpha, a): A < p is greek, A >= p latin.
struct TemporalNlc {
  Tensor M1;  // (j, beta, alpha)
  Tensor M2;  // (j, b, alpha)
  Tensor M3;  // (j, beta, a)
  Tensor M4;  // (j, b, a), identically zero
  Tensor unified;  // (j, B, A) = -Gamma^C_{AB} X^j_C
};

struct SpatialNlc {
  Tensor N1;  // (j, beta, i)
  Tensor N2;  // (j, b, i)
};

struct JetConnection {
  TemporalNlc M;
  SpatialNlc N;
  Tensor Ncol;                   // N^c_{a:b}
  Tensor Gbar1, Gbar2, Gbar3, Gbar4;  // (A, B, C) blocks of Gbar^A_{BC}
  Tensor G1, G2, G3, G4;         // G^{(i)(B)}_{(A)(j)C} as (i, B, A, j, C)
  Tensor L;                      // L^k_{ij} as (k, i, j)
  Tensor L1, L2;                 // L^{(i)(B)}_{(A)(j)k} as (i, B, A, j, k)
};

// Base data of both manifolds at a jet point: source at (t, s), target at
// (x, y_a s^a).
struct JetGeometry {
  JetPoint jp;
  BaseGeometry src;
  BaseGeometry tgt;
};

JetGeometry compute_jet_geometry(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp,
                                 int order = kDefaultOrder);

TemporalNlc berwald_temporal_nlc(const FinslerStructure& src, const JetPoint& jp);
SpatialNlc berwald_spatial_nlc(const FinslerStructure& tgt, const JetPoint& jp);
JetConnection jet_dconnection(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp);

// A named torsion or curvature block. The signature tags every axis: 'g'
// greek and 'l' latin source indices (extent p), 'n' target indices (extent n).
struct Block {
  std::string label;
  std::string signature;
  Tensor value;
};

using BlockSet = std::vector<Block>;

struct JetEvalOptions {
  std::string corrupt_block;  // test hook: perturbs one closed-form block
};

// T1..T15 then C1..C30.
const std::vector<std::pair<std::string, std::string>>& block_signatures();

BlockSet closed_blocks(const JetGeometry& geo, const JetEvalOptions& options = {});
BlockSet general_blocks(const JetGeometry& geo);

BlockSet dtorsions_closed(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp);
BlockSet dcurvatures_closed(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp);
BlockSet dtorsions_general(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp);
BlockSet dcurvatures_general(const FinslerStructure& src, const FinslerStructure& tgt, const JetPoint& jp);

const Block& find_block(const BlockSet& set, const std::string& label);

struct JetSampleSpec {
  std::uint64_t seed = 42;
  int count = 100;
  Box t_box, s_box, x_box, xa_box, ya_box;
};

JetSampleSpec default_jet_spec(int p, int n, std::uint64_t seed = 42, int count = 100);

// Seeded sampling with rejection of zero-section and domain violations on
// either manifold.
std::vector<JetPoint> sample_jet_points(const JetSampleSpec& spec, const FinslerStructure& src,
                                        const FinslerStructure& tgt);

struct BlockCheck {
  std::string label;
  std::vector<int> shape;
  double max_abs_closed = 0.0;
  double max_rel_residual = 0.0;
  bool pass = true;
};

struct CrossCheckReport {
  std::string scenario;
  std::uint64_t seed = 0;
  int samples = 0;
  std::vector<BlockCheck> blocks;
  std::vector<std::string> point_failures;
  bool overall_pass = false;
};

CrossCheckReport cross_validate(const FinslerStructure& src, const FinslerStructure& tgt, const JetSampleSpec& spec,
                                const JetEvalOptions& options = {}, double tolerance = kJetTolerance);

struct StructuralCheck {
  std::string name;
  double max_deviation = 0.0;  // exact identities: must be 0
};

// delta-factorizations and antisymmetries of the closed-form blocks.
std::vector<StructuralCheck> structural_identities(const BlockSet& closed, int p, int n);

}  // namespace finslerlab
