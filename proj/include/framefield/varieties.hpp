#pragma once

// Defining quadrics of the octahedral and odeco varieties (derived
// numerically from sampled variety points and frozen to a data file),
// membership residuals, tangent/normal spaces, and the odeco retraction.

#include <cstdint>
#include <string>
#include <vector>

#include "framefield/types.hpp"

namespace framefield::varieties {

struct QuadricSet {
  int dim = 0;              // ambient dimension (5, 9 or 15)
  bool homogeneous = true;  // false: quadrics act on the lifted vector (1,q)
  std::vector<MatX> mats;   // symmetric; derived sets are Frobenius-orthonormal
  std::string convention_tag = "rsh-m-asc-sinneg-v1";
};

struct DerivationGap {
  double last_null = 0;      // largest singular value counted as null
  double first_nonnull = 0;  // smallest singular value above the cut
};

// Nullspace of degree-<=2 monomial evaluations over sampled rotations of the
// canonical frame; exactly 15 symmetric 10x10 matrices on (1,q).
QuadricSet derive_octa_quadrics(int samples = 2000, std::uint64_t seed = 1,
                                DerivationGap* gap = nullptr);

// Nullspace of homogeneous quadratic monomials over sampled odeco points;
// exactly 27 symmetric 15x15 matrices.
QuadricSet derive_odeco_quadrics(int samples = 5000, std::uint64_t seed = 1,
                                 DerivationGap* gap = nullptr);

// The three 5x5 matrices cutting the z-aligned odeco frames out of the chart
// coordinates s_z, verbatim values.
const QuadricSet& zaligned_odeco_quadrics();

// max_i |q^T A_i q| (homogeneous) or |(1,q)^T P_i (1,q)| (lifted).
double residual(const VecX& q, const QuadricSet& quadrics);

struct TangentSplit {
  MatX rotational;  // orthonormal columns spanning Span{L~_i q}
  MatX scaling;     // orthonormal columns spanning the tangent complement
};

// Orthonormal basis of N_q F~ = Span{A_i q}; 15x9 at generic smooth points.
// Throws SingularPoint when the rank drops below 9.
MatX odeco_normal_space(const Vec15& q, const QuadricSet& odeco);

TangentSplit odeco_tangent_split(const Vec15& q, const QuadricSet& odeco);

// retr_q(v) = exp(v_r . L~)(q + v_s) for tangent v = v_r + v_s.
Vec15 odeco_retract(const Vec15& q, const Vec15& v, const QuadricSet& odeco);

// Direct-sum generator images L~_i q (columns), L~_i = 0 + L_i^2 + L_i^4.
Eigen::Matrix<double, 15, 3> odeco_rotational_basis(const Vec15& q);

}  // namespace framefield::varieties
