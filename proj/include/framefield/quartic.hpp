#pragma once

// Correspondence between quartic polynomials / symmetric 4-tensors in the
// monomial basis and band-0/2/4 spherical-harmonic coefficients, plus
// construction and decomposition of odeco frames.
//
// An Odeco15 vector stacks (band0 | band2[5] | band4[9]).

#include <array>

#include "framefield/types.hpp"

namespace framefield::quartic {

inline constexpr int kNumMonomials = 15;

// Exponent triples (a,b,c) with a+b+c=4 in descending lexicographic order.
const std::array<std::array<int, 3>, kNumMonomials>& monomials();

// Row blocks: band 0 (1 row), band 2 (5), band 4 (9). Maps monomial
// coefficients of a quartic to the SH coefficients of its restriction to the
// sphere. Assembled from closed-form sphere integrals of monomials.
const Mat15& monomial_to_sh_matrix();

// Exact inverse (homogenization by powers of x^2+y^2+z^2).
const Mat15& sh_to_monomial_matrix();

inline double band0(const Vec15& q) { return q(0); }
inline Vec5 band2(const Vec15& q) { return q.segment<5>(1); }
inline Vec9 band4(const Vec15& q) { return q.segment<9>(6); }

// SH coefficients of (v . x)^4.
Vec15 sh_of_axis_power(const Vec3& v);

// Band-0 coefficient of an embedded unit octahedral frame: the constant
// making (c0, 0, q) odeco for octahedral q. Equals 3 sqrt(21)/4.
double octa_band0_constant();

struct OdecoDecomposition {
  Vec3 lambdas = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // columns v_i
  bool degenerate = false;       // zero tensor or failed axis separation
};

// Coefficients of sum_i lambda_i (v_i . x)^4 for orthonormal axes.
Vec15 odeco_from_decomposition(const OdecoDecomposition& d);

// Embed an octahedral frame: band2 = 0, band4 = q, band0 = octa constant.
Vec15 octa_to_odeco(const Vec9& q);

// Recover (lambda_i, v_i) via symmetric power iteration with deflation;
// lambdas sorted descending. Throws NotOdeco when the reconstruction misses
// q by more than tol, NoConvergence when max_iter is exhausted.
OdecoDecomposition tensor_decompose(const Vec15& q, int max_iter = 400,
                                    double tol = 1e-7);

// Dense symmetric 3x3x3x3 tensor of a quartic, index (i,j,k,l) flattened.
using Tensor4 = std::array<double, 81>;
Tensor4 tensor_from_sh(const Vec15& q);

}  // namespace framefield::quartic
