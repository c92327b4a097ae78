#pragma once

// Rotation-group machinery: so(3) generators, the real band-2 and band-4
// representations (Wigner matrices), the canonical frame, the octahedral
// group, and closed-form geodesics on the octahedral variety.
//
// Convention used throughout the project: real spherical harmonics, ordering
// m = -l..l, orthonormal on the sphere, with the negative-m (sine) basis
// functions negated relative to the common tables. Under this convention the
// band-4 angular momentum matrices take the fixed numeric form returned by
// band4_generators() (e.g. L3 has +-4 in its corners), and rotations act on
// coefficients by q -> rho(R) q with rho(R) f = f o R^{-1}.

#include <array>
#include <vector>

#include "framefield/types.hpp"

namespace framefield::so3 {

// Scale factor alpha = sqrt(3/20); alpha*F is isometric to SO(3)/O.
double frame_scale();

// Canonical octahedral frame q0 = (0,0,0,0,sqrt(7/12),0,0,0,sqrt(5/12)).
const Vec9& canonical_frame();

// Infinitesimal rotations l1, l2, l3 with [l1,l2]=l3 (cyclic).
const std::array<Mat3, 3>& lie_generators();

const std::array<Mat5, 3>& band2_generators();
const std::array<Mat9, 3>& band4_generators();

// R23 = exp((pi/2) L1) for each band.
const Mat5& band2_r23();
const Mat9& band4_r23();

// The 24 rotational symmetries of the cube, as the multiplicative closure of
// {exp((pi/2) l_i)}.
const std::vector<Mat3>& octahedral_group();

// H = (1/24) sum_o rho(o); rank one, equal to q0 q0^T.
const Mat9& group_average_projector();

// exp(theta L3) in closed form (diagonal cos(k theta), anti-diagonal sin).
Mat5 wigner_z_band2(double theta);
Mat9 wigner_z_band4(double theta);
MatX wigner_z(int band, double theta);

// 3x3 rotation exp(v1 l1 + v2 l2 + v3 l3) (Rodrigues in the l-basis).
Mat3 rotation_from_axis_angle(const Vec3& v);

// Inverse of the above. Near angle pi the axis comes from the symmetric
// part's eigenvector; near 0 from the skew part.
Vec3 axis_angle_from_rotation(const Mat3& r);

// rho(exp(v . l)) assembled from wigner_z and R23 per band.
MatX wigner_from_axis_angle(int band, const Vec3& v);

// rho(R) for a rotation matrix R (checked: R^T R = I, det R > 0).
MatX wigner_from_rotation(int band, const Mat3& r);

// Direct sum rho_0 + rho_2 + rho_4 acting on R^15 = V0 x V2 x V4.
Mat15 wigner_direct_sum(const Mat3& r);
Mat15 wigner_direct_sum_axis_angle(const Vec3& v);

// Geodesic step on the octahedral variety. v holds tangent coefficients in
// the {L_i q} basis (bi-invariant metric: the rotation angle is |v|; the
// embedded curve speed is |v|/alpha).
Vec9 octa_exp(const Vec9& q, const Vec3& v);

// Columns L1 q, L2 q, L3 q; Gram matrix (20/3) I3 on the unit variety.
Eigen::Matrix<double, 9, 3> octa_tangent_basis(const Vec9& q);

// Cheap necessary conditions for q in F used as the pre-check of octa_exp:
// | |q| - 1 | plus the deviation of the {L_i q} Gram matrix from (20/3) I.
// The full quadric residual lives in the varieties module.
double octa_membership_residual_cheap(const Vec9& q);

// Deterministic rotation with r n = z ... r * e_z = n. Rodrigues about
// z x n; for n ~ -z, rotation by pi about x.
Mat3 rotation_taking_z_to(const Vec3& n);

}  // namespace framefield::so3
