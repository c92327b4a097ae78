#pragma once

// User-facing projection operators: exact projection onto the octahedral and
// odeco varieties via SDP relaxation, and boundary-aligned projections
// (closed form for octahedral, a small SDP for odeco).

#include "framefield/sdp.hpp"
#include "framefield/types.hpp"
#include "framefield/varieties.hpp"

namespace framefield::projection {

struct OctaProjection {
  Vec9 q;
  double ratio = 1.0;  // lambda_2/lambda_1 certificate of the SDP solution
  bool exact = false;  // rank-1 extraction succeeded
  bool solver_optimal = false;
};

struct OdecoProjection {
  Vec15 q;
  double ratio = 1.0;
  bool exact = false;
  bool solver_optimal = false;
};

OctaProjection project_octa(const Vec9& y, const varieties::QuadricSet& octa,
                            const sdp::SdpOptions& opts = {});
OdecoProjection project_odeco(const Vec15& y, const varieties::QuadricSet& odeco,
                              const sdp::SdpOptions& opts = {});

// Octahedral frames with one axis along n form rot * (q_z + B_z s) with s on
// the circle |s| = 1.
struct AlignedChartOcta {
  Vec3 n;
  Vec9 qz;
  Eigen::Matrix<double, 9, 2> Bz;
  Mat9 rot;
};

// Aligned odeco frames fix the weight along n to one; the in-plane weights
// and rotation stay free. The affine form q_z + B_z s anchors the field
// scale through the boundary, and the three chart quadrics cut the aligned
// frames out of the s coordinates.
struct AlignedChartOdeco {
  Vec3 n;
  Vec15 qz;  // coefficients of (n . x)^4 in the rotated frame
  Eigen::Matrix<double, 15, 5> Bz;
  Mat15 rot;
};

AlignedChartOcta octa_aligned_chart(const Vec3& n);
AlignedChartOdeco odeco_aligned_chart(const Vec3& n);

// Closed form: rotate back, radially project the two chart coordinates,
// reassemble. Near-zero chart component resolves to s = (1,0).
Vec9 project_octa_aligned(const Vec9& y, const AlignedChartOcta& chart);

// Reduce to s in R^5, solve the n=6 SDP over the three chart quadrics,
// extract, reassemble. The Gauss-Newton polish on (l1, l2, t) sharpens the
// certified argmin and doubles as the fallback when extraction declines.
Vec15 project_odeco_aligned(const Vec15& y, const AlignedChartOdeco& chart,
                            const sdp::SdpOptions& opts = {});

// z-aligned odeco chart plumbing (fixed across normals; only rot varies).
double odeco_chart_weight();  // pinned weight along the normal axis
const Vec15& odeco_chart_qz();
const Eigen::Matrix<double, 15, 5>& odeco_chart_B();

// Chart member with in-plane weights (l1, l2) and angle t (normal-axis
// weight pinned).
Vec15 odeco_zaligned_point(double l1, double l2, double t);

// Inverse of the above on chart coordinates s (exact on members).
struct ZChartParams {
  double l1 = 0, l2 = 0, t = 0;
};
ZChartParams odeco_chart_params(const Vec5& s);

// Tangent of the z-aligned variety: d/d(l1), d/d(l2), d/dt columns.
Eigen::Matrix<double, 15, 3> odeco_zaligned_tangent(double l1, double l2, double t);

}  // namespace framefield::projection
