#pragma once

// Dense primal-dual interior-point solver for the small semidefinite
// programs arising from projection (n <= 16, m <= 28), with rank-1
// extraction and exactness certification.
//
//   min <C,X>  s.t.  <A_i,X> = b_i,  X >= 0
//   max b.y    s.t.  Z = C - sum_i y_i A_i >= 0

#include <optional>
#include <vector>

#include "framefield/types.hpp"
#include "framefield/varieties.hpp"

namespace framefield::sdp {

struct SdpProblem {
  int n = 0;
  MatX C;
  std::vector<MatX> A;
  VecX b;
};

enum class Status { Optimal, MaxIter, NumericalFailure };

struct SdpSolution {
  MatX X;
  VecX y;
  MatX Z;
  double primal_obj = 0;
  double dual_obj = 0;
  Status status = Status::NumericalFailure;
  double eig_ratio = 1.0;  // lambda_2(X)/lambda_1(X)
  int iterations = 0;
};

struct SdpOptions {
  double feas_tol = 1e-10;
  double gap_tol = 1e-10;
  int max_iter = 200;
};

// Path-following with Nesterov-Todd scaling and Mehrotra
// predictor-corrector. Deterministic: fixed iteration order, no randomized
// pivoting. Dependent constraint rows are dropped up front.
SdpSolution solve(const SdpProblem& p, const SdpOptions& opts = {});

// Lifted projection SDPs. The first constraint homogenizes (X_11 = 1); the
// rest trace against the variety quadrics.
SdpProblem lift_projection_octa(const Vec9& y, const varieties::QuadricSet& octa);
SdpProblem lift_projection_odeco(const Vec15& y, const varieties::QuadricSet& odeco);

// Small n=6 lift for the z-aligned odeco chart (cost in chart coordinates).
SdpProblem lift_projection_zaligned(const Vec5& target, const MatX& gram,
                                    const varieties::QuadricSet& zaligned);

// Top eigenpair of X; when lambda_2/lambda_1 <= ratio_tol returns the
// homogenization-normalized vector with the first coordinate dropped.
std::optional<VecX> rank1_extract(const SdpSolution& s, double ratio_tol = 1e-6);

}  // namespace framefield::sdp
