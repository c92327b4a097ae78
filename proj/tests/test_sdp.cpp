#include <doctest.h>

#include <cmath>
#include <random>

#include "framefield/quartic.hpp"
#include "framefield/projection.hpp"
#include "framefield/sdp.hpp"
#include "framefield/so3.hpp"
#include "support.hpp"

using namespace framefield;
using testsupport::Quadrics;

TEST_CASE("lift shapes: constraint counts and cost blocks") {
  Vec9 y = Vec9::Zero();
  auto p = sdp::lift_projection_octa(y, Quadrics::get().octa);
  CHECK(p.n == 10);
  CHECK(p.A.size() == 16);
  CHECK(p.C(0, 0) == 0.0);
  CHECK(p.C.block<9, 9>(1, 1).isIdentity(0.0));

  Vec15 y15 = quartic::octa_to_odeco(so3::canonical_frame());
  auto p2 = sdp::lift_projection_odeco(y15, Quadrics::get().odeco);
  CHECK(p2.n == 16);
  CHECK(p2.A.size() == 28);
  CHECK(p2.C(0, 0) == doctest::Approx(y15.squaredNorm()));
}

TEST_CASE("feasibility-only SDP with zero cost") {
  sdp::SdpProblem p;
  p.n = 4;
  p.C = MatX::Zero(4, 4);
  MatX a = MatX::Zero(4, 4);
  a(0, 0) = 1;
  p.A = {a};
  p.b = VecX::Ones(1);
  auto sol = sdp::solve(p);
  CHECK(sol.status == sdp::Status::Optimal);
  CHECK(std::abs(sol.primal_obj) < 1e-9);
  CHECK(sol.X(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("on-variety octahedral query solves to distance zero, rank one") {
  const Vec9& q0 = so3::canonical_frame();
  auto sol = sdp::solve(sdp::lift_projection_octa(q0, Quadrics::get().octa));
  CHECK(sol.status == sdp::Status::Optimal);
  CHECK(sol.primal_obj < 1e-9);
  CHECK(sol.eig_ratio < 1e-7);
  VecX lifted(10);
  lifted << 1.0, q0;
  CHECK((sol.X - lifted * lifted.transpose()).cwiseAbs().maxCoeff() < 1e-6);
  auto q = sdp::rank1_extract(sol);
  REQUIRE(q.has_value());
  CHECK((*q - q0).norm() < 1e-7);
}

TEST_CASE("random octahedral projections are rank one with tiny ratio") {
  std::mt19937_64 rng(55);
  const auto& octa = Quadrics::get().octa;
  double worst_ratio = 0;
  for (int k = 0; k < 50; k++) {
    Vec9 y = testsupport::random_gaussian(9, rng);
    auto sol = sdp::solve(sdp::lift_projection_octa(y, octa));
    REQUIRE(sol.status == sdp::Status::Optimal);
    worst_ratio = std::max(worst_ratio, sol.eig_ratio);
    auto q = sdp::rank1_extract(sol);
    REQUIRE(q.has_value());
    CHECK(varieties::residual(*q, octa) < 1e-7);
    // weak duality on the returned solution
    CHECK(sol.dual_obj <= sol.primal_obj + 1e-7 * (1 + std::abs(sol.primal_obj)));
    // lower bound: no sampled member may beat the reported optimum
    std::mt19937_64 rng2(k);
    for (int s = 0; s < 200; s++) {
      Vec9 member = testsupport::random_octa_frame(rng2);
      CHECK(sol.primal_obj <= (member - y).squaredNorm() + 1e-8);
    }
  }
  CHECK(worst_ratio < 1e-7);
}

TEST_CASE("odeco projections: members fixed, random queries rank one") {
  std::mt19937_64 rng(57);
  const auto& odeco = Quadrics::get().odeco;
  Vec15 member = quartic::octa_to_odeco(testsupport::random_octa_frame(rng));
  auto sol = sdp::solve(sdp::lift_projection_odeco(member, odeco));
  CHECK(sol.status == sdp::Status::Optimal);
  CHECK(sol.primal_obj < 1e-8);
  CHECK(sol.eig_ratio < 1e-7);

  int exact = 0;
  for (int k = 0; k < 25; k++) {
    // normalized queries are the production path (the cone is radial)
    Vec15 y = testsupport::random_gaussian(15, rng);
    y /= y.norm();
    auto s = sdp::solve(sdp::lift_projection_odeco(y, odeco));
    REQUIRE(s.status == sdp::Status::Optimal);
    if (auto q = sdp::rank1_extract(s)) {
      exact++;
      CHECK(varieties::residual(*q, odeco) < 1e-6 * std::max(1.0, q->squaredNorm()));
    }
  }
  CHECK(exact >= 24);  // non-exact general odeco projections are ~1e-4 rare
}

TEST_CASE("rank1_extract declines mixtures") {
  std::mt19937_64 rng(59);
  Vec9 q1 = testsupport::random_octa_frame(rng);
  Vec9 q2 = testsupport::random_octa_frame(rng);
  VecX l1(10), l2(10);
  l1 << 1.0, q1;
  l2 << 1.0, q2;
  sdp::SdpSolution sol;
  sol.status = sdp::Status::Optimal;
  sol.X = 0.5 * (l1 * l1.transpose() + l2 * l2.transpose());
  Eigen::SelfAdjointEigenSolver<MatX> es(sol.X);
  sol.eig_ratio = es.eigenvalues()(8) / es.eigenvalues()(9);
  CHECK_FALSE(sdp::rank1_extract(sol).has_value());
  sol.X = l1 * l1.transpose();
  auto q = sdp::rank1_extract(sol);
  REQUIRE(q.has_value());
  CHECK((*q - q1).norm() < 1e-10);
}

TEST_CASE("projection is invariant to positive scaling of the query") {
  // F sits on the unit sphere, so the nearest point ignores radial scaling;
  // project_octa normalizes the query, making this exact
  std::mt19937_64 rng(61);
  const auto& octa = Quadrics::get().octa;
  for (int k = 0; k < 10; k++) {
    Vec9 y = testsupport::random_gaussian(9, rng);
    Vec9 ref;
    bool first = true;
    for (double c : {0.1, 1.0, 10.0}) {
      auto pr = projection::project_octa(Vec9(c * y), octa);
      CHECK(pr.exact);
      if (first) {
        ref = pr.q;
        first = false;
      } else {
        CHECK((pr.q - ref).cwiseAbs().maxCoeff() < 1e-7);
      }
    }
  }
}

TEST_CASE("dependent constraint rows are dropped, not fatal") {
  const Vec9& q0 = so3::canonical_frame();
  auto p = sdp::lift_projection_octa(q0, Quadrics::get().octa);
  p.A.push_back(p.A[3]);  // duplicate row
  p.b.conservativeResize(17);
  p.b(16) = 0.0;
  auto sol = sdp::solve(p);
  CHECK(sol.status == sdp::Status::Optimal);
  CHECK(sol.primal_obj < 1e-9);
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(63);
  Vec9 y = testsupport::random_gaussian(9, rng);
  auto p = sdp::lift_projection_octa(y, Quadrics::get().octa);
  auto s1 = sdp::solve(p);
  auto s2 = sdp::solve(p);
  CHECK(s1.X == s2.X);
  CHECK(s1.y == s2.y);
  CHECK(s1.primal_obj == s2.primal_obj);
}

TEST_CASE("degenerate symmetric query: zero vector yields high-rank X") {
  auto sol = sdp::solve(sdp::lift_projection_octa(Vec9::Zero(), Quadrics::get().octa));
  // projection of the origin is not unique; extraction must decline
  if (sol.status == sdp::Status::Optimal) {
    CHECK(sol.eig_ratio > 1e-3);
    CHECK_FALSE(sdp::rank1_extract(sol).has_value());
  }
}
