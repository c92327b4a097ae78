#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "framefield/so3.hpp"
#include "support.hpp"

using namespace framefield;

namespace {

// Independent basis tables for the finite-difference generator oracle.
double y2(int idx, const Vec3& p) {
  const double pi = M_PI;
  double x = p(0), y = p(1), z = p(2);
  switch (idx) {
    case 0: return -std::sqrt(15.0 / (4 * pi)) * x * y;
    case 1: return -std::sqrt(15.0 / (4 * pi)) * y * z;
    case 2: return std::sqrt(5.0 / (16 * pi)) * (3 * z * z - p.squaredNorm());
    case 3: return std::sqrt(15.0 / (4 * pi)) * x * z;
    case 4: return std::sqrt(15.0 / (16 * pi)) * (x * x - y * y);
  }
  return 0;
}

double y4(int idx, const Vec3& p) {
  const double pi = M_PI;
  double x = p(0), y = p(1), z = p(2), r2 = p.squaredNorm();
  switch (idx) {
    case 0: return -0.75 * std::sqrt(35.0 / pi) * x * y * (x * x - y * y);
    case 1: return -0.75 * std::sqrt(35.0 / (2 * pi)) * y * z * (3 * x * x - y * y);
    case 2: return -0.75 * std::sqrt(5.0 / pi) * x * y * (7 * z * z - r2);
    case 3: return -0.75 * std::sqrt(5.0 / (2 * pi)) * y * z * (7 * z * z - 3 * r2);
    case 4:
      return (3.0 / 16) * std::sqrt(1.0 / pi) *
             (35 * z * z * z * z - 30 * z * z * r2 + 3 * r2 * r2);
    case 5: return 0.75 * std::sqrt(5.0 / (2 * pi)) * x * z * (7 * z * z - 3 * r2);
    case 6:
      return (3.0 / 8) * std::sqrt(5.0 / pi) * (x * x - y * y) * (7 * z * z - r2);
    case 7: return 0.75 * std::sqrt(35.0 / (2 * pi)) * x * z * (x * x - 3 * y * y);
    case 8:
      return (3.0 / 16) * std::sqrt(35.0 / pi) *
             (x * x * x * x - 6 * x * x * y * y + y * y * y * y);
  }
  return 0;
}

// matrix of f -> f o r^{-1} on a band, fit by least squares on sample points
MatX action_matrix(int band, const Mat3& r, std::mt19937_64& rng) {
  int dim = band == 2 ? 5 : 9;
  int ns = 60;
  MatX e(ns, dim), f(ns, dim);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < ns; k++) {
    Vec3 p(g(rng), g(rng), g(rng));
    p.normalize();
    Vec3 q = r.transpose() * p;
    for (int j = 0; j < dim; j++) {
      e(k, j) = band == 2 ? y2(j, p) : y4(j, p);
      f(k, j) = band == 2 ? y2(j, q) : y4(j, q);
    }
  }
  return (e.transpose() * e).ldlt().solve(e.transpose() * f);
}

}  // namespace

TEST_CASE("lie generators satisfy the so(3) commutation relations") {
  const auto& l = so3::lie_generators();
  for (int i = 0; i < 3; i++) CHECK(((l[i] + l[i].transpose()).norm()) == 0.0);
  CHECK((l[0] * l[1] - l[1] * l[0] - l[2]).norm() < 1e-14);
  CHECK((l[1] * l[2] - l[2] * l[1] - l[0]).norm() < 1e-14);
  CHECK((l[2] * l[0] - l[0] * l[2] - l[1]).norm() < 1e-14);
}

TEST_CASE("band generators: skew, commutators, supplemental band-4 values") {
  const auto& l2 = so3::band2_generators();
  const auto& l4 = so3::band4_generators();
  for (int i = 0; i < 3; i++) {
    CHECK((l2[i] + l2[i].transpose()).norm() == 0.0);
    CHECK((l4[i] + l4[i].transpose()).norm() == 0.0);
  }
  CHECK((l2[0] * l2[1] - l2[1] * l2[0] - l2[2]).norm() < 1e-12);
  CHECK((l2[1] * l2[2] - l2[2] * l2[1] - l2[0]).norm() < 1e-12);
  CHECK((l2[2] * l2[0] - l2[0] * l2[2] - l2[1]).norm() < 1e-12);
  CHECK((l4[0] * l4[1] - l4[1] * l4[0] - l4[2]).norm() < 1e-12);
  CHECK((l4[1] * l4[2] - l4[2] * l4[1] - l4[0]).norm() < 1e-12);
  CHECK((l4[2] * l4[0] - l4[0] * l4[2] - l4[1]).norm() < 1e-12);
  CHECK(l4[2](0, 8) == 4.0);
  CHECK(l4[2](8, 0) == -4.0);
  CHECK(l4[2](1, 7) == 3.0);
  CHECK(l4[0](0, 7) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
  CHECK(l4[0](3, 4) == doctest::Approx(-std::sqrt(10.0)).epsilon(1e-15));
  CHECK(l4[1](0, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("band generators match the finite-difference action oracle") {
  std::mt19937_64 rng(42);
  const double h = 1e-6;
  for (int band : {2, 4}) {
    for (int i = 0; i < 3; i++) {
      Mat3 rp = so3::rotation_from_axis_angle(Vec3(h * Vec3::Unit(i)));
      Mat3 rm = so3::rotation_from_axis_angle(Vec3(-h * Vec3::Unit(i)));
      MatX fd = (action_matrix(band, rp, rng) - action_matrix(band, rm, rng)) / (2 * h);
      MatX expected = band == 2 ? MatX(so3::band2_generators()[i])
                                : MatX(so3::band4_generators()[i]);
      CHECK((fd - expected).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("octahedral group: 24 signed permutations with det +1") {
  const auto& g = so3::octahedral_group();
  CHECK(g.size() == 24);
  bool has_identity = false;
  for (const Mat3& m : g) {
    CHECK((m.transpose() * m - Mat3::Identity()).norm() < 1e-12);
    CHECK(m.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    if ((m - Mat3::Identity()).norm() < 1e-12) has_identity = true;
  }
  CHECK(has_identity);
  for (size_t i = 0; i < g.size(); i += 5)
    for (size_t j = 0; j < g.size(); j += 7) {
      Mat3 p = g[i] * g[j];
      bool found = false;
      for (const Mat3& m : g)
        if ((p - m).cwiseAbs().maxCoeff() < 1e-8) found = true;
      CHECK(found);
    }
  // brute-force oracle: 48 signed permutation matrices, 24 with det +1
  std::vector<Mat3> oracle;
  int perm[3] = {0, 1, 2};
  do {
    for (int mask = 0; mask < 8; mask++) {
      Mat3 m = Mat3::Zero();
      for (int k = 0; k < 3; k++) m(k, perm[k]) = (mask >> k) & 1 ? -1.0 : 1.0;
      if (m.determinant() > 0) oracle.push_back(m);
    }
  } while (std::next_permutation(perm, perm + 3));
  CHECK(oracle.size() == 24);
  for (const Mat3& m : oracle) {
    bool found = false;
    for (const Mat3& e : g)
      if ((m - e).cwiseAbs().maxCoeff() < 1e-8) found = true;
    CHECK(found);
  }
}

TEST_CASE("group average projector is rank one and fixes q0") {
  const Mat9& h = so3::group_average_projector();
  const Vec9& q0 = so3::canonical_frame();
  CHECK((h * q0 - q0).norm() < 1e-10);
  CHECK((h * h - h).norm() < 1e-10);
  Eigen::JacobiSVD<Mat9> svd(h);
  CHECK(svd.singularValues()(1) < 1e-10);
  CHECK((h - q0 * q0.transpose()).norm() < 1e-10);
}

TEST_CASE("wigner_z closed form") {
  CHECK((so3::wigner_z_band4(0.0) - Mat9::Identity()).norm() == 0.0);
  const Vec9& q0 = so3::canonical_frame();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 2 * M_PI);
  for (int k = 0; k < 25; k++) {
    double t = u(rng);
    Vec9 q = so3::wigner_z_band4(t) * q0;
    Vec9 expect = Vec9::Zero();
    expect(0) = std::sqrt(5.0 / 12) * std::sin(4 * t);
    expect(4) = std::sqrt(7.0 / 12);
    expect(8) = std::sqrt(5.0 / 12) * std::cos(4 * t);
    CHECK((q - expect).cwiseAbs().maxCoeff() < 1e-12);
    Mat9 w = so3::wigner_z_band4(t);
    CHECK((w.transpose() * w - Mat9::Identity()).cwiseAbs().maxCoeff() < 1e-13);
    Mat5 w2 = so3::wigner_z_band2(t);
    CHECK((w2.transpose() * w2 - Mat5::Identity()).cwiseAbs().maxCoeff() < 1e-13);
  }
  CHECK((so3::wigner_z_band4(M_PI / 2) * q0 - q0).norm() < 1e-12);
}

TEST_CASE("R23 matches exp((pi/2) L1) through the axis-angle path") {
  Mat3 r = so3::rotation_from_axis_angle(Vec3(M_PI / 2, 0, 0));
  MatX w4 = so3::wigner_from_rotation(4, r);
  CHECK((w4 - so3::band4_r23()).cwiseAbs().maxCoeff() < 1e-12);
  MatX w2 = so3::wigner_from_rotation(2, r);
  CHECK((w2 - so3::band2_r23()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(so3::band4_r23()(0, 5) ==
        doctest::Approx(std::sqrt(7.0 / 2.0) / 2).epsilon(1e-15));
  CHECK(so3::band4_r23()(1, 1) == doctest::Approx(-0.75).epsilon(1e-15));
  CHECK(so3::band4_r23()(4, 8) ==
        doctest::Approx(std::sqrt(35.0) / 8).epsilon(1e-15));
}

TEST_CASE("wigner_from_axis_angle basics") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0, 1);
  for (double t : {0.3, 1.9, -2.4}) {
    MatX w = so3::wigner_from_axis_angle(4, Vec3(0, 0, t));
    CHECK((w - so3::wigner_z_band4(t)).cwiseAbs().maxCoeff() < 1e-13);
  }
  for (int k = 0; k < 20; k++) {
    Vec3 v(g(rng), g(rng), g(rng));
    MatX w = so3::wigner_from_axis_angle(4, v);
    MatX wi = so3::wigner_from_axis_angle(4, Vec3(-v));
    CHECK((w * wi - Mat9::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((MatX(w.transpose() * w) - Mat9::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("representation property against 3x3 composition") {
  std::mt19937_64 rng(11);
  double worst = 0;
  for (int k = 0; k < 200; k++) {
    Mat3 r1 = testsupport::random_rotation(rng);
    Mat3 r2 = testsupport::random_rotation(rng);
    for (int band : {2, 4}) {
      MatX lhs = so3::wigner_from_rotation(band, Mat3(r1 * r2));
      MatX rhs =
          so3::wigner_from_rotation(band, r1) * so3::wigner_from_rotation(band, r2);
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst < 1e-11);
}

TEST_CASE("axis-angle round trip including the angle-pi region") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0, 1);
  for (int k = 0; k < 50; k++) {
    Vec3 axis(g(rng), g(rng), g(rng));
    axis.normalize();
    for (double ang : {1e-9, 1e-4, 1.0, 3.0, M_PI - 1e-9, M_PI}) {
      Mat3 r = so3::rotation_from_axis_angle(Vec3(ang * axis));
      Vec3 v = so3::axis_angle_from_rotation(r);
      CHECK((so3::rotation_from_axis_angle(v) - r).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("stabilizer: all 24 octahedral elements fix q0") {
  const Vec9& q0 = so3::canonical_frame();
  for (const Mat3& gm : so3::octahedral_group()) {
    Vec9 q = so3::wigner_from_rotation(4, gm) * q0;
    CHECK((q - q0).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("octa_exp: zero step, closed form along z, reversibility") {
  const Vec9& q0 = so3::canonical_frame();
  CHECK((so3::octa_exp(q0, Vec3::Zero()) - q0).norm() == 0.0);
  for (double t : {0.2, 1.1}) {
    Vec9 q = so3::octa_exp(q0, Vec3(0, 0, t));
    CHECK((q - so3::wigner_z_band4(t) * q0).cwiseAbs().maxCoeff() < 1e-13);
  }
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0, 1);
  for (int k = 0; k < 30; k++) {
    Vec9 q = testsupport::random_octa_frame(rng);
    Vec3 v(g(rng), g(rng), g(rng));
    Vec9 fwd = so3::octa_exp(q, v);
    Vec9 back = so3::octa_exp(fwd, Vec3(-v));
    CHECK((back - q).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(so3::octa_exp(Vec9(2.0 * so3::canonical_frame()), Vec3::Zero()),
                  NotOnVariety);
}

TEST_CASE("isometry: tangent Gram is (20/3) I on the variety") {
  std::mt19937_64 rng(19);
  const Vec9& q0 = so3::canonical_frame();
  auto gram_err = [](const Vec9& q) {
    auto basis = so3::octa_tangent_basis(q);
    Mat3 gram = basis.transpose() * basis;
    return (gram - (20.0 / 3.0) * Mat3::Identity()).cwiseAbs().maxCoeff();
  };
  CHECK(gram_err(q0) < 1e-9);
  for (int k = 0; k < 100; k++)
    CHECK(gram_err(testsupport::random_octa_frame(rng)) < 1e-9);
  auto basis = so3::octa_tangent_basis(q0);
  for (int i = 0; i < 3; i++) CHECK(std::abs(basis.col(i).dot(q0)) < 1e-12);
}

TEST_CASE("rotation_taking_z_to") {
  CHECK((so3::rotation_taking_z_to(Vec3(0, 0, 1)) - Mat3::Identity()).norm() < 1e-12);
  Mat3 flip = so3::rotation_taking_z_to(Vec3(0, 0, -1));
  Mat3 expect;
  expect << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  CHECK((flip - expect).norm() < 1e-12);
  Vec3 ex = so3::rotation_taking_z_to(Vec3(1, 0, 0)) * Vec3(0, 0, 1);
  CHECK((ex - Vec3(1, 0, 0)).norm() < 1e-10);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0, 1);
  for (int k = 0; k < 50; k++) {
    Vec3 n(g(rng), g(rng), g(rng));
    n.normalize();
    Mat3 r = so3::rotation_taking_z_to(n);
    CHECK((r * Vec3(0, 0, 1) - n).norm() < 1e-10);
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
  }
  CHECK_THROWS_AS(so3::rotation_taking_z_to(Vec3(0, 0, 2)), NotUnit);
}

TEST_CASE("wigner_from_rotation rejects non-rotations") {
  Mat3 bad = 2.0 * Mat3::Identity();
  CHECK_THROWS_AS(so3::wigner_from_rotation(4, bad), NotARotation);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1;
  CHECK_THROWS_AS(so3::wigner_from_rotation(4, reflect), NotARotation);
}

TEST_CASE("geodesic chord length converges under refinement") {
  const Vec9& q0 = so3::canonical_frame();
  Vec3 v(0.4, -0.8, 1.1);
  auto chord_sum = [&](int steps) {
    double len = 0;
    Vec9 prev = q0;
    for (int k = 1; k <= steps; k++) {
      Vec9 cur = so3::octa_exp(q0, Vec3((double)k / steps * v));
      len += (cur - prev).norm();
      prev = cur;
    }
    return len;
  };
  double l100 = chord_sum(100), l200 = chord_sum(200);
  CHECK(std::abs(l100 - l200) / l200 < 1e-4);
  // embedded speed is |v|/alpha
  CHECK(l200 == doctest::Approx(v.norm() / so3::frame_scale()).epsilon(1e-3));
}
