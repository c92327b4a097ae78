#include "framefield/so3.hpp"

#include <cmath>

namespace framefield::so3 {

namespace {

constexpr double kPi = 3.14159265358979323846;

Mat9 supplemental_l1() {
  const double s2 = std::sqrt(2.0);
  const double s72 = std::sqrt(7.0 / 2.0);
  const double t2 = 3.0 / std::sqrt(2.0);
  const double s10 = std::sqrt(10.0);
  Mat9 m = Mat9::Zero();
  auto set = [&](int i, int j, double v) {
    m(i - 1, j - 1) = v;
    m(j - 1, i - 1) = -v;
  };
  set(1, 8, -s2);
  set(2, 7, -s72);
  set(2, 9, -s2);
  set(3, 6, -t2);
  set(3, 8, -s72);
  set(4, 5, -s10);
  set(4, 7, -t2);
  return m;
}

Mat9 supplemental_l2() {
  const double s2 = std::sqrt(2.0);
  const double s72 = std::sqrt(7.0 / 2.0);
  const double t2 = 3.0 / std::sqrt(2.0);
  const double s10 = std::sqrt(10.0);
  Mat9 m = Mat9::Zero();
  auto set = [&](int i, int j, double v) {
    m(i - 1, j - 1) = v;
    m(j - 1, i - 1) = -v;
  };
  set(1, 2, s2);
  set(2, 3, s72);
  set(3, 4, t2);
  set(5, 6, -s10);
  set(6, 7, -t2);
  set(7, 8, -s72);
  set(8, 9, -s2);
  return m;
}

Mat9 supplemental_l3() {
  Mat9 m = Mat9::Zero();
  auto set = [&](int i, int j, double v) {
    m(i - 1, j - 1) = v;
    m(j - 1, i - 1) = -v;
  };
  set(1, 9, 4);
  set(2, 8, 3);
  set(3, 7, 2);
  set(4, 6, 1);
  return m;
}

// Band-2 generators in the project convention, derived by differentiating
// the rotation action on the real degree-2 harmonics (see tests for the
// finite-difference oracle that re-derives these).
Mat5 band2_l1() {
  const double s3 = std::sqrt(3.0);
  Mat5 m = Mat5::Zero();
  auto set = [&](int i, int j, double v) {
    m(i - 1, j - 1) = v;
    m(j - 1, i - 1) = -v;
  };
  set(1, 4, -1);
  set(2, 3, -s3);
  set(2, 5, -1);
  return m;
}

Mat5 band2_l2() {
  const double s3 = std::sqrt(3.0);
  Mat5 m = Mat5::Zero();
  auto set = [&](int i, int j, double v) {
    m(i - 1, j - 1) = v;
    m(j - 1, i - 1) = -v;
  };
  set(1, 2, 1);
  set(3, 4, -s3);
  set(4, 5, -1);
  return m;
}

Mat5 band2_l3() {
  Mat5 m = Mat5::Zero();
  auto set = [&](int i, int j, double v) {
    m(i - 1, j - 1) = v;
    m(j - 1, i - 1) = -v;
  };
  set(1, 5, 2);
  set(2, 4, 1);
  return m;
}

}  // namespace

double frame_scale() { return std::sqrt(3.0 / 20.0); }

const Vec9& canonical_frame() {
  static const Vec9 q0 = [] {
    Vec9 q = Vec9::Zero();
    q(4) = std::sqrt(7.0 / 12.0);
    q(8) = std::sqrt(5.0 / 12.0);
    return q;
  }();
  return q0;
}

const std::array<Mat3, 3>& lie_generators() {
  static const std::array<Mat3, 3> gens = [] {
    std::array<Mat3, 3> g;
    g[0] << 0, 0, 0, 0, 0, 1, 0, -1, 0;
    g[1] << 0, 0, 1, 0, 0, 0, -1, 0, 0;
    g[2] << 0, 1, 0, -1, 0, 0, 0, 0, 0;
    return g;
  }();
  return gens;
}

const std::array<Mat5, 3>& band2_generators() {
  static const std::array<Mat5, 3> gens = {band2_l1(), band2_l2(), band2_l3()};
  return gens;
}

const std::array<Mat9, 3>& band4_generators() {
  static const std::array<Mat9, 3> gens = {supplemental_l1(), supplemental_l2(),
                                           supplemental_l3()};
  return gens;
}

const Mat5& band2_r23() {
  static const Mat5 r = [] {
    const double h = 0.5, s32 = std::sqrt(3.0) / 2.0;
    Mat5 m = Mat5::Zero();
    m(0, 3) = -1;
    m(1, 1) = -1;
    m(2, 2) = -h;
    m(2, 4) = -s32;
    m(3, 0) = 1;
    m(4, 2) = -s32;
    m(4, 4) = h;
    return m;
  }();
  return r;
}

const Mat9& band4_r23() {
  static const Mat9 r = [] {
    const double a = std::sqrt(7.0 / 2.0) / 2.0;
    const double b = 1.0 / (2.0 * std::sqrt(2.0));
    const double c = std::sqrt(7.0) / 4.0;
    const double d = std::sqrt(5.0) / 4.0;
    const double e = std::sqrt(35.0) / 8.0;
    Mat9 m = Mat9::Zero();
    m(0, 5) = a;
    m(0, 7) = -b;
    m(1, 1) = -0.75;
    m(1, 3) = c;
    m(2, 5) = b;
    m(2, 7) = a;
    m(3, 1) = c;
    m(3, 3) = 0.75;
    m(4, 4) = 3.0 / 8.0;
    m(4, 6) = d;
    m(4, 8) = e;
    m(5, 0) = -a;
    m(5, 2) = -b;
    m(6, 4) = d;
    m(6, 6) = 0.5;
    m(6, 8) = -c;
    m(7, 0) = b;
    m(7, 2) = -a;
    m(8, 4) = e;
    m(8, 6) = -c;
    m(8, 8) = 1.0 / 8.0;
    return m;
  }();
  return r;
}

const std::vector<Mat3>& octahedral_group() {
  static const std::vector<Mat3> group = [] {
    const auto& l = lie_generators();
    std::vector<Mat3> elems;
    elems.push_back(Mat3::Identity());
    std::vector<Mat3> gens;
    for (int i = 0; i < 3; i++) {
      Mat3 g = rotation_from_axis_angle(Vec3::Unit(i) * (kPi / 2.0));
      // quarter-turn entries are 0/+-1 up to fp noise in cos(pi/2)
      for (int r = 0; r < 3; r++)
        for (int c = 0; c < 3; c++) g(r, c) = std::round(g(r, c));
      gens.push_back(g);
    }
    (void)l;
    bool grew = true;
    while (grew) {
      grew = false;
      std::vector<Mat3> next = elems;
      for (const Mat3& a : elems)
        for (const Mat3& g : gens) {
          Mat3 p = g * a;
          bool found = false;
          for (const Mat3& e : next)
            if ((p - e).cwiseAbs().maxCoeff() < 1e-8) {
              found = true;
              break;
            }
          if (!found) {
            next.push_back(p);
            grew = true;
          }
        }
      elems = std::move(next);
      if (elems.size() > 24) break;
    }
    if (elems.size() != 24)
      throw NumericalError("octahedral group closure did not stabilize at 24 elements");
    return elems;
  }();
  return group;
}

const Mat9& group_average_projector() {
  static const Mat9 h = [] {
    Mat9 sum = Mat9::Zero();
    for (const Mat3& g : octahedral_group()) sum += wigner_from_rotation(4, g);
    return Mat9((1.0 / 24.0) * sum);
  }();
  return h;
}

Mat5 wigner_z_band2(double theta) {
  Mat5 m = Mat5::Zero();
  m(2, 2) = 1;
  for (int k = 1; k <= 2; k++) {
    double c = std::cos(k * theta), s = std::sin(k * theta);
    int lo = 2 - k, hi = 2 + k;
    m(lo, lo) = c;
    m(hi, hi) = c;
    m(lo, hi) = s;
    m(hi, lo) = -s;
  }
  return m;
}

Mat9 wigner_z_band4(double theta) {
  Mat9 m = Mat9::Zero();
  m(4, 4) = 1;
  for (int k = 1; k <= 4; k++) {
    double c = std::cos(k * theta), s = std::sin(k * theta);
    int lo = 4 - k, hi = 4 + k;
    m(lo, lo) = c;
    m(hi, hi) = c;
    m(lo, hi) = s;
    m(hi, lo) = -s;
  }
  return m;
}

MatX wigner_z(int band, double theta) {
  if (band == 2) return wigner_z_band2(theta);
  if (band == 4) return wigner_z_band4(theta);
  throw DimensionMismatch("wigner_z: band must be 2 or 4");
}

Mat3 rotation_from_axis_angle(const Vec3& v) {
  double angle = v.norm();
  if (angle < 1e-300) return Mat3::Identity();
  Vec3 u = v / angle;
  const auto& l = lie_generators();
  Mat3 k = u(0) * l[0] + u(1) * l[1] + u(2) * l[2];
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
}

Vec3 axis_angle_from_rotation(const Mat3& r) {
  double c = (r.trace() - 1.0) / 2.0;
  c = std::min(1.0, std::max(-1.0, c));
  // |skew|_F = sqrt(2) sin(theta); atan2 keeps the angle well conditioned
  // at both ends (acos alone loses half the digits near pi)
  double s = 0.5 * (r - r.transpose()).norm() / std::sqrt(2.0);
  double angle = std::atan2(std::min(1.0, s), c);
  if (angle < 1e-6) {
    // first-order: r ~ I + (v . l)
    const auto& l = lie_generators();
    Mat3 skew = 0.5 * (r - r.transpose());
    Vec3 v;
    for (int i = 0; i < 3; i++) v(i) = 0.5 * (skew.cwiseProduct(l[i])).sum();
    return v;
  }
  // near pi the skew part shrinks like sin(theta) while the angle stays
  // large, so axis roundoff is amplified by the full angle; the symmetric
  // part's unit eigenvector is exact there
  if (angle > kPi - 1e-3) {
    // axis from the symmetric part: the rotation axis a satisfies r a = a;
    // the l-basis coefficients are (-a1, a2, -a3)
    Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (r + r.transpose()));
    Vec3 a = es.eigenvectors().col(2);  // largest eigenvalue ~ 1
    Vec3 v = angle * Vec3(-a(0), a(1), -a(2));
    if ((rotation_from_axis_angle(v) - r).norm() >
        (rotation_from_axis_angle((-v).eval()) - r).norm())
      v = -v;
    return v;
  }
  const auto& l = lie_generators();
  Mat3 skew = 0.5 * (r - r.transpose());
  Vec3 v;
  // skew = sin(angle) * (u . l), <l_i, l_j>_F = 2 delta_ij
  for (int i = 0; i < 3; i++) v(i) = 0.5 * (skew.cwiseProduct(l[i])).sum();
  return (angle / std::sin(angle)) * v;
}

namespace {

template <typename Mat>
Mat wigner_z_fixed(double theta) {
  if constexpr (Mat::RowsAtCompileTime == 5)
    return wigner_z_band2(theta);
  else
    return wigner_z_band4(theta);
}

// rho(r) with r = exp(-phi l2) exp(-theta l3), the rotation taking the unit
// vector with spherical angles (theta, phi) to z.
template <typename Mat>
Mat wigner_axis_frame(const Mat& r23, double theta, double phi) {
  return r23.transpose() * wigner_z_fixed<Mat>(-phi) * r23 *
         wigner_z_fixed<Mat>(-theta);
}

template <typename Mat>
Mat wigner_axis_angle_impl(const Mat& r23, const Vec3& v) {
  double angle = v.norm();
  if (angle < 1e-300) return Mat::Identity();
  Vec3 u = v / angle;
  double phi = std::acos(std::min(1.0, std::max(-1.0, u(2))));
  double sphi = std::sqrt(std::max(0.0, 1.0 - u(2) * u(2)));
  double theta = sphi < 1e-14 ? 0.0 : std::atan2(u(1), u(0));
  Mat rho_r = wigner_axis_frame(r23, theta, phi);
  return rho_r.transpose() * wigner_z_fixed<Mat>(angle) * rho_r;
}

}  // namespace

MatX wigner_from_axis_angle(int band, const Vec3& v) {
  if (band == 2) return wigner_axis_angle_impl<Mat5>(band2_r23(), v);
  if (band == 4) return wigner_axis_angle_impl<Mat9>(band4_r23(), v);
  throw DimensionMismatch("wigner_from_axis_angle: band must be 2 or 4");
}

MatX wigner_from_rotation(int band, const Mat3& r) {
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-8 ||
      r.determinant() <= 0)
    throw NotARotation();
  return wigner_from_axis_angle(band, axis_angle_from_rotation(r));
}

Mat15 wigner_direct_sum(const Mat3& r) {
  return wigner_direct_sum_axis_angle(axis_angle_from_rotation(r));
}

Mat15 wigner_direct_sum_axis_angle(const Vec3& v) {
  Mat15 w = Mat15::Zero();
  w(0, 0) = 1.0;
  w.block<5, 5>(1, 1) = wigner_axis_angle_impl<Mat5>(band2_r23(), v);
  w.block<9, 9>(6, 6) = wigner_axis_angle_impl<Mat9>(band4_r23(), v);
  return w;
}

double octa_membership_residual_cheap(const Vec9& q) {
  double res = std::abs(q.norm() - 1.0);
  Eigen::Matrix<double, 9, 3> basis = octa_tangent_basis(q);
  Mat3 gram = basis.transpose() * basis;
  res = std::max(res, (gram - (20.0 / 3.0) * Mat3::Identity()).cwiseAbs().maxCoeff() /
                          (20.0 / 3.0));
  return res;
}

Vec9 octa_exp(const Vec9& q, const Vec3& v) {
  if (octa_membership_residual_cheap(q) > 1e-6) throw NotOnVariety();
  return wigner_axis_angle_impl<Mat9>(band4_r23(), v) * q;
}

Eigen::Matrix<double, 9, 3> octa_tangent_basis(const Vec9& q) {
  const auto& gens = band4_generators();
  Eigen::Matrix<double, 9, 3> basis;
  for (int i = 0; i < 3; i++) basis.col(i) = gens[i] * q;
  return basis;
}

Mat3 rotation_taking_z_to(const Vec3& n) {
  if (std::abs(n.norm() - 1.0) > 1e-8) throw NotUnit();
  const Vec3 z = Vec3::UnitZ();
  double d = n.dot(z);
  if (d < -1.0 + 1e-9) {
    Mat3 r;
    r << 1, 0, 0, 0, -1, 0, 0, 0, -1;  // pi about x
    return r;
  }
  Vec3 axis = z.cross(n);
  double s = axis.norm();
  if (s < 1e-14) return Mat3::Identity();
  axis /= s;
  double angle = std::atan2(s, d);
  // standard Rodrigues about `axis` (independent of the l-basis)
  Mat3 k;
  k << 0, -axis(2), axis(1), axis(2), 0, -axis(0), -axis(1), axis(0), 0;
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
}

}  // namespace framefield::so3
