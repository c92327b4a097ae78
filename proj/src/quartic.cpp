#include "framefield/quartic.hpp"

#include <cmath>
#include <map>

#include "framefield/so3.hpp"

namespace framefield::quartic {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Sparse polynomial in x,y,z keyed by exponent triple. Only used to set up
// the cached change-of-basis constants.
using Poly = std::map<std::array<int, 3>, double>;

void add(Poly& p, std::array<int, 3> m, double c) { p[m] += c; }

Poly mul(const Poly& p, const Poly& q) {
  Poly r;
  for (auto& [mp, cp] : p)
    for (auto& [mq, cq] : q)
      add(r, {mp[0] + mq[0], mp[1] + mq[1], mp[2] + mq[2]}, cp * cq);
  return r;
}

Poly scale(Poly p, double s) {
  for (auto& [m, c] : p) c *= s;
  return p;
}

Poly sum(Poly p, const Poly& q) {
  for (auto& [m, c] : q) add(p, m, c);
  return p;
}

double double_factorial(int n) {
  double r = 1;
  for (int k = n; k >= 2; k -= 2) r *= k;
  return r;
}

// int_{S^2} x^a y^b z^c dA = 4 pi (a-1)!!(b-1)!!(c-1)!!/(a+b+c+1)!!
// for all-even exponents, zero otherwise.
double sphere_integral(int a, int b, int c) {
  if (a % 2 || b % 2 || c % 2) return 0.0;
  return 4.0 * kPi * double_factorial(a - 1) * double_factorial(b - 1) *
         double_factorial(c - 1) / double_factorial(a + b + c + 1);
}

double inner(const Poly& p, const Poly& q) {
  double s = 0;
  for (auto& [mp, cp] : p)
    for (auto& [mq, cq] : q)
      s += cp * cq *
           sphere_integral(mp[0] + mq[0], mp[1] + mq[1], mp[2] + mq[2]);
  return s;
}

Poly mono(int a, int b, int c, double coeff = 1.0) {
  Poly p;
  add(p, {a, b, c}, coeff);
  return p;
}

Poly r2() { return sum(sum(mono(2, 0, 0), mono(0, 2, 0)), mono(0, 0, 2)); }

// Real spherical harmonics as homogeneous polynomials of degree l, in the
// project convention (standard tables with negative-m functions negated).
Poly band0_fn() { return mono(0, 0, 0, 1.0 / (2.0 * std::sqrt(kPi))); }

std::array<Poly, 5> band2_fns() {
  std::array<Poly, 5> b;
  const double c = std::sqrt(15.0 / (4.0 * kPi));
  b[0] = mono(1, 1, 0, -c);
  b[1] = mono(0, 1, 1, -c);
  b[2] = sum(mono(0, 0, 2, 3.0 * std::sqrt(5.0 / (16.0 * kPi))),
             scale(r2(), -std::sqrt(5.0 / (16.0 * kPi))));
  b[3] = mono(1, 0, 1, c);
  b[4] = sum(mono(2, 0, 0, std::sqrt(15.0 / (16.0 * kPi))),
             mono(0, 2, 0, -std::sqrt(15.0 / (16.0 * kPi))));
  return b;
}

std::array<Poly, 9> band4_fns() {
  std::array<Poly, 9> b;
  Poly x2 = mono(2, 0, 0), y2 = mono(0, 2, 0), z2 = mono(0, 0, 2);
  Poly xy = mono(1, 1, 0), xz = mono(1, 0, 1), yz = mono(0, 1, 1);
  b[0] = scale(mul(xy, sum(x2, scale(y2, -1))), -0.75 * std::sqrt(35.0 / kPi));
  b[1] = scale(mul(yz, sum(scale(x2, 3), scale(y2, -1))),
               -0.75 * std::sqrt(35.0 / (2.0 * kPi)));
  b[2] = scale(mul(xy, sum(scale(z2, 7), scale(r2(), -1))),
               -0.75 * std::sqrt(5.0 / kPi));
  b[3] = scale(mul(yz, sum(scale(z2, 7), scale(r2(), -3))),
               -0.75 * std::sqrt(5.0 / (2.0 * kPi)));
  b[4] = scale(sum(sum(scale(mul(z2, z2), 35), scale(mul(z2, r2()), -30)),
                   scale(mul(r2(), r2()), 3)),
               (3.0 / 16.0) * std::sqrt(1.0 / kPi));
  b[5] = scale(mul(xz, sum(scale(z2, 7), scale(r2(), -3))),
               0.75 * std::sqrt(5.0 / (2.0 * kPi)));
  b[6] = scale(mul(sum(x2, scale(y2, -1)), sum(scale(z2, 7), scale(r2(), -1))),
               (3.0 / 8.0) * std::sqrt(5.0 / kPi));
  b[7] = scale(mul(xz, sum(x2, scale(y2, -3))),
               0.75 * std::sqrt(35.0 / (2.0 * kPi)));
  b[8] = scale(sum(sum(mul(x2, x2), scale(mul(x2, y2), -6)), mul(y2, y2)),
               (3.0 / 16.0) * std::sqrt(35.0 / kPi));
  return b;
}

Vec15 monomial_coeff_vector(const Poly& p) {
  Vec15 u = Vec15::Zero();
  const auto& ms = monomials();
  for (int j = 0; j < kNumMonomials; j++) {
    auto it = p.find(ms[j]);
    if (it != p.end()) u(j) = it->second;
  }
  return u;
}

}  // namespace

const std::array<std::array<int, 3>, kNumMonomials>& monomials() {
  static const auto table = [] {
    std::array<std::array<int, 3>, kNumMonomials> t;
    int idx = 0;
    for (int a = 4; a >= 0; a--)
      for (int b = 4 - a; b >= 0; b--) t[idx++] = {a, b, 4 - a - b};
    return t;
  }();
  return table;
}

const Mat15& monomial_to_sh_matrix() {
  static const Mat15 m = [] {
    std::array<Poly, 15> sh;
    sh[0] = band0_fn();
    auto b2 = band2_fns();
    auto b4 = band4_fns();
    for (int i = 0; i < 5; i++) sh[1 + i] = b2[i];
    for (int i = 0; i < 9; i++) sh[6 + i] = b4[i];
    Mat15 mm;
    const auto& ms = monomials();
    for (int i = 0; i < 15; i++)
      for (int j = 0; j < 15; j++)
        mm(i, j) = inner(sh[i], mono(ms[j][0], ms[j][1], ms[j][2]));
    return mm;
  }();
  return m;
}

const Mat15& sh_to_monomial_matrix() {
  static const Mat15 m = [] {
    // columns: homogenized basis polynomials Y_l * r^(4-l)
    std::array<Poly, 15> homog;
    homog[0] = mul(band0_fn(), mul(r2(), r2()));
    auto b2 = band2_fns();
    auto b4 = band4_fns();
    for (int i = 0; i < 5; i++) homog[1 + i] = mul(b2[i], r2());
    for (int i = 0; i < 9; i++) homog[6 + i] = b4[i];
    Mat15 mm;
    for (int j = 0; j < 15; j++) mm.col(j) = monomial_coeff_vector(homog[j]);
    return mm;
  }();
  return m;
}

Vec15 sh_of_axis_power(const Vec3& v) {
  Poly lin = sum(sum(mono(1, 0, 0, v(0)), mono(0, 1, 0, v(1))), mono(0, 0, 1, v(2)));
  Poly sq = mul(lin, lin);
  return monomial_to_sh_matrix() * monomial_coeff_vector(mul(sq, sq));
}

double octa_band0_constant() {
  static const double c0 = [] {
    Vec15 q = sh_of_axis_power(Vec3::UnitX()) + sh_of_axis_power(Vec3::UnitY()) +
              sh_of_axis_power(Vec3::UnitZ());
    return band0(q) / band4(q).norm();
  }();
  return c0;
}

Vec15 odeco_from_decomposition(const OdecoDecomposition& d) {
  if ((d.axes.transpose() * d.axes - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-8)
    throw AxesNotOrthonormal();
  Vec15 q = Vec15::Zero();
  for (int i = 0; i < 3; i++) q += d.lambdas(i) * sh_of_axis_power(d.axes.col(i));
  return q;
}

Vec15 octa_to_odeco(const Vec9& q) {
  if (so3::octa_membership_residual_cheap(q) > 1e-6) throw NotOnVariety();
  Vec15 r = Vec15::Zero();
  r(0) = octa_band0_constant();
  r.segment<9>(6) = q;
  return r;
}

Tensor4 tensor_from_sh(const Vec15& q) {
  Vec15 u = sh_to_monomial_matrix() * q;
  const auto& ms = monomials();
  // multinomial weights: u_{abc} x^a y^b z^c = T(x,x,x,x) with symmetric T
  auto fact = [](int n) { return n <= 1 ? 1.0 : n == 2 ? 2.0 : n == 3 ? 6.0 : 24.0; };
  Tensor4 t{};
  for (int i = 0; i < 3; i++)
    for (int j = 0; j < 3; j++)
      for (int k = 0; k < 3; k++)
        for (int l = 0; l < 3; l++) {
          int e[3] = {0, 0, 0};
          e[i]++, e[j]++, e[k]++, e[l]++;
          int idx = -1;
          for (int mI = 0; mI < kNumMonomials; mI++)
            if (ms[mI][0] == e[0] && ms[mI][1] == e[1] && ms[mI][2] == e[2]) {
              idx = mI;
              break;
            }
          double multi = 24.0 / (fact(e[0]) * fact(e[1]) * fact(e[2]));
          t[((i * 3 + j) * 3 + k) * 3 + l] = u(idx) / multi;
        }
  return t;
}

namespace {

Vec3 tensor_apply3(const Tensor4& t, const Vec3& u) {
  Vec3 r = Vec3::Zero();
  for (int i = 0; i < 3; i++) {
    double s = 0;
    for (int j = 0; j < 3; j++)
      for (int k = 0; k < 3; k++)
        for (int l = 0; l < 3; l++)
          s += t[((i * 3 + j) * 3 + k) * 3 + l] * u(j) * u(k) * u(l);
    r(i) = s;
  }
  return r;
}

double tensor_apply4(const Tensor4& t, const Vec3& u) {
  return tensor_apply3(t, u).dot(u);
}

void tensor_deflate(Tensor4& t, double lambda, const Vec3& v) {
  for (int i = 0; i < 3; i++)
    for (int j = 0; j < 3; j++)
      for (int k = 0; k < 3; k++)
        for (int l = 0; l < 3; l++)
          t[((i * 3 + j) * 3 + k) * 3 + l] -= lambda * v(i) * v(j) * v(k) * v(l);
}

// deterministic unit starting directions for the power iteration
std::array<Vec3, 8> power_starts() {
  std::array<Vec3, 8> s;
  int idx = 0;
  for (int sx : {1, -1})
    for (int sy : {1, -1})
      for (int sz : {1, -1}) s[idx++] = Vec3(sx * 1.0, sy * 0.8, sz * 0.6).normalized();
  return s;
}

}  // namespace

OdecoDecomposition tensor_decompose(const Vec15& q, int max_iter, double tol) {
  OdecoDecomposition d;
  double scale = q.norm();
  if (scale < 1e-14) {
    d.degenerate = true;
    return d;  // zero tensor: lambdas 0, axes identity
  }
  Tensor4 t = tensor_from_sh(q);
  const auto starts = power_starts();
  for (int axis = 0; axis < 3; axis++) {
    Vec3 best = Vec3::UnitZ();
    double best_lam = 0;
    bool any = false;
    for (const Vec3& s0 : starts) {
      Vec3 u = s0;
      bool alive = true;
      for (int it = 0; it < max_iter; it++) {
        Vec3 w = tensor_apply3(t, u);
        double n = w.norm();
        if (n < 1e-14 * scale) {  // deflated to (numerical) zero
          alive = false;
          break;
        }
        // iterate toward the eigenvector regardless of the eigenvalue sign
        if (w.dot(u) < 0) w = -w;
        w /= n;
        double step = (w - u).norm();
        u = w;
        if (step < 1e-12) break;
      }
      if (!alive) continue;
      // keep the best candidate even when the step tolerance was not
      // reached; the final reconstruction check rejects non-odeco input
      double lam = tensor_apply4(t, u);
      if (!any || std::abs(lam) > std::abs(best_lam)) {
        any = true;
        best_lam = lam;
        best = u;
      }
    }
    if (!any) {
      // remaining tensor is (numerically) zero: weights stay 0 and the axis
      // is completed orthogonally below
      d.degenerate = true;
      best = Vec3::Zero();
      best_lam = 0;
    }
    d.lambdas(axis) = best_lam;
    d.axes.col(axis) = best;
    if (any) tensor_deflate(t, best_lam, best);
  }
  // complete/repair near-zero axes, then re-orthogonalize by polar
  // decomposition (needed for repeated-lambda frames)
  {
    Eigen::JacobiSVD<Mat3> svd(d.axes, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(2) < 0.5) {
      // some axis collapsed; rebuild the frame from the leading directions
      Mat3 a = d.axes;
      int good = 0;
      for (int i = 0; i < 3; i++)
        if (a.col(i).norm() > 0.5) good++;
      Mat3 basis = Mat3::Identity();
      int bi = 0;
      for (int i = 0; i < good; i++) basis.col(bi++) = a.col(i).normalized();
      // Gram-Schmidt completion
      for (int c = 0; bi < 3 && c < 3; c++) {
        Vec3 cand = Mat3::Identity().col(c);
        for (int k = 0; k < bi; k++) cand -= cand.dot(basis.col(k)) * basis.col(k);
        if (cand.norm() > 0.3) basis.col(bi++) = cand.normalized();
      }
      d.axes = basis;
      d.degenerate = true;
    }
    Eigen::JacobiSVD<Mat3> svd2(d.axes, Eigen::ComputeFullU | Eigen::ComputeFullV);
    d.axes = svd2.matrixU() * svd2.matrixV().transpose();
  }
  // refit lambdas against the orthonormalized axes
  {
    Eigen::Matrix<double, 15, 3> basis;
    for (int i = 0; i < 3; i++) basis.col(i) = sh_of_axis_power(d.axes.col(i));
    d.lambdas = (basis.transpose() * basis).ldlt().solve(basis.transpose() * q);
  }
  // sort descending by lambda, keeping axes attached
  for (int i = 0; i < 3; i++)
    for (int j = i + 1; j < 3; j++)
      if (d.lambdas(j) > d.lambdas(i)) {
        std::swap(d.lambdas(i), d.lambdas(j));
        d.axes.col(i).swap(d.axes.col(j));
      }
  // restore right-handedness after sorting (sign of one axis is free)
  if (d.axes.determinant() < 0) d.axes.col(2) = -d.axes.col(2);

  Vec15 rec = Vec15::Zero();
  for (int i = 0; i < 3; i++) rec += d.lambdas(i) * sh_of_axis_power(d.axes.col(i));
  if ((rec - q).norm() > tol * std::max(1.0, scale))
    throw NotOdeco("tensor_decompose: reconstruction residual too high");
  return d;
}

}  // namespace framefield::quartic
