#include "framefield/varieties.hpp"

#include <cmath>
#include <random>

#include "framefield/quartic.hpp"
#include "framefield/so3.hpp"

namespace framefield::varieties {

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d q;
  for (int i = 0; i < 4; i++) q(i) = normal(rng);
  q.normalize();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

// Split a nullspace followed by a symmetric packing and Frobenius
// re-orthonormalization into one helper shared by both derivations.
std::vector<MatX> nullspace_quadrics(const MatX& samples, int lift_dim,
                                     bool lifted, int expected_count,
                                     DerivationGap* gap) {
  Eigen::BDCSVD<MatX> svd(samples, Eigen::ComputeThinV);
  const VecX& sv = svd.singularValues();
  const double top = sv(0);
  int cols = (int)samples.cols();
  int nulls = 0;
  for (int i = 0; i < cols; i++)
    if (sv(i) < 1e-10 * top) nulls++;
  if (nulls != expected_count)
    throw DegenerateSampling("nullspace dimension " + std::to_string(nulls) +
                             ", expected " + std::to_string(expected_count));
  double last_null = sv(cols - 1 - (nulls - 1));  // largest null singular value
  double first_nonnull = sv(cols - nulls - 1);    // smallest non-null
  if (gap) {
    gap->last_null = last_null;
    gap->first_nonnull = first_nonnull;
  }
  if (!(first_nonnull / std::max(last_null, 1e-300) >= 1e4))
    throw DegenerateSampling("singular-value gap below 1e4");

  // pack monomial coefficient vectors as symmetric matrices
  std::vector<MatX> mats;
  for (int k = cols - nulls; k < cols; k++) {
    VecX c = svd.matrixV().col(k);
    MatX p = MatX::Zero(lift_dim, lift_dim);
    int idx = 0;
    if (lifted) {
      p(0, 0) = c(idx++);
      for (int i = 1; i < lift_dim; i++) {
        p(0, i) = p(i, 0) = 0.5 * c(idx++);
      }
    }
    for (int i = lifted ? 1 : 0; i < lift_dim; i++)
      for (int j = i; j < lift_dim; j++) {
        double v = c(idx++);
        if (i == j)
          p(i, i) = v;
        else
          p(i, j) = p(j, i) = 0.5 * v;
      }
    mats.push_back(p);
  }

  // modified Gram-Schmidt under the Frobenius inner product
  for (size_t i = 0; i < mats.size(); i++) {
    for (size_t j = 0; j < i; j++)
      mats[i] -= (mats[i].cwiseProduct(mats[j])).sum() * mats[j];
    mats[i] /= mats[i].norm();
  }
  return mats;
}

}  // namespace

QuadricSet derive_octa_quadrics(int samples, std::uint64_t seed, DerivationGap* gap) {
  if (samples < 500) throw DegenerateSampling("need at least 500 samples");
  std::mt19937_64 rng(seed);
  MatX a(samples, 55);
  for (int s = 0; s < samples; s++) {
    Mat3 r = random_rotation(rng);
    Vec9 q = so3::wigner_from_rotation(4, r) * so3::canonical_frame();
    int col = 0;
    a(s, col++) = 1.0;
    for (int i = 0; i < 9; i++) a(s, col++) = q(i);
    for (int i = 0; i < 9; i++)
      for (int j = i; j < 9; j++) a(s, col++) = q(i) * q(j);
  }
  QuadricSet qs;
  qs.dim = 9;
  qs.homogeneous = false;
  qs.mats = nullspace_quadrics(a, 10, true, 15, gap);
  return qs;
}

QuadricSet derive_odeco_quadrics(int samples, std::uint64_t seed, DerivationGap* gap) {
  if (samples < 2000) throw DegenerateSampling("need at least 2000 samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatX a(samples, 120);
  for (int s = 0; s < samples; s++) {
    quartic::OdecoDecomposition d;
    d.axes = random_rotation(rng);
    for (int i = 0; i < 3; i++) d.lambdas(i) = normal(rng);
    Vec15 q = quartic::odeco_from_decomposition(d);
    int col = 0;
    for (int i = 0; i < 15; i++)
      for (int j = i; j < 15; j++) a(s, col++) = q(i) * q(j);
  }
  QuadricSet qs;
  qs.dim = 15;
  qs.homogeneous = true;
  qs.mats = nullspace_quadrics(a, 15, false, 27, gap);
  return qs;
}

const QuadricSet& zaligned_odeco_quadrics() {
  static const QuadricSet qs = [] {
    const double s2 = std::sqrt(2.0);
    QuadricSet z;
    z.dim = 5;
    z.homogeneous = true;
    Mat5 m1, m2, m3;
    m1 << -4, 0, -3 * s2, 0, 0,
           0, 0, 0, 18, 0,
          -3 * s2, 0, 0, 0, 18,
           0, 18, 0, 72, 0,
           0, 0, 18, 0, 72;
    m2 << 0, 6 * s2, 0, 0, 0,
          6 * s2, 0, 0, 0, 36,
          0, 0, 0, -36, 0,
          0, 0, -36, 0, 0,
          0, 36, 0, 0, 0;
    m3 << -4, 0, 3 * s2, 0, 0,
           0, 0, 0, -18, 0,
           3 * s2, 0, 0, 0, -18,
           0, -18, 0, 72, 0,
           0, 0, -18, 0, 72;
    z.mats = {m1, m2, m3};
    return z;
  }();
  return qs;
}

double residual(const VecX& q, const QuadricSet& quadrics) {
  if (q.size() != quadrics.dim) throw DimensionMismatch();
  VecX u;
  if (quadrics.homogeneous) {
    u = q;
  } else {
    u.resize(q.size() + 1);
    u(0) = 1.0;
    u.tail(q.size()) = q;
  }
  double res = 0;
  for (const MatX& a : quadrics.mats) res = std::max(res, std::abs(u.dot(a * u)));
  return res;
}

Eigen::Matrix<double, 15, 3> odeco_rotational_basis(const Vec15& q) {
  const auto& l2 = so3::band2_generators();
  const auto& l4 = so3::band4_generators();
  Eigen::Matrix<double, 15, 3> basis;
  for (int i = 0; i < 3; i++) {
    Vec15 v = Vec15::Zero();
    v.segment<5>(1) = l2[i] * q.segment<5>(1);
    v.segment<9>(6) = l4[i] * q.segment<9>(6);
    basis.col(i) = v;
  }
  return basis;
}

MatX odeco_normal_space(const Vec15& q, const QuadricSet& odeco) {
  if (odeco.dim != 15 || (int)odeco.mats.size() < 27) throw DimensionMismatch();
  double qn = q.norm();
  if (qn < 1e-12 || residual(q, odeco) > 1e-6 * std::max(1.0, qn * qn))
    throw SingularPoint("odeco_normal_space: off-variety or origin");
  MatX n(15, odeco.mats.size());
  for (size_t i = 0; i < odeco.mats.size(); i++) n.col(i) = odeco.mats[i] * q;
  Eigen::BDCSVD<MatX> svd(n, Eigen::ComputeThinU);
  const VecX& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); i++)
    if (sv(i) > 1e-8 * qn) rank++;
  if (rank < 9)
    throw SingularPoint("odeco normal rank " + std::to_string(rank) +
                        " below generic 9");
  return svd.matrixU().leftCols(9);
}

TangentSplit odeco_tangent_split(const Vec15& q, const QuadricSet& odeco) {
  MatX normal = odeco_normal_space(q, odeco);  // throws SingularPoint
  // full tangent space: orthogonal complement of the normal space
  Eigen::FullPivHouseholderQR<MatX> qr(normal);
  MatX full = qr.matrixQ();
  MatX tangent = full.rightCols(15 - normal.cols());

  Eigen::Matrix<double, 15, 3> rot = odeco_rotational_basis(q);
  // orthonormalize rotational directions (rank < 3 on degenerate strata)
  Eigen::BDCSVD<MatX> rsvd(MatX(rot), Eigen::ComputeThinU);
  int rrank = 0;
  for (int i = 0; i < rsvd.singularValues().size(); i++)
    if (rsvd.singularValues()(i) > 1e-10 * std::max(1.0, q.norm())) rrank++;
  MatX rbasis = rsvd.matrixU().leftCols(rrank);

  // scaling = tangent directions orthogonal to the rotational span
  MatX proj = tangent - rbasis * (rbasis.transpose() * tangent);
  Eigen::BDCSVD<MatX> ssvd(proj, Eigen::ComputeThinU);
  int srank = 0;
  for (int i = 0; i < ssvd.singularValues().size(); i++)
    if (ssvd.singularValues()(i) > 1e-8) srank++;
  TangentSplit split;
  split.rotational = rbasis;
  split.scaling = ssvd.matrixU().leftCols(srank);
  return split;
}

Vec15 odeco_retract(const Vec15& q, const Vec15& v, const QuadricSet& odeco) {
  MatX normal = odeco_normal_space(q, odeco);
  if ((normal.transpose() * v).norm() > 1e-8 * std::max(1.0, v.norm()))
    throw NotTangent();
  Eigen::Matrix<double, 15, 3> rot = odeco_rotational_basis(q);
  Mat3 gram = rot.transpose() * rot;
  // pseudo-solve: rotational rank can drop on degenerate strata
  Eigen::JacobiSVD<Mat3> gs(gram, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 rhs = rot.transpose() * v;
  Vec3 beta = Vec3::Zero();
  for (int i = 0; i < 3; i++) {
    double s = gs.singularValues()(i);
    if (s > 1e-10 * gs.singularValues()(0))
      beta += gs.matrixV().col(i) * (gs.matrixU().col(i).dot(rhs) / s);
  }
  Vec15 vs = v - rot * beta;
  return so3::wigner_direct_sum_axis_angle(beta) * (q + vs);
}

}  // namespace framefield::varieties
