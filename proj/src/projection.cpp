#include "framefield/projection.hpp"

#include <cmath>

#include "framefield/quartic.hpp"
#include "framefield/so3.hpp"

namespace framefield::projection {

namespace {

int mono_index(int a, int b, int c) {
  const auto& ms = quartic::monomials();
  for (int i = 0; i < quartic::kNumMonomials; i++)
    if (ms[i][0] == a && ms[i][1] == b && ms[i][2] == c) return i;
  throw DimensionMismatch("bad monomial");
}

Vec15 sh_of(std::initializer_list<std::pair<std::array<int, 3>, double>> terms) {
  Vec15 u = Vec15::Zero();
  for (auto& [m, c] : terms) u(mono_index(m[0], m[1], m[2])) = c;
  return quartic::monomial_to_sh_matrix() * u;
}

struct ChartVectors {
  Vec15 qz;   // coeffs of z^4
  Vec15 ws;   // (3/8)(x^2+y^2)^2
  Vec15 w2c;  // (1/2)(x^4 - y^4)
  Vec15 w2s;  // (1/2)(2x^3 y + 2x y^3)
  Vec15 w4c;  // (1/8)(x^4 - 6x^2y^2 + y^4)
  Vec15 w4s;  // (1/8)(4x^3 y - 4x y^3)
};

const ChartVectors& chart_vectors() {
  static const ChartVectors v = [] {
    ChartVectors cv;
    cv.qz = sh_of({{{0, 0, 4}, 1.0}});
    cv.ws = sh_of({{{4, 0, 0}, 3.0 / 8}, {{2, 2, 0}, 6.0 / 8}, {{0, 4, 0}, 3.0 / 8}});
    cv.w2c = sh_of({{{4, 0, 0}, 0.5}, {{0, 4, 0}, -0.5}});
    cv.w2s = sh_of({{{3, 1, 0}, 1.0}, {{1, 3, 0}, 1.0}});
    cv.w4c = sh_of({{{4, 0, 0}, 1.0 / 8}, {{2, 2, 0}, -6.0 / 8}, {{0, 4, 0}, 1.0 / 8}});
    cv.w4s = sh_of({{{3, 1, 0}, 0.5}, {{1, 3, 0}, -0.5}});
    return cv;
  }();
  return v;
}

const MatX& chart_gram() {
  static const MatX g = [] {
    const auto& b = odeco_chart_B();
    return MatX(b.transpose() * b);
  }();
  return g;
}

// deterministic descent on half |q - y|^2 along octahedral geodesics
Vec9 octa_descent(Vec9 q, const Vec9& y, int iters) {
  for (int it = 0; it < iters; it++) {
    auto basis = so3::octa_tangent_basis(q);
    Vec3 beta = (3.0 / 20.0) * (basis.transpose() * (q - y));
    double g2 = beta.squaredNorm() * (20.0 / 3.0);
    if (g2 < 1e-24) break;
    double f0 = 0.5 * (q - y).squaredNorm();
    double step = 1.0;
    for (int bt = 0; bt < 30; bt++) {
      Vec9 cand = so3::octa_exp(q, (-step * beta).eval());
      if (0.5 * (cand - y).squaredNorm() <= f0 - 0.25 * step * g2) {
        q = cand;
        break;
      }
      step *= 0.5;
    }
  }
  return q;
}

Vec9 octa_fallback(const Vec9& y, const sdp::SdpSolution& sol) {
  std::vector<Vec9> starts;
  // frame recovered from the top eigenvector of X, via tensor decomposition
  {
    Eigen::SelfAdjointEigenSolver<MatX> es(sol.X);
    VecX u = es.eigenvectors().col(9);
    if (std::abs(u(0)) > 1e-10) {
      Vec9 dir = u.tail(9) / u(0);
      if (dir.norm() > 1e-10) {
        dir.normalize();
        Vec15 lift = Vec15::Zero();
        lift(0) = quartic::octa_band0_constant();
        lift.segment<9>(6) = dir;
        auto d = quartic::tensor_decompose(lift, 400, 1e9);
        Mat3 axes = d.axes;
        starts.push_back(so3::wigner_from_rotation(4, axes) * so3::canonical_frame());
      }
    }
  }
  // fixed rotation grid
  for (int i = 0; i < 8; i++) {
    Vec3 ax = Vec3(std::cos(0.9 * i), std::sin(1.7 * i + 0.3), std::cos(2.3 * i + 1.1));
    ax.normalize();
    double ang = 0.4 + 0.35 * i;
    starts.push_back(
        so3::wigner_from_axis_angle(4, (ang * ax).eval()) * so3::canonical_frame());
  }
  Vec9 best = starts[0];
  double bestf = std::numeric_limits<double>::infinity();
  for (const Vec9& s : starts) {
    Vec9 r = octa_descent(s, y, 50);
    double f = (r - y).squaredNorm();
    if (f < bestf) {
      bestf = f;
      best = r;
    }
  }
  return best;
}

Vec15 odeco_descent(Vec15 q, const Vec15& y, const varieties::QuadricSet& odeco,
                    int iters) {
  for (int it = 0; it < iters; it++) {
    MatX normal;
    try {
      normal = varieties::odeco_normal_space(q, odeco);
    } catch (const SingularPoint&) {
      break;
    }
    Vec15 g = q - y;
    Vec15 gt = g - normal * (normal.transpose() * g);
    double g2 = gt.squaredNorm();
    if (g2 < 1e-24) break;
    double f0 = 0.5 * (q - y).squaredNorm();
    double step = 1.0;
    for (int bt = 0; bt < 30; bt++) {
      Vec15 cand;
      try {
        cand = varieties::odeco_retract(q, (-step * gt).eval(), odeco);
      } catch (const NumericalError&) {
        step *= 0.5;
        continue;
      }
      if (0.5 * (cand - y).squaredNorm() <= f0 - 0.25 * step * g2) {
        q = cand;
        break;
      }
      step *= 0.5;
    }
  }
  return q;
}

Vec15 odeco_fallback(const Vec15& y, const sdp::SdpSolution& sol,
                     const varieties::QuadricSet& odeco) {
  std::vector<Vec15> starts;
  {
    Eigen::SelfAdjointEigenSolver<MatX> es(sol.X);
    VecX u = es.eigenvectors().col(15);
    if (std::abs(u(0)) > 1e-10) {
      Vec15 dir = u.tail(15) / u(0);
      auto d = quartic::tensor_decompose(dir, 400, 1e9);
      starts.push_back(quartic::odeco_from_decomposition(d));
    }
  }
  {
    auto d = quartic::tensor_decompose(y, 400, 1e9);
    starts.push_back(quartic::odeco_from_decomposition(d));
  }
  Vec15 best = Vec15::Zero();
  double bestf = 0.5 * y.squaredNorm();  // the origin is on the cone
  for (const Vec15& s : starts) {
    Vec15 r = odeco_descent(s, y, odeco, 50);
    double f = 0.5 * (r - y).squaredNorm();
    if (f < bestf) {
      bestf = f;
      best = r;
    }
  }
  return best;
}

}  // namespace

OctaProjection project_octa(const Vec9& y, const varieties::QuadricSet& octa,
                            const sdp::SdpOptions& opts) {
  // F lies on the unit sphere, so the nearest point is invariant to positive
  // radial scaling of the query; normalizing keeps the SDP well conditioned
  double scale = y.norm();
  Vec9 yn = scale > 1e-12 ? Vec9(y / scale) : y;
  sdp::SdpProblem p = sdp::lift_projection_octa(yn, octa);
  sdp::SdpSolution sol = sdp::solve(p, opts);
  if (sol.status == sdp::Status::NumericalFailure)
    throw SolverFailure("octahedral projection SDP failed");
  OctaProjection out;
  out.ratio = sol.eig_ratio;
  out.solver_optimal = sol.status == sdp::Status::Optimal;
  if (auto q = sdp::rank1_extract(sol)) {
    out.q = *q;
    out.q /= out.q.norm();
    out.exact = true;
    return out;
  }
  out.q = octa_fallback(yn, sol);
  out.exact = false;
  return out;
}

OdecoProjection project_odeco(const Vec15& y, const varieties::QuadricSet& odeco,
                              const sdp::SdpOptions& opts) {
  // the odeco variety is a cone: Pi(c y) = c Pi(y) for c > 0
  double scale = y.norm();
  Vec15 yn = scale > 1e-12 ? Vec15(y / scale) : y;
  sdp::SdpProblem p = sdp::lift_projection_odeco(yn, odeco);
  sdp::SdpSolution sol = sdp::solve(p, opts);
  if (sol.status == sdp::Status::NumericalFailure)
    throw SolverFailure("odeco projection SDP failed");
  OdecoProjection out;
  out.ratio = sol.eig_ratio;
  out.solver_optimal = sol.status == sdp::Status::Optimal;
  if (auto q = sdp::rank1_extract(sol)) {
    out.q = scale > 1e-12 ? Vec15(scale * *q) : Vec15(*q);
    out.exact = true;
    return out;
  }
  out.q = odeco_fallback(yn, sol, odeco);
  if (scale > 1e-12) out.q *= scale;
  out.exact = false;
  return out;
}

AlignedChartOcta octa_aligned_chart(const Vec3& n) {
  AlignedChartOcta c;
  c.n = n;
  c.qz = Vec9::Zero();
  c.qz(4) = std::sqrt(7.0 / 12.0);
  c.Bz.setZero();
  const double r = std::sqrt(5.0 / 12.0);
  c.Bz(8, 0) = r;  // cos(4t) slot
  c.Bz(0, 1) = r;  // sin(4t) slot
  c.rot = so3::wigner_from_rotation(4, so3::rotation_taking_z_to(n));
  return c;
}

AlignedChartOdeco odeco_aligned_chart(const Vec3& n) {
  AlignedChartOdeco c;
  c.n = n;
  c.qz = odeco_chart_qz();
  c.Bz = odeco_chart_B();
  c.rot = so3::wigner_direct_sum(so3::rotation_taking_z_to(n));
  return c;
}

Vec9 project_octa_aligned(const Vec9& y, const AlignedChartOcta& chart) {
  Vec9 yt = chart.rot.transpose() * y;
  Eigen::Vector2d w = chart.Bz.transpose() * yt;
  Eigen::Vector2d s;
  if (w.norm() <= 1e-12)
    s << 1, 0;  // DegenerateQuery tie-break
  else
    s = w / w.norm();
  return chart.rot * (chart.qz + chart.Bz * s);
}

double odeco_chart_weight() {
  // unit weight along the normal axis; the in-plane weights and rotation
  // stay free, anchoring the field scale through the boundary
  return 1.0;
}

const Vec15& odeco_chart_qz() {
  static const Vec15 qz = chart_vectors().qz;
  return qz;
}

const Eigen::Matrix<double, 15, 5>& odeco_chart_B() {
  static const Eigen::Matrix<double, 15, 5> b = [] {
    const auto& v = chart_vectors();
    Eigen::Matrix<double, 15, 5> m;
    m.col(0) = -v.ws / (3.0 * std::sqrt(2.0));
    m.col(1) = v.w2c;
    m.col(2) = -v.w2s;
    m.col(3) = v.w4s;
    m.col(4) = v.w4c;
    return m;
  }();
  return b;
}

Vec15 odeco_zaligned_point(double l1, double l2, double t) {
  const double s = l1 + l2, d = l1 - l2;
  Vec5 sz;
  sz << -3.0 * std::sqrt(2.0) * s, d * std::cos(2 * t), -d * std::sin(2 * t),
      s * std::sin(4 * t), s * std::cos(4 * t);
  return odeco_chart_qz() + odeco_chart_B() * sz;
}

ZChartParams odeco_chart_params(const Vec5& s) {
  ZChartParams p;
  const double sum = -s(0) / (3.0 * std::sqrt(2.0));
  const double quad_amp = std::hypot(s(3), s(4));
  const double pair_amp = std::hypot(s(1), s(2));
  double d = 0;
  if (quad_amp > 1e-12 && quad_amp >= pair_amp * 1e-6) {
    // the m=+-4 pair is (sum sin 4t, sum cos 4t); fold in the sign of sum
    double t0 = sum >= 0 ? std::atan2(s(3), s(4)) / 4.0
                         : std::atan2(-s(3), -s(4)) / 4.0;
    double best_res = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; k++) {
      double tk = t0 + k * (M_PI / 2.0);
      double dk = s(1) * std::cos(2 * tk) - s(2) * std::sin(2 * tk);
      double r = std::hypot(s(1) - dk * std::cos(2 * tk), s(2) + dk * std::sin(2 * tk));
      if (r < best_res) {
        best_res = r;
        p.t = tk;
        d = dk;
      }
    }
  } else if (pair_amp > 1e-12) {
    p.t = std::atan2(-s(2), s(1)) / 2.0;
    d = pair_amp;
  }
  p.l1 = 0.5 * (sum + d);
  p.l2 = 0.5 * (sum - d);
  return p;
}

Eigen::Matrix<double, 15, 3> odeco_zaligned_tangent(double l1, double l2, double t) {
  Eigen::Matrix<double, 15, 3> tan;
  tan.col(0) = quartic::sh_of_axis_power(Vec3(std::cos(t), std::sin(t), 0));
  tan.col(1) = quartic::sh_of_axis_power(Vec3(-std::sin(t), std::cos(t), 0));
  const double s = l1 + l2, d = l1 - l2;
  Vec5 dsz;
  dsz << 0, -2 * d * std::sin(2 * t), -2 * d * std::cos(2 * t), 4 * s * std::cos(4 * t),
      -4 * s * std::sin(4 * t);
  tan.col(2) = odeco_chart_B() * dsz;
  return tan;
}

Vec15 project_odeco_aligned(const Vec15& y, const AlignedChartOdeco& chart,
                            const sdp::SdpOptions& opts) {
  Vec15 yt = chart.rot.transpose() * y;
  const auto& b = odeco_chart_B();
  Vec5 target = b.transpose() * (yt - chart.qz);
  sdp::SdpProblem p = sdp::lift_projection_zaligned(
      target, chart_gram(), varieties::zaligned_odeco_quadrics());
  sdp::SdpSolution sol = sdp::solve(p, opts);
  if (sol.status == sdp::Status::NumericalFailure)
    throw SolverFailure("aligned odeco projection SDP failed");

  // parametric refinement: Gauss-Newton on the in-plane weights, line search
  // on t. After a certified extraction this polishes the SDP's argmin to
  // machine precision; otherwise it serves as the deterministic fallback.
  auto objective = [&](const ZChartParams& c) {
    return (odeco_zaligned_point(c.l1, c.l2, c.t) - yt).squaredNorm();
  };
  ZChartParams best{};
  bool extracted = false;
  if (auto s = sdp::rank1_extract(sol)) {
    best = odeco_chart_params(Vec5(*s));
    extracted = true;
  }
  if (!extracted) {
    Eigen::SelfAdjointEigenSolver<MatX> es(sol.X);
    VecX u = es.eigenvectors().col(5);
    if (std::abs(u(0)) > 1e-10) best = odeco_chart_params(Vec5(u.tail(5) / u(0)));
    double bestf = objective(best);
    for (int k = 0; k < 8; k++) {  // deterministic angle restarts
      ZChartParams c{1.0, 1.0, k * (M_PI / 16.0)};
      if (objective(c) < bestf) {
        best = c;
        bestf = objective(c);
      }
    }
  }
  for (int it = 0; it < 50; it++) {
    Eigen::Matrix<double, 15, 2> jl;
    jl.col(0) = quartic::sh_of_axis_power(Vec3(std::cos(best.t), std::sin(best.t), 0));
    jl.col(1) = quartic::sh_of_axis_power(Vec3(-std::sin(best.t), std::cos(best.t), 0));
    Eigen::Vector2d sol2 =
        (jl.transpose() * jl).ldlt().solve(jl.transpose() * (yt - chart.qz));
    best.l1 = sol2(0);
    best.l2 = sol2(1);
    double f0 = objective(best);
    double dt = 0.1;
    bool moved = false;
    while (dt > 1e-10) {
      ZChartParams cp = best, cm = best;
      cp.t += dt;
      cm.t -= dt;
      if (objective(cp) < f0) {
        best = cp;
        moved = true;
        break;
      }
      if (objective(cm) < f0) {
        best = cm;
        moved = true;
        break;
      }
      dt *= 0.5;
    }
    if (!moved) break;
  }
  return chart.rot * odeco_zaligned_point(best.l1, best.l2, best.t);
}

}  // namespace framefield::projection
