#include "framefield/sdp.hpp"

#include <cmath>

namespace framefield::sdp {

namespace {

// largest step a in [0, cap] keeping S + a*dS positive definite
double max_psd_step(const MatX& s, const MatX& ds, double cap) {
  Eigen::LLT<MatX> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  MatX l = llt.matrixL();
  MatX m = l.triangularView<Eigen::Lower>().solve(ds);
  m = l.triangularView<Eigen::Lower>().solve(MatX(m.transpose()));
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (m + m.transpose()),
                                         Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues()(0);
  if (lmin >= -1e-14) return cap;
  return std::min(cap, -1.0 / lmin);
}

struct Scaling {
  MatX r;      // W = R R^T,  R^T Z R = R^{-1} X R^{-T} = diag(d)
  VecX d;
  bool ok = false;
};

Scaling nt_scaling(const MatX& x, const MatX& z) {
  Scaling s;
  Eigen::LLT<MatX> lltx(x), lltz(z);
  if (lltx.info() != Eigen::Success || lltz.info() != Eigen::Success) return s;
  MatX lx = lltx.matrixL(), lz = lltz.matrixL();
  Eigen::JacobiSVD<MatX> svd(MatX(lz.transpose() * lx),
                             Eigen::ComputeFullU | Eigen::ComputeFullV);
  VecX sig = svd.singularValues();
  if (sig(sig.size() - 1) <= 0) return s;
  s.r = lx * svd.matrixV() * sig.cwiseSqrt().cwiseInverse().asDiagonal();
  s.d = sig;
  s.ok = true;
  return s;
}

}  // namespace

SdpSolution solve(const SdpProblem& p, const SdpOptions& opts) {
  const int n = p.n;
  std::vector<MatX> a = p.A;
  VecX b = p.b;

  // drop dependent constraint rows (Gram-Schmidt on vectorized matrices,
  // keeping track of the original rows retained)
  std::vector<int> keep;
  {
    std::vector<MatX> basis;
    for (int i = 0; i < (int)a.size(); i++) {
      MatX v = a[i];
      for (const MatX& u : basis) v -= u.cwiseProduct(a[i]).sum() * u;
      double norm0 = a[i].norm();
      if (v.norm() > 1e-12 * std::max(1.0, norm0)) {
        basis.push_back(v / v.norm());
        keep.push_back(i);
      }
    }
    if (keep.size() != a.size()) {
      std::vector<MatX> a2;
      VecX b2((int)keep.size());
      for (int i = 0; i < (int)keep.size(); i++) {
        a2.push_back(a[keep[i]]);
        b2(i) = b(keep[i]);
      }
      a = std::move(a2);
      b = b2;
    }
  }
  const int m = (int)a.size();

  // normalize the cost internally for conditioning; objective values and
  // dual variables are reported unscaled
  const double gamma = std::max(1.0, p.C.norm());
  const MatX c = p.C / gamma;

  SdpSolution best;
  best.X = MatX::Identity(n, n);
  best.Z = gamma * MatX::Identity(n, n);
  best.y = VecX::Zero(p.b.size());
  double best_err = std::numeric_limits<double>::infinity();
  bool best_ok = false;
  int best_iter = 0;
  auto record = [&](const MatX& xx, const VecX& yy, const MatX& zz, double err,
                    bool ok, int iter) {
    if (err >= best_err) return false;
    best_err = err;
    best_iter = iter;
    best_ok = ok;
    best.X = xx;
    best.Z = gamma * zz;
    best.y = VecX::Zero(p.b.size());
    for (int i = 0; i < m; i++) best.y(keep[i]) = gamma * yy(i);
    best.primal_obj = p.C.cwiseProduct(xx).sum();
    best.dual_obj = gamma * b.dot(yy);
    best.iterations = iter;
    return true;
  };

  const double cnorm = 1.0 + c.norm();

  bool numerical_failure = false;
  // rare marginal stalls resolve under a second, more conservative profile
  // (larger well-centered start, shorter steps); both runs are deterministic
  // and the best iterate across them is kept
  auto run_ipm = [&](double init_mult, double tau, int max_iter) {
  const double init = init_mult * (1.0 + c.norm());
  MatX x = init * MatX::Identity(n, n);
  MatX z = init * MatX::Identity(n, n);
  VecX y = VecX::Zero(m);
  int since_improve = 0;
  for (int iter = 0; iter < max_iter; iter++) {
    VecX rp(m);
    for (int i = 0; i < m; i++) rp(i) = b(i) - a[i].cwiseProduct(x).sum();
    MatX rd = c - z;
    for (int i = 0; i < m; i++) rd -= y(i) * a[i];

    double pobj = gamma * c.cwiseProduct(x).sum();
    double dobj = gamma * b.dot(y);
    double mu = x.cwiseProduct(z).sum() / n;
    double pinf = rp.cwiseAbs().maxCoeff();  // per-constraint, absolute
    double dinf = rd.norm() / cnorm;
    double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    bool ok = pinf <= opts.feas_tol && dinf <= opts.feas_tol && gap <= opts.gap_tol;
    bool improved = record(
        x, y, z,
        std::max({pinf / opts.feas_tol, dinf / opts.feas_tol, gap / opts.gap_tol}),
        ok, iter);
    if (best_ok) break;
    since_improve = improved ? 0 : since_improve + 1;
    if (since_improve > 30) break;  // numerical floor reached; keep best

    Scaling w = nt_scaling(x, z);
    if (!w.ok) {
      numerical_failure = best_err > 1e4;
      break;
    }
    const MatX& r = w.r;
    MatX rt = r.transpose();
    MatX rinv = r.inverse();

    // scaled constraints and Schur complement M_ij = <A_i, W A_j W>
    std::vector<MatX> ah(m);
    for (int i = 0; i < m; i++) ah[i] = rt * a[i] * r;
    MatX schur(m, m);
    for (int i = 0; i < m; i++)
      for (int j = i; j < m; j++) {
        double v = ah[i].cwiseProduct(ah[j]).sum();
        schur(i, j) = v;
        schur(j, i) = v;
      }
    Eigen::LDLT<MatX> schur_f(schur);
    if (schur_f.info() != Eigen::Success) {
      numerical_failure = best_err > 1e4;
      break;
    }
    MatX wrdw = r * (rt * rd * r) * rt;

    auto refine = [&](const VecX& rhs) {
      VecX dy = schur_f.solve(rhs);
      for (int pass = 0; pass < 2; pass++) {
        // residual accumulated in extended precision
        VecX res(m);
        for (int i = 0; i < m; i++) {
          long double acc = (long double)rhs(i);
          for (int j = 0; j < m; j++)
            acc -= (long double)schur(i, j) * (long double)dy(j);
          res(i) = (double)acc;
        }
        dy += schur_f.solve(res);
      }
      return dy;
    };

    auto solve_direction = [&](const MatX& g, VecX& dy, MatX& dx, MatX& dz) {
      MatX rgr = r * g * rt;
      VecX rhs(m);
      for (int i = 0; i < m; i++)
        rhs(i) = rp(i) - a[i].cwiseProduct(rgr).sum() + a[i].cwiseProduct(wrdw).sum();
      dy = refine(rhs);
      dz = rd;
      for (int i = 0; i < m; i++) dz -= dy(i) * a[i];
      MatX wdzw = r * (rt * dz * r) * rt;
      dx = rgr - wdzw;
      dx = 0.5 * (dx + dx.transpose());
    };

    // predictor (affine direction): G = -D
    MatX g_aff = MatX::Zero(n, n);
    g_aff.diagonal() = -w.d;
    VecX dy_aff;
    MatX dx_aff, dz_aff;
    solve_direction(g_aff, dy_aff, dx_aff, dz_aff);

    double ap = max_psd_step(x, dx_aff, 1.0);
    double ad = max_psd_step(z, dz_aff, 1.0);
    double mu_aff =
        (x + 0.99 * ap * dx_aff).cwiseProduct(z + 0.99 * ad * dz_aff).sum() / n;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(1.0, sigma);
    // keep the centering target above the precision actually required by
    // gap_tol; pushing mu further only amplifies Schur roundoff
    double target_mu = std::max(
        sigma * mu, (0.8 / n) * opts.gap_tol * (1.0 + std::abs(pobj)) / gamma);
    target_mu = std::min(target_mu, mu);

    // corrector: Rc = target mu I - D^2 - H(dXh dZh), G_ij = 2 Rc_ij/(d_i+d_j)
    MatX dxh = rinv * dx_aff * rinv.transpose();
    MatX dzh = rt * dz_aff * r;
    MatX cross = 0.5 * (dxh * dzh + dzh * dxh);
    MatX g(n, n);
    for (int i = 0; i < n; i++)
      for (int j = 0; j < n; j++) {
        double rc = (i == j ? target_mu - w.d(i) * w.d(i) : 0.0) - cross(i, j);
        g(i, j) = 2.0 * rc / (w.d(i) + w.d(j));
      }
    g = 0.5 * (g + g.transpose());

    VecX dy;
    MatX dx, dz;
    solve_direction(g, dy, dx, dz);

    double sp = std::min(1.0, tau * max_psd_step(x, dx, 1.0 / tau));
    double sd = std::min(1.0, tau * max_psd_step(z, dz, 1.0 / tau));
    if (sp < 1e-12 && sd < 1e-12) {
      numerical_failure = best_err > 1e4;
      break;
    }
    x += sp * dx;
    y += sd * dy;
    z += sd * dz;
  }
  };  // run_ipm

  run_ipm(1.0, 0.98, opts.max_iter);
  if (!best_ok) run_ipm(10.0, 0.9, opts.max_iter);

  // polish: remove the residual affine violation from X (the correction is
  // tiny, so positive semidefiniteness survives to working precision)
  {
    auto scaled_err = [&](const MatX& xx) {
      double pinf = 0;
      for (int i = 0; i < m; i++)
        pinf = std::max(pinf, std::abs(a[i].cwiseProduct(xx).sum() - b(i)));
      double pobj = p.C.cwiseProduct(xx).sum();
      double gap = std::abs(pobj - best.dual_obj) / (1.0 + std::abs(pobj));
      return std::max(pinf / opts.feas_tol, gap / opts.gap_tol);
    };
    auto lin_correct = [&](MatX xx) {
      VecX viol(m);
      for (int i = 0; i < m; i++) viol(i) = a[i].cwiseProduct(xx).sum() - b(i);
      MatX gram(m, m);
      for (int i = 0; i < m; i++)
        for (int j = i; j < m; j++)
          gram(i, j) = gram(j, i) = a[i].cwiseProduct(a[j]).sum();
      VecX eta = gram.ldlt().solve(viol);
      for (int i = 0; i < m; i++) xx -= eta(i) * a[i];
      return xx;
    };
    std::vector<MatX> candidates = {best.X, lin_correct(best.X)};
    // when exactly one constraint is inhomogeneous, rescaling X fixes it
    // exactly while preserving the homogeneous ones
    {
      int inhomog = -1, count = 0;
      for (int i = 0; i < m; i++)
        if (b(i) != 0.0) {
          inhomog = i;
          count++;
        }
      if (count == 1) {
        double cur = a[inhomog].cwiseProduct(best.X).sum();
        if (cur > 1e-6 * std::abs(b(inhomog)))
          candidates.push_back(lin_correct(MatX((b(inhomog) / cur) * best.X)));
      }
    }
    MatX chosen = candidates[0];
    double chosen_err = scaled_err(chosen);
    for (const MatX& cand : candidates)
      if (scaled_err(cand) < chosen_err) {
        chosen = cand;
        chosen_err = scaled_err(cand);
      }
    best.X = chosen;
    best.primal_obj = p.C.cwiseProduct(best.X).sum();

    // re-evaluate optimality on the returned iterate
    MatX rd = p.C - best.Z;
    for (int i = 0; i < m; i++) rd -= best.y(keep[i]) * a[i];
    double pinf = 0;
    for (int i = 0; i < m; i++)
      pinf = std::max(pinf, std::abs(a[i].cwiseProduct(best.X).sum() - b(i)));
    double gap = std::abs(best.primal_obj - best.dual_obj) /
                 (1.0 + std::abs(best.primal_obj));
    best_ok = pinf <= opts.feas_tol &&
              rd.norm() / (gamma * cnorm) <= opts.feas_tol && gap <= opts.gap_tol;
  }

  best.status = best_ok ? Status::Optimal
                        : (numerical_failure ? Status::NumericalFailure
                                             : Status::MaxIter);
  // final certificates on the returned iterate
  {
    Eigen::SelfAdjointEigenSolver<MatX> es(best.X, Eigen::EigenvaluesOnly);
    double l1 = es.eigenvalues()(p.n - 1);
    double l2 = p.n >= 2 ? es.eigenvalues()(p.n - 2) : 0.0;
    best.eig_ratio = l1 > 0 ? std::max(0.0, l2) / l1 : 1.0;
  }
  return best;
}

SdpProblem lift_projection_octa(const Vec9& y, const varieties::QuadricSet& octa) {
  if (octa.dim != 9 || octa.homogeneous || octa.mats.size() != 15)
    throw DimensionMismatch("lift_projection_octa needs the 15 lifted quadrics");
  SdpProblem p;
  p.n = 10;
  p.C = MatX::Zero(10, 10);
  p.C(0, 0) = y.squaredNorm();
  p.C.block<9, 1>(1, 0) = -y;
  p.C.block<1, 9>(0, 1) = -y.transpose();
  p.C.block<9, 9>(1, 1) = Mat9::Identity();
  MatX e11 = MatX::Zero(10, 10);
  e11(0, 0) = 1.0;
  p.A.push_back(e11);
  for (const MatX& q : octa.mats) p.A.push_back(q);
  p.b = VecX::Zero(16);
  p.b(0) = 1.0;
  return p;
}

SdpProblem lift_projection_odeco(const Vec15& y, const varieties::QuadricSet& odeco) {
  if (odeco.dim != 15 || !odeco.homogeneous || odeco.mats.size() != 27)
    throw DimensionMismatch("lift_projection_odeco needs the 27 quadrics");
  SdpProblem p;
  p.n = 16;
  p.C = MatX::Zero(16, 16);
  p.C(0, 0) = y.squaredNorm();
  p.C.block<15, 1>(1, 0) = -y;
  p.C.block<1, 15>(0, 1) = -y.transpose();
  p.C.block<15, 15>(1, 1) = Mat15::Identity();
  MatX e11 = MatX::Zero(16, 16);
  e11(0, 0) = 1.0;
  p.A.push_back(e11);
  for (const MatX& q : odeco.mats) {
    MatX emb = MatX::Zero(16, 16);
    emb.block<15, 15>(1, 1) = q;
    p.A.push_back(emb);
  }
  p.b = VecX::Zero(28);
  p.b(0) = 1.0;
  return p;
}

SdpProblem lift_projection_zaligned(const Vec5& target, const MatX& gram,
                                    const varieties::QuadricSet& zaligned) {
  if (zaligned.dim != 5 || zaligned.mats.size() != 3)
    throw DimensionMismatch("lift_projection_zaligned needs the 3 chart quadrics");
  SdpProblem p;
  p.n = 6;
  p.C = MatX::Zero(6, 6);
  p.C.block<5, 1>(1, 0) = -target;
  p.C.block<1, 5>(0, 1) = -target.transpose();
  p.C.block<5, 5>(1, 1) = gram;
  MatX e11 = MatX::Zero(6, 6);
  e11(0, 0) = 1.0;
  p.A.push_back(e11);
  for (const MatX& q : zaligned.mats) {
    MatX emb = MatX::Zero(6, 6);
    emb.block<5, 5>(1, 1) = q;
    p.A.push_back(emb);
  }
  p.b = VecX::Zero(4);
  p.b(0) = 1.0;
  return p;
}

std::optional<VecX> rank1_extract(const SdpSolution& s, double ratio_tol) {
  if (s.status != Status::Optimal) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<MatX> es(s.X);
  int n = (int)s.X.rows();
  double l1 = es.eigenvalues()(n - 1);
  double l2 = n >= 2 ? std::max(0.0, es.eigenvalues()(n - 2)) : 0.0;
  if (l1 <= 0 || l2 / l1 > ratio_tol) return std::nullopt;
  VecX u = std::sqrt(l1) * es.eigenvectors().col(n - 1);
  if (std::abs(u(0)) < 1e-8) return std::nullopt;
  u /= u(0);
  return VecX(u.tail(n - 1));
}

}  // namespace framefield::sdp
