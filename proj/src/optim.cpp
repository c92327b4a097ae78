#include "framefield/optim.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "framefield/quartic.hpp"
#include "framefield/sdp.hpp"
#include "framefield/so3.hpp"

namespace framefield::optim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Per-column tangent space data, rebuilt at each outer iterate.
struct ColumnTangent {
  enum Kind { OctaFree, OctaChart, OdecoFree, OdecoChart, OdecoSingular };
  Kind kind = OctaFree;
  Eigen::Matrix<double, 9, 3> octa_basis;        // L_i q columns
  Vec9 chart_dir = Vec9::Zero();                 // unit circle tangent
  MatX normal;                                   // odeco normal basis (15x9)
  Eigen::Matrix<double, 15, 3> rot_basis;        // odeco rotational directions
  MatX odeco_chart_tan;                          // orthonormal chart tangent
  Eigen::Matrix<double, 15, 3> odeco_chart_jac;  // d/dl1, d/dl2, d/dt
  projection::ZChartParams params;
  int chart_index = -1;
};

struct TangentCache {
  std::vector<ColumnTangent> cols;
  int singular = 0;
};

// chart lookup: vertex id -> position in field.constrained (or -1)
std::vector<int> chart_of_vertex(const FieldState& f, int n) {
  std::vector<int> idx(n, -1);
  for (int i = 0; i < (int)f.constrained.size(); i++) idx[f.constrained[i]] = i;
  return idx;
}

TangentCache build_tangent_cache(const FieldState& f,
                                 const varieties::QuadricSet& odeco) {
  TangentCache cache;
  cache.cols.resize(f.size());
  std::vector<int> chart_idx = chart_of_vertex(f, f.size());
  for (int v = 0; v < f.size(); v++) {
    ColumnTangent& ct = cache.cols[v];
    ct.chart_index = chart_idx[v];
    if (f.rep == Rep::Octahedral) {
      Vec9 q = f.coeffs.col(v);
      if (ct.chart_index < 0) {
        ct.kind = ColumnTangent::OctaFree;
        ct.octa_basis = so3::octa_tangent_basis(q);
      } else {
        ct.kind = ColumnTangent::OctaChart;
        const auto& chart = f.octa_charts[ct.chart_index];
        Eigen::Vector2d s = chart.Bz.transpose() * (chart.rot.transpose() * q);
        if (s.norm() < 1e-12)
          s << 1, 0;
        else
          s.normalize();
        Eigen::Vector2d perp(-s(1), s(0));
        ct.chart_dir = chart.rot * chart.Bz * perp / std::sqrt(5.0 / 12.0);
      }
    } else {
      Vec15 q = f.coeffs.col(v);
      if (ct.chart_index < 0) {
        ct.rot_basis = varieties::odeco_rotational_basis(q);
        try {
          ct.normal = varieties::odeco_normal_space(q, odeco);
          ct.kind = ColumnTangent::OdecoFree;
        } catch (const SingularPoint&) {
          ct.kind = ColumnTangent::OdecoSingular;
          cache.singular++;
        }
      } else {
        ct.kind = ColumnTangent::OdecoChart;
        const auto& chart = f.odeco_charts[ct.chart_index];
        Vec15 local = chart.rot.transpose() * q - chart.qz;
        const auto& b = projection::odeco_chart_B();
        Vec5 s = (b.transpose() * b).ldlt().solve(b.transpose() * local);
        ct.params = projection::odeco_chart_params(s);
        ct.odeco_chart_jac = projection::odeco_zaligned_tangent(
            ct.params.l1, ct.params.l2, ct.params.t);
        MatX mapped = chart.rot * ct.odeco_chart_jac;
        // drop rank-deficient directions (d/dt vanishes at isotropic weights)
        Eigen::BDCSVD<MatX> svd(mapped, Eigen::ComputeThinU);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); i++)
          if (svd.singularValues()(i) > 1e-10 * std::max(1.0, q.norm())) rank++;
        ct.odeco_chart_tan = svd.matrixU().leftCols(rank);
      }
    }
  }
  return cache;
}

// project an ambient d x n matrix columnwise onto the tangent spaces
MatX project_tangent(const FieldState& f, const TangentCache& cache, const MatX& amb) {
  MatX out(amb.rows(), amb.cols());
  for (int v = 0; v < (int)amb.cols(); v++) {
    const ColumnTangent& ct = cache.cols[v];
    switch (ct.kind) {
      case ColumnTangent::OctaFree:
        out.col(v) =
            ct.octa_basis * ((3.0 / 20.0) * (ct.octa_basis.transpose() * amb.col(v)));
        break;
      case ColumnTangent::OctaChart:
        out.col(v) = ct.chart_dir * ct.chart_dir.dot(amb.col(v));
        break;
      case ColumnTangent::OdecoFree:
        out.col(v) = amb.col(v) - ct.normal * (ct.normal.transpose() * amb.col(v));
        break;
      case ColumnTangent::OdecoSingular: {
        Eigen::JacobiSVD<MatX> svd(MatX(ct.rot_basis), Eigen::ComputeThinU);
        int rank = 0;
        for (int i = 0; i < 3; i++)
          if (svd.singularValues()(i) > 1e-10) rank++;
        MatX u = svd.matrixU().leftCols(rank);
        out.col(v) = u * (u.transpose() * amb.col(v));
        break;
      }
      case ColumnTangent::OdecoChart:
        out.col(v) =
            ct.odeco_chart_tan * (ct.odeco_chart_tan.transpose() * amb.col(v));
        break;
    }
  }
  return out;
}

// retract q along a tangent matrix, columnwise
void retract_field(FieldState& f, const TangentCache& cache, const MatX& eta) {
  for (int v = 0; v < f.size(); v++) {
    const ColumnTangent& ct = cache.cols[v];
    switch (ct.kind) {
      case ColumnTangent::OctaFree: {
        Vec9 q = f.coeffs.col(v);
        Vec3 beta = (3.0 / 20.0) * (ct.octa_basis.transpose() * eta.col(v));
        f.coeffs.col(v) = so3::octa_exp(q, beta);
        break;
      }
      case ColumnTangent::OctaChart: {
        const auto& chart = f.octa_charts[ct.chart_index];
        Vec9 moved = f.coeffs.col(v) + eta.col(v);
        f.coeffs.col(v) = projection::project_octa_aligned(moved, chart);
        break;
      }
      case ColumnTangent::OdecoFree:
      case ColumnTangent::OdecoSingular: {
        Vec15 q = f.coeffs.col(v);
        Vec15 e = eta.col(v);
        Mat3 gram = ct.rot_basis.transpose() * ct.rot_basis;
        Eigen::JacobiSVD<Mat3> gs(gram, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Vec3 rhs = ct.rot_basis.transpose() * e;
        Vec3 beta = Vec3::Zero();
        for (int i = 0; i < 3; i++) {
          double s = gs.singularValues()(i);
          if (s > 1e-10 * std::max(1.0, gs.singularValues()(0)))
            beta += gs.matrixV().col(i) * (gs.matrixU().col(i).dot(rhs) / s);
        }
        Vec15 vs = e - ct.rot_basis * beta;
        if (ct.kind == ColumnTangent::OdecoSingular) vs.setZero();
        f.coeffs.col(v) = so3::wigner_direct_sum_axis_angle(beta) * (q + vs);
        break;
      }
      case ColumnTangent::OdecoChart: {
        const auto& chart = f.odeco_charts[ct.chart_index];
        MatX mapped = chart.rot * ct.odeco_chart_jac;
        // least-squares coefficients with rank guard
        Vec3 delta = mapped.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
                         .setThreshold(1e-10)
                         .solve(eta.col(v));
        f.coeffs.col(v) =
            chart.rot * projection::odeco_zaligned_point(ct.params.l1 + delta(0),
                                                         ct.params.l2 + delta(1),
                                                         ct.params.t + delta(2));
        break;
      }
    }
  }
}

void project_one_column(FieldState& f, int v, const std::vector<int>& chart_idx,
                        const varieties::QuadricSet& octa,
                        const varieties::QuadricSet& odeco, int* fallbacks) {
  if (f.rep == Rep::Octahedral) {
    Vec9 y = f.coeffs.col(v);
    if (chart_idx[v] >= 0) {
      f.coeffs.col(v) = projection::project_octa_aligned(y, f.octa_charts[chart_idx[v]]);
    } else {
      auto res = projection::project_octa(y, octa);
      f.coeffs.col(v) = res.q;
      if (!res.exact) (*fallbacks)++;
    }
  } else {
    Vec15 y = f.coeffs.col(v);
    if (chart_idx[v] >= 0) {
      f.coeffs.col(v) =
          projection::project_odeco_aligned(y, f.odeco_charts[chart_idx[v]]);
    } else {
      auto res = projection::project_odeco(y, odeco);
      f.coeffs.col(v) = res.q;
      if (!res.exact) (*fallbacks)++;
    }
  }
}

}  // namespace

void attach_boundary_charts(FieldState& field, const mesh::TetMesh& m,
                            bool exclude_creases) {
  field.constrained.clear();
  field.octa_charts.clear();
  field.odeco_charts.clear();
  for (size_t bi = 0; bi < m.boundary_vertices.size(); bi++) {
    if (exclude_creases && m.crease[bi]) continue;
    Vec3 n = m.normals.row((int)bi);
    field.constrained.push_back(m.boundary_vertices[bi]);
    if (field.rep == Rep::Octahedral)
      field.octa_charts.push_back(projection::octa_aligned_chart(n));
    else
      field.odeco_charts.push_back(projection::odeco_aligned_chart(n));
  }
}

FieldState random_octa_field(const mesh::TetMesh& m, std::uint64_t seed,
                             bool exclude_creases) {
  FieldState f;
  f.rep = Rep::Octahedral;
  f.coeffs.resize(9, m.num_vertices());
  for (int v = 0; v < m.num_vertices(); v++) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64((std::uint64_t)v + 1)));
    std::uniform_real_distribution<double> uangle(0.0, 2.0 * M_PI);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double u = uangle(rng);
    Vec3 dir;
    do {
      dir << gauss(rng), gauss(rng), gauss(rng);
    } while (dir.norm() < 1e-3);
    dir.normalize();
    Mat9 rot = so3::wigner_from_rotation(4, so3::rotation_taking_z_to(dir));
    f.coeffs.col(v) = rot * (so3::wigner_z_band4(u) * so3::canonical_frame());
  }
  attach_boundary_charts(f, m, exclude_creases);
  for (int i = 0; i < (int)f.constrained.size(); i++) {
    int v = f.constrained[i];
    f.coeffs.col(v) = projection::project_octa_aligned(f.coeffs.col(v), f.octa_charts[i]);
  }
  return f;
}

FieldState random_odeco_field(const mesh::TetMesh& m, std::uint64_t seed,
                              bool exclude_creases) {
  FieldState octa = random_octa_field(m, seed, /*exclude_creases=*/true);
  FieldState f;
  f.rep = Rep::Odeco;
  f.coeffs.resize(15, m.num_vertices());
  for (int v = 0; v < m.num_vertices(); v++)
    f.coeffs.col(v) = quartic::octa_to_odeco(octa.coeffs.col(v));
  attach_boundary_charts(f, m, exclude_creases);
  for (int i = 0; i < (int)f.constrained.size(); i++) {
    int v = f.constrained[i];
    f.coeffs.col(v) =
        projection::project_odeco_aligned(f.coeffs.col(v), f.odeco_charts[i]);
  }
  return f;
}

double dirichlet_energy(const FieldState& field, const mesh::FemOperators& ops) {
  if (field.coeffs.cols() != ops.stiffness.rows()) throw DimensionMismatch();
  MatX sq = field.coeffs * ops.stiffness;  // S symmetric
  return 0.5 * sq.cwiseProduct(field.coeffs).sum();
}

MatX riemannian_gradient(const FieldState& field, const mesh::FemOperators& ops,
                         const varieties::QuadricSet& odeco_quadrics) {
  TangentCache cache = build_tangent_cache(field, odeco_quadrics);
  MatX ambient = field.coeffs * ops.stiffness;
  return project_tangent(field, cache, ambient);
}

FieldState rtr_solve(FieldState field, const mesh::FemOperators& ops,
                     const varieties::QuadricSet& odeco_quadrics,
                     const RtrConfig& cfg) {
  auto t0 = Clock::now();
  const double grad_tol =
      cfg.grad_tol > 0 ? cfg.grad_tol : 1e-6 * std::sqrt((double)field.size());
  double radius = cfg.initial_radius;
  double energy = dirichlet_energy(field, ops);
  int iter = 0;
  field.trace.push_back({0, energy, 0.0, 0.0, seconds_since(t0)});

  while (iter < cfg.max_outer) {
    iter++;
    TangentCache cache = build_tangent_cache(field, odeco_quadrics);
    field.singular_columns = cache.singular;
    MatX grad = project_tangent(field, cache, field.coeffs * ops.stiffness);
    double gnorm = grad.norm();
    field.trace.push_back({iter, energy, gnorm, 0.0, seconds_since(t0)});
    if (gnorm < grad_tol) break;

    auto hess = [&](const MatX& p) {
      return project_tangent(field, cache, p * ops.stiffness);
    };

    // Steihaug truncated CG
    MatX eta = MatX::Zero(field.dim(), field.size());
    MatX r = grad;
    MatX p = -r;
    double r2 = r.squaredNorm();
    const double r0 = std::sqrt(r2);
    MatX heta = MatX::Zero(field.dim(), field.size());
    for (int inner = 0; inner < cfg.max_inner; inner++) {
      MatX hp = hess(p);
      double php = p.cwiseProduct(hp).sum();
      auto to_boundary = [&](const MatX& base, const MatX& dir) {
        double a = dir.squaredNorm();
        double b = 2.0 * base.cwiseProduct(dir).sum();
        double c = base.squaredNorm() - radius * radius;
        double disc = std::max(0.0, b * b - 4 * a * c);
        return (-b + std::sqrt(disc)) / (2 * a);
      };
      if (php <= 0) {
        double tau = to_boundary(eta, p);
        eta += tau * p;
        heta += tau * hp;
        break;
      }
      double alpha = r2 / php;
      if ((eta + alpha * p).norm() >= radius) {
        double tau = to_boundary(eta, p);
        eta += tau * p;
        heta += tau * hp;
        break;
      }
      eta += alpha * p;
      heta += alpha * hp;
      r += alpha * hp;
      double r2n = r.squaredNorm();
      if (std::sqrt(r2n) < r0 * std::min(0.1, r0)) break;
      p = -r + (r2n / r2) * p;
      r2 = r2n;
    }

    double model_decrease = -(grad.cwiseProduct(eta).sum() +
                              0.5 * eta.cwiseProduct(heta).sum());
    FieldState trial = field;
    retract_field(trial, cache, eta);
    double new_energy = dirichlet_energy(trial, ops);
    double rho = model_decrease > 1e-300
                     ? (energy - new_energy) / model_decrease
                     : (new_energy < energy ? 1.0 : -1.0);
    if (rho > 0.1 && new_energy <= energy) {
      field.coeffs.swap(trial.coeffs);
      energy = new_energy;
    }
    if (rho < 0.25)
      radius *= 0.25;
    else if (rho > 0.75 && eta.norm() >= 0.99 * radius)
      radius = std::min(2.0 * radius, cfg.max_radius);
    if (radius < 1e-13) {
      field.status = "line-failure";
      break;
    }
  }
  field.trace.push_back(
      {iter, energy, field.trace.back().criterion, 0.0, seconds_since(t0)});
  return field;
}

void project_field_columns_serial(FieldState& field,
                                  const varieties::QuadricSet& octa,
                                  const varieties::QuadricSet& odeco) {
  std::vector<int> chart_idx = chart_of_vertex(field, field.size());
  int fallbacks = 0;
  for (int v = 0; v < field.size(); v++)
    project_one_column(field, v, chart_idx, octa, odeco, &fallbacks);
  field.projection_fallbacks += fallbacks;
}

void project_field_columns(FieldState& field, const varieties::QuadricSet& octa,
                           const varieties::QuadricSet& odeco, int workers) {
  if (workers <= 1) {
    project_field_columns_serial(field, octa, odeco);
    return;
  }
  std::vector<int> chart_idx = chart_of_vertex(field, field.size());
  std::vector<int> fallbacks(field.size(), 0);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int v = 0; v < field.size(); v++)
    project_one_column(field, v, chart_idx, octa, odeco, &fallbacks[v]);
  for (int v = 0; v < field.size(); v++) field.projection_fallbacks += fallbacks[v];
}

FieldState mbo_solve(FieldState field, const mesh::FemOperators& ops,
                     const varieties::QuadricSet& octa_quadrics,
                     const varieties::QuadricSet& odeco_quadrics,
                     const MboConfig& cfg) {
  auto t0 = Clock::now();
  const int n = field.size(), d = field.dim();
  double tau0 = cfg.tau0;
  if (tau0 <= 0) {
    auto eig = mesh::smallest_nonzero_stiffness_eigenvalue(ops);
    if (eig.value <= 0) throw LinearSolveFailure("mesh has a second zero mode");
    tau0 = 1.0 / eig.value;
  }

  // per-vertex parametrization: interior u_i = x_i, constrained
  // u_i = f_i + W_i s_i with s_i the chart coordinates
  std::vector<int> chart_idx = chart_of_vertex(field, n);
  std::vector<MatX> w(n);
  MatX offs = MatX::Zero(n, d);
  std::vector<int> zofs(n + 1, 0);
  for (int v = 0; v < n; v++) {
    if (chart_idx[v] < 0) {
      zofs[v + 1] = zofs[v] + d;
    } else if (field.rep == Rep::Octahedral) {
      const auto& c = field.octa_charts[chart_idx[v]];
      w[v] = c.rot * c.Bz;
      offs.row(v) = (c.rot * c.qz).transpose();
      zofs[v + 1] = zofs[v] + 2;
    } else {
      const auto& c = field.odeco_charts[chart_idx[v]];
      w[v] = c.rot * c.Bz;
      offs.row(v) = (c.rot * c.qz).transpose();
      zofs[v + 1] = zofs[v] + 5;
    }
  }
  const int nz = zofs[n];

  // reduced quadratic forms P^T M P and P^T S P assembled once
  auto reduce = [&](const Eigen::SparseMatrix<double>& k) {
    std::vector<Eigen::Triplet<double>> trips;
    for (int outer = 0; outer < k.outerSize(); outer++)
      for (Eigen::SparseMatrix<double>::InnerIterator it(k, outer); it; ++it) {
        int i = (int)it.row(), j = (int)it.col();
        double val = it.value();
        bool ci = chart_idx[i] >= 0, cj = chart_idx[j] >= 0;
        if (!ci && !cj) {
          for (int c = 0; c < d; c++)
            trips.emplace_back(zofs[i] + c, zofs[j] + c, val);
        } else if (!ci && cj) {
          for (int c = 0; c < d; c++)
            for (int a = 0; a < w[j].cols(); a++)
              trips.emplace_back(zofs[i] + c, zofs[j] + a, val * w[j](c, a));
        } else if (ci && !cj) {
          for (int c = 0; c < d; c++)
            for (int a = 0; a < w[i].cols(); a++)
              trips.emplace_back(zofs[i] + a, zofs[j] + c, val * w[i](c, a));
        } else {
          MatX block = val * (w[i].transpose() * w[j]);
          for (int a = 0; a < block.rows(); a++)
            for (int b = 0; b < block.cols(); b++)
              trips.emplace_back(zofs[i] + a, zofs[j] + b, block(a, b));
        }
      }
    Eigen::SparseMatrix<double> red(nz, nz);
    red.setFromTriplets(trips.begin(), trips.end());
    return red;
  };
  Eigen::SparseMatrix<double> mass_diag(n, n);
  {
    std::vector<Eigen::Triplet<double>> mt;
    for (int i = 0; i < n; i++) mt.emplace_back(i, i, ops.mass(i));
    mass_diag.setFromTriplets(mt.begin(), mt.end());
  }
  Eigen::SparseMatrix<double> red_m = reduce(mass_diag);
  Eigen::SparseMatrix<double> red_s = reduce(ops.stiffness);

  std::map<double, std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>>
      factors;

  auto beta = [&](int k) {
    return cfg.schedule == MboConfig::Schedule::Constant
               ? 1.0
               : cfg.power_a * std::pow((double)k, -cfg.power_p);
  };

  double energy = dirichlet_energy(field, ops);
  field.trace.push_back({0, energy, 0.0, 0.0, seconds_since(t0)});
  for (int k = 1; k <= cfg.max_outer; k++) {
    double tau = beta(k) * tau0;
    auto fit = factors.find(tau);
    if (fit == factors.end()) {
      Eigen::SparseMatrix<double> red = red_m + tau * red_s;
      auto f = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
      f->compute(red);
      if (f->info() != Eigen::Success)
        throw LinearSolveFailure("diffusion system factorization failed");
      fit = factors.emplace(tau, std::move(f)).first;
    }

    // diffusion step: minimize 1/2 u^T(M + tau S)u - u^T M q_prev
    MatX prev = field.coeffs;  // d x n
    MatX rhs_full = prev.transpose();  // n x d
    for (int i = 0; i < n; i++) rhs_full.row(i) *= ops.mass(i);
    // subtract K * offsets, then reduce by P^T
    Eigen::SparseMatrix<double> ksp = mass_diag + tau * ops.stiffness;
    MatX korr = rhs_full - ksp * offs;
    VecX rhs = VecX::Zero(nz);
    for (int v = 0; v < n; v++) {
      if (chart_idx[v] < 0)
        rhs.segment(zofs[v], d) = korr.row(v).transpose();
      else
        rhs.segment(zofs[v], w[v].cols()) = w[v].transpose() * korr.row(v).transpose();
    }
    VecX z = fit->second->solve(rhs);
    if (fit->second->info() != Eigen::Success)
      throw LinearSolveFailure("diffusion solve failed");
    for (int v = 0; v < n; v++) {
      if (chart_idx[v] < 0)
        field.coeffs.col(v) = z.segment(zofs[v], d);
      else
        field.coeffs.col(v) =
            offs.row(v).transpose() + w[v] * z.segment(zofs[v], w[v].cols());
    }

    // projection step
    project_field_columns(field, octa_quadrics, odeco_quadrics, cfg.workers);

    // stopping criteria
    MatX diff = field.coeffs - prev;
    double num = 0, den = 0;
    for (int v = 0; v < n; v++) {
      num += ops.mass(v) * diff.col(v).squaredNorm();
      den += ops.mass(v) * field.coeffs.col(v).squaredNorm();
    }
    double delta_k = den > 0 ? num / den : 0.0;
    double new_energy = dirichlet_energy(field, ops);
    double rel_de = new_energy > 1e-300
                        ? std::abs(new_energy - energy) / new_energy
                        : 0.0;
    energy = new_energy;
    field.trace.push_back({k, energy, delta_k, tau, seconds_since(t0)});
    if (rel_de < cfg.delta || delta_k < cfg.delta) break;
  }
  return field;
}

EnergyReport field_energy_report(const FieldState& field, const mesh::TetMesh& m,
                                 const varieties::QuadricSet& octa_quadrics,
                                 const varieties::QuadricSet& odeco_quadrics) {
  EnergyReport rep;
  const int n = m.num_vertices();
  rep.density = VecX::Zero(n);
  VecX mass = VecX::Zero(n);
  for (int t = 0; t < m.num_tets(); t++) {
    Vec3 p0 = m.vertices.row(m.tets(t, 0));
    Mat3 e;
    for (int k = 0; k < 3; k++)
      e.col(k) = m.vertices.row(m.tets(t, k + 1)).transpose() - p0;
    double vol = e.determinant() / 6.0;
    Mat3 einv = e.inverse();
    Eigen::Matrix<double, 3, 4> g;
    g.col(0) = -einv.transpose() * Vec3::Ones();
    for (int k = 0; k < 3; k++) g.col(k + 1) = einv.row(k).transpose();
    Eigen::Matrix4d local = vol * g.transpose() * g;
    double et = 0;
    for (int a = 0; a < 4; a++)
      for (int b = 0; b < 4; b++)
        et += 0.5 * local(a, b) *
              field.coeffs.col(m.tets(t, a)).dot(field.coeffs.col(m.tets(t, b)));
    rep.energy += et;
    for (int a = 0; a < 4; a++) {
      rep.density(m.tets(t, a)) += et / 4.0;
      mass(m.tets(t, a)) += vol / 4.0;
    }
  }
  for (int v = 0; v < n; v++)
    rep.density(v) = mass(v) > 0 ? rep.density(v) / mass(v) : 0.0;

  const varieties::QuadricSet& qs =
      field.rep == Rep::Octahedral ? octa_quadrics : odeco_quadrics;
  for (int v = 0; v < field.size(); v++)
    rep.max_residual = std::max(rep.max_residual, varieties::residual(field.coeffs.col(v), qs));

  for (int i = 0; i < (int)field.constrained.size(); i++) {
    int v = field.constrained[i];
    VecX q = field.coeffs.col(v);
    VecX local, proj;
    if (field.rep == Rep::Octahedral) {
      const auto& c = field.octa_charts[i];
      local = c.rot.transpose() * q - c.qz;
      proj = local -
             c.Bz * (c.Bz.transpose() * c.Bz).ldlt().solve(c.Bz.transpose() * local);
    } else {
      const auto& c = field.odeco_charts[i];
      local = c.rot.transpose() * q - c.qz;
      proj = local -
             c.Bz * (c.Bz.transpose() * c.Bz).ldlt().solve(c.Bz.transpose() * local);
    }
    rep.boundary_violation = std::max(rep.boundary_violation, proj.norm());
  }
  return rep;
}

}  // namespace framefield::optim
