// Command-line front end: quadric derivation, field solves, projection,
// exactness experiments, geodesic sampling, and export.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <thread>

#include "framefield/io.hpp"
#include "framefield/mesh.hpp"
#include "framefield/optim.hpp"
#include "framefield/projection.hpp"
#include "framefield/quartic.hpp"
#include "framefield/so3.hpp"
#include "framefield/varieties.hpp"

using namespace framefield;

namespace {

constexpr const char* kVersion = "framefield 1.0.0";

std::uint64_t hash_args(int argc, char** argv) {
  std::uint64_t h = 1469598103934665603ull;
  for (int i = 1; i < argc; i++)
    for (const char* p = argv[i]; *p; p++) {
      h ^= (unsigned char)*p;
      h *= 1099511628211ull;
    }
  return h;
}

mesh::Format parse_format(const std::string& s) {
  if (s == "medit") return mesh::Format::Medit;
  if (s == "tetgen") return mesh::Format::Tetgen;
  throw CLI::ValidationError("--format must be medit or tetgen");
}

io::QuadricFile load_quadrics_checked(const std::string& path) {
  auto qf = io::load_quadrics(path);
  std::fprintf(stderr,
               "loaded quadrics: 15 octahedral (hash %llu), 27 odeco (hash %llu)\n",
               (unsigned long long)qf.octa_hash, (unsigned long long)qf.odeco_hash);
  return qf;
}

Vec15 random_sos_quartic(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const auto& ms = quartic::monomials();
  Vec15 mono = Vec15::Zero();
  for (int j = 0; j < 3; j++) {
    Mat3 b;
    for (int r = 0; r < 3; r++)
      for (int c = 0; c < 3; c++) b(r, c) = g(rng);
    b = 0.5 * (b + b.transpose());
    for (int i = 0; i < 3; i++)
      for (int jj = 0; jj < 3; jj++)
        for (int kk = 0; kk < 3; kk++)
          for (int l = 0; l < 3; l++) {
            int e[3] = {0, 0, 0};
            e[i]++, e[jj]++, e[kk]++, e[l]++;
            for (int t = 0; t < 15; t++)
              if (ms[t][0] == e[0] && ms[t][1] == e[1] && ms[t][2] == e[2])
                mono(t) += b(i, jj) * b(kk, l);
          }
  }
  return quartic::monomial_to_sh_matrix() * mono;
}

}  // namespace

int main(int argc, char** argv) {
  Eigen::setNbThreads(1);  // worker count must not change results
  CLI::App app{std::string(kVersion) +
               " - volumetric frame fields on tetrahedral meshes"};
  app.set_config("--config", "", "read key=value defaults (flags win)");
  app.require_subcommand(1);
  std::uint64_t config_hash = hash_args(argc, argv);

  std::string quadrics_path = "data/quadrics.dat";
  int workers = (int)std::thread::hardware_concurrency();
  app.add_option("--quadrics", quadrics_path, "quadric data file")
      ->capture_default_str();
  app.add_option("--workers", workers, "parallel workers for projection sweeps")
      ->capture_default_str();

  auto* derive =
      app.add_subcommand("derive-quadrics", "derive and freeze the variety quadrics");
  std::string derive_out = "data/quadrics.dat";
  std::uint64_t derive_seed = 1;
  int samples_octa = 2000, samples_odeco = 5000;
  derive->add_option("--out", derive_out, "output path")->capture_default_str();
  derive->add_option("--seed", derive_seed)->capture_default_str();
  derive->add_option("--samples-octa", samples_octa)->capture_default_str();
  derive->add_option("--samples-odeco", samples_odeco)->capture_default_str();

  auto* cube = app.add_subcommand("cube", "write a cube test mesh (MEDIT)");
  int cube_n = 3;
  std::string cube_out = "cube.mesh";
  bool cube_ball = false, cube_hole = false;
  double crease_deg = 45.0;
  cube->add_option("--n", cube_n, "subdivisions per side")->capture_default_str();
  cube->add_option("--out", cube_out)->capture_default_str();
  cube->add_flag("--ball", cube_ball, "warp the cube to the unit ball");
  cube->add_flag("--hole", cube_hole, "carve a square through-hole");

  auto* solve = app.add_subcommand("solve", "compute a frame field");
  std::string mesh_path, mesh_format = "medit", rep = "octa", solver = "mmbo";
  std::string out_path = "field.ckpt", vtk_path, trace_path;
  std::uint64_t seed = 1;
  double tau0 = 0, delta = 1e-4, grad_tol = 0;
  std::string schedule;
  int max_outer = 100;
  solve->add_option("--mesh", mesh_path, "tetrahedral mesh")->required();
  solve->add_option("--format", mesh_format, "medit|tetgen")->capture_default_str();
  solve->add_option("--rep", rep, "octa|odeco")->capture_default_str();
  solve->add_option("--solver", solver, "rtr|mbo|mmbo|mbo-then-rtr")
      ->capture_default_str();
  solve->add_option("--seed", seed)->capture_default_str();
  solve->add_option("--tau0", tau0, "diffusion time (0: 1/lambda_min+)")
      ->capture_default_str();
  solve->add_option("--schedule", schedule,
                    "constant|powerlaw (overrides the solver default)");
  solve->add_option("--delta", delta, "MBO stopping tolerance")->capture_default_str();
  solve->add_option("--grad-tol", grad_tol, "RTR gradient tolerance (0: 1e-6 sqrt(n))")
      ->capture_default_str();
  solve->add_option("--max-outer", max_outer)->capture_default_str();
  solve->add_option("--crease-deg", crease_deg, "crease dihedral threshold")
      ->capture_default_str();
  solve->add_option("--out", out_path, "coefficient dump (binary)")
      ->capture_default_str();
  solve->add_option("--vtk", vtk_path, "VTK export path");
  solve->add_option("--trace", trace_path, "energy trace CSV");

  auto* project = app.add_subcommand("project", "project query vectors");
  std::string project_in, project_out = "-", project_rep = "octa";
  project->add_option("--in", project_in, "query table (9 or 15 columns)")->required();
  project->add_option("--rep", project_rep, "octa|odeco")->capture_default_str();
  project->add_option("--out", project_out, "output table ('-' for stdout)")
      ->capture_default_str();

  auto* exact = app.add_subcommand("exactness-test",
                                   "projection exactness histogram (SDP ratios)");
  std::string variety = "octa";
  int trials = 10000;
  std::uint64_t exact_seed = 1;
  std::string exact_out = "exactness.csv";
  exact->add_option("--variety", variety, "octa|odeco|odeco-positive")
      ->capture_default_str();
  exact->add_option("--trials", trials)->capture_default_str();
  exact->add_option("--seed", exact_seed)->capture_default_str();
  exact->add_option("--out", exact_out, "histogram CSV")->capture_default_str();

  auto* geo = app.add_subcommand("geodesic", "sample an octahedral geodesic");
  std::vector<double> geo_start{0, 0, 0}, geo_v{0, 0, 1.0};
  int geo_steps = 100;
  std::string geo_out = "-";
  geo->add_option("--start", geo_start, "axis-angle of the starting rotation")
      ->expected(3);
  geo->add_option("--v", geo_v, "tangent coefficients")->expected(3);
  geo->add_option("--steps", geo_steps)->capture_default_str();
  geo->add_option("--out", geo_out)->capture_default_str();

  auto* exp = app.add_subcommand("export-vtk", "re-export a checkpoint as VTK");
  std::string exp_mesh, exp_format = "medit", exp_ckpt, exp_out = "field.vtk";
  exp->add_option("--mesh", exp_mesh)->required();
  exp->add_option("--format", exp_format)->capture_default_str();
  exp->add_option("--checkpoint", exp_ckpt)->required();
  exp->add_option("--out", exp_out)->capture_default_str();

  auto* info = app.add_subcommand("info", "print mesh statistics");
  std::string info_mesh, info_format = "medit";
  info->add_option("--mesh", info_mesh)->required();
  info->add_option("--format", info_format)->capture_default_str();
  info->add_option("--crease-deg", crease_deg)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*derive) {
      varieties::DerivationGap gap_octa, gap_odeco;
      auto octa = varieties::derive_octa_quadrics(samples_octa, derive_seed, &gap_octa);
      auto odeco =
          varieties::derive_odeco_quadrics(samples_odeco, derive_seed, &gap_odeco);
      io::save_quadrics(derive_out, octa, odeco);
      std::printf("%s\nwrote %s: 15 octahedral + 27 odeco quadrics\n", kVersion,
                  derive_out.c_str());
      std::printf("octahedral nullspace gap: %.3e -> %.3e (ratio %.2e)\n",
                  gap_octa.last_null, gap_octa.first_nonnull,
                  gap_octa.first_nonnull / gap_octa.last_null);
      std::printf("odeco nullspace gap: %.3e -> %.3e (ratio %.2e)\n",
                  gap_odeco.last_null, gap_odeco.first_nonnull,
                  gap_odeco.first_nonnull / gap_odeco.last_null);
      std::printf("octa hash %llu, odeco hash %llu\n",
                  (unsigned long long)io::quadric_content_hash(octa),
                  (unsigned long long)io::quadric_content_hash(odeco));
      return 0;
    }

    if (*cube) {
      auto m = mesh::generate_cube_mesh(cube_n, crease_deg);
      if (cube_hole) {
        double lo = std::floor(cube_n / 4.0) / cube_n;
        double hi = std::ceil(3.0 * cube_n / 4.0) / cube_n;
        m = mesh::carve_box(m, Vec3(lo, lo, -1.0), Vec3(hi, hi, 2.0), crease_deg);
      }
      if (cube_ball) m = mesh::warp_to_ball(m, crease_deg);
      mesh::save_mesh_medit(cube_out, m);
      std::printf("wrote %s: %d vertices, %d tets\n", cube_out.c_str(),
                  m.num_vertices(), m.num_tets());
      return 0;
    }

    if (*info) {
      auto m = mesh::load_mesh(info_mesh, parse_format(info_format), crease_deg);
      auto ops = mesh::fem_operators(m);
      int creases = 0;
      for (bool c : m.crease) creases += c;
      std::printf("%s\nmesh: %s\n", kVersion, info_mesh.c_str());
      std::printf("vertices %d, tets %d, boundary faces %d, boundary vertices %d\n",
                  m.num_vertices(), m.num_tets(), (int)m.boundary_faces.rows(),
                  (int)m.boundary_vertices.size());
      std::printf("creased boundary vertices: %d (threshold %.1f deg)\n", creases,
                  crease_deg);
      {
        std::set<std::pair<int, int>> edges;
        for (int f = 0; f < (int)m.boundary_faces.rows(); f++)
          for (int k = 0; k < 3; k++) {
            int u = m.boundary_faces(f, k), v = m.boundary_faces(f, (k + 1) % 3);
            edges.emplace(std::min(u, v), std::max(u, v));
          }
        long euler = (long)m.boundary_vertices.size() - (long)edges.size() +
                     m.boundary_faces.rows();
        std::printf("boundary Euler characteristic: %ld\n", euler);
      }
      std::printf("volume %.12g, mesh hash %llu\n", ops.total_volume,
                  (unsigned long long)mesh::mesh_hash(m));
      auto eig = mesh::smallest_nonzero_stiffness_eigenvalue(ops);
      std::printf("smallest nonzero FEM eigenvalue %.6g (tau0 default %.6g)%s\n",
                  eig.value, 1.0 / eig.value,
                  eig.second_zero_mode ? " [disconnected mesh!]" : "");
      return 0;
    }

    if (*geo) {
      auto qf = load_quadrics_checked(quadrics_path);
      Vec3 start(geo_start[0], geo_start[1], geo_start[2]);
      Vec3 v(geo_v[0], geo_v[1], geo_v[2]);
      Vec9 q = so3::wigner_from_axis_angle(4, start) * so3::canonical_frame();
      std::ostream* os = &std::cout;
      std::ofstream file;
      if (geo_out != "-") {
        file.open(geo_out);
        os = &file;
      }
      *os << "# " << kVersion << " config " << config_hash << " quadrics "
          << qf.octa_hash << "\n";
      *os << "tau,q1,q2,q3,q4,q5,q6,q7,q8,q9,residual\n";
      os->precision(17);
      for (int k = 0; k <= geo_steps; k++) {
        double tau = (double)k / geo_steps;
        Vec9 p = so3::octa_exp(q, Vec3(tau * v));
        *os << tau;
        for (int i = 0; i < 9; i++) *os << "," << p(i);
        *os << "," << varieties::residual(p, qf.octa) << "\n";
      }
      return 0;
    }

    if (*project) {
      auto qf = load_quadrics_checked(quadrics_path);
      auto rows = io::read_vector_table(project_in);
      std::ostream* os = &std::cout;
      std::ofstream file;
      if (project_out != "-") {
        file.open(project_out);
        os = &file;
      }
      os->precision(17);
      *os << "# " << kVersion << " config " << config_hash << " quadrics "
          << (project_rep == "octa" ? qf.octa_hash : qf.odeco_hash) << "\n";
      for (const VecX& row : rows) {
        if (project_rep == "octa") {
          if (row.size() != 9) throw DimensionMismatch("expected 9 columns");
          auto r = projection::project_octa(Vec9(row), qf.octa);
          for (int i = 0; i < 9; i++) *os << r.q(i) << ",";
          *os << r.ratio << "\n";
        } else {
          if (row.size() != 15) throw DimensionMismatch("expected 15 columns");
          auto r = projection::project_odeco(Vec15(row), qf.odeco);
          for (int i = 0; i < 15; i++) *os << r.q(i) << ",";
          *os << r.ratio << "\n";
        }
      }
      return 0;
    }

    if (*exact) {
      auto qf = load_quadrics_checked(quadrics_path);
      std::vector<double> ratios(trials, 1.0);
      int failures = 0;
      auto t0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers)) \
    reduction(+ : failures)
      for (int k = 0; k < trials; k++) {
        std::mt19937_64 rng(exact_seed * 0x9e3779b97f4a7c15ull + k);
        std::normal_distribution<double> g(0.0, 1.0);
        try {
          if (variety == "octa") {
            Vec9 y;
            for (int i = 0; i < 9; i++) y(i) = g(rng);
            auto r = projection::project_octa(y, qf.octa);
            ratios[k] = r.ratio;
            if (!r.solver_optimal) failures++;
          } else if (variety == "odeco") {
            Vec15 y;
            for (int i = 0; i < 15; i++) y(i) = g(rng);
            auto r = projection::project_odeco(y, qf.odeco);
            ratios[k] = r.ratio;
            if (!r.solver_optimal) failures++;
          } else {
            Vec15 y = random_sos_quartic(rng);
            auto r = projection::project_odeco(y, qf.odeco);
            ratios[k] = r.ratio;
            if (!r.solver_optimal) failures++;
          }
        } catch (const NumericalError&) {
          failures++;
        }
      }
      double dt =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      double maxr = 0;
      for (double r : ratios) maxr = std::max(maxr, r);
      const int nbins = 64;
      std::vector<int> bins(nbins, 0);
      for (double r : ratios) {
        double lg = std::log10(std::max(r, 1e-16));
        int b = (int)((lg + 16.0) / 16.0 * nbins);
        bins[std::min(nbins - 1, std::max(0, b))]++;
      }
      std::ofstream out(exact_out);
      out << "# " << kVersion << " config " << config_hash << " variety " << variety
          << " trials " << trials << " distribution "
          << (variety == "odeco-positive"
                  ? "sum-of-squares of 3 standard-normal quadratics"
                  : "standard normal coordinates")
          << "\n";
      out << "ratio_bin_upper,count\n";
      for (int b = 0; b < nbins; b++)
        out << std::pow(10.0, -16.0 + 16.0 * (b + 1) / nbins) << "," << bins[b]
            << "\n";
      std::printf("%s: %d trials, max ratio %.3e, %d solver failures, %.1f s\n",
                  variety.c_str(), trials, maxr, failures, dt);
      if (failures > trials / 1000.0) {
        std::fprintf(stderr, "more than 0.1%% of trials failed to reach Optimal\n");
        return 1;
      }
      return 0;
    }

    if (*solve) {
      auto qf = load_quadrics_checked(quadrics_path);
      auto m = mesh::load_mesh(mesh_path, parse_format(mesh_format), crease_deg);
      bool odeco_rep = rep == "odeco";
      auto t0 = std::chrono::steady_clock::now();
      optim::FieldState field = odeco_rep ? optim::random_odeco_field(m, seed)
                                          : optim::random_octa_field(m, seed);
      auto ops = mesh::fem_operators(m);

      auto run_mbo = [&](optim::FieldState f, optim::MboConfig::Schedule sched) {
        optim::MboConfig cfg;
        cfg.schedule = sched;
        cfg.tau0 = tau0;
        cfg.delta = delta;
        cfg.max_outer = max_outer;
        cfg.workers = workers;
        return optim::mbo_solve(std::move(f), ops, qf.octa, qf.odeco, cfg);
      };
      auto run_rtr = [&](optim::FieldState f) {
        optim::RtrConfig cfg;
        cfg.grad_tol = grad_tol;
        cfg.max_outer = max_outer;
        return optim::rtr_solve(std::move(f), ops, qf.odeco, cfg);
      };

      auto sched = optim::MboConfig::Schedule::PowerLaw;
      if (solver == "mbo") sched = optim::MboConfig::Schedule::Constant;
      if (!schedule.empty())
        sched = schedule == "constant" ? optim::MboConfig::Schedule::Constant
                                       : optim::MboConfig::Schedule::PowerLaw;

      if (solver == "rtr") {
        field = run_rtr(std::move(field));
      } else if (solver == "mbo" || solver == "mmbo") {
        field = run_mbo(std::move(field), sched);
      } else if (solver == "mbo-then-rtr") {
        field = run_mbo(std::move(field), sched);
        field = run_rtr(std::move(field));
      } else {
        std::fprintf(stderr, "--solver must be rtr|mbo|mmbo|mbo-then-rtr\n");
        return 2;
      }

      double dt =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      double energy = optim::dirichlet_energy(field, ops);
      auto report = optim::field_energy_report(field, m, qf.octa, qf.odeco);
      std::printf("final energy %.10g, iterations %d, wall %.2f s\n", energy,
                  field.trace.empty() ? 0 : field.trace.back().iteration, dt);
      std::printf("max residual %.3e, boundary violation %.3e, fallbacks %d\n",
                  report.max_residual, report.boundary_violation,
                  field.projection_fallbacks);
      io::save_checkpoint(out_path, field, mesh::mesh_hash(m));
      if (!vtk_path.empty()) io::export_vtk(vtk_path, m, field);
      if (!trace_path.empty()) {
        char header[256];
        std::snprintf(header, sizeof(header), "%s config %llu quadrics %llu mesh %llu",
                      kVersion, (unsigned long long)config_hash,
                      (unsigned long long)(odeco_rep ? qf.odeco_hash : qf.octa_hash),
                      (unsigned long long)mesh::mesh_hash(m));
        io::write_trace_csv(trace_path, field, header);
      }
      return 0;
    }

    if (*exp) {
      auto m = mesh::load_mesh(exp_mesh, parse_format(exp_format), crease_deg);
      std::uint64_t mh = 0;
      auto field = io::load_checkpoint(exp_ckpt, &mh);
      if (mh != mesh::mesh_hash(m))
        std::fprintf(stderr, "warning: checkpoint mesh hash differs from --mesh\n");
      io::export_vtk(exp_out, m, field);
      std::printf("wrote %s\n", exp_out.c_str());
      return 0;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const EmptyMesh& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 1;
  }
  return 0;
}
