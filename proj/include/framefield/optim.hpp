#pragma once

// Field solvers over products of octahedral/odeco varieties: Riemannian
// trust-region with truncated-CG inner solves, and MBO/mMBO
// diffusion-generated optimization, plus energies, gradients and random
// initialization.

#include <cstdint>
#include <vector>

#include "framefield/mesh.hpp"
#include "framefield/projection.hpp"
#include "framefield/types.hpp"
#include "framefield/varieties.hpp"

namespace framefield::optim {

enum class Rep { Octahedral, Odeco };

struct TraceRow {
  int iteration = 0;
  double energy = 0;
  double criterion = 0;  // gradient norm (RTR) or Delta_k (MBO)
  double tau = 0;        // diffusion time (MBO only)
  double wall_seconds = 0;
};

struct FieldState {
  Rep rep = Rep::Octahedral;
  MatX coeffs;                  // d x n, one column per vertex
  std::vector<int> constrained;  // vertex ids carrying alignment charts
  std::vector<projection::AlignedChartOcta> octa_charts;
  std::vector<projection::AlignedChartOdeco> odeco_charts;
  std::vector<TraceRow> trace;
  std::string status = "ok";     // "ok" or "line-failure"
  int projection_fallbacks = 0;  // non-exact projections seen by solvers
  int singular_columns = 0;      // odeco columns hitting singular strata

  int dim() const { return (int)coeffs.rows(); }
  int size() const { return (int)coeffs.cols(); }
};

struct MboConfig {
  double tau0 = 0;  // 0: set from 1/lambda_min+ of the FEM pencil
  enum class Schedule { Constant, PowerLaw } schedule = Schedule::PowerLaw;
  double power_a = 50.0;  // beta(k) = a k^-p
  double power_p = 3.0;
  double delta = 1e-4;
  int max_outer = 100;
  int workers = 0;  // 0: serial
};

struct RtrConfig {
  double initial_radius = 1.0;
  double max_radius = 10.0;
  double grad_tol = 0;  // 0: 1e-6 sqrt(n)
  int max_outer = 200;
  int max_inner = 120;
};

// Alignment charts for all non-creased boundary vertices (or all boundary
// vertices when exclude_creases is false).
void attach_boundary_charts(FieldState& field, const mesh::TetMesh& m,
                            bool exclude_creases = true);

// Per-vertex random octahedral frames: rotate the canonical frame about z by
// a uniform angle, then rotate z to a uniform random direction. Boundary
// columns are projected to their charts. Bitwise reproducible for a fixed
// seed regardless of worker count.
FieldState random_octa_field(const mesh::TetMesh& m, std::uint64_t seed,
                             bool exclude_creases = true);

// Lift of a random octahedral field into the odeco variety (the protocol
// that keeps odeco weights nonnegative).
FieldState random_odeco_field(const mesh::TetMesh& m, std::uint64_t seed,
                              bool exclude_creases = true);

double dirichlet_energy(const FieldState& field, const mesh::FemOperators& ops);

// Ambient gradient q S projected per column onto the tangent space (chart
// tangent for constrained boundary columns).
MatX riemannian_gradient(const FieldState& field, const mesh::FemOperators& ops,
                         const varieties::QuadricSet& odeco_quadrics);

FieldState rtr_solve(FieldState field, const mesh::FemOperators& ops,
                     const varieties::QuadricSet& odeco_quadrics,
                     const RtrConfig& cfg = {});

FieldState mbo_solve(FieldState field, const mesh::FemOperators& ops,
                     const varieties::QuadricSet& octa_quadrics,
                     const varieties::QuadricSet& odeco_quadrics,
                     const MboConfig& cfg = {});

struct EnergyReport {
  double energy = 0;
  VecX density;               // per-vertex energy density (mass-weighted share)
  double max_residual = 0;    // worst variety residual over columns
  double boundary_violation = 0;  // worst distance to a chart's affine span
};

EnergyReport field_energy_report(const FieldState& field, const mesh::TetMesh& m,
                                 const varieties::QuadricSet& octa_quadrics,
                                 const varieties::QuadricSet& odeco_quadrics);

// Projection sweep over columns: the OpenMP kernel and the serial reference
// it is tested against. Both write per-column results independently, so the
// output is bitwise identical for any worker count.
void project_field_columns(FieldState& field, const varieties::QuadricSet& octa,
                           const varieties::QuadricSet& odeco, int workers);
void project_field_columns_serial(FieldState& field,
                                  const varieties::QuadricSet& octa,
                                  const varieties::QuadricSet& odeco);

}  // namespace framefield::optim
