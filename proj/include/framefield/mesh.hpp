#pragma once

// Tetrahedral mesh ingestion (MEDIT .mesh, TetGen .node/.ele), boundary
// geometry with per-vertex normals and crease flags, linear-FEM operators
// (stiffness + lumped mass), and a built-in cube mesher for self-contained
// tests.

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "framefield/types.hpp"

namespace framefield::mesh {

enum class Format { Medit, Tetgen };

struct TetMesh {
  Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;
  Eigen::Matrix<int, Eigen::Dynamic, 4> tets;
  // faces incident to exactly one tet, oriented outward
  Eigen::Matrix<int, Eigen::Dynamic, 3> boundary_faces;
  std::vector<int> boundary_vertices;          // sorted
  std::vector<int> boundary_index;             // vertex -> position in boundary_vertices, or -1
  Eigen::Matrix<double, Eigen::Dynamic, 3> normals;  // one row per boundary vertex
  std::vector<bool> crease;                    // one flag per boundary vertex

  int num_vertices() const { return (int)vertices.rows(); }
  int num_tets() const { return (int)tets.rows(); }
  bool is_boundary(int v) const { return boundary_index[v] >= 0; }
};

// Parses, fixes inverted tets by vertex swap, extracts the boundary, and
// computes normals/creases at the given dihedral threshold.
TetMesh load_mesh(const std::string& path, Format format,
                  double crease_threshold_deg = 45.0);

void save_mesh_medit(const std::string& path, const TetMesh& mesh);

// Unit cube [0,1]^3, n^3 cells, 6 tets each (Kuhn subdivision).
TetMesh generate_cube_mesh(int n, double crease_threshold_deg = 45.0);

// Recompute boundary faces, vertex normals and crease flags in place
// (normal = area-weighted average of incident boundary face normals).
void finalize_mesh(TetMesh& mesh, double crease_threshold_deg = 45.0);

// Test-domain builders: map the cube to the unit ball (radial stretch) or
// carve an axis-aligned block of cells out of a cube mesh (through-hole).
TetMesh warp_to_ball(const TetMesh& cube, double crease_threshold_deg = 45.0);
TetMesh carve_box(const TetMesh& m, const Vec3& lo, const Vec3& hi,
                  double crease_threshold_deg = 45.0);

struct FemOperators {
  Eigen::SparseMatrix<double> stiffness;  // PSD, constants in kernel
  VecX mass;                              // lumped (diagonal)
  double total_volume = 0;
};

FemOperators fem_operators(const TetMesh& mesh);

struct EigenvalueResult {
  double value = 0;
  bool second_zero_mode = false;  // disconnected mesh detected
  int iterations = 0;
};

// Smallest nonzero generalized eigenvalue of S u = lambda M u (constant mode
// deflated), by inverse iteration. Throws NoConvergence after max_iter.
EigenvalueResult smallest_nonzero_stiffness_eigenvalue(const FemOperators& ops,
                                                       double tol = 1e-8,
                                                       int max_iter = 500);

std::uint64_t mesh_hash(const TetMesh& mesh);

}  // namespace framefield::mesh
