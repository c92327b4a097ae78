#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "framefield/mesh.hpp"

using namespace framefield;
namespace fs = std::filesystem;

namespace {

std::string tmpdir() {
  static std::string dir = [] {
    auto d = fs::temp_directory_path() / "framefield_mesh_tests";
    fs::create_directories(d);
    return d.string();
  }();
  return dir;
}

}  // namespace

TEST_CASE("cube mesh counts and volume") {
  auto m1 = mesh::generate_cube_mesh(1);
  CHECK(m1.num_vertices() == 8);
  CHECK(m1.num_tets() == 6);
  CHECK(m1.boundary_faces.rows() == 12);
  auto m2 = mesh::generate_cube_mesh(2);
  CHECK(m2.num_vertices() == 27);
  CHECK(m2.num_tets() == 48);
  auto m3 = mesh::generate_cube_mesh(3);
  CHECK(m3.boundary_faces.rows() == 2 * 6 * 9);
  auto ops = mesh::fem_operators(m3);
  CHECK(ops.total_volume == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ops.mass.sum() == doctest::Approx(1.0).epsilon(1e-9));
  // every tet positively oriented
  for (int t = 0; t < m3.num_tets(); t++) {
    Vec3 a = m3.vertices.row(m3.tets(t, 0));
    Vec3 b = m3.vertices.row(m3.tets(t, 1));
    Vec3 c = m3.vertices.row(m3.tets(t, 2));
    Vec3 d = m3.vertices.row(m3.tets(t, 3));
    CHECK((b - a).cross(c - a).dot(d - a) > 0);
  }
}

TEST_CASE("single tet: boundary and parser round trips") {
  std::string path = tmpdir() + "/single.mesh";
  {
    std::ofstream out(path);
    out << "MeshVersionFormatted 2\nDimension 3\n";
    out << "Vertices\n4\n0 0 0 0\n1 0 0 0\n0 1 0 0\n0 0 1 0\n";
    out << "Tetrahedra\n1\n1 2 3 4 0\nEnd\n";
  }
  auto m = mesh::load_mesh(path, mesh::Format::Medit);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_tets() == 1);
  CHECK(m.boundary_faces.rows() == 4);
  CHECK(m.boundary_vertices.size() == 4);

  // equivalent TetGen pair parses to the same mesh
  {
    std::ofstream node(tmpdir() + "/single.node");
    node << "4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n";
    std::ofstream ele(tmpdir() + "/single.ele");
    ele << "1 4 0\n1 1 2 3 4\n";
  }
  auto mt = mesh::load_mesh(tmpdir() + "/single.node", mesh::Format::Tetgen);
  CHECK(mt.num_vertices() == m.num_vertices());
  CHECK(mt.num_tets() == m.num_tets());
  CHECK((mt.vertices - m.vertices).norm() == 0.0);
  CHECK((mt.tets - m.tets).norm() == 0);

  // inverted tets are fixed by a vertex swap
  {
    std::ofstream out(tmpdir() + "/flip.mesh");
    out << "Vertices\n4\n0 0 0 0\n1 0 0 0\n0 1 0 0\n0 0 1 0\n";
    out << "Tetrahedra\n1\n2 1 3 4 0\nEnd\n";
  }
  auto mf = mesh::load_mesh(tmpdir() + "/flip.mesh", mesh::Format::Medit);
  Vec3 a = mf.vertices.row(mf.tets(0, 0)), b = mf.vertices.row(mf.tets(0, 1));
  Vec3 c = mf.vertices.row(mf.tets(0, 2)), d = mf.vertices.row(mf.tets(0, 3));
  CHECK((b - a).cross(c - a).dot(d - a) > 0);
}

TEST_CASE("cube mesh writes and re-reads identically") {
  auto m = mesh::generate_cube_mesh(2);
  std::string path = tmpdir() + "/cube2.mesh";
  mesh::save_mesh_medit(path, m);
  auto m2 = mesh::load_mesh(path, mesh::Format::Medit);
  CHECK((m.vertices - m2.vertices).norm() == 0.0);
  CHECK((m.tets - m2.tets).norm() == 0);
  CHECK(m.boundary_faces.rows() == m2.boundary_faces.rows());
}

TEST_CASE("missing and empty files raise errors") {
  CHECK_THROWS_AS(mesh::load_mesh("/nonexistent/p.mesh", mesh::Format::Medit),
                  ParseError);
  std::string path = tmpdir() + "/empty.mesh";
  {
    std::ofstream out(path);
    out << "Vertices\n0\nTetrahedra\n0\nEnd\n";
  }
  CHECK_THROWS_AS(mesh::load_mesh(path, mesh::Format::Medit), EmptyMesh);
}

TEST_CASE("vertex normals and crease flags") {
  auto m = mesh::generate_cube_mesh(3);
  // flat-face interior vertices carry the exact face normal, corners crease
  int flats = 0, creases = 0;
  for (size_t bi = 0; bi < m.boundary_vertices.size(); bi++) {
    Vec3 p = m.vertices.row(m.boundary_vertices[bi]);
    Vec3 n = m.normals.row((int)bi);
    int on_wall = 0;
    for (int c = 0; c < 3; c++)
      if (p(c) < 1e-12 || p(c) > 1 - 1e-12) on_wall++;
    if (on_wall == 1) {
      flats++;
      CHECK_FALSE(m.crease[bi]);
      double axis_align = n.cwiseAbs().maxCoeff();
      CHECK(axis_align == doctest::Approx(1.0).epsilon(1e-12));
    } else {
      creases++;
      CHECK(m.crease[bi]);
    }
  }
  CHECK(flats == 6 * 2 * 2);  // 2x2 interior grid per face
  CHECK(creases > 0);

  // ball mesh: normals approach the radial direction
  auto ball = mesh::warp_to_ball(mesh::generate_cube_mesh(6));
  double worst = 0;
  for (size_t bi = 0; bi < ball.boundary_vertices.size(); bi++) {
    Vec3 p = ball.vertices.row(ball.boundary_vertices[bi]);
    Vec3 n = ball.normals.row((int)bi);
    worst = std::max(worst, (n - p.normalized()).norm());
  }
  CHECK(worst < 0.35);  // O(h) agreement at this resolution
}

TEST_CASE("fem operators: element matrix, linear exactness, kernel") {
  // single regular-ish tet: hand-checked element stiffness
  auto m = mesh::generate_cube_mesh(1);
  auto ops = mesh::fem_operators(m);
  CHECK((ops.stiffness - Eigen::SparseMatrix<double>(ops.stiffness.transpose()))
            .norm() == 0.0);
  VecX ones = VecX::Ones(m.num_vertices());
  CHECK((ops.stiffness * ones).norm() < 1e-9 * ops.stiffness.norm());

  auto m3 = mesh::generate_cube_mesh(3);
  auto ops3 = mesh::fem_operators(m3);
  Vec3 a(0.3, -1.2, 0.7);
  VecX u(m3.num_vertices());
  for (int v = 0; v < m3.num_vertices(); v++)
    u(v) = a.dot(m3.vertices.row(v)) + 2.0;
  double energy = u.dot(ops3.stiffness * u);
  CHECK(energy == doctest::Approx(a.squaredNorm() * ops3.total_volume).epsilon(1e-9));
  for (int v = 0; v < m3.num_vertices(); v++) CHECK(ops3.mass(v) > 0);

  // quadratic growth of the energy under a single-vertex perturbation
  VecX upert = u;
  int probe = m3.num_vertices() / 2;
  double e0 = u.dot(ops3.stiffness * u);
  upert(probe) = u(probe) + 1e-3;
  double e1 = upert.dot(ops3.stiffness * upert) - e0 -
              2e-3 * (ops3.stiffness * u)(probe);
  upert(probe) = u(probe) + 1e-4;
  double e2 = upert.dot(ops3.stiffness * upert) - e0 -
              2e-4 * (ops3.stiffness * u)(probe);
  CHECK(e1 / e2 == doctest::Approx(100.0).epsilon(0.01));
}

TEST_CASE("smallest nonzero eigenvalue approaches the Neumann limit") {
  // continuous limit for the unit cube is pi^2
  double prev_gap = 1e9;
  for (int n : {2, 3, 4}) {
    auto ops = mesh::fem_operators(mesh::generate_cube_mesh(n));
    auto eig = mesh::smallest_nonzero_stiffness_eigenvalue(ops);
    CHECK_FALSE(eig.second_zero_mode);
    double gap = std::abs(eig.value - M_PI * M_PI);
    CHECK(gap < prev_gap + 1e-9);  // monotone approach
    prev_gap = gap;
    if (n == 4) CHECK(gap / (M_PI * M_PI) < 0.2);
  }

  // coordinate scaling by c multiplies the eigenvalue by 1/c^2
  auto m = mesh::generate_cube_mesh(2);
  auto e1 = mesh::smallest_nonzero_stiffness_eigenvalue(mesh::fem_operators(m));
  mesh::TetMesh scaled = m;
  scaled.vertices *= 2.0;
  auto e2 = mesh::smallest_nonzero_stiffness_eigenvalue(mesh::fem_operators(scaled));
  CHECK(e2.value == doctest::Approx(e1.value / 4.0).epsilon(1e-6));

  // disconnected mesh: second zero mode detected
  mesh::TetMesh two = mesh::generate_cube_mesh(1);
  int nv = two.num_vertices();
  mesh::TetMesh far = mesh::generate_cube_mesh(1);
  two.vertices.conservativeResize(2 * nv, 3);
  two.vertices.bottomRows(nv) = far.vertices.array() + 5.0;
  int nt = two.num_tets();
  two.tets.conservativeResize(2 * nt, 4);
  two.tets.bottomRows(nt) = far.tets.array() + nv;
  mesh::finalize_mesh(two);
  auto ed = mesh::smallest_nonzero_stiffness_eigenvalue(mesh::fem_operators(two));
  CHECK(ed.second_zero_mode);
}

TEST_CASE("carve_box produces a through-hole ring") {
  auto cube = mesh::generate_cube_mesh(4);
  auto ring = mesh::carve_box(cube, Vec3(0.25, 0.25, -1.0), Vec3(0.75, 0.75, 2.0));
  CHECK(ring.num_tets() == 6 * (16 - 4) * 4);
  auto ops = mesh::fem_operators(ring);
  CHECK(ops.total_volume == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("mesh hash distinguishes meshes and is stable") {
  auto a = mesh::generate_cube_mesh(2);
  auto b = mesh::generate_cube_mesh(2);
  CHECK(mesh::mesh_hash(a) == mesh::mesh_hash(b));
  auto c = mesh::generate_cube_mesh(3);
  CHECK(mesh::mesh_hash(a) != mesh::mesh_hash(c));
}

TEST_CASE("reference tet element stiffness against hand integration") {
  // tet (0, e1, e2, e3): grad phi_0 = (-1,-1,-1), grad phi_k = e_k, vol = 1/6
  mesh::TetMesh m;
  m.vertices.resize(4, 3);
  m.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  m.tets.resize(1, 4);
  m.tets << 0, 1, 2, 3;
  mesh::finalize_mesh(m);
  auto ops = mesh::fem_operators(m);
  MatX s = MatX(ops.stiffness);
  CHECK(s(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  for (int k = 1; k < 4; k++) {
    CHECK(s(0, k) == doctest::Approx(-1.0 / 6).epsilon(1e-14));
    CHECK(s(k, k) == doctest::Approx(1.0 / 6).epsilon(1e-14));
    for (int l = 1; l < 4; l++)
      if (l != k) CHECK(std::abs(s(k, l)) < 1e-14);
  }
  CHECK(ops.mass.sum() == doctest::Approx(1.0 / 6).epsilon(1e-14));
}
