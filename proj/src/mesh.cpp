#include "framefield/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace framefield::mesh {

namespace {

double tet_volume(const TetMesh& m, int t) {
  Vec3 a = m.vertices.row(m.tets(t, 0));
  Vec3 b = m.vertices.row(m.tets(t, 1));
  Vec3 c = m.vertices.row(m.tets(t, 2));
  Vec3 d = m.vertices.row(m.tets(t, 3));
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

void orient_tets(TetMesh& m) {
  for (int t = 0; t < m.num_tets(); t++)
    if (tet_volume(m, t) < 0) std::swap(m.tets(t, 0), m.tets(t, 1));
}

std::string next_token(std::istream& in) {
  std::string tok;
  in >> tok;
  return tok;
}

}  // namespace

void finalize_mesh(TetMesh& m, double crease_threshold_deg) {
  if (m.num_tets() == 0 || m.num_vertices() == 0) throw EmptyMesh();
  orient_tets(m);

  // boundary faces: sorted triple -> (count, one oriented representative)
  static const int face_corners[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
  std::map<std::array<int, 3>, std::pair<int, std::array<int, 3>>> faces;
  for (int t = 0; t < m.num_tets(); t++) {
    Vec3 centroid = Vec3::Zero();
    for (int k = 0; k < 4; k++) centroid += m.vertices.row(m.tets(t, k)).transpose();
    centroid /= 4.0;
    for (auto& fc : face_corners) {
      std::array<int, 3> f = {m.tets(t, fc[0]), m.tets(t, fc[1]), m.tets(t, fc[2])};
      std::array<int, 3> key = f;
      std::sort(key.begin(), key.end());
      auto it = faces.find(key);
      if (it == faces.end()) {
        // orient outward relative to this tet
        Vec3 p0 = m.vertices.row(f[0]), p1 = m.vertices.row(f[1]),
             p2 = m.vertices.row(f[2]);
        Vec3 n = (p1 - p0).cross(p2 - p0);
        Vec3 fc3 = (p0 + p1 + p2) / 3.0;
        if (n.dot(fc3 - centroid) < 0) std::swap(f[1], f[2]);
        faces[key] = {1, f};
      } else {
        it->second.first++;
      }
    }
  }
  std::vector<std::array<int, 3>> bnd;
  int overshared = 0;
  for (auto& [key, v] : faces) {
    if (v.first == 1) bnd.push_back(v.second);
    if (v.first > 2) overshared++;
  }
  if (overshared > 0)
    std::fprintf(stderr, "warning: non-manifold boundary (%d faces shared by >2 tets)\n",
                 overshared);
  m.boundary_faces.resize((int)bnd.size(), 3);
  for (int i = 0; i < (int)bnd.size(); i++)
    for (int k = 0; k < 3; k++) m.boundary_faces(i, k) = bnd[i][k];

  // boundary vertex set
  std::vector<bool> on_bnd(m.num_vertices(), false);
  for (auto& f : bnd)
    for (int v : f) on_bnd[v] = true;
  m.boundary_vertices.clear();
  m.boundary_index.assign(m.num_vertices(), -1);
  for (int v = 0; v < m.num_vertices(); v++)
    if (on_bnd[v]) {
      m.boundary_index[v] = (int)m.boundary_vertices.size();
      m.boundary_vertices.push_back(v);
    }

  // area-weighted vertex normals and crease flags
  int nb = (int)m.boundary_vertices.size();
  m.normals.setZero(nb, 3);
  m.crease.assign(nb, false);
  std::vector<std::vector<Vec3>> incident(nb);
  for (auto& f : bnd) {
    Vec3 p0 = m.vertices.row(f[0]), p1 = m.vertices.row(f[1]), p2 = m.vertices.row(f[2]);
    Vec3 an = 0.5 * (p1 - p0).cross(p2 - p0);  // area-weighted normal
    for (int v : f) {
      int bi = m.boundary_index[v];
      m.normals.row(bi) += an.transpose();
      incident[bi].push_back(an.normalized());
    }
  }
  const double cos_thresh = std::cos(crease_threshold_deg * M_PI / 180.0);
  for (int bi = 0; bi < nb; bi++) {
    double len = m.normals.row(bi).norm();
    if (len < 1e-14) {
      m.crease[bi] = true;  // ZeroNormal: flag as crease
      m.normals.row(bi) = Vec3::UnitZ().transpose();
      continue;
    }
    m.normals.row(bi) /= len;
    for (size_t i = 0; i < incident[bi].size() && !m.crease[bi]; i++)
      for (size_t j = i + 1; j < incident[bi].size(); j++)
        if (incident[bi][i].dot(incident[bi][j]) < cos_thresh) {
          m.crease[bi] = true;
          break;
        }
  }
}

TetMesh generate_cube_mesh(int n, double crease_threshold_deg) {
  if (n < 1) throw EmptyMesh("cube subdivisions must be >= 1");
  TetMesh m;
  int nv = (n + 1) * (n + 1) * (n + 1);
  m.vertices.resize(nv, 3);
  auto vid = [&](int i, int j, int k) { return (i * (n + 1) + j) * (n + 1) + k; };
  for (int i = 0; i <= n; i++)
    for (int j = 0; j <= n; j++)
      for (int k = 0; k <= n; k++)
        m.vertices.row(vid(i, j, k)) << (double)i / n, (double)j / n, (double)k / n;
  // Kuhn subdivision: six tets around the main diagonal of each cell
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  m.tets.resize(6 * n * n * n, 4);
  int t = 0;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++)
      for (int k = 0; k < n; k++)
        for (auto& p : perms) {
          int c[3] = {i, j, k};
          int path[4][3];
          for (int d = 0; d < 3; d++) path[0][d] = c[d];
          for (int step = 0; step < 3; step++) {
            for (int d = 0; d < 3; d++) path[step + 1][d] = path[step][d];
            path[step + 1][p[step]]++;
          }
          for (int corner = 0; corner < 4; corner++)
            m.tets(t, corner) = vid(path[corner][0], path[corner][1], path[corner][2]);
          t++;
        }
  finalize_mesh(m, crease_threshold_deg);
  return m;
}

TetMesh warp_to_ball(const TetMesh& cube, double crease_threshold_deg) {
  // smooth spherified-cube map; keeps element quality even across
  // refinement levels (a plain radial max-norm stretch does not)
  TetMesh m = cube;
  for (int v = 0; v < m.num_vertices(); v++) {
    Vec3 c = 2.0 * m.vertices.row(v).transpose() - Vec3::Ones();
    double x = c(0), y = c(1), z = c(2);
    Vec3 s;
    s << x * std::sqrt(1 - y * y / 2 - z * z / 2 + y * y * z * z / 3),
        y * std::sqrt(1 - z * z / 2 - x * x / 2 + z * z * x * x / 3),
        z * std::sqrt(1 - x * x / 2 - y * y / 2 + x * x * y * y / 3);
    m.vertices.row(v) = s.transpose();
  }
  finalize_mesh(m, crease_threshold_deg);
  return m;
}

TetMesh carve_box(const TetMesh& src, const Vec3& lo, const Vec3& hi,
                  double crease_threshold_deg) {
  std::vector<int> kept;
  for (int t = 0; t < src.num_tets(); t++) {
    Vec3 c = Vec3::Zero();
    for (int k = 0; k < 4; k++) c += src.vertices.row(src.tets(t, k)).transpose();
    c /= 4.0;
    bool inside = (c.array() > lo.array()).all() && (c.array() < hi.array()).all();
    if (!inside) kept.push_back(t);
  }
  if (kept.empty()) throw EmptyMesh("carve_box removed every tet");
  // drop unreferenced vertices
  std::vector<int> remap(src.num_vertices(), -1);
  int nv = 0;
  for (int t : kept)
    for (int k = 0; k < 4; k++) {
      int v = src.tets(t, k);
      if (remap[v] < 0) remap[v] = nv++;
    }
  TetMesh m;
  m.vertices.resize(nv, 3);
  for (int v = 0; v < src.num_vertices(); v++)
    if (remap[v] >= 0) m.vertices.row(remap[v]) = src.vertices.row(v);
  m.tets.resize((int)kept.size(), 4);
  for (int i = 0; i < (int)kept.size(); i++)
    for (int k = 0; k < 4; k++) m.tets(i, k) = remap[src.tets(kept[i], k)];
  finalize_mesh(m, crease_threshold_deg);
  return m;
}

TetMesh load_mesh(const std::string& path, Format format,
                  double crease_threshold_deg) {
  if (format == Format::Medit) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    TetMesh m;
    std::string tok;
    bool have_verts = false, have_tets = false;
    while (in >> tok) {
      if (tok == "Vertices") {
        int n;
        if (!(in >> n) || n < 0) throw ParseError(path, 0, "bad vertex count");
        m.vertices.resize(n, 3);
        for (int i = 0; i < n; i++) {
          double x, y, z, ref;
          if (!(in >> x >> y >> z >> ref))
            throw ParseError(path, i + 1, "bad vertex line");
          m.vertices.row(i) << x, y, z;
        }
        have_verts = true;
      } else if (tok == "Tetrahedra") {
        int n;
        if (!(in >> n) || n < 0) throw ParseError(path, 0, "bad tet count");
        m.tets.resize(n, 4);
        for (int i = 0; i < n; i++) {
          int a, b, c, d, ref;
          if (!(in >> a >> b >> c >> d >> ref))
            throw ParseError(path, i + 1, "bad tetrahedron line");
          m.tets.row(i) << a - 1, b - 1, c - 1, d - 1;  // 1-based on disk
        }
        have_tets = true;
      } else if (tok == "Triangles" || tok == "Edges") {
        int n;
        in >> n;
        int fields = tok == "Triangles" ? 4 : 3;
        for (int i = 0; i < n * fields; i++) next_token(in);
      } else if (tok == "End") {
        break;
      }
      // MeshVersionFormatted / Dimension values and unknown keywords skipped
    }
    if (!have_verts || !have_tets) throw EmptyMesh(path + ": no vertices or tets");
    finalize_mesh(m, crease_threshold_deg);
    return m;
  }

  // TetGen: path is the basename or the .node file; .ele alongside
  std::string base = path;
  if (base.size() > 5 && base.substr(base.size() - 5) == ".node")
    base = base.substr(0, base.size() - 5);
  std::ifstream node(base + ".node");
  if (!node) throw ParseError(base + ".node", 0, "cannot open file");
  int nv, dim, nattr, nbmark;
  if (!(node >> nv >> dim >> nattr >> nbmark) || dim != 3)
    throw ParseError(base + ".node", 1, "bad header");
  TetMesh m;
  m.vertices.resize(nv, 3);
  int first_index = 0;
  for (int i = 0; i < nv; i++) {
    int idx;
    double x, y, z;
    if (!(node >> idx >> x >> y >> z))
      throw ParseError(base + ".node", i + 2, "bad node line");
    for (int k = 0; k < nattr + nbmark; k++) next_token(node);
    if (i == 0) first_index = idx;
    m.vertices.row(idx - first_index) << x, y, z;
  }
  std::ifstream ele(base + ".ele");
  if (!ele) throw ParseError(base + ".ele", 0, "cannot open file");
  int nt, npt, nrattr;
  if (!(ele >> nt >> npt >> nrattr) || npt != 4)
    throw ParseError(base + ".ele", 1, "bad header (need 4-node tets)");
  m.tets.resize(nt, 4);
  for (int i = 0; i < nt; i++) {
    int idx, a, b, c, d;
    if (!(ele >> idx >> a >> b >> c >> d))
      throw ParseError(base + ".ele", i + 2, "bad element line");
    for (int k = 0; k < nrattr; k++) next_token(ele);
    m.tets.row(i) << a - first_index, b - first_index, c - first_index,
        d - first_index;
  }
  if (nv == 0 || nt == 0) throw EmptyMesh(path);
  finalize_mesh(m, crease_threshold_deg);
  return m;
}

void save_mesh_medit(const std::string& path, const TetMesh& m) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open file for writing");
  out << "MeshVersionFormatted 2\nDimension 3\n";
  out << "Vertices\n" << m.num_vertices() << "\n";
  out.precision(17);
  for (int v = 0; v < m.num_vertices(); v++)
    out << m.vertices(v, 0) << " " << m.vertices(v, 1) << " " << m.vertices(v, 2)
        << " 0\n";
  out << "Tetrahedra\n" << m.num_tets() << "\n";
  for (int t = 0; t < m.num_tets(); t++)
    out << m.tets(t, 0) + 1 << " " << m.tets(t, 1) + 1 << " " << m.tets(t, 2) + 1
        << " " << m.tets(t, 3) + 1 << " 0\n";
  out << "End\n";
}

FemOperators fem_operators(const TetMesh& m) {
  FemOperators ops;
  int n = m.num_vertices();
  ops.mass = VecX::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(m.num_tets() * 16);
  double bbox = (m.vertices.colwise().maxCoeff() - m.vertices.colwise().minCoeff())
                    .maxCoeff();
  for (int t = 0; t < m.num_tets(); t++) {
    double vol = tet_volume(m, t);
    if (vol < 1e-14 * bbox * bbox * bbox)
      throw DegenerateTet("tet " + std::to_string(t) + " is degenerate");
    // gradients of the linear shape functions: rows of [e1;e2;e3]^{-T}
    Vec3 p0 = m.vertices.row(m.tets(t, 0));
    Mat3 e;
    for (int k = 0; k < 3; k++)
      e.col(k) = m.vertices.row(m.tets(t, k + 1)).transpose() - p0;
    Mat3 einv = e.inverse();
    Eigen::Matrix<double, 3, 4> g;
    g.col(0) = -einv.transpose() * Vec3::Ones();
    for (int k = 0; k < 3; k++) g.col(k + 1) = einv.row(k).transpose();
    Eigen::Matrix4d local = vol * g.transpose() * g;
    for (int a = 0; a < 4; a++) {
      ops.mass(m.tets(t, a)) += vol / 4.0;
      for (int b = 0; b < 4; b++)
        trips.emplace_back(m.tets(t, a), m.tets(t, b), local(a, b));
    }
    ops.total_volume += vol;
  }
  ops.stiffness.resize(n, n);
  ops.stiffness.setFromTriplets(trips.begin(), trips.end());
  return ops;
}

EigenvalueResult smallest_nonzero_stiffness_eigenvalue(const FemOperators& ops,
                                                       double tol, int max_iter) {
  int n = (int)ops.mass.size();
  double mtot = ops.mass.sum();
  // shifted operator keeps the factorization SPD; the constant mode is
  // deflated in the M-inner product every iteration
  double shift = 1e-3 * ops.stiffness.coeffs().cwiseAbs().sum() /
                 std::max(1, (int)ops.stiffness.nonZeros());
  Eigen::SparseMatrix<double> k = ops.stiffness;
  for (int i = 0; i < n; i++) k.coeffRef(i, i) += shift * ops.mass(i);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(k);
  if (solver.info() != Eigen::Success)
    throw LinearSolveFailure("stiffness factorization failed");

  VecX x = VecX::LinSpaced(n, 0.0, 1.0);
  auto deflate = [&](VecX& v) {
    double c = ops.mass.dot(v) / mtot;
    v.array() -= c;
  };
  deflate(x);
  x /= std::sqrt(x.dot(ops.mass.asDiagonal() * x));
  double lambda = 0, prev = std::numeric_limits<double>::infinity();
  EigenvalueResult res;
  for (int it = 0; it < max_iter; it++) {
    VecX y = solver.solve(ops.mass.asDiagonal() * x);
    deflate(y);
    double ynorm = std::sqrt(y.dot(ops.mass.asDiagonal() * y));
    if (ynorm < 1e-300) throw NoConvergence("inverse iteration collapsed");
    x = y / ynorm;
    lambda = x.dot(ops.stiffness * x);  // Rayleigh quotient, x is M-normalized
    res.iterations = it + 1;
    if (std::abs(lambda - prev) <= tol * std::max(1.0, std::abs(lambda))) break;
    prev = lambda;
    if (it == max_iter - 1) throw NoConvergence("eigenvalue iteration");
  }
  res.value = lambda;
  double scale = ops.stiffness.coeffs().cwiseAbs().maxCoeff();
  res.second_zero_mode = lambda < 1e-10 * scale;
  return res;
}

std::uint64_t mesh_hash(const TetMesh& m) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, size_t len) {
    const unsigned char* p = (const unsigned char*)data;
    for (size_t i = 0; i < len; i++) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  std::int64_t nv = m.num_vertices(), nt = m.num_tets();
  mix(&nv, 8);
  mix(&nt, 8);
  for (int v = 0; v < m.num_vertices(); v++)
    for (int k = 0; k < 3; k++) {
      double x = m.vertices(v, k);
      mix(&x, 8);
    }
  for (int t = 0; t < m.num_tets(); t++)
    for (int k = 0; k < 4; k++) {
      std::int32_t idx = m.tets(t, k);
      mix(&idx, 4);
    }
  return h;
}

}  // namespace framefield::mesh
