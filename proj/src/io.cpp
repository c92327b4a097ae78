#include "framefield/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "framefield/quartic.hpp"

namespace framefield::io {

namespace {

std::uint64_t fnv1a(const void* data, size_t len, std::uint64_t h) {
  const unsigned char* p = (const unsigned char*)data;
  for (size_t i = 0; i < len; i++) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::uint64_t quadric_content_hash(const varieties::QuadricSet& qs) {
  std::uint64_t h = 1469598103934665603ull;
  std::int64_t meta[3] = {qs.dim, (std::int64_t)qs.mats.size(), qs.homogeneous};
  h = fnv1a(meta, sizeof(meta), h);
  h = fnv1a(qs.convention_tag.data(), qs.convention_tag.size(), h);
  for (const MatX& m : qs.mats)
    for (int j = 0; j < m.cols(); j++)
      for (int i = 0; i < m.rows(); i++) {
        double v = m(i, j);
        h = fnv1a(&v, sizeof(v), h);
      }
  return h;
}

namespace {

void write_quadric_set(std::ofstream& out, const varieties::QuadricSet& qs) {
  out << "set dim=" << qs.dim << " count=" << qs.mats.size()
      << " homogeneous=" << (qs.homogeneous ? 1 : 0) << " convention="
      << qs.convention_tag << " hash=" << quadric_content_hash(qs) << "\n";
  char buf[64];
  for (const MatX& m : qs.mats) {
    int side = (int)m.rows();
    for (int i = 0; i < side; i++) {
      for (int j = 0; j < side; j++) {
        std::snprintf(buf, sizeof(buf), "%a", m(i, j));
        out << buf << (j + 1 == side ? "" : " ");
      }
      out << "\n";
    }
  }
}

varieties::QuadricSet read_quadric_set(std::ifstream& in, const std::string& path,
                                       std::uint64_t* hash_out) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 0, "missing set header");
  varieties::QuadricSet qs;
  int count = 0, homog = 0;
  unsigned long long hash = 0;
  char tag[128] = {0};
  if (std::sscanf(line.c_str(), "set dim=%d count=%d homogeneous=%d convention=%127s hash=%llu",
                  &qs.dim, &count, &homog, tag, &hash) != 5)
    throw ParseError(path, 0, "bad set header: " + line);
  // the tag capture grabs up to the following space; strip a trailing token
  std::string tagstr(tag);
  qs.convention_tag = tagstr;
  qs.homogeneous = homog != 0;
  int side = qs.homogeneous ? qs.dim : qs.dim + 1;
  for (int k = 0; k < count; k++) {
    MatX m(side, side);
    for (int i = 0; i < side; i++) {
      if (!std::getline(in, line)) throw ParseError(path, k, "truncated matrix");
      std::istringstream ls(line);
      std::string token;
      for (int j = 0; j < side; j++) {
        if (!(ls >> token)) throw ParseError(path, k, "short matrix row");
        m(i, j) = std::strtod(token.c_str(), nullptr);
      }
    }
    qs.mats.push_back(m);
  }
  if (quadric_content_hash(qs) != hash)
    throw ParseError(path, 0, "quadric content hash mismatch");
  if (hash_out) *hash_out = hash;
  return qs;
}

}  // namespace

void save_quadrics(const std::string& path, const varieties::QuadricSet& octa,
                   const varieties::QuadricSet& odeco) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out << "framefield-quadrics v1\n";
  write_quadric_set(out, octa);
  write_quadric_set(out, odeco);
}

QuadricFile load_quadrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open quadric file");
  std::string magic;
  std::getline(in, magic);
  if (magic != "framefield-quadrics v1")
    throw ParseError(path, 0, "not a quadric data file");
  QuadricFile f;
  f.octa = read_quadric_set(in, path, &f.octa_hash);
  f.odeco = read_quadric_set(in, path, &f.odeco_hash);
  if (f.octa.dim != 9 || f.odeco.dim != 15)
    throw ParseError(path, 0, "unexpected quadric dimensions");
  return f;
}

void save_checkpoint(const std::string& path, const optim::FieldState& field,
                     std::uint64_t mesh_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  const char magic[8] = {'F', 'F', 'L', 'D', '0', '0', '0', '1'};
  out.write(magic, 8);
  std::uint32_t rep = field.rep == optim::Rep::Octahedral ? 9 : 15;
  std::uint64_t n = (std::uint64_t)field.size();
  out.write((const char*)&rep, 4);
  out.write((const char*)&n, 8);
  out.write((const char*)&mesh_hash, 8);
  out.write((const char*)field.coeffs.data(),
            (std::streamsize)(sizeof(double) * field.coeffs.size()));
}

optim::FieldState load_checkpoint(const std::string& path,
                                  std::uint64_t* mesh_hash_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open checkpoint");
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "FFLD0001", 8) != 0)
    throw ParseError(path, 0, "bad checkpoint magic");
  std::uint32_t rep;
  std::uint64_t n, mh;
  in.read((char*)&rep, 4);
  in.read((char*)&n, 8);
  in.read((char*)&mh, 8);
  if (rep != 9 && rep != 15) throw ParseError(path, 0, "bad representation tag");
  optim::FieldState f;
  f.rep = rep == 9 ? optim::Rep::Octahedral : optim::Rep::Odeco;
  f.coeffs.resize(rep, (Eigen::Index)n);
  in.read((char*)f.coeffs.data(), (std::streamsize)(sizeof(double) * f.coeffs.size()));
  if (!in) throw ParseError(path, 0, "truncated checkpoint");
  if (mesh_hash_out) *mesh_hash_out = mh;
  return f;
}

void export_vtk(const std::string& path, const mesh::TetMesh& m,
                const optim::FieldState& field) {
  if (field.size() != m.num_vertices()) throw DimensionMismatch();
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out.precision(17);
  out << "# vtk DataFile Version 2.0\n";
  out << "frame field coefficients\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << m.num_vertices() << " double\n";
  for (int v = 0; v < m.num_vertices(); v++)
    out << m.vertices(v, 0) << " " << m.vertices(v, 1) << " " << m.vertices(v, 2)
        << "\n";
  out << "CELLS " << m.num_tets() << " " << 5 * m.num_tets() << "\n";
  for (int t = 0; t < m.num_tets(); t++)
    out << "4 " << m.tets(t, 0) << " " << m.tets(t, 1) << " " << m.tets(t, 2) << " "
        << m.tets(t, 3) << "\n";
  out << "CELL_TYPES " << m.num_tets() << "\n";
  for (int t = 0; t < m.num_tets(); t++) out << "10\n";

  const int d = field.dim();
  out << "POINT_DATA " << m.num_vertices() << "\n";
  out << "FIELD coefficients 1\n";
  out << "frame_coeffs " << d << " " << m.num_vertices() << " double\n";
  for (int v = 0; v < m.num_vertices(); v++) {
    for (int k = 0; k < d; k++) out << field.coeffs(k, v) << (k + 1 == d ? "" : " ");
    out << "\n";
  }
  // decomposed axes scaled by their weights
  std::vector<Mat3> axes(m.num_vertices());
  for (int v = 0; v < m.num_vertices(); v++) {
    Vec15 q;
    if (field.rep == optim::Rep::Octahedral) {
      q = Vec15::Zero();
      q(0) = quartic::octa_band0_constant();
      q.segment<9>(6) = field.coeffs.col(v);
    } else {
      q = field.coeffs.col(v);
    }
    Mat3 scaled = Mat3::Zero();
    try {
      auto dec = quartic::tensor_decompose(q, 400, 1e-4);
      for (int i = 0; i < 3; i++) scaled.col(i) = dec.lambdas(i) * dec.axes.col(i);
    } catch (const NumericalError&) {
      // leave zero axes for columns that fail to decompose
    }
    axes[v] = scaled;
  }
  for (int i = 0; i < 3; i++) {
    out << "VECTORS axis" << i << " double\n";
    for (int v = 0; v < m.num_vertices(); v++)
      out << axes[v](0, i) << " " << axes[v](1, i) << " " << axes[v](2, i) << "\n";
  }
}

void write_trace_csv(const std::string& path, const optim::FieldState& field,
                     const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  out.precision(17);
  out << "# " << header_comment << "\n";
  out << "iteration,energy,criterion,tau,wall_seconds\n";
  for (const auto& row : field.trace)
    out << row.iteration << "," << row.energy << "," << row.criterion << ","
        << row.tau << "," << row.wall_seconds << "\n";
}

std::vector<VecX> read_vector_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open input table");
  std::vector<VecX> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (vals.empty()) continue;
    VecX row((int)vals.size());
    for (int i = 0; i < (int)vals.size(); i++) row(i) = vals[i];
    rows.push_back(row);
  }
  if (rows.empty()) throw ParseError(path, lineno, "no vectors in table");
  return rows;
}

}  // namespace framefield::io
