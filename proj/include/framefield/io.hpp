#pragma once

// File formats: quadric data file (text, hexfloat, content-hashed), field
// checkpoints (binary coefficient dump), legacy-ASCII VTK export, trace CSV,
// and whitespace/CSV query tables.

#include <cstdint>
#include <string>
#include <vector>

#include "framefield/mesh.hpp"
#include "framefield/optim.hpp"
#include "framefield/types.hpp"
#include "framefield/varieties.hpp"

namespace framefield::io {

std::uint64_t quadric_content_hash(const varieties::QuadricSet& qs);

// Header: dimensions, count, SH convention tag, content hash. Matrices in
// hexfloat for bit-exact round trips.
void save_quadrics(const std::string& path, const varieties::QuadricSet& octa,
                   const varieties::QuadricSet& odeco);

struct QuadricFile {
  varieties::QuadricSet octa;
  varieties::QuadricSet odeco;
  std::uint64_t octa_hash = 0;
  std::uint64_t odeco_hash = 0;
};

QuadricFile load_quadrics(const std::string& path);

// Binary checkpoint: magic, rep, d, n, mesh hash, column-major coefficients.
void save_checkpoint(const std::string& path, const optim::FieldState& field,
                     std::uint64_t mesh_hash);
optim::FieldState load_checkpoint(const std::string& path,
                                  std::uint64_t* mesh_hash_out = nullptr);

// Legacy ASCII VTK unstructured grid with per-vertex coefficients and the
// three decomposed axis vectors scaled by their weights.
void export_vtk(const std::string& path, const mesh::TetMesh& m,
                const optim::FieldState& field);

void write_trace_csv(const std::string& path, const optim::FieldState& field,
                     const std::string& header_comment);

// One vector per line, whitespace or comma separated; '#' lines skipped.
std::vector<VecX> read_vector_table(const std::string& path);

}  // namespace framefield::io
