// Benchmark: OpenMP projection sweep against the serial reference, plus FEM
// assembly timing. Run with no arguments for the default problem sizes.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "framefield/mesh.hpp"
#include "framefield/optim.hpp"
#include "framefield/varieties.hpp"

using namespace framefield;
using Clock = std::chrono::steady_clock;

static double seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 4;
  auto octa = varieties::derive_octa_quadrics(2000, 1);
  auto odeco = varieties::derive_odeco_quadrics(5000, 1);
  auto m = mesh::generate_cube_mesh(n);
  std::printf("cube n=%d: %d vertices\n", n, m.num_vertices());

  {
    auto t0 = Clock::now();
    auto ops = mesh::fem_operators(m);
    std::printf("fem assembly: %.3f ms (nnz %d)\n", 1000 * seconds(t0),
                (int)ops.stiffness.nonZeros());
  }

  auto base = optim::random_octa_field(m, 7);
  for (int v = 0; v < m.num_vertices(); v++) base.coeffs.col(v) *= 1.1;

  auto serial = base;
  auto t0 = Clock::now();
  optim::project_field_columns_serial(serial, octa, odeco);
  double ts = seconds(t0);
  std::printf("projection sweep serial        : %.3f s (%.2f ms/column)\n", ts,
              1000 * ts / m.num_vertices());

  for (int workers : {2, 4, 8}) {
    auto par = base;
    t0 = Clock::now();
    optim::project_field_columns(par, octa, odeco, workers);
    double tp = seconds(t0);
    bool same = par.coeffs == serial.coeffs;
    std::printf("projection sweep %d workers    : %.3f s (speedup %.2fx)%s\n", workers,
                tp, ts / tp, same ? "" : "  MISMATCH");
    if (!same) return 1;
  }
  return 0;
}
