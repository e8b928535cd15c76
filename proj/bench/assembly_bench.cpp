// Assembly benchmark: serial reference (threads=1) vs OpenMP-parallel element
// integration on an MMS block, plus a CSR mat-vec timing. Also verifies that
// the parallel result is bitwise identical to the serial one (batched
// integration with in-order scatter).
#include <chrono>
#include <cstring>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stvms/assembly.hpp"
#include "stvms/driver.hpp"

using namespace stvms;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  const int n = (argc > 1) ? std::atoi(argv[1]) : 16;
  int max_threads = 1;
#ifdef _OPENMP
  max_threads = omp_get_max_threads();
#endif
  std::cout << "mesh " << n << "^3, hardware threads: " << max_threads << "\n";

  ProblemDefinition problem = mms_problem(2, 0.01, n, 1);
  SpatialMesh spatial = build_spatial_mesh(problem);
  SpaceTimeMesh mesh = extrude_in_time(spatial, 1.0, n, 1);
  const int nf = 3;
  DofMap dofs(mesh.n_nodes(), nf);
  apply_boundary_conditions(problem, mesh, dofs);

  FieldVector x(static_cast<std::size_t>(mesh.n_nodes()) * nf, 0.0);
  dofs.apply_values(x);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] += 1e-3 * std::sin(0.1 * static_cast<double>(i));

  std::vector<double> r_serial, r_parallel;
  std::vector<double> val_serial;

  for (int threads : {1, max_threads}) {
    problem.threads = threads;
    SystemAssembler assembler(mesh, problem, dofs);
    CsrMatrix J = assembler.allocate_jacobian();
    std::vector<double> r(assembler.n_dofs());

    assembler.assemble(x, r, &J);  // warm-up
    const int reps = 3;
    const double t0 = now_s();
    for (int rep = 0; rep < reps; ++rep) assembler.assemble(x, r, &J);
    const double dt = (now_s() - t0) / reps;
    std::cout << "threads=" << threads << "  assemble: " << dt << " s/pass ("
              << mesh.n_elems() / dt << " elems/s)\n";

    if (threads == 1) {
      r_serial = r;
      val_serial = J.val;
    } else {
      r_parallel = r;
      const bool same_r = std::memcmp(r_serial.data(), r_parallel.data(),
                                      r_serial.size() * sizeof(double)) == 0;
      const bool same_J = std::memcmp(val_serial.data(), J.val.data(),
                                      val_serial.size() * sizeof(double)) == 0;
      std::cout << "parallel == serial: residual " << (same_r ? "yes" : "NO")
                << ", jacobian " << (same_J ? "yes" : "NO") << "\n";
    }

    const double tm0 = now_s();
    std::vector<double> y(r.size());
    const int mv_reps = 50;
    for (int rep = 0; rep < mv_reps; ++rep) J.multiply(r, y);
    std::cout << "threads=" << threads
              << "  matvec: " << (now_s() - tm0) / mv_reps << " s ("
              << J.nnz() << " nnz)\n";
  }
  return 0;
}
