/// CSR assembly against a dense oracle, Krylov solvers, preconditioners and
/// the Newton/PTC iteration on small systems.
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "stvms/assembly.hpp"
#include "stvms/krylov.hpp"
#include "stvms/mesh.hpp"
#include "stvms/newton.hpp"
#include "stvms/sparse.hpp"

using namespace stvms;

namespace {

CsrMatrix csr_from_dense(const std::vector<double>& dense, int n) {
  CsrMatrix A;
  A.n = n;
  A.row_ptr.push_back(0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (dense[r * n + c] != 0.0 || r == c) {
        A.col.push_back(c);
        A.val.push_back(dense[r * n + c]);
      }
    }
    A.row_ptr.push_back(static_cast<int>(A.col.size()));
  }
  return A;
}

// 1D Poisson (SPD tridiagonal)
CsrMatrix poisson_1d(int n) {
  std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    dense[i * n + i] = 2.0;
    if (i > 0) dense[i * n + i - 1] = -1.0;
    if (i + 1 < n) dense[i * n + i + 1] = -1.0;
  }
  return csr_from_dense(dense, n);
}

}  // namespace

TEST_CASE("CSR assembly matches a dense oracle on a 2-element mesh") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {2, 1, 1};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  const int nf = 3;
  Sparsity sp = build_sparsity(mesh, nf);
  CsrMatrix A = allocate_matrix(sp);
  const int n = A.n;

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> res_dense(n, 0.0), res(n, 0.0);

  for (int e = 0; e < mesh.n_elems(); ++e) {
    std::span<const int> nodes = mesh.elem_nodes(e);
    const int nloc = static_cast<int>(nodes.size()) * nf;
    std::vector<double> elem_jac(static_cast<std::size_t>(nloc) * nloc);
    std::vector<double> elem_res(nloc);
    for (double& v : elem_jac) v = dist(rng);
    for (double& v : elem_res) v = dist(rng);

    scatter_element(sp, nodes, elem_res, elem_jac, &A, res);
    for (int i = 0; i < nloc; ++i) {
      const int gi = nodes[i / nf] * nf + i % nf;
      res_dense[gi] += elem_res[i];
      for (int j = 0; j < nloc; ++j) {
        const int gj = nodes[j / nf] * nf + j % nf;
        dense[static_cast<std::size_t>(gi) * n + gj] +=
            elem_jac[static_cast<std::size_t>(i) * nloc + j];
      }
    }
  }
  for (int r = 0; r < n; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      CHECK(A.val[k] ==
            doctest::Approx(dense[static_cast<std::size_t>(r) * n + A.col[k]])
                .epsilon(1e-14));
  for (int i = 0; i < n; ++i)
    CHECK(res[i] == doctest::Approx(res_dense[i]).epsilon(1e-14));

  // shared diagonal entries are sums of both local diagonals: verified by the
  // dense comparison above; also check mat-vec against the dense product
  std::vector<double> x(n), y(n), y_dense(n, 0.0);
  for (double& v : x) v = dist(rng);
  A.multiply(x, y);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      y_dense[r] += dense[static_cast<std::size_t>(r) * n + c] * x[c];
  for (int i = 0; i < n; ++i)
    CHECK(y[i] == doctest::Approx(y_dense[i]).epsilon(1e-13));
}

TEST_CASE("all-Dirichlet system becomes the identity") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {1, 1, 1};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  const int nf = 3;
  Sparsity sp = build_sparsity(mesh, nf);
  CsrMatrix A = allocate_matrix(sp);
  for (double& v : A.val) v = 7.0;

  DofMap dofs(mesh.n_nodes(), nf);
  for (int n = 0; n < mesh.n_nodes(); ++n)
    for (int f = 0; f < nf; ++f) dofs.set_dirichlet(n, f, 0.5);
  std::vector<double> x(A.n, 2.0), r(A.n, 99.0);
  apply_dirichlet_rows(dofs, x, &A, r);
  for (int row = 0; row < A.n; ++row) {
    for (int k = A.row_ptr[row]; k < A.row_ptr[row + 1]; ++k)
      CHECK(A.val[k] == (A.col[k] == row ? 1.0 : 0.0));
    CHECK(r[row] == doctest::Approx(1.5));
  }
}

TEST_CASE("solve: identity matrix returns b in at most one iteration") {
  std::vector<double> dense = {1, 0, 0, 1};
  CsrMatrix A = csr_from_dense(dense, 2);
  std::vector<double> b = {3.0, -4.0}, x = {0.0, 0.0};
  KrylovConfig cfg;
  cfg.precon = PreconType::None;
  SolveStats stats = solve(A, b, x, cfg);
  CHECK(stats.converged);
  CHECK(stats.iterations <= 1);
  CHECK(x[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(-4.0).epsilon(1e-12));
}

TEST_CASE("solve: 2x2 system against the hand solution") {
  std::vector<double> dense = {4, 1, 1, 3};
  CsrMatrix A = csr_from_dense(dense, 2);
  std::vector<double> b = {1.0, 2.0};
  for (KrylovMethod method : {KrylovMethod::BiCGStab, KrylovMethod::Gmres}) {
    std::vector<double> x = {0.0, 0.0};
    KrylovConfig cfg;
    cfg.method = method;
    cfg.rtol = 1e-14;
    cfg.precon = PreconType::None;
    SolveStats stats = solve(A, b, x, cfg);
    CHECK(stats.converged);
    CHECK(x[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-10));
    CHECK(x[1] == doctest::Approx(7.0 / 11.0).epsilon(1e-10));
  }
}

TEST_CASE("GMRES and BiCGStab agree on a 100x100 Poisson system") {
  CsrMatrix A = poisson_1d(100);
  std::vector<double> b(100);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : b) v = dist(rng);

  std::vector<double> x_bicg(100, 0.0), x_gmres(100, 0.0);
  KrylovConfig cfg;
  cfg.rtol = 1e-12;
  cfg.max_iters = 2000;
  cfg.gmres_restart = 100;
  cfg.precon = PreconType::Jacobi;
  cfg.method = KrylovMethod::BiCGStab;
  CHECK(solve(A, b, x_bicg, cfg).converged);
  cfg.method = KrylovMethod::Gmres;
  CHECK(solve(A, b, x_gmres, cfg).converged);
  for (int i = 0; i < 100; ++i)
    CHECK(std::abs(x_bicg[i] - x_gmres[i]) < 1e-8);
}

TEST_CASE("GMRES residual history is non-increasing with restart >= n") {
  CsrMatrix A = poisson_1d(60);
  std::vector<double> b(60, 1.0), x(60, 0.0);
  KrylovConfig cfg;
  cfg.method = KrylovMethod::Gmres;
  cfg.gmres_restart = 64;
  cfg.rtol = 1e-12;
  cfg.precon = PreconType::None;
  SolveStats stats = solve(A, b, x, cfg);
  CHECK(stats.converged);
  for (std::size_t i = 1; i < stats.residual_history.size(); ++i)
    CHECK(stats.residual_history[i] <=
          stats.residual_history[i - 1] * (1.0 + 1e-12));
}

TEST_CASE("preconditioned solves agree with the unpreconditioned one") {
  CsrMatrix A = poisson_1d(80);
  // mildly nonsymmetric perturbation
  for (int r = 0; r < A.n; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      if (A.col[k] == r + 1) A.val[k] += 0.1;
  std::vector<double> b(80);
  for (int i = 0; i < 80; ++i) b[i] = std::sin(0.3 * i);

  KrylovConfig cfg;
  cfg.rtol = 1e-10;
  cfg.max_iters = 4000;
  std::vector<double> reference(80, 0.0);
  cfg.precon = PreconType::None;
  REQUIRE(solve(A, b, reference, cfg).converged);

  for (PreconType precon : {PreconType::Jacobi, PreconType::BlockJacobi,
                            PreconType::Ilu0}) {
    std::vector<double> x(80, 0.0);
    KrylovConfig c = cfg;
    c.precon = precon;
    c.block_size = 4;
    SolveStats stats = solve(A, b, x, c);
    CHECK(stats.converged);
    double diff = 0.0, scale = 0.0;
    for (int i = 0; i < 80; ++i) {
      diff += (x[i] - reference[i]) * (x[i] - reference[i]);
      scale += reference[i] * reference[i];
    }
    CHECK(std::sqrt(diff) <= 10.0 * cfg.rtol * std::sqrt(scale) + 1e-9);
  }
}

TEST_CASE("BiCGStab reports breakdown instead of crashing") {
  // after the first exact solve step, rho becomes 0 for this contrived system
  std::vector<double> dense = {0, 1, 1, 0};
  CsrMatrix A = csr_from_dense(dense, 2);
  std::vector<double> b = {1.0, 1.0}, x = {0.0, 0.0};
  KrylovConfig cfg;
  cfg.method = KrylovMethod::BiCGStab;
  cfg.precon = PreconType::None;
  cfg.max_iters = 10;
  SolveStats stats = solve(A, b, x, cfg);  // must not throw
  CHECK((stats.converged || !stats.reason.empty()));
}

TEST_CASE("MatrixMarket dump round readable") {
  CsrMatrix A = poisson_1d(3);
  std::ostringstream os;
  write_matrix_market(os, A);
  CHECK(os.str().rfind("%%MatrixMarket", 0) == 0);
  CHECK(os.str().find("3 3 7") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Newton and PTC on small systems
// ---------------------------------------------------------------------------

namespace {

// r(x) = x^2 - 2 embedded as a 1-dof provider
class ScalarSquare : public NonlinearSystem {
 public:
  int n_dofs() const override { return 1; }
  CsrMatrix allocate_jacobian() const override {
    CsrMatrix J;
    J.n = 1;
    J.row_ptr = {0, 1};
    J.col = {0};
    J.val = {0.0};
    return J;
  }
  void assemble(std::span<const double> x, std::span<double> r,
                CsrMatrix* J) override {
    r[0] = x[0] * x[0] - 2.0;
    if (J) J->val[0] = 2.0 * x[0];
  }
};

// linear system A x = b as a provider (Stokes-like limit)
class LinearSystemProvider : public NonlinearSystem {
 public:
  LinearSystemProvider() : A_(poisson_1d(20)), b_(20, 1.0) {}
  int n_dofs() const override { return 20; }
  CsrMatrix allocate_jacobian() const override { return A_; }
  void assemble(std::span<const double> x, std::span<double> r,
                CsrMatrix* J) override {
    std::vector<double> Ax(20);
    A_.multiply(x, Ax);
    for (int i = 0; i < 20; ++i) r[i] = Ax[i] - b_[i];
    if (J) J->val = A_.val;
  }

 private:
  CsrMatrix A_;
  std::vector<double> b_;
};

}  // namespace

TEST_CASE("Newton on x^2 - 2: quadratic convergence to sqrt(2)") {
  ScalarSquare system;
  std::vector<double> x = {1.0};
  NewtonConfig cfg;
  cfg.gamma1 = 1e-14;
  cfg.snes_rtol = 1e-14;
  cfg.snes_atol = 1e-15;
  cfg.krylov.precon = PreconType::None;
  NewtonResult result = newton_solve(system, x, cfg);
  CHECK(result.converged);
  CHECK(x[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // classic Newton table from x0 = 1: 1.5, 1.41667, 1.4142157...
  REQUIRE(result.iterations() >= 3);
  // quadratic error sequence: e_{k+1} ~ e_k^2 / (2 sqrt 2)
  const double root = std::sqrt(2.0);
  std::vector<double> iterates = {1.0};
  double xx = 1.0;
  for (const NewtonIter& it : result.history) {
    (void)it;
    xx = xx - (xx * xx - 2.0) / (2.0 * xx);
    iterates.push_back(xx);
  }
  CHECK(iterates[1] == doctest::Approx(1.5).epsilon(1e-14));
  for (std::size_t k = 1; k + 1 < iterates.size(); ++k) {
    const double e0 = std::abs(iterates[k] - root);
    const double e1 = std::abs(iterates[k + 1] - root);
    if (e0 > 1e-7)
      CHECK(e1 <= e0 * e0);  // |e1| = e0^2/(2x_k) <= e0^2
  }
}

TEST_CASE("Newton solves a linear problem in exactly one step") {
  LinearSystemProvider system;
  std::vector<double> x(20, 0.0);
  NewtonConfig cfg;
  cfg.krylov.rtol = 1e-13;
  cfg.krylov.precon = PreconType::Jacobi;
  NewtonResult result = newton_solve(system, x, cfg);
  CHECK(result.converged);
  CHECK(result.iterations() == 1);
}

TEST_CASE("Newton from the exact solution needs zero iterations") {
  ScalarSquare system;
  std::vector<double> x = {std::sqrt(2.0)};
  NewtonConfig cfg;
  cfg.snes_atol = 1e-12;
  NewtonResult result = newton_solve(system, x, cfg);
  CHECK(result.converged);
  CHECK(result.iterations() == 0);
}

TEST_CASE("PTC with dtau = 1e30 reproduces the Newton trajectory") {
  ScalarSquare a, b;
  std::vector<double> x_newton = {3.0}, x_ptc = {3.0};
  NewtonConfig ncfg;
  ncfg.gamma1 = 1e-13;
  ncfg.snes_rtol = 1e-13;
  ncfg.snes_atol = 1e-14;
  ncfg.krylov.precon = PreconType::None;
  NewtonResult nres = newton_solve(a, x_newton, ncfg);

  PtcConfig pcfg;
  pcfg.dtau0 = 1e30;
  pcfg.dtau_max = 1e30;
  pcfg.gamma2 = 1e-13;
  pcfg.newton = ncfg;
  PtcResult pres = ptc_solve(b, x_ptc, pcfg);

  CHECK(nres.converged);
  CHECK(pres.converged);
  CHECK(std::abs(x_newton[0] - x_ptc[0]) < 1e-12);
}

TEST_CASE("SER growth increases dtau when residuals decrease") {
  ScalarSquare system;
  std::vector<double> x = {4.0};
  PtcConfig cfg;
  cfg.dtau0 = 0.05;
  cfg.dtau_max = 1e8;
  cfg.gamma2 = 1e-12;
  cfg.newton.gamma1 = 1e-13;
  cfg.newton.snes_atol = 1e-14;
  cfg.newton.krylov.precon = PreconType::None;
  PtcResult result = ptc_solve(system, x, cfg);
  CHECK(result.converged);
  CHECK(x[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  REQUIRE(result.outer_history.size() >= 3);
  for (std::size_t k = 1; k < result.outer_history.size(); ++k) {
    // residuals decrease monotonically here, so dtau must grow
    CHECK(result.outer_history[k].dtau >=
          result.outer_history[k - 1].dtau * (1.0 - 1e-12));
  }
}
