#pragma once

#include <functional>
#include <optional>
#include <string>

#include "stvms/krylov.hpp"
#include "stvms/sparse.hpp"

namespace stvms {

// Residual/Jacobian provider for the nonlinear solvers. The residual
// convention is r(x) = b(x) - l with Dirichlet rows replaced by x - g; the
// Jacobian is the frozen-tau exact derivative with identity Dirichlet rows.
class NonlinearSystem {
 public:
  virtual ~NonlinearSystem() = default;
  virtual int n_dofs() const = 0;
  virtual CsrMatrix allocate_jacobian() const = 0;
  virtual void assemble(std::span<const double> x, std::span<double> residual,
                        CsrMatrix* jacobian) = 0;
  // Lumped space-time L2 mass per dof (all fields); PTC shift. Defaults to 1.
  virtual std::vector<double> lumped_mass() const {
    return std::vector<double>(n_dofs(), 1.0);
  }
  // Dirichlet mask; PTC skips the mass shift on constrained rows.
  virtual const uint8_t* dirichlet_mask() const { return nullptr; }
};

struct NewtonConfig {
  double gamma1 = 1e-8;     // increment tolerance ||dx|| < gamma1
  double snes_rtol = 1e-8;  // residual relative tolerance
  double snes_atol = 1e-8;
  int max_newton = 50;
  double divergence_factor = 1e4;
  bool eisenstat_walker = false;
  KrylovConfig krylov;
};

struct NewtonIter {
  double rnorm = 0.0;
  double dxnorm = 0.0;
  int linear_iters = 0;
  double linear_rtol = 0.0;
};

struct NewtonResult {
  bool converged = false;
  std::string failure;
  std::vector<NewtonIter> history;
  int iterations() const { return static_cast<int>(history.size()); }
};

NewtonResult newton_solve(NonlinearSystem& system, std::span<double> x,
                          const NewtonConfig& config);

struct PtcConfig {
  double dtau0 = 1.0;
  enum class Growth { SER, Fixed } growth = Growth::SER;
  double dtau_max = 1e12;
  double gamma2 = 1e-8;  // outer tolerance ||x^{k+1} - x^k|| < gamma2
  int max_ptc = 200;
  NewtonConfig newton;  // inner iteration settings (gamma1, snes_*, krylov)
};

struct PtcIter {
  double dtau = 0.0;
  double rnorm = 0.0;    // unshifted residual at the new iterate
  double dxnorm = 0.0;   // ||x^{k+1} - x^k||
  int newton_iters = 0;
};

struct PtcResult {
  bool converged = false;
  std::string failure;
  std::vector<PtcIter> outer_history;
};

PtcResult ptc_solve(NonlinearSystem& system, std::span<double> x,
                    const PtcConfig& config);

// Convergence history CSV: iteration, ||r||, ||dx||, dtau.
void write_history_csv(std::ostream& os, const PtcResult& result);
void write_history_csv(std::ostream& os, const NewtonResult& result);

}  // namespace stvms
