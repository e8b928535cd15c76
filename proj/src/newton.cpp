#include "stvms/newton.hpp"

#include <cmath>
#include <ostream>

namespace stvms {

NewtonResult newton_solve(NonlinearSystem& system, std::span<double> x,
                          const NewtonConfig& cfg) {
  NewtonResult result;
  const int n = system.n_dofs();
  CsrMatrix J = system.allocate_jacobian();
  std::vector<double> r(n), dx(n), rhs(n);

  double r0 = 0.0;
  double prev_rnorm = 0.0;
  double eta = cfg.eisenstat_walker ? 0.3 : cfg.krylov.rtol;

  for (int it = 0; it <= cfg.max_newton; ++it) {
    J.zero();
    system.assemble(x, r, &J);
    const double rnorm = norm2(r);

    if (it == 0) {
      r0 = rnorm;
      if (rnorm <= cfg.snes_atol) {
        result.converged = true;
        return result;
      }
    } else {
      if (rnorm <= std::max(cfg.snes_rtol * r0, cfg.snes_atol)) {
        result.converged = true;
        return result;
      }
      if (rnorm > cfg.divergence_factor * std::max(r0, 1e-300)) {
        result.failure = "residual diverged (" + std::to_string(rnorm) + " vs " +
                         std::to_string(r0) + " initial)";
        return result;
      }
      if (cfg.eisenstat_walker) {
        double e = 0.9 * (rnorm / prev_rnorm) * (rnorm / prev_rnorm);
        const double safeguard = 0.9 * eta * eta;
        if (safeguard > 0.1) e = std::max(e, safeguard);
        eta = std::min(std::max(e, 1e-9), 0.9);
      }
    }
    if (it == cfg.max_newton) {
      result.failure = "max Newton iterations reached";
      return result;
    }
    prev_rnorm = rnorm;

    KrylovConfig lin = cfg.krylov;
    lin.rtol = eta;
    for (int i = 0; i < n; ++i) rhs[i] = -r[i];
    std::fill(dx.begin(), dx.end(), 0.0);
    SolveStats stats = solve(J, rhs, dx, lin);
    if (!stats.converged && stats.final_relative_residual > 0.1) {
      result.failure = "linear solve failed (" + stats.reason + ", rel res " +
                       std::to_string(stats.final_relative_residual) + ")";
      return result;
    }

    for (int i = 0; i < n; ++i) x[i] += dx[i];
    const double dxnorm = norm2(dx);
    result.history.push_back({rnorm, dxnorm, stats.iterations, eta});

    if (dxnorm < cfg.gamma1) {
      result.converged = true;
      return result;
    }
  }
  result.failure = "max Newton iterations reached";
  return result;
}

namespace {

// Backward-Euler pseudo-time shift: r += M (y - x^k)/dtau on free rows,
// J += diag(M/dtau) on free rows.
class PtcShiftedSystem : public NonlinearSystem {
 public:
  PtcShiftedSystem(NonlinearSystem& base, std::span<const double> mass,
                   std::span<const double> x_prev, double dtau)
      : base_(base), mass_(mass), x_prev_(x_prev), dtau_(dtau) {}

  int n_dofs() const override { return base_.n_dofs(); }
  CsrMatrix allocate_jacobian() const override {
    return base_.allocate_jacobian();
  }
  void assemble(std::span<const double> x, std::span<double> residual,
                CsrMatrix* jacobian) override {
    base_.assemble(x, residual, jacobian);
    const uint8_t* mask = base_.dirichlet_mask();
    for (int i = 0; i < n_dofs(); ++i) {
      if (mask != nullptr && mask[i]) continue;
      const double shift = mass_[i] / dtau_;
      residual[i] += shift * (x[i] - x_prev_[i]);
      if (jacobian != nullptr) jacobian->at(i, i) += shift;
    }
  }
  std::vector<double> lumped_mass() const override {
    return base_.lumped_mass();
  }
  const uint8_t* dirichlet_mask() const override {
    return base_.dirichlet_mask();
  }

 private:
  NonlinearSystem& base_;
  std::span<const double> mass_;
  std::span<const double> x_prev_;
  double dtau_;
};

}  // namespace

PtcResult ptc_solve(NonlinearSystem& system, std::span<double> x,
                    const PtcConfig& cfg) {
  PtcResult result;
  const int n = system.n_dofs();
  const std::vector<double> mass = system.lumped_mass();
  std::vector<double> x_prev(x.begin(), x.end());
  std::vector<double> r(n);

  system.assemble(x, r, nullptr);
  double rnorm_prev = norm2(r);
  const double r0 = rnorm_prev;
  double dtau = cfg.dtau0;
  int stagnant = 0;
  double prev_dx = std::numeric_limits<double>::max();

  if (r0 <= cfg.newton.snes_atol) {
    result.converged = true;
    return result;
  }

  for (int k = 0; k < cfg.max_ptc; ++k) {
    PtcShiftedSystem shifted(system, mass, x_prev, dtau);
    NewtonResult inner = newton_solve(shifted, x, cfg.newton);
    if (!inner.converged) {
      // retreat: restore the outer iterate and retry with a smaller step
      std::copy(x_prev.begin(), x_prev.end(), x.begin());
      dtau *= 0.25;
      if (dtau < 1e-12 * cfg.dtau0) {
        result.failure = "pseudo-time step collapsed (inner Newton kept failing: " +
                         inner.failure + ")";
        return result;
      }
      continue;
    }

    double dxnorm = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = x[i] - x_prev[i];
      dxnorm += d * d;
    }
    dxnorm = std::sqrt(dxnorm);

    system.assemble(x, r, nullptr);
    const double rnorm = norm2(r);
    result.outer_history.push_back({dtau, rnorm, dxnorm, inner.iterations()});

    if (dxnorm < cfg.gamma2 ||
        rnorm <= std::max(cfg.newton.snes_rtol * r0, cfg.newton.snes_atol)) {
      result.converged = true;
      return result;
    }

    if (dxnorm >= prev_dx && dtau >= cfg.dtau_max) {
      if (++stagnant >= 5) {
        result.failure = "stagnation: ||x^{k+1} - x^k|| non-decreasing for 5 steps at dtau_max";
        return result;
      }
    } else {
      stagnant = 0;
    }
    prev_dx = dxnorm;

    if (cfg.growth == PtcConfig::Growth::SER && rnorm > 0.0)
      dtau = std::min(dtau * (rnorm_prev / rnorm), cfg.dtau_max);
    rnorm_prev = rnorm;
    std::copy(x.begin(), x.end(), x_prev.begin());
  }
  result.failure = "max PTC iterations reached";
  return result;
}

void write_history_csv(std::ostream& os, const PtcResult& result) {
  os << "iteration,rnorm,dxnorm,dtau\n";
  int k = 0;
  for (const PtcIter& it : result.outer_history)
    os << k++ << "," << it.rnorm << "," << it.dxnorm << "," << it.dtau << "\n";
}

void write_history_csv(std::ostream& os, const NewtonResult& result) {
  os << "iteration,rnorm,dxnorm,dtau\n";
  int k = 0;
  for (const NewtonIter& it : result.history)
    os << k++ << "," << it.rnorm << "," << it.dxnorm << ",inf\n";
}

}  // namespace stvms
