#pragma once

#include "stvms/core.hpp"
#include "stvms/mesh.hpp"

namespace stvms {

// Element-wise stabilization constants. The defaults satisfy c1 > 2.
struct StabilizationParams {
  double c1 = 4.0;
  double c2 = 2.0;
  double c3 = 1.0;
  double c4 = 1.0;
  double C_I = 1.0;
  double nu = 1.0;

  void validate() const {
    require(c1 > 2.0, "stabilization: c1 must be > 2");
    require(c2 > 0 && c3 > 0 && c4 > 0 && C_I > 0,
            "stabilization: constants must be positive");
    require(nu > 0, "stabilization: nu must be positive");
  }
};

// tau_m = [c1 C_I^2 nu / h^2 + c2 |a~|_inf / h]^-1
inline double tau_m(const StabilizationParams& p, double h_e, double a_inf) {
  require(h_e > 0, "tau_m: element size must be positive");
  return 1.0 / (p.c1 * p.C_I * p.C_I * p.nu / (h_e * h_e) + p.c2 * a_inf / h_e);
}

// tau_c = c3 C_I^2 nu + c4 |a~|_inf h
inline double tau_c(const StabilizationParams& p, double h_e, double a_inf) {
  require(h_e > 0, "tau_c: element size must be positive");
  return p.c3 * p.C_I * p.C_I * p.nu + p.c4 * a_inf * h_e;
}

// Element size: minimum corner-edge length of the space-time element, so both
// spatial and temporal resolution enter tau.
double element_size(const SpaceTimeMesh& mesh, int elem);

// Frozen per-element stabilization values for one residual/Jacobian pass.
struct ElementStab {
  double tau_m = 0.0;
  double tau_c = 0.0;
};

}  // namespace stvms
