#pragma once

#include <functional>

#include "stvms/mapping.hpp"
#include "stvms/mesh.hpp"
#include "stvms/stabilization.hpp"

namespace stvms {

// Momentum forcing f(x_hat) -> d components.
using Forcing =
    std::function<void(std::span<const double> xhat, std::span<double> f)>;

// Prescribed advection field a(x_hat) -> (a, div a). When supplied, the forms
// are linear in the state (the frozen-advection B_h of the analysis); when
// absent, a is the velocity part of the state and is differentiated in the
// Jacobian.
using AdvectionField = std::function<void(std::span<const double> xhat,
                                          std::span<double> a, double& div_a)>;

// Independent switches for the form's term groups. `paper_literal_signs`
// selects +nu*lap(v) on the test side of the volume stabilization inside B_h;
// the default uses the adjoint-consistent -nu*lap(v) in both B_h and L_h.
struct TermFlags {
  bool galerkin = true;
  bool supg = true;
  bool graddiv = true;
  bool gammaT = true;
  bool paper_literal_signs = false;
};

struct ElementSystem {
  int elem = -1;
  std::vector<double> residual;  // nb*nf, local dof = basis*nf + field
  std::vector<double> jacobian;  // (nb*nf)^2 row-major; empty if not requested

  void reset(int element, int n_local, bool want_jacobian) {
    elem = element;
    residual.assign(n_local, 0.0);
    if (want_jacobian)
      jacobian.assign(static_cast<std::size_t>(n_local) * n_local, 0.0);
    else
      jacobian.clear();
  }
};

// L~_a u = du/dt + (a.grad)u + 1/2 (div a) u, applied componentwise.
// u_grad is the d x d spatial gradient (row = component), u_dt the time
// derivative of each component.
void apply_Ltilde(std::span<const double> a, double div_a,
                  std::span<const double> u_value, std::span<const double> u_grad,
                  std::span<const double> u_dt, std::span<double> out);

// |a~|_inf of an element: max over quadrature points of sqrt(1 + |a|^2).
double element_advection_norm(const SpaceTimeMesh& mesh, int elem,
                              const ReferenceElement& ref,
                              std::span<const double> state,
                              const AdvectionField* advection);

// Frozen tau_m/tau_c for every element, from the advection of `state` (or the
// override). One record per element, reused for residual and Jacobian.
std::vector<ElementStab> compute_element_stabs(
    const SpaceTimeMesh& mesh, const ReferenceElement& ref,
    std::span<const double> state, const StabilizationParams& params,
    const AdvectionField* advection = nullptr);

// Interior residual and (optionally) Jacobian of the stabilized space-time
// form on one element: Galerkin terms of B_h - L_h, the tau_m residual
// stabilization and the tau_c grad-div term. Final-time facet terms are
// assembled separately by gammaT_facet_system.
void element_system(const SpaceTimeMesh& mesh, int elem,
                    const ReferenceElement& ref, std::span<const double> state,
                    const StabilizationParams& params, const ElementStab& stab,
                    const Forcing* forcing, const AdvectionField* advection,
                    const TermFlags& flags, bool want_jacobian,
                    ElementWorkspace& ws, ElementSystem& out);

// Final-time boundary terms: (u_h, v_h)_GammaT and the tau_m facet
// stabilization, accumulated into `out` (which must already be sized for the
// owning element). Throws if the facet is not tagged GammaT.
void gammaT_facet_system(const SpaceTimeMesh& mesh, const BoundaryFacet& facet,
                         const ReferenceElement& ref, const FacetTable& table,
                         std::span<const double> state,
                         const StabilizationParams& params,
                         const ElementStab& stab, const Forcing* forcing,
                         const AdvectionField* advection, bool want_jacobian,
                         ElementWorkspace& ws, ElementSystem& out);

// Advective boundary flux ((a.n) u_h, v_h) on do-nothing outflow facets;
// restores the standard traction-free outflow under the integrated-by-parts
// advection term.
void outflow_facet_system(const SpaceTimeMesh& mesh, const BoundaryFacet& facet,
                          const ReferenceElement& ref, const FacetTable& table,
                          std::span<const double> state,
                          const AdvectionField* advection, bool want_jacobian,
                          ElementWorkspace& ws, ElementSystem& out);

}  // namespace stvms
