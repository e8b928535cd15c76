#pragma once

#include "stvms/dofmap.hpp"
#include "stvms/newton.hpp"
#include "stvms/problems.hpp"
#include "stvms/sparse.hpp"
#include "stvms/vms_forms.hpp"

namespace stvms {

// Residual/Jacobian provider for one space-time block. Element systems are
// integrated in parallel batches (OpenMP) and scattered serially in element
// order, so results are identical for any thread count; threads=1 is the
// serial reference path.
class SystemAssembler : public NonlinearSystem {
 public:
  SystemAssembler(const SpaceTimeMesh& mesh, const ProblemDefinition& problem,
                  DofMap dofs);

  int n_dofs() const override { return dofs_.n_dofs(); }
  CsrMatrix allocate_jacobian() const override {
    return allocate_matrix(sparsity_);
  }
  void assemble(std::span<const double> x, std::span<double> residual,
                CsrMatrix* jacobian) override;
  std::vector<double> lumped_mass() const override;
  const uint8_t* dirichlet_mask() const override {
    return dofs_.dirichlet.data();
  }

  const DofMap& dofs() const { return dofs_; }
  const Sparsity& sparsity() const { return sparsity_; }
  const ReferenceElement& reference() const { return ref_; }

  // Frozen per-element stabilization for the current pass; recomputed from
  // the state at each assemble() unless pinned by set_frozen_stabs (tests).
  void set_frozen_stabs(std::vector<ElementStab> stabs) {
    frozen_stabs_ = std::move(stabs);
  }
  void clear_frozen_stabs() { frozen_stabs_.clear(); }
  const std::vector<ElementStab>& last_stabs() const { return last_stabs_; }

  // Prescribed advection (linearized form); used by analysis-property tests.
  void set_advection_override(AdvectionField advection) {
    advection_ = std::move(advection);
  }

  int threads() const { return threads_; }

 private:
  const SpaceTimeMesh& mesh_;
  const ProblemDefinition& problem_;
  DofMap dofs_;
  ReferenceElement ref_;
  FacetTable gammaT_table_;
  std::vector<FacetTable> facet_tables_;  // per local face, lazily built
  Sparsity sparsity_;
  std::vector<int> gammaT_facets_;   // indices into mesh.facets
  std::vector<int> outflow_facets_;  // indices into mesh.facets
  std::vector<ElementStab> frozen_stabs_;
  std::vector<ElementStab> last_stabs_;
  AdvectionField advection_;
  int threads_ = 1;

  std::vector<ElementWorkspace> workspaces_;
  std::vector<ElementSystem> batch_;
};

// Lumped space-time mass (integral of each basis function) per dof; all
// fields of a node share the value.
std::vector<double> lumped_mass_vector(const SpaceTimeMesh& mesh,
                                       const ReferenceElement& ref,
                                       int n_fields);

}  // namespace stvms
