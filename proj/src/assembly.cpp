#include "stvms/assembly.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stvms {

SystemAssembler::SystemAssembler(const SpaceTimeMesh& mesh,
                                 const ProblemDefinition& problem, DofMap dofs)
    : mesh_(mesh),
      problem_(problem),
      dofs_(std::move(dofs)),
      ref_(ReferenceElement::create(mesh.dim, mesh.order, mesh.order + 1)),
      gammaT_table_(tabulate_facet(ref_, 2 * (mesh.dim - 1) + 1, mesh.order + 1)),
      sparsity_(build_sparsity(mesh, mesh.dim)) {
  threads_ = std::max(1, problem.threads);
#ifdef _OPENMP
  threads_ = std::min(threads_, omp_get_max_threads());
#else
  threads_ = 1;
#endif
  workspaces_.resize(threads_);

  // outflow boundary ids
  std::vector<int> outflow_ids;
  for (const BoundaryCondition& bc : problem.bcs)
    if (bc.kind == BoundaryCondition::Kind::DoNothingOutflow)
      outflow_ids.push_back(bc.boundary_id);

  for (int i = 0; i < static_cast<int>(mesh.facets.size()); ++i) {
    const BoundaryFacet& f = mesh.facets[i];
    if (f.tag == StTag::GammaT) gammaT_facets_.push_back(i);
    if (f.tag == StTag::GammaS &&
        std::find(outflow_ids.begin(), outflow_ids.end(), f.boundary_id) !=
            outflow_ids.end())
      outflow_facets_.push_back(i);
  }
  facet_tables_.reserve(2 * mesh.dim);
  for (int face = 0; face < 2 * mesh.dim; ++face)
    facet_tables_.push_back(tabulate_facet(ref_, face, mesh.order + 1));
}

void SystemAssembler::assemble(std::span<const double> x,
                               std::span<double> residual, CsrMatrix* jacobian) {
  const bool want_jac = jacobian != nullptr;
  const int n_elems = mesh_.n_elems();
  const AdvectionField* adv = advection_ ? &advection_ : nullptr;
  const Forcing* forcing = problem_.forcing ? &problem_.forcing : nullptr;

  if (!frozen_stabs_.empty())
    last_stabs_ = frozen_stabs_;
  else
    last_stabs_ = compute_element_stabs(mesh_, ref_, x, problem_.stab, adv);

  std::fill(residual.begin(), residual.end(), 0.0);
  if (want_jac) jacobian->zero();

  // Parallel integration in fixed-size batches, serial in-order scatter:
  // results are independent of the thread count.
  const int batch_size = std::max(1, std::min(256, n_elems));
  if (static_cast<int>(batch_.size()) < batch_size) batch_.resize(batch_size);

  for (int start = 0; start < n_elems; start += batch_size) {
    const int count = std::min(batch_size, n_elems - start);
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads_) \
    if (threads_ > 1)
    for (int k = 0; k < count; ++k) {
      const int e = start + k;
#ifdef _OPENMP
      ElementWorkspace& ws = workspaces_[omp_get_thread_num()];
#else
      ElementWorkspace& ws = workspaces_[0];
#endif
      element_system(mesh_, e, ref_, x, problem_.stab, last_stabs_[e], forcing,
                     adv, problem_.terms, want_jac, ws, batch_[k]);
    }
    for (int k = 0; k < count; ++k)
      scatter_element(sparsity_, mesh_.elem_nodes(start + k), batch_[k].residual,
                      batch_[k].jacobian, jacobian, residual);
  }

  // Boundary facet contributions (serial; boundary work is a lower-order term).
  ElementWorkspace& ws = workspaces_[0];
  ElementSystem local;
  const int nloc = ref_.n_basis() * dofs_.n_fields;
  if (problem_.terms.gammaT) {
    for (int fi : gammaT_facets_) {
      const BoundaryFacet& f = mesh_.facets[fi];
      local.reset(f.elem, nloc, want_jac);
      gammaT_facet_system(mesh_, f, ref_, gammaT_table_, x, problem_.stab,
                          last_stabs_[f.elem], forcing, adv, want_jac, ws, local);
      scatter_element(sparsity_, mesh_.elem_nodes(f.elem), local.residual,
                      local.jacobian, jacobian, residual);
    }
  }
  for (int fi : outflow_facets_) {
    const BoundaryFacet& f = mesh_.facets[fi];
    local.reset(f.elem, nloc, want_jac);
    outflow_facet_system(mesh_, f, ref_, facet_tables_[f.local_face], x, adv,
                         want_jac, ws, local);
    scatter_element(sparsity_, mesh_.elem_nodes(f.elem), local.residual,
                    local.jacobian, jacobian, residual);
  }

  apply_dirichlet_rows(dofs_, x, jacobian, residual);
}

std::vector<double> SystemAssembler::lumped_mass() const {
  return lumped_mass_vector(mesh_, ref_, dofs_.n_fields);
}

std::vector<double> lumped_mass_vector(const SpaceTimeMesh& mesh,
                                       const ReferenceElement& ref,
                                       int n_fields) {
  std::vector<double> mass(static_cast<std::size_t>(mesh.n_nodes()) * n_fields,
                           0.0);
  ElementWorkspace ws;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    map_element(mesh, e, ref, ws);
    std::span<const int> nodes = mesh.elem_nodes(e);
    for (int q = 0; q < ws.mapped.nq; ++q) {
      const double jxw = ws.mapped.jxw[q];
      for (int b = 0; b < ws.mapped.nb; ++b) {
        const double v = jxw * ref.value(q, b);
        for (int f = 0; f < n_fields; ++f)
          mass[static_cast<std::size_t>(nodes[b]) * n_fields + f] += v;
      }
    }
  }
  for (double m : mass)
    if (!(m > 0)) fail("lumped mass has a non-positive entry");
  return mass;
}

}  // namespace stvms
