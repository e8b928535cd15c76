#pragma once

#include <vector>

#include "stvms/mesh.hpp"
#include "stvms/reference_element.hpp"

namespace stvms {

// Physical basis data of one element at all quadrature points. Axes 0..d-1
// are spatial, axis dim-1 is time; `lapl` is the spatial Laplacian of each
// basis function (mapping curvature included for non-affine cells).
struct MappedElement {
  int dim = 0, nq = 0, nb = 0;
  std::vector<double> jxw;     // nq, det(J) * quadrature weight
  std::vector<double> coords;  // nq*dim physical coordinates
  std::vector<double> grads;   // nq*nb*dim physical space-time gradients
  std::vector<double> lapl;    // nq*nb spatial Laplacian

  std::span<const double> point(int q) const {
    return {coords.data() + static_cast<std::size_t>(q) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> grad(int q, int b) const {
    return {grads.data() + (static_cast<std::size_t>(q) * nb + b) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// Facet mapping: physical basis data on one local face of an element,
// integrated with a (dim-1)-dimensional rule. `measure_jxw` holds the surface
// measure times facet quadrature weight.
struct MappedFacet {
  int dim = 0, nq = 0, nb = 0;
  std::vector<double> measure_jxw;
  std::vector<double> coords;       // nq*dim
  std::vector<double> values;       // nq*nb
  std::vector<double> grads;        // nq*nb*dim physical
  std::vector<double> lapl;         // nq*nb spatial Laplacian
  std::vector<double> normals;      // nq*dim outward unit normal
};

// Reusable scratch space for mapping and element kernels; one per thread.
struct ElementWorkspace {
  std::vector<double> node_coords;  // nb*dim
  std::vector<double> jac, jinv;    // dim*dim
  std::vector<double> geom_hess;    // dim*dim*dim
  std::vector<double> ref_hess_row; // dim*dim
  MappedElement mapped;
  MappedFacet mapped_facet;
  // kernel scratch (sized by the VMS kernels)
  std::vector<double> qp_fields;
  std::vector<double> test_ops;
};

template <typename MeshT>
void gather_node_coords(const MeshT& mesh, int elem, std::vector<double>& out) {
  const int dim = mesh.dim;
  std::span<const int> nodes = mesh.elem_nodes(elem);
  out.resize(nodes.size() * dim);
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    std::span<const double> x = mesh.node(nodes[b]);
    for (int a = 0; a < dim; ++a) out[b * dim + a] = x[a];
  }
}

// Map an element: physical coordinates, Jacobians, physical gradients and
// spatial Laplacians at every quadrature point. Throws on non-positive
// Jacobian determinant, naming the element.
void map_element(const SpaceTimeMesh& mesh, int elem, const ReferenceElement& ref,
                 ElementWorkspace& ws);
void map_element(const SpatialMesh& mesh, int elem, const ReferenceElement& ref,
                 ElementWorkspace& ws);

// Full physical Hessians per quadrature point ([q][b][dim][dim]); test and
// diagnostics path, not used by the assembly kernels.
std::vector<double> map_element_hessians(const SpaceTimeMesh& mesh, int elem,
                                         const ReferenceElement& ref);

void map_facet(const SpaceTimeMesh& mesh, int elem, const FacetTable& table,
               const ReferenceElement& ref, MappedFacet& out);
void map_facet(const SpatialMesh& mesh, int elem, const FacetTable& table,
               const ReferenceElement& ref, MappedFacet& out);

// Interpolate one solution component (value, space-time gradient, spatial
// Laplacian, time derivative) at the quadrature points of a mapped element.
struct InterpolatedField {
  std::vector<double> value;      // nq
  std::vector<double> gradient;   // nq*dim (space-time)
  std::vector<double> laplacian;  // nq (spatial)
};

void interpolate(const SpaceTimeMesh& mesh, int elem, const ReferenceElement& ref,
                 const MappedElement& mapped, std::span<const double> state,
                 int n_fields, int component, InterpolatedField& out);

// Measure of one boundary facet (quadrature of 1 over the facet).
double facet_measure(const SpaceTimeMesh& mesh, const BoundaryFacet& facet);

}  // namespace stvms
