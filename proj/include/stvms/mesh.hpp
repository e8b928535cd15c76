#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "stvms/core.hpp"

namespace stvms {

// Boundary classification of a space-time facet.
enum class StTag : int { GammaS = 0, Gamma0 = 1, GammaT = 2 };

// Named boundary ids used by spatial meshes. Box meshes tag face (axis,side)
// as 2*axis+side; the cylinder channel mesh uses the ids below.
namespace boundary_id {
inline constexpr int kInlet = 0;
inline constexpr int kOutlet = 1;
inline constexpr int kWall = 2;
inline constexpr int kCylinder = 3;
}  // namespace boundary_id

struct SpatialFacet {
  int elem = 0;
  int local_face = 0;  // axis = local_face/2, side = local_face%2
  int id = 0;
};

struct BoundaryFacet {
  int elem = 0;
  int local_face = 0;
  StTag tag = StTag::GammaS;
  int boundary_id = -1;  // spatial sub-tag for GammaS facets, -1 otherwise
};

struct GradingSpec {
  int axis = 0;
  enum class Kind { Uniform, TanhCluster } kind = Kind::Uniform;
  double strength = 0.0;  // >= 0; 0 means uniform
};

// d-dimensional tensor-product element mesh (quads for d=2, hexes for d=3).
struct SpatialMesh {
  int dim = 0;
  int order = 1;
  std::vector<double> coords;  // stride dim
  std::vector<int> elems;      // stride (order+1)^dim, lexicographic local order
  std::vector<SpatialFacet> facets;

  int n_nodes() const { return static_cast<int>(coords.size()) / dim; }
  int nodes_per_elem() const {
    int n = 1;
    for (int a = 0; a < dim; ++a) n *= order + 1;
    return n;
  }
  int n_elems() const {
    return static_cast<int>(elems.size()) / nodes_per_elem();
  }
  std::span<const int> elem_nodes(int e) const {
    return {elems.data() + static_cast<std::size_t>(e) * nodes_per_elem(),
            static_cast<std::size_t>(nodes_per_elem())};
  }
  std::span<const double> node(int n) const {
    return {coords.data() + static_cast<std::size_t>(n) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// (d+1)-dimensional space-time mesh produced by extruding a spatial mesh in
// time. Nodes are layer-major: node(layer, s) = layer*nodes_per_layer + s,
// so temporal slices are index ranges. Axis dim-1 is time.
struct SpaceTimeMesh {
  int dim = 0;    // d+1
  int order = 1;  // 1 or 2
  std::vector<double> coords;
  std::vector<int> elems;
  std::vector<BoundaryFacet> facets;

  int nodes_per_layer = 0;
  std::vector<double> layer_times;  // size order*n_t+1

  int n_nodes() const { return static_cast<int>(coords.size()) / dim; }
  int n_layers() const { return static_cast<int>(layer_times.size()); }
  int nodes_per_elem() const {
    int n = 1;
    for (int a = 0; a < dim; ++a) n *= order + 1;
    return n;
  }
  int n_elems() const {
    return static_cast<int>(elems.size()) / nodes_per_elem();
  }
  std::span<const int> elem_nodes(int e) const {
    return {elems.data() + static_cast<std::size_t>(e) * nodes_per_elem(),
            static_cast<std::size_t>(nodes_per_elem())};
  }
  std::span<const double> node(int n) const {
    return {coords.data() + static_cast<std::size_t>(n) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// Structured d-dimensional box [0,extents[0]] x ... with counts[a] elements
// along axis a. Boundary faces carry id 2*axis+side.
SpatialMesh build_spatial_box(int dim, std::span<const double> extents,
                              std::span<const int> counts, int order,
                              std::span<const GradingSpec> gradings = {});

// Extrude a spatial mesh over [t0, t0+T] with n_t slabs. The spatial mesh
// order must match `order`. Spatial boundary ids are preserved on GammaS.
SpaceTimeMesh extrude_in_time(const SpatialMesh& spatial, double T, int n_t,
                              int order, double t0 = 0.0,
                              const std::optional<GradingSpec>& time_grading =
                                  std::nullopt);

// Structured space-time box; the last axis is time. counts/extents have
// dim entries, gradings may address any axis.
SpaceTimeMesh build_box_mesh(int dim, std::span<const double> extents,
                             std::span<const int> counts, int order,
                             std::span<const GradingSpec> gradings = {});

// Boundary-fitted blocked quad mesh for a channel [0,L]x[0,H] with a circular
// hole of diameter D_cyl centered at `center`: a 4-block boundary-layer ring
// around the circle embedded in axis-aligned channel blocks. Facet ids follow
// boundary_id::*. refinement >= 0 doubles all block counts per level.
SpatialMesh build_cylinder_channel_mesh(double L, double H, double D_cyl,
                                        std::array<double, 2> center,
                                        int refinement);

// Monotone node coordinate spacing along [0,extent]: uniform or tanh-clustered
// toward both ends.
std::vector<double> graded_axis_coords(double extent, int n_cells, int order,
                                       const GradingSpec& grading);

// Local node indices (lexicographic) lying on a local face of a tensor
// element: axis local_face/2 fixed at side local_face%2.
std::vector<int> element_face_nodes(int dim, int order, int local_face);

// Plain-text mesh exchange format:
//   stmesh <dim> <order>
//   <n_nodes> <n_elems> <n_facets>
//   ... n_nodes coordinate lines ...
//   ... n_elems 0-based node-index lines ...
//   ... n_facets "elem local_face tag" lines ...
// For spatial meshes the tag is the boundary id. For space-time meshes the
// tag is 0 (GammaS), 1 (Gamma0), 2 (GammaT), or 3+id for GammaS facets that
// carry a spatial boundary id.
void write_mesh(std::ostream& os, const SpatialMesh& mesh);
void write_mesh(std::ostream& os, const SpaceTimeMesh& mesh);
SpatialMesh read_spatial_mesh(std::istream& is);
SpaceTimeMesh read_spacetime_mesh(std::istream& is);

// Total mesh volume by corner-node geometry quadrature (test support lives in
// the library because the CLI reports it too).
double mesh_volume(const SpaceTimeMesh& mesh);

}  // namespace stvms
