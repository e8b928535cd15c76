#include "stvms/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace stvms {

std::vector<double> graded_axis_coords(double extent, int n_cells, int order,
                                       const GradingSpec& grading) {
  require(extent > 0.0, "mesh axis extent must be positive");
  require(n_cells >= 1, "mesh axis element count must be >= 1");
  const int n_nodes = order * n_cells + 1;
  std::vector<double> x(n_nodes);
  const bool cluster = grading.kind == GradingSpec::Kind::TanhCluster &&
                       grading.strength > 0.0;
  const double beta = grading.strength;
  for (int i = 0; i < n_nodes; ++i) {
    double xi = static_cast<double>(i) / (n_nodes - 1);
    if (cluster) xi = 0.5 * (1.0 + std::tanh(beta * (2.0 * xi - 1.0)) / std::tanh(beta));
    x[i] = extent * xi;
  }
  x.front() = 0.0;
  x.back() = extent;
  return x;
}

std::vector<int> element_face_nodes(int dim, int order, int local_face) {
  const int n1d = order + 1;
  const int axis = local_face / 2;
  const int fixed = (local_face % 2 == 0) ? 0 : order;
  int npe = 1;
  for (int a = 0; a < dim; ++a) npe *= n1d;
  std::vector<int> out;
  for (int l = 0; l < npe; ++l) {
    int rem = l;
    int idx[4];
    for (int a = 0; a < dim; ++a) {
      idx[a] = rem % n1d;
      rem /= n1d;
    }
    if (idx[axis] == fixed) out.push_back(l);
  }
  return out;
}

namespace {

const GradingSpec* find_grading(std::span<const GradingSpec> gradings, int axis) {
  for (const auto& g : gradings)
    if (g.axis == axis) return &g;
  return nullptr;
}

}  // namespace

SpatialMesh build_spatial_box(int dim, std::span<const double> extents,
                              std::span<const int> counts, int order,
                              std::span<const GradingSpec> gradings) {
  require(dim >= 1 && dim <= 3, "build_spatial_box: dim must be in [1,3]");
  require(order == 1 || order == 2, "build_spatial_box: order must be 1 or 2");
  require(extents.size() >= static_cast<std::size_t>(dim) &&
              counts.size() >= static_cast<std::size_t>(dim),
          "build_spatial_box: need per-axis extents and counts");
  for (int a = 0; a < dim; ++a) {
    require(extents[a] > 0.0, "build_spatial_box: extents must be positive");
    require(counts[a] >= 1, "build_spatial_box: counts must be >= 1");
  }

  std::vector<std::vector<double>> axis(dim);
  int node_dims[3] = {1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    GradingSpec g;
    if (const GradingSpec* found = find_grading(gradings, a)) g = *found;
    axis[a] = graded_axis_coords(extents[a], counts[a], order, g);
    node_dims[a] = static_cast<int>(axis[a].size());
  }

  SpatialMesh mesh;
  mesh.dim = dim;
  mesh.order = order;

  int n_nodes = 1;
  for (int a = 0; a < dim; ++a) n_nodes *= node_dims[a];
  mesh.coords.resize(static_cast<std::size_t>(n_nodes) * dim);
  for (int n = 0; n < n_nodes; ++n) {
    int rem = n;
    for (int a = 0; a < dim; ++a) {
      mesh.coords[static_cast<std::size_t>(n) * dim + a] = axis[a][rem % node_dims[a]];
      rem /= node_dims[a];
    }
  }

  int n_elems = 1;
  for (int a = 0; a < dim; ++a) n_elems *= counts[a];
  const int npe = mesh.nodes_per_elem();
  const int n1d = order + 1;
  mesh.elems.resize(static_cast<std::size_t>(n_elems) * npe);
  for (int e = 0; e < n_elems; ++e) {
    int cell[3] = {0, 0, 0};
    int rem = e;
    for (int a = 0; a < dim; ++a) {
      cell[a] = rem % counts[a];
      rem /= counts[a];
    }
    for (int l = 0; l < npe; ++l) {
      int lrem = l;
      int node = 0, stride = 1;
      for (int a = 0; a < dim; ++a) {
        const int ia = order * cell[a] + (lrem % n1d);
        lrem /= n1d;
        node += ia * stride;
        stride *= node_dims[a];
      }
      mesh.elems[static_cast<std::size_t>(e) * npe + l] = node;
    }
  }

  for (int e = 0; e < n_elems; ++e) {
    int cell[3] = {0, 0, 0};
    int rem = e;
    for (int a = 0; a < dim; ++a) {
      cell[a] = rem % counts[a];
      rem /= counts[a];
    }
    for (int a = 0; a < dim; ++a) {
      if (cell[a] == 0)
        mesh.facets.push_back({e, 2 * a, 2 * a});
      if (cell[a] == counts[a] - 1)
        mesh.facets.push_back({e, 2 * a + 1, 2 * a + 1});
    }
  }
  return mesh;
}

SpaceTimeMesh extrude_in_time(const SpatialMesh& spatial, double T, int n_t,
                              int order, double t0,
                              const std::optional<GradingSpec>& time_grading) {
  require(T > 0.0, "extrude_in_time: T must be positive");
  require(n_t >= 1, "extrude_in_time: n_t must be >= 1");
  require(order == 1 || order == 2, "extrude_in_time: order must be 1 or 2");
  require(spatial.order == order,
          "extrude_in_time: spatial mesh order must match requested order");
  require(spatial.n_nodes() > 0 && spatial.n_elems() > 0,
          "extrude_in_time: spatial mesh is empty");

  GradingSpec tg;
  if (time_grading) tg = *time_grading;
  std::vector<double> times = graded_axis_coords(T, n_t, order, tg);
  for (double& t : times) t += t0;

  SpaceTimeMesh mesh;
  mesh.dim = spatial.dim + 1;
  mesh.order = order;
  mesh.nodes_per_layer = spatial.n_nodes();
  mesh.layer_times = times;

  const int nsp = spatial.n_nodes();
  const int n_layers = static_cast<int>(times.size());
  mesh.coords.resize(static_cast<std::size_t>(nsp) * n_layers * mesh.dim);
  for (int l = 0; l < n_layers; ++l) {
    for (int s = 0; s < nsp; ++s) {
      double* dst = mesh.coords.data() +
                    (static_cast<std::size_t>(l) * nsp + s) * mesh.dim;
      std::span<const double> src = spatial.node(s);
      for (int a = 0; a < spatial.dim; ++a) dst[a] = src[a];
      dst[spatial.dim] = times[l];
    }
  }

  const int nse = spatial.n_elems();
  const int nspb = spatial.nodes_per_elem();
  const int npe = mesh.nodes_per_elem();
  mesh.elems.resize(static_cast<std::size_t>(nse) * n_t * npe);
  for (int k = 0; k < n_t; ++k) {
    for (int e = 0; e < nse; ++e) {
      int* dst = mesh.elems.data() +
                 (static_cast<std::size_t>(k) * nse + e) * npe;
      std::span<const int> sp = spatial.elem_nodes(e);
      for (int it = 0; it <= order; ++it) {
        const int layer = k * order + it;
        for (int isp = 0; isp < nspb; ++isp)
          dst[it * nspb + isp] = layer * nsp + sp[isp];
      }
    }
  }

  const int time_axis = mesh.dim - 1;
  for (int e = 0; e < nse; ++e) {
    mesh.facets.push_back({e, 2 * time_axis, StTag::Gamma0, -1});
    mesh.facets.push_back({(n_t - 1) * nse + e, 2 * time_axis + 1, StTag::GammaT, -1});
  }
  for (const SpatialFacet& f : spatial.facets)
    for (int k = 0; k < n_t; ++k)
      mesh.facets.push_back({k * nse + f.elem, f.local_face, StTag::GammaS, f.id});
  return mesh;
}

SpaceTimeMesh build_box_mesh(int dim, std::span<const double> extents,
                             std::span<const int> counts, int order,
                             std::span<const GradingSpec> gradings) {
  require(dim == 3 || dim == 4, "build_box_mesh: space-time dim must be 3 or 4");
  std::vector<GradingSpec> spatial_gradings;
  std::optional<GradingSpec> time_grading;
  for (const GradingSpec& g : gradings) {
    if (g.axis == dim - 1)
      time_grading = g;
    else
      spatial_gradings.push_back(g);
  }
  SpatialMesh spatial = build_spatial_box(dim - 1, extents, counts, order,
                                          spatial_gradings);
  return extrude_in_time(spatial, extents[dim - 1], counts[dim - 1], order, 0.0,
                         time_grading);
}

// ---------------------------------------------------------------------------
// Cylinder channel mesh
// ---------------------------------------------------------------------------

namespace {

// Structured-block emitter that deduplicates shared-edge nodes by quantized
// coordinates.
class QuadMeshBuilder {
 public:
  explicit QuadMeshBuilder(double scale) : inv_eps_(1.0 / (1e-9 * scale)) {}

  int add_node(double x, double y) {
    const std::array<long long, 2> key = {llround(x * inv_eps_),
                                          llround(y * inv_eps_)};
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(index_.size()));
    if (inserted) {
      coords_.push_back(x);
      coords_.push_back(y);
    }
    return it->second;
  }

  // grid: (ni+1) x (nj+1) node lattice, row-major in j (grid[i][j]).
  // boundary_ids: per local face (i-,i+,j-,j+), -1 for internal interfaces.
  void add_block(const std::vector<std::vector<std::array<double, 2>>>& grid,
                 std::array<int, 4> boundary_ids) {
    const int ni = static_cast<int>(grid.size()) - 1;
    const int nj = static_cast<int>(grid[0].size()) - 1;
    std::vector<std::vector<int>> ids(ni + 1, std::vector<int>(nj + 1));
    for (int i = 0; i <= ni; ++i)
      for (int j = 0; j <= nj; ++j)
        ids[i][j] = add_node(grid[i][j][0], grid[i][j][1]);
    for (int j = 0; j < nj; ++j) {
      for (int i = 0; i < ni; ++i) {
        const int e = static_cast<int>(elems_.size()) / 4;
        elems_.push_back(ids[i][j]);
        elems_.push_back(ids[i + 1][j]);
        elems_.push_back(ids[i][j + 1]);
        elems_.push_back(ids[i + 1][j + 1]);
        if (i == 0 && boundary_ids[0] >= 0) facets_.push_back({e, 0, boundary_ids[0]});
        if (i == ni - 1 && boundary_ids[1] >= 0) facets_.push_back({e, 1, boundary_ids[1]});
        if (j == 0 && boundary_ids[2] >= 0) facets_.push_back({e, 2, boundary_ids[2]});
        if (j == nj - 1 && boundary_ids[3] >= 0) facets_.push_back({e, 3, boundary_ids[3]});
      }
    }
  }

  SpatialMesh finish() {
    SpatialMesh mesh;
    mesh.dim = 2;
    mesh.order = 1;
    mesh.coords = std::move(coords_);
    mesh.elems = std::move(elems_);
    mesh.facets = std::move(facets_);
    return mesh;
  }

 private:
  double inv_eps_;
  std::map<std::array<long long, 2>, int> index_;
  std::vector<double> coords_;
  std::vector<int> elems_;
  std::vector<SpatialFacet> facets_;
};

// n+1 coordinates from a to b with geometric cell-size ratio `growth`.
std::vector<double> stretched_breaks(double a, double b, int n, double growth) {
  std::vector<double> x(n + 1);
  if (std::abs(growth - 1.0) < 1e-12) {
    for (int i = 0; i <= n; ++i) x[i] = a + (b - a) * i / n;
    return x;
  }
  const double first = (growth - 1.0) / (std::pow(growth, n) - 1.0);
  double acc = 0.0;
  x[0] = a;
  for (int i = 1; i <= n; ++i) {
    acc += first * std::pow(growth, i - 1);
    x[i] = a + (b - a) * acc;
  }
  x[n] = b;
  return x;
}

// Axis-aligned rectangle block from x-breaks and y-breaks.
std::vector<std::vector<std::array<double, 2>>> rect_grid(
    const std::vector<double>& xs, const std::vector<double>& ys) {
  std::vector<std::vector<std::array<double, 2>>> grid(
      xs.size(), std::vector<std::array<double, 2>>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) grid[i][j] = {xs[i], ys[j]};
  return grid;
}

}  // namespace

SpatialMesh build_cylinder_channel_mesh(double L, double H, double D_cyl,
                                        std::array<double, 2> center,
                                        int refinement) {
  require(L > 0 && H > 0 && D_cyl > 0, "cylinder mesh: sizes must be positive");
  require(refinement >= 0, "cylinder mesh: refinement must be >= 0");
  const double R = 0.5 * D_cyl;
  const double xc = center[0], yc = center[1];
  const double gap = std::min(std::min(xc, L - xc), std::min(yc, H - yc));
  require(gap > R, "cylinder mesh: circle touches or leaves the rectangle");
  // Boundary-layer ring extends to an axis-aligned square frame of half-width
  // W; the frame must clear the channel walls.
  const double W = std::min(D_cyl, 0.8 * gap);
  require(W > 1.05 * R, "cylinder mesh: circle too close to the boundary for a ring block");

  const int mult = 1 << refinement;
  const int ns = 8 * mult;      // angular cells per quadrant = frame side cells
  const int nr = 4 * mult;      // radial cells circle -> frame
  const double ring_growth = std::pow(1.5, 1.0 / mult);

  const double X1 = xc - W, X2 = xc + W;
  const double Y1 = yc - W, Y2 = yc + W;
  const double ht = 2.0 * W / (8.0);  // channel target size from base frame cells
  auto cells = [&](double len, double factor) {
    return std::max(1, static_cast<int>(std::lround(len / (ht * factor)))) * mult;
  };
  const int nx_l = cells(X1, 1.2);
  const int nx_r = cells(L - X2, 2.2);
  const int ny_b = cells(Y1, 1.2);
  const int ny_t = cells(H - Y2, 1.2);

  QuadMeshBuilder builder(std::max(L, H));

  // Ring: quadrants E,N,W,S; node(i,j) blends from the frame (j=0) to the
  // circle (j=nr) with geometric clustering toward the circle. Orientation
  // (i = counterclockwise, j = inward) keeps quad Jacobians positive.
  const double theta0[4] = {-kPi / 4, kPi / 4, 3 * kPi / 4, 5 * kPi / 4};
  for (int q = 0; q < 4; ++q) {
    std::vector<std::vector<std::array<double, 2>>> grid(
        ns + 1, std::vector<std::array<double, 2>>(nr + 1));
    for (int i = 0; i <= ns; ++i) {
      const double s = static_cast<double>(i) / ns;
      const double theta = theta0[q] + s * (kPi / 2);
      const double cx = xc + R * std::cos(theta);
      const double cy = yc + R * std::sin(theta);
      double fx = 0, fy = 0;
      switch (q) {
        case 0: fx = X2; fy = Y1 + s * (Y2 - Y1); break;
        case 1: fx = X2 - s * (X2 - X1); fy = Y2; break;
        case 2: fx = X1; fy = Y2 - s * (Y2 - Y1); break;
        case 3: fx = X1 + s * (X2 - X1); fy = Y1; break;
      }
      const double first = (ring_growth - 1.0) / (std::pow(ring_growth, nr) - 1.0);
      for (int j = 0; j <= nr; ++j) {
        // normalized distance from the circle for the node nr-j cells out
        double delta = 0.0;
        if (j < nr)
          delta = first * (std::pow(ring_growth, nr - j) - 1.0) / (ring_growth - 1.0);
        grid[i][j] = {cx + (fx - cx) * delta, cy + (fy - cy) * delta};
      }
    }
    builder.add_block(grid, {-1, -1, -1, boundary_id::kCylinder});
  }

  using boundary_id::kInlet;
  using boundary_id::kOutlet;
  using boundary_id::kWall;

  const std::vector<double> xs_l = stretched_breaks(0.0, X1, nx_l, 1.0);
  const std::vector<double> xs_m = stretched_breaks(X1, X2, ns, 1.0);
  const std::vector<double> xs_r =
      stretched_breaks(X2, L, nx_r, std::pow(4.0, 1.0 / std::max(1, nx_r - 1)));
  const std::vector<double> ys_b = stretched_breaks(0.0, Y1, ny_b, 1.0);
  const std::vector<double> ys_m = stretched_breaks(Y1, Y2, ns, 1.0);
  const std::vector<double> ys_t = stretched_breaks(Y2, H, ny_t, 1.0);

  // Eight channel blocks (3x3 layout minus the ring cell).
  builder.add_block(rect_grid(xs_l, ys_b), {kInlet, -1, kWall, -1});
  builder.add_block(rect_grid(xs_l, ys_m), {kInlet, -1, -1, -1});
  builder.add_block(rect_grid(xs_l, ys_t), {kInlet, -1, -1, kWall});
  builder.add_block(rect_grid(xs_m, ys_b), {-1, -1, kWall, -1});
  builder.add_block(rect_grid(xs_m, ys_t), {-1, -1, -1, kWall});
  builder.add_block(rect_grid(xs_r, ys_b), {-1, kOutlet, kWall, -1});
  builder.add_block(rect_grid(xs_r, ys_m), {-1, kOutlet, -1, -1});
  builder.add_block(rect_grid(xs_r, ys_t), {-1, kOutlet, -1, kWall});

  return builder.finish();
}

// ---------------------------------------------------------------------------
// Text mesh format
// ---------------------------------------------------------------------------

namespace {

template <typename MeshT>
void write_mesh_impl(std::ostream& os, const MeshT& mesh,
                     const std::vector<std::array<int, 3>>& facet_rows) {
  os << "stmesh " << mesh.dim << " " << mesh.order << "\n";
  os << mesh.n_nodes() << " " << mesh.n_elems() << " " << facet_rows.size()
     << "\n";
  os.precision(17);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    std::span<const double> x = mesh.node(n);
    for (int a = 0; a < mesh.dim; ++a) os << (a ? " " : "") << x[a];
    os << "\n";
  }
  const int npe = mesh.nodes_per_elem();
  for (int e = 0; e < mesh.n_elems(); ++e) {
    std::span<const int> nodes = mesh.elem_nodes(e);
    for (int l = 0; l < npe; ++l) os << (l ? " " : "") << nodes[l];
    os << "\n";
  }
  for (const auto& row : facet_rows)
    os << row[0] << " " << row[1] << " " << row[2] << "\n";
}

}  // namespace

void write_mesh(std::ostream& os, const SpatialMesh& mesh) {
  std::vector<std::array<int, 3>> rows;
  rows.reserve(mesh.facets.size());
  for (const SpatialFacet& f : mesh.facets)
    rows.push_back({f.elem, f.local_face, f.id});
  write_mesh_impl(os, mesh, rows);
}

void write_mesh(std::ostream& os, const SpaceTimeMesh& mesh) {
  std::vector<std::array<int, 3>> rows;
  rows.reserve(mesh.facets.size());
  for (const BoundaryFacet& f : mesh.facets) {
    int tag = static_cast<int>(f.tag);
    if (f.tag == StTag::GammaS && f.boundary_id >= 0) tag = 3 + f.boundary_id;
    rows.push_back({f.elem, f.local_face, tag});
  }
  write_mesh_impl(os, mesh, rows);
}

namespace {

struct RawMesh {
  int dim = 0, order = 0;
  std::vector<double> coords;
  std::vector<int> elems;
  std::vector<std::array<int, 3>> facets;
};

RawMesh read_raw_mesh(std::istream& is) {
  RawMesh raw;
  std::string magic;
  is >> magic;
  require(magic == "stmesh", "mesh file: missing 'stmesh' header");
  int n_nodes = 0, n_elems = 0, n_facets = 0;
  is >> raw.dim >> raw.order >> n_nodes >> n_elems >> n_facets;
  require(is.good() && raw.dim >= 2 && raw.dim <= 4 &&
              (raw.order == 1 || raw.order == 2) && n_nodes > 0 && n_elems > 0,
          "mesh file: malformed header");
  raw.coords.resize(static_cast<std::size_t>(n_nodes) * raw.dim);
  for (double& c : raw.coords) is >> c;
  int npe = 1;
  for (int a = 0; a < raw.dim; ++a) npe *= raw.order + 1;
  raw.elems.resize(static_cast<std::size_t>(n_elems) * npe);
  for (int& n : raw.elems) {
    is >> n;
    require(n >= 0 && n < n_nodes, "mesh file: element node index out of range");
  }
  raw.facets.resize(n_facets);
  for (auto& f : raw.facets) is >> f[0] >> f[1] >> f[2];
  require(!is.fail(), "mesh file: truncated");
  return raw;
}

}  // namespace

SpatialMesh read_spatial_mesh(std::istream& is) {
  RawMesh raw = read_raw_mesh(is);
  require(raw.dim == 2 || raw.dim == 3, "spatial mesh file must have dim 2 or 3");
  SpatialMesh mesh;
  mesh.dim = raw.dim;
  mesh.order = raw.order;
  mesh.coords = std::move(raw.coords);
  mesh.elems = std::move(raw.elems);
  for (const auto& f : raw.facets) mesh.facets.push_back({f[0], f[1], f[2]});
  return mesh;
}

SpaceTimeMesh read_spacetime_mesh(std::istream& is) {
  RawMesh raw = read_raw_mesh(is);
  require(raw.dim == 3 || raw.dim == 4, "space-time mesh file must have dim 3 or 4");
  SpaceTimeMesh mesh;
  mesh.dim = raw.dim;
  mesh.order = raw.order;
  mesh.coords = std::move(raw.coords);
  mesh.elems = std::move(raw.elems);
  for (const auto& f : raw.facets) {
    BoundaryFacet bf;
    bf.elem = f[0];
    bf.local_face = f[1];
    if (f[2] >= 3) {
      bf.tag = StTag::GammaS;
      bf.boundary_id = f[2] - 3;
    } else {
      bf.tag = static_cast<StTag>(f[2]);
      bf.boundary_id = -1;
    }
    mesh.facets.push_back(bf);
  }
  // Recover the layer structure: nodes must be grouped by strictly increasing
  // time, with equal-sized groups.
  const int n = mesh.n_nodes();
  const int dim = mesh.dim;
  int npl = 0;
  const double t0 = mesh.coords[dim - 1];
  while (npl < n && mesh.coords[static_cast<std::size_t>(npl) * dim + dim - 1] == t0)
    ++npl;
  require(npl > 0 && n % npl == 0, "space-time mesh file: nodes are not layered");
  mesh.nodes_per_layer = npl;
  const int n_layers = n / npl;
  mesh.layer_times.resize(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    const double t =
        mesh.coords[(static_cast<std::size_t>(l) * npl) * dim + dim - 1];
    for (int s = 0; s < npl; ++s)
      require(mesh.coords[(static_cast<std::size_t>(l) * npl + s) * dim + dim - 1] == t,
              "space-time mesh file: nodes are not layered");
    require(l == 0 || t > mesh.layer_times[l - 1],
            "space-time mesh file: layer times are not increasing");
    mesh.layer_times[l] = t;
  }
  return mesh;
}

}  // namespace stvms
