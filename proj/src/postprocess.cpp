#include "stvms/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "stvms/vms_forms.hpp"

namespace stvms {

ErrorReport l2_error(std::span<const double> solution,
                     const ManufacturedSolution& exact,
                     const SpaceTimeMesh& mesh, const ReferenceElement& ref) {
  const int d = mesh.dim - 1;
  require(exact.d == d, "l2_error: dimension mismatch");
  const int nf = d + 1;
  ErrorReport report;
  report.order = mesh.order;
  report.field_errors.assign(nf, 0.0);

  ElementWorkspace ws;
  double hmax = 0.0;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    map_element(mesh, e, ref, ws);
    hmax = std::max(hmax, element_size(mesh, e));
    std::span<const int> nodes = mesh.elem_nodes(e);
    for (int q = 0; q < ws.mapped.nq; ++q) {
      const double jxw = ws.mapped.jxw[q];
      std::span<const double> xq = ws.mapped.point(q);
      double uh[4] = {0, 0, 0, 0};
      for (int b = 0; b < ws.mapped.nb; ++b) {
        const double v = ref.value(q, b);
        const double* coeff =
            solution.data() + static_cast<std::size_t>(nodes[b]) * nf;
        for (int f = 0; f < nf; ++f) uh[f] += v * coeff[f];
      }
      for (int c = 0; c < d; ++c) {
        const double diff = uh[c] - exact.velocity[c].value(xq);
        report.field_errors[c] += jxw * diff * diff;
      }
      const double diff = uh[d] - exact.pressure.value(xq);
      report.field_errors[d] += jxw * diff * diff;
    }
  }
  double vel2 = 0.0;
  for (int c = 0; c < d; ++c) vel2 += report.field_errors[c];
  for (double& fe : report.field_errors) fe = std::sqrt(fe);
  report.velocity = std::sqrt(vel2);
  report.pressure = report.field_errors[d];
  report.h = hmax;
  return report;
}

TemporalSlice temporal_slice(std::span<const double> solution,
                             const SpaceTimeMesh& mesh, double t_star,
                             bool strict) {
  require(mesh.nodes_per_layer > 0, "temporal_slice: mesh is not layered");
  const int d = mesh.dim - 1;
  const int nf = d + 1;
  require(t_star >= mesh.layer_times.front() - 1e-12 &&
              t_star <= mesh.layer_times.back() + 1e-12,
          "temporal_slice: t outside [0, T]");

  int layer = 0;
  double best = std::numeric_limits<double>::max();
  for (int l = 0; l < mesh.n_layers(); ++l) {
    const double dist = std::abs(mesh.layer_times[l] - t_star);
    if (dist < best) {
      best = dist;
      layer = l;
    }
  }
  const double span_t = mesh.layer_times.back() - mesh.layer_times.front();
  if (strict)
    require(best <= 1e-10 * std::max(1.0, span_t),
            "temporal_slice: t does not lie on a node layer");

  TemporalSlice slice;
  slice.t = mesh.layer_times[layer];
  slice.layer = layer;

  const int npl = mesh.nodes_per_layer;
  slice.mesh.dim = d;
  slice.mesh.order = mesh.order;
  slice.mesh.coords.resize(static_cast<std::size_t>(npl) * d);
  for (int s = 0; s < npl; ++s) {
    std::span<const double> x = mesh.node(static_cast<int>(layer) * npl + s);
    for (int a = 0; a < d; ++a)
      slice.mesh.coords[static_cast<std::size_t>(s) * d + a] = x[a];
  }

  // Spatial connectivity from the first time slab.
  const int n1d = mesh.order + 1;
  int npe_sp = 1;
  for (int a = 0; a < d; ++a) npe_sp *= n1d;
  std::vector<int> st_to_sp(mesh.n_elems(), -1);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    std::span<const int> nodes = mesh.elem_nodes(e);
    if (nodes[0] >= npl) continue;  // not in the first slab
    st_to_sp[e] = static_cast<int>(slice.mesh.elems.size()) / npe_sp;
    for (int l = 0; l < npe_sp; ++l)
      slice.mesh.elems.push_back(nodes[l] % npl);
  }
  for (const BoundaryFacet& f : mesh.facets) {
    if (f.tag != StTag::GammaS || st_to_sp[f.elem] < 0) continue;
    if (f.local_face >= 2 * d) continue;  // time faces have no spatial image
    slice.mesh.facets.push_back({st_to_sp[f.elem], f.local_face, f.boundary_id});
  }

  slice.fields.resize(static_cast<std::size_t>(npl) * nf);
  for (int s = 0; s < npl; ++s)
    for (int f = 0; f < nf; ++f)
      slice.fields[static_cast<std::size_t>(s) * nf + f] =
          solution[(static_cast<std::size_t>(layer) * npl + s) * nf + f];
  return slice;
}

double cylinder_force(const TemporalSlice& slice, double nu,
                      std::array<double, 2> w) {
  const SpatialMesh& mesh = slice.mesh;
  require(mesh.dim == 2, "cylinder_force: slice must be 2D");
  const int nf = 3;
  bool found = false;
  ReferenceElement ref =
      ReferenceElement::create(2, mesh.order, mesh.order + 2);
  std::vector<FacetTable> tables;
  for (int face = 0; face < 4; ++face)
    tables.push_back(tabulate_facet(ref, face, mesh.order + 2));

  double force = 0.0;
  MappedFacet mf;
  for (const SpatialFacet& f : mesh.facets) {
    if (f.id != boundary_id::kCylinder) continue;
    found = true;
    map_facet(mesh, f.elem, tables[f.local_face], ref, mf);
    std::span<const int> nodes = mesh.elem_nodes(f.elem);
    for (int q = 0; q < mf.nq; ++q) {
      const double* vals = mf.values.data() + static_cast<std::size_t>(q) * mf.nb;
      const double* grads =
          mf.grads.data() + static_cast<std::size_t>(q) * mf.nb * 2;
      double gu[2][2] = {{0, 0}, {0, 0}};
      double p = 0.0;
      for (int b = 0; b < mf.nb; ++b) {
        const double* coeff =
            slice.fields.data() + static_cast<std::size_t>(nodes[b]) * nf;
        for (int c = 0; c < 2; ++c)
          for (int m = 0; m < 2; ++m) gu[c][m] += grads[b * 2 + m] * coeff[c];
        p += vals[b] * coeff[2];
      }
      // n points from the cylinder surface into the fluid: the element's
      // outward normal on the hole boundary is its negative.
      const double n0 = -mf.normals[static_cast<std::size_t>(q) * 2 + 0];
      const double n1 = -mf.normals[static_cast<std::size_t>(q) * 2 + 1];
      double traction[2];
      traction[0] = nu * (2 * gu[0][0] * n0 + (gu[0][1] + gu[1][0]) * n1) - p * n0;
      traction[1] = nu * ((gu[1][0] + gu[0][1]) * n0 + 2 * gu[1][1] * n1) - p * n1;
      force += mf.measure_jxw[q] * (traction[0] * w[0] + traction[1] * w[1]);
    }
  }
  require(found, "cylinder_force: mesh has no cylinder-tagged facets");
  return force;
}

double strouhal(const TimeSeries& lift, double D, double U_ref, double t_c) {
  require(lift.times.size() == lift.values.size() && lift.times.size() >= 4,
          "strouhal: series too short");
  std::vector<double> t, v;
  for (std::size_t i = 0; i < lift.times.size(); ++i) {
    if (lift.times[i] >= t_c) {
      t.push_back(lift.times[i]);
      v.push_back(lift.values[i]);
    }
  }
  require(t.size() >= 4, "strouhal: settled window too short");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double& x : v) x -= mean;

  std::vector<double> crossings;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if ((v[i - 1] < 0.0 && v[i] >= 0.0) || (v[i - 1] > 0.0 && v[i] <= 0.0)) {
      const double frac = v[i - 1] / (v[i - 1] - v[i]);
      crossings.push_back(t[i - 1] + frac * (t[i] - t[i - 1]));
    }
  }
  require(crossings.size() >= 2,
          "strouhal: undefined frequency (fewer than two zero crossings)");
  const double mean_half_period =
      (crossings.back() - crossings.front()) /
      static_cast<double>(crossings.size() - 1);
  const double f = 1.0 / (2.0 * mean_half_period);
  return f * D / U_ref;
}

double steady_state_time(std::span<const double> solution,
                         const SpaceTimeMesh& mesh, double tol) {
  require(mesh.nodes_per_layer > 0, "steady_state_time: mesh is not layered");
  const int d = mesh.dim - 1;
  const int nf = d + 1;
  const int npl = mesh.nodes_per_layer;
  const int n_layers = mesh.n_layers();

  // max velocity change between consecutive layers
  std::vector<double> change(n_layers - 1, 0.0);
  for (int l = 0; l + 1 < n_layers; ++l) {
    double m = 0.0;
    for (int s = 0; s < npl; ++s) {
      for (int c = 0; c < d; ++c) {
        const double a =
            solution[(static_cast<std::size_t>(l) * npl + s) * nf + c];
        const double b =
            solution[(static_cast<std::size_t>(l + 1) * npl + s) * nf + c];
        m = std::max(m, std::abs(b - a));
      }
    }
    change[l] = m;
  }
  int first_bad = -1;
  for (int l = n_layers - 2; l >= 0; --l) {
    if (change[l] >= tol) {
      first_bad = l;
      break;
    }
  }
  if (first_bad == n_layers - 2)
    return std::numeric_limits<double>::infinity();
  return mesh.layer_times[first_bad + 1];
}

double discrete_norm(const SpaceTimeMesh& mesh, const ReferenceElement& ref,
                     std::span<const double> state,
                     const StabilizationParams& params,
                     const AdvectionField* advection) {
  const int d = mesh.dim - 1;
  const int nf = d + 1;
  const int dim = mesh.dim;
  std::vector<ElementStab> stabs =
      compute_element_stabs(mesh, ref, state, params, advection);

  ElementWorkspace ws;
  double total = 0.0;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    map_element(mesh, e, ref, ws);
    std::span<const int> nodes = mesh.elem_nodes(e);
    for (int q = 0; q < ws.mapped.nq; ++q) {
      const double jxw = ws.mapped.jxw[q];
      double u[3] = {0, 0, 0}, gu[3][4] = {}, gp[3] = {0, 0, 0};
      for (int b = 0; b < ws.mapped.nb; ++b) {
        const double* coeff =
            state.data() + static_cast<std::size_t>(nodes[b]) * nf;
        const double v = ref.value(q, b);
        std::span<const double> g = ws.mapped.grad(q, b);
        for (int c = 0; c < d; ++c) {
          u[c] += v * coeff[c];
          for (int m = 0; m < dim; ++m) gu[c][m] += g[m] * coeff[c];
        }
        for (int m = 0; m < d; ++m) gp[m] += g[m] * coeff[d];
      }
      double a[3] = {0, 0, 0};
      double div_a = 0.0;
      if (advection) {
        (*advection)(ws.mapped.point(q), {a, static_cast<std::size_t>(d)}, div_a);
      } else {
        for (int c = 0; c < d; ++c) a[c] = u[c];
        for (int c = 0; c < d; ++c) div_a += gu[c][c];
      }
      double grad2 = 0.0, op2 = 0.0;
      for (int c = 0; c < d; ++c) {
        for (int m = 0; m < d; ++m) grad2 += gu[c][m] * gu[c][m];
        double Lt = gu[c][dim - 1] + 0.5 * div_a * u[c] + gp[c];
        for (int j = 0; j < d; ++j) Lt += a[j] * gu[c][j];
        op2 += Lt * Lt;
      }
      total += jxw * (params.nu * grad2 + stabs[e].tau_m * op2);
    }
  }

  // final-time slice term
  FacetTable table = tabulate_facet(ref, 2 * (dim - 1) + 1, mesh.order + 1);
  MappedFacet mf;
  for (const BoundaryFacet& f : mesh.facets) {
    if (f.tag != StTag::GammaT) continue;
    map_facet(mesh, f.elem, table, ref, mf);
    std::span<const int> nodes = mesh.elem_nodes(f.elem);
    for (int q = 0; q < mf.nq; ++q) {
      const double* vals = mf.values.data() + static_cast<std::size_t>(q) * mf.nb;
      double u2 = 0.0;
      for (int c = 0; c < d; ++c) {
        double uc = 0.0;
        for (int b = 0; b < mf.nb; ++b)
          uc += vals[b] *
                state[static_cast<std::size_t>(nodes[b]) * nf + c];
        u2 += uc * uc;
      }
      total += mf.measure_jxw[q] * u2;
    }
  }
  return std::sqrt(total);
}

void write_vtk_slice(std::ostream& os, const TemporalSlice& slice) {
  const SpatialMesh& mesh = slice.mesh;
  const int d = mesh.dim;
  const int nf = d + 1;
  os << "# vtk DataFile Version 3.0\n";
  os << "stvms temporal slice t=" << slice.t << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.n_nodes() << " double\n";
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    std::span<const double> x = mesh.node(n);
    os << x[0] << " " << x[1] << " " << (d == 3 ? x[2] : 0.0) << "\n";
  }

  // linear sub-cells of each (possibly Q2) element
  const int n1d = mesh.order + 1;
  const int sub_per_elem = (d == 2) ? mesh.order * mesh.order
                                    : mesh.order * mesh.order * mesh.order;
  const int corners = (d == 2) ? 4 : 8;
  const int n_cells = mesh.n_elems() * sub_per_elem;
  os << "CELLS " << n_cells << " " << n_cells * (corners + 1) << "\n";
  for (int e = 0; e < mesh.n_elems(); ++e) {
    std::span<const int> nodes = mesh.elem_nodes(e);
    for (int sz = 0; sz < ((d == 3) ? mesh.order : 1); ++sz)
      for (int sy = 0; sy < mesh.order; ++sy)
        for (int sx = 0; sx < mesh.order; ++sx) {
          auto local = [&](int ix, int iy, int iz) {
            return (sx + ix) + (sy + iy) * n1d +
                   ((d == 3) ? (sz + iz) * n1d * n1d : 0);
          };
          if (d == 2) {
            os << 4 << " " << nodes[local(0, 0, 0)] << " " << nodes[local(1, 0, 0)]
               << " " << nodes[local(1, 1, 0)] << " " << nodes[local(0, 1, 0)]
               << "\n";
          } else {
            os << 8 << " " << nodes[local(0, 0, 0)] << " " << nodes[local(1, 0, 0)]
               << " " << nodes[local(1, 1, 0)] << " " << nodes[local(0, 1, 0)]
               << " " << nodes[local(0, 0, 1)] << " " << nodes[local(1, 0, 1)]
               << " " << nodes[local(1, 1, 1)] << " " << nodes[local(0, 1, 1)]
               << "\n";
          }
        }
  }
  os << "CELL_TYPES " << n_cells << "\n";
  for (int c = 0; c < n_cells; ++c) os << ((d == 2) ? 9 : 12) << "\n";

  os << "POINT_DATA " << mesh.n_nodes() << "\n";
  os << "VECTORS velocity double\n";
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const double* f = slice.fields.data() + static_cast<std::size_t>(n) * nf;
    os << f[0] << " " << f[1] << " " << (d == 3 ? f[2] : 0.0) << "\n";
  }
  os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int n = 0; n < mesh.n_nodes(); ++n)
    os << slice.fields[static_cast<std::size_t>(n) * nf + d] << "\n";
}

void write_time_series_csv(std::ostream& os, const TimeSeries& series,
                           const std::string& value_name) {
  os << "t," << value_name << "\n";
  for (std::size_t i = 0; i < series.times.size(); ++i)
    os << series.times[i] << "," << series.values[i] << "\n";
}

void write_error_table_csv(std::ostream& os,
                           std::span<const ErrorReport> reports) {
  if (reports.empty()) return;
  const int nf = static_cast<int>(reports[0].field_errors.size());
  os << "h";
  for (int c = 0; c < nf - 1; ++c) os << ",u" << c;
  os << ",p,velocity\n";
  for (const ErrorReport& r : reports) {
    os << r.h;
    for (double e : r.field_errors) os << "," << e;
    os << "," << r.velocity << "\n";
  }
}

}  // namespace stvms
