#include "stvms/mapping.hpp"

#include <cmath>
#include <cstring>

namespace stvms {

namespace {

// In-place inverse of a small row-major dim x dim matrix; returns det.
double invert_small(const double* a, double* inv, int dim) {
  double m[16];
  std::memcpy(m, a, sizeof(double) * dim * dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) inv[r * dim + c] = (r == c) ? 1.0 : 0.0;
  double det = 1.0;
  for (int col = 0; col < dim; ++col) {
    int piv = col;
    for (int r = col + 1; r < dim; ++r)
      if (std::abs(m[r * dim + col]) > std::abs(m[piv * dim + col])) piv = r;
    if (piv != col) {
      for (int c = 0; c < dim; ++c) {
        std::swap(m[col * dim + c], m[piv * dim + c]);
        std::swap(inv[col * dim + c], inv[piv * dim + c]);
      }
      det = -det;
    }
    const double d = m[col * dim + col];
    if (d == 0.0) return 0.0;
    det *= d;
    const double s = 1.0 / d;
    for (int c = 0; c < dim; ++c) {
      m[col * dim + c] *= s;
      inv[col * dim + c] *= s;
    }
    for (int r = 0; r < dim; ++r) {
      if (r == col) continue;
      const double f = m[r * dim + col];
      if (f == 0.0) continue;
      for (int c = 0; c < dim; ++c) {
        m[r * dim + c] -= f * m[col * dim + c];
        inv[r * dim + c] -= f * inv[col * dim + c];
      }
    }
  }
  return det;
}

template <typename MeshT>
void map_element_impl(const MeshT& mesh, int elem, const ReferenceElement& ref,
                      ElementWorkspace& ws) {
  const int dim = mesh.dim;
  const int nb = ref.n_basis();
  const int nq = ref.n_quad();
  gather_node_coords(mesh, elem, ws.node_coords);
  const double* xn = ws.node_coords.data();

  MappedElement& out = ws.mapped;
  out.dim = dim;
  out.nq = nq;
  out.nb = nb;
  out.jxw.resize(nq);
  out.coords.assign(static_cast<std::size_t>(nq) * dim, 0.0);
  out.grads.resize(static_cast<std::size_t>(nq) * nb * dim);
  out.lapl.resize(static_cast<std::size_t>(nq) * nb);

  ws.jac.resize(dim * dim);
  ws.jinv.resize(dim * dim);
  ws.geom_hess.resize(dim * dim * dim);
  ws.ref_hess_row.resize(dim * dim);
  double* J = ws.jac.data();
  double* Jinv = ws.jinv.data();
  double* Hg = ws.geom_hess.data();
  double* M = ws.ref_hess_row.data();

  // Affine fast path: if the geometry Hessian vanishes at the first point,
  // the mapping is affine and J, det and the curvature correction are
  // constant across the element.
  bool affine = true;
  {
    double scale = 0.0;
    for (int i = 0; i < nb * dim; ++i)
      scale = std::max(scale, std::abs(xn[i]));
    double hmax = 0.0;
    for (int m = 0; m < dim; ++m) {
      for (int ab = 0; ab < dim * dim; ++ab) {
        double s = 0.0;
        for (int b = 0; b < nb; ++b)
          s += xn[b * dim + m] * ref.hessian(0, b)[ab];
        hmax = std::max(hmax, std::abs(s));
      }
    }
    affine = hmax <= 1e-12 * std::max(scale, 1.0);
  }

  double det = 0.0;
  for (int q = 0; q < nq; ++q) {
    const bool compute_jac = (q == 0) || !affine;
    if (compute_jac) {
      for (int i = 0; i < dim * dim; ++i) J[i] = 0.0;
      for (int b = 0; b < nb; ++b) {
        std::span<const double> g = ref.gradient(q, b);
        for (int m = 0; m < dim; ++m) {
          const double x = xn[b * dim + m];
          for (int a = 0; a < dim; ++a) J[m * dim + a] += x * g[a];
        }
      }
      det = invert_small(J, Jinv, dim);
      if (!(det > 0.0))
        fail("degenerate element " + std::to_string(elem) +
             ": non-positive mapping Jacobian");
    }
    out.jxw[q] = det * ref.quadrature().weights[q];

    double* xq = out.coords.data() + static_cast<std::size_t>(q) * dim;
    for (int b = 0; b < nb; ++b) {
      const double v = ref.value(q, b);
      for (int m = 0; m < dim; ++m) xq[m] += v * xn[b * dim + m];
    }

    double* gq = out.grads.data() + static_cast<std::size_t>(q) * nb * dim;
    for (int b = 0; b < nb; ++b) {
      std::span<const double> g = ref.gradient(q, b);
      for (int m = 0; m < dim; ++m) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) s += Jinv[a * dim + m] * g[a];
        gq[b * dim + m] = s;
      }
    }

    double* lq = out.lapl.data() + static_cast<std::size_t>(q) * nb;
    if (affine) {
      // H_phys = J^{-T} H_ref J^{-1}; spatial trace only.
      for (int b = 0; b < nb; ++b) {
        std::span<const double> H = ref.hessian(q, b);
        double lap = 0.0;
        for (int s = 0; s < dim - 1; ++s) {
          double acc = 0.0;
          for (int a = 0; a < dim; ++a) {
            const double ja = Jinv[a * dim + s];
            if (ja == 0.0) continue;
            for (int c = 0; c < dim; ++c)
              acc += ja * H[a * dim + c] * Jinv[c * dim + s];
          }
          lap += acc;
        }
        lq[b] = lap;
      }
    } else {
      for (int m = 0; m < dim; ++m) {
        for (int ab = 0; ab < dim * dim; ++ab) {
          double s = 0.0;
          for (int b = 0; b < nb; ++b)
            s += xn[b * dim + m] * ref.hessian(q, b)[ab];
          Hg[m * dim * dim + ab] = s;
        }
      }
      for (int b = 0; b < nb; ++b) {
        std::span<const double> H = ref.hessian(q, b);
        const double* gb = gq + b * dim;
        for (int ab = 0; ab < dim * dim; ++ab) {
          double s = H[ab];
          for (int m = 0; m < dim; ++m) s -= gb[m] * Hg[m * dim * dim + ab];
          M[ab] = s;
        }
        double lap = 0.0;
        for (int s = 0; s < dim - 1; ++s) {
          double acc = 0.0;
          for (int a = 0; a < dim; ++a) {
            const double ja = Jinv[a * dim + s];
            if (ja == 0.0) continue;
            for (int c = 0; c < dim; ++c)
              acc += ja * M[a * dim + c] * Jinv[c * dim + s];
          }
          lap += acc;
        }
        lq[b] = lap;
      }
    }
  }
}

template <typename MeshT>
void map_facet_impl(const MeshT& mesh, int elem, const FacetTable& table,
                    const ReferenceElement& ref, MappedFacet& out) {
  const int dim = mesh.dim;
  const int nb = ref.n_basis();
  const int nq = table.quad.size();
  std::vector<double> node_coords;
  gather_node_coords(mesh, elem, node_coords);
  const double* xn = node_coords.data();

  out.dim = dim;
  out.nq = nq;
  out.nb = nb;
  out.measure_jxw.resize(nq);
  out.coords.assign(static_cast<std::size_t>(nq) * dim, 0.0);
  out.values.assign(table.values.begin(), table.values.end());
  out.grads.resize(static_cast<std::size_t>(nq) * nb * dim);
  out.lapl.resize(static_cast<std::size_t>(nq) * nb);
  out.normals.resize(static_cast<std::size_t>(nq) * dim);

  const int axis = table.face / 2;
  const double side = (table.face % 2 == 0) ? -1.0 : 1.0;

  std::vector<double> J(dim * dim), Jinv(dim * dim), Hg(dim * dim * dim),
      M(dim * dim);
  for (int q = 0; q < nq; ++q) {
    const double* vals = table.values.data() + static_cast<std::size_t>(q) * nb;
    const double* grads =
        table.gradients.data() + static_cast<std::size_t>(q) * nb * dim;

    for (int i = 0; i < dim * dim; ++i) J[i] = 0.0;
    for (int b = 0; b < nb; ++b)
      for (int m = 0; m < dim; ++m) {
        const double x = xn[b * dim + m];
        for (int a = 0; a < dim; ++a) J[m * dim + a] += x * grads[b * dim + a];
      }
    const double det = invert_small(J.data(), Jinv.data(), dim);
    if (!(det > 0.0))
      fail("degenerate element " + std::to_string(elem) +
           ": non-positive mapping Jacobian on facet");

    // Surface measure: sqrt(det(T^T T)) over the tangent columns of J.
    const int nt = dim - 1;
    double G[9];
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nt; ++j) {
        double s = 0.0;
        for (int m = 0; m < dim; ++m)
          s += J[m * dim + table.tangent_axes[i]] * J[m * dim + table.tangent_axes[j]];
        G[i * nt + j] = s;
      }
    double detG = 1.0;
    if (nt == 1)
      detG = G[0];
    else if (nt == 2)
      detG = G[0] * G[3] - G[1] * G[2];
    else {
      detG = G[0] * (G[4] * G[8] - G[5] * G[7]) -
             G[1] * (G[3] * G[8] - G[5] * G[6]) +
             G[2] * (G[3] * G[7] - G[4] * G[6]);
    }
    out.measure_jxw[q] = std::sqrt(std::max(detG, 0.0)) * table.quad.weights[q];

    // Outward unit normal ~ J^{-T} (side * e_axis).
    double nrm = 0.0;
    for (int m = 0; m < dim; ++m) {
      const double c = side * Jinv[axis * dim + m];
      out.normals[static_cast<std::size_t>(q) * dim + m] = c;
      nrm += c * c;
    }
    nrm = std::sqrt(nrm);
    for (int m = 0; m < dim; ++m)
      out.normals[static_cast<std::size_t>(q) * dim + m] /= nrm;

    double* xq = out.coords.data() + static_cast<std::size_t>(q) * dim;
    for (int b = 0; b < nb; ++b)
      for (int m = 0; m < dim; ++m) xq[m] += vals[b] * xn[b * dim + m];

    double* gq = out.grads.data() + static_cast<std::size_t>(q) * nb * dim;
    for (int b = 0; b < nb; ++b)
      for (int m = 0; m < dim; ++m) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a)
          s += Jinv[a * dim + m] * grads[b * dim + a];
        gq[b * dim + m] = s;
      }

    const double* hess =
        table.hessians.data() + static_cast<std::size_t>(q) * nb * dim * dim;
    for (int m = 0; m < dim; ++m)
      for (int ab = 0; ab < dim * dim; ++ab) {
        double s = 0.0;
        for (int b = 0; b < nb; ++b)
          s += xn[b * dim + m] * hess[b * dim * dim + ab];
        Hg[m * dim * dim + ab] = s;
      }
    double* lq = out.lapl.data() + static_cast<std::size_t>(q) * nb;
    for (int b = 0; b < nb; ++b) {
      const double* Hb = hess + b * dim * dim;
      const double* gb = gq + b * dim;
      for (int ab = 0; ab < dim * dim; ++ab) {
        double s = Hb[ab];
        for (int m = 0; m < dim; ++m) s -= gb[m] * Hg[m * dim * dim + ab];
        M[ab] = s;
      }
      double lap = 0.0;
      for (int s = 0; s < dim - 1; ++s) {
        double acc = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double ja = Jinv[a * dim + s];
          if (ja == 0.0) continue;
          for (int c = 0; c < dim; ++c)
            acc += ja * M[a * dim + c] * Jinv[c * dim + s];
        }
        lap += acc;
      }
      lq[b] = lap;
    }
  }
}

}  // namespace

void map_element(const SpaceTimeMesh& mesh, int elem, const ReferenceElement& ref,
                 ElementWorkspace& ws) {
  map_element_impl(mesh, elem, ref, ws);
}

void map_element(const SpatialMesh& mesh, int elem, const ReferenceElement& ref,
                 ElementWorkspace& ws) {
  map_element_impl(mesh, elem, ref, ws);
}

void map_facet(const SpaceTimeMesh& mesh, int elem, const FacetTable& table,
               const ReferenceElement& ref, MappedFacet& out) {
  map_facet_impl(mesh, elem, table, ref, out);
}

void map_facet(const SpatialMesh& mesh, int elem, const FacetTable& table,
               const ReferenceElement& ref, MappedFacet& out) {
  map_facet_impl(mesh, elem, table, ref, out);
}

std::vector<double> map_element_hessians(const SpaceTimeMesh& mesh, int elem,
                                         const ReferenceElement& ref) {
  const int dim = mesh.dim;
  const int nb = ref.n_basis();
  const int nq = ref.n_quad();
  ElementWorkspace ws;
  map_element(mesh, elem, ref, ws);

  std::vector<double> node_coords;
  gather_node_coords(mesh, elem, node_coords);
  const double* xn = node_coords.data();

  std::vector<double> out(static_cast<std::size_t>(nq) * nb * dim * dim);
  std::vector<double> J(dim * dim), Jinv(dim * dim), Hg(dim * dim * dim),
      M(dim * dim);
  for (int q = 0; q < nq; ++q) {
    for (int i = 0; i < dim * dim; ++i) J[i] = 0.0;
    for (int b = 0; b < nb; ++b) {
      std::span<const double> g = ref.gradient(q, b);
      for (int m = 0; m < dim; ++m)
        for (int a = 0; a < dim; ++a)
          J[m * dim + a] += xn[b * dim + m] * g[a];
    }
    invert_small(J.data(), Jinv.data(), dim);
    for (int m = 0; m < dim; ++m)
      for (int ab = 0; ab < dim * dim; ++ab) {
        double s = 0.0;
        for (int b = 0; b < nb; ++b)
          s += xn[b * dim + m] * ref.hessian(q, b)[ab];
        Hg[m * dim * dim + ab] = s;
      }
    for (int b = 0; b < nb; ++b) {
      std::span<const double> H = ref.hessian(q, b);
      std::span<const double> gb = ws.mapped.grad(q, b);
      for (int ab = 0; ab < dim * dim; ++ab) {
        double s = H[ab];
        for (int m = 0; m < dim; ++m) s -= gb[m] * Hg[m * dim * dim + ab];
        M[ab] = s;
      }
      double* Hout =
          out.data() + (static_cast<std::size_t>(q) * nb + b) * dim * dim;
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
          double acc = 0.0;
          for (int a = 0; a < dim; ++a)
            for (int e = 0; e < dim; ++e)
              acc += Jinv[a * dim + r] * M[a * dim + e] * Jinv[e * dim + c];
          Hout[r * dim + c] = acc;
        }
    }
  }
  return out;
}

void interpolate(const SpaceTimeMesh& mesh, int elem, const ReferenceElement& ref,
                 const MappedElement& mapped, std::span<const double> state,
                 int n_fields, int component, InterpolatedField& out) {
  require(component >= 0 && component < n_fields, "interpolate: bad component");
  const int dim = mapped.dim;
  const int nq = mapped.nq;
  const int nb = mapped.nb;
  std::span<const int> nodes = mesh.elem_nodes(elem);

  out.value.assign(nq, 0.0);
  out.gradient.assign(static_cast<std::size_t>(nq) * dim, 0.0);
  out.laplacian.assign(nq, 0.0);
  for (int q = 0; q < nq; ++q) {
    for (int b = 0; b < nb; ++b) {
      const double coeff = state[static_cast<std::size_t>(nodes[b]) * n_fields +
                                 component];
      out.value[q] += coeff * ref.value(q, b);
      std::span<const double> g = mapped.grad(q, b);
      for (int a = 0; a < dim; ++a)
        out.gradient[static_cast<std::size_t>(q) * dim + a] += coeff * g[a];
      out.laplacian[q] += coeff * mapped.lapl[static_cast<std::size_t>(q) * nb + b];
    }
  }
}

double mesh_volume(const SpaceTimeMesh& mesh) {
  ReferenceElement ref =
      ReferenceElement::create(mesh.dim, mesh.order, mesh.order + 1);
  ElementWorkspace ws;
  double vol = 0.0;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    map_element(mesh, e, ref, ws);
    for (double j : ws.mapped.jxw) vol += j;
  }
  return vol;
}

double facet_measure(const SpaceTimeMesh& mesh, const BoundaryFacet& facet) {
  ReferenceElement ref =
      ReferenceElement::create(mesh.dim, mesh.order, mesh.order + 1);
  FacetTable table = tabulate_facet(ref, facet.local_face, mesh.order + 1);
  MappedFacet mf;
  map_facet(mesh, facet.elem, table, ref, mf);
  double a = 0.0;
  for (double m : mf.measure_jxw) a += m;
  return a;
}

}  // namespace stvms
