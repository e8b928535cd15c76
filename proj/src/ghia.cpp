#include "stvms/ghia.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace stvms {

namespace {

// Inverse isoparametric mapping by Newton iteration on the reference cube;
// returns false when the point is not inside this element.
bool invert_mapping(const SpatialMesh& mesh, int elem,
                    const ReferenceElement& ref, std::span<const double> point,
                    std::span<double> xi) {
  const int dim = mesh.dim;
  const int nb = ref.n_basis();
  std::span<const int> nodes = mesh.elem_nodes(elem);
  std::vector<double> N(nb), dN(static_cast<std::size_t>(nb) * dim);
  for (int a = 0; a < dim; ++a) xi[a] = 0.0;

  for (int it = 0; it < 30; ++it) {
    ref.eval_basis({xi.data(), static_cast<std::size_t>(dim)}, N, dN, {});
    double r[3] = {0, 0, 0};
    double J[9] = {0};
    for (int b = 0; b < nb; ++b) {
      std::span<const double> x = mesh.node(nodes[b]);
      for (int m = 0; m < dim; ++m) {
        r[m] += N[b] * x[m];
        for (int a = 0; a < dim; ++a)
          J[m * dim + a] += dN[static_cast<std::size_t>(b) * dim + a] * x[m];
      }
    }
    for (int m = 0; m < dim; ++m) r[m] -= point[m];
    double err = 0.0;
    for (int m = 0; m < dim; ++m) err += r[m] * r[m];
    if (err < 1e-26) break;

    // solve J dxi = r (2x2 or 3x3)
    if (dim == 2) {
      const double det = J[0] * J[3] - J[1] * J[2];
      if (std::abs(det) < 1e-300) return false;
      const double d0 = (J[3] * r[0] - J[1] * r[1]) / det;
      const double d1 = (-J[2] * r[0] + J[0] * r[1]) / det;
      xi[0] -= d0;
      xi[1] -= d1;
    } else {
      const double det = J[0] * (J[4] * J[8] - J[5] * J[7]) -
                         J[1] * (J[3] * J[8] - J[5] * J[6]) +
                         J[2] * (J[3] * J[7] - J[4] * J[6]);
      if (std::abs(det) < 1e-300) return false;
      const double inv[9] = {
          (J[4] * J[8] - J[5] * J[7]) / det, (J[2] * J[7] - J[1] * J[8]) / det,
          (J[1] * J[5] - J[2] * J[4]) / det, (J[5] * J[6] - J[3] * J[8]) / det,
          (J[0] * J[8] - J[2] * J[6]) / det, (J[2] * J[3] - J[0] * J[5]) / det,
          (J[3] * J[7] - J[4] * J[6]) / det, (J[1] * J[6] - J[0] * J[7]) / det,
          (J[0] * J[4] - J[1] * J[3]) / det};
      for (int m = 0; m < dim; ++m) {
        double d = 0.0;
        for (int a = 0; a < dim; ++a) d += inv[m * dim + a] * r[a];
        xi[m] -= d;
      }
    }
  }
  const double tol = 1e-8;
  for (int a = 0; a < dim; ++a)
    if (xi[a] < -1.0 - tol || xi[a] > 1.0 + tol) return false;
  return true;
}

}  // namespace

double sample_slice(const TemporalSlice& slice, std::span<const double> point,
                    int component) {
  const SpatialMesh& mesh = slice.mesh;
  const int dim = mesh.dim;
  const int nf = dim + 1;
  ReferenceElement ref = ReferenceElement::create(dim, mesh.order, mesh.order + 1);
  const int nb = ref.n_basis();

  double xi[3];
  std::vector<double> N(nb);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    // quick reject on the element bounding box
    std::span<const int> nodes = mesh.elem_nodes(e);
    bool inside_box = true;
    for (int a = 0; a < dim && inside_box; ++a) {
      double lo = std::numeric_limits<double>::max(), hi = -lo;
      for (int b = 0; b < nb; ++b) {
        const double x = mesh.node(nodes[b])[a];
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      const double pad = 1e-9 * std::max(1.0, hi - lo) + 1e-12;
      if (point[a] < lo - pad || point[a] > hi + pad) inside_box = false;
    }
    if (!inside_box) continue;
    if (!invert_mapping(mesh, e, ref, point, {xi, static_cast<std::size_t>(dim)}))
      continue;
    ref.eval_basis({xi, static_cast<std::size_t>(dim)}, N, {}, {});
    double value = 0.0;
    for (int b = 0; b < nb; ++b)
      value += N[b] *
               slice.fields[static_cast<std::size_t>(nodes[b]) * nf + component];
    return value;
  }
  fail("sample_slice: point outside the mesh");
}

double ghia_re1000_max_deviation(const TemporalSlice& slice) {
  double worst = 0.0;
  for (int i = 0; i < ghia::kCount; ++i) {
    const double pt[2] = {0.5, ghia::kY[i]};
    const double ux = sample_slice(slice, {pt, 2}, 0);
    worst = std::max(worst, std::abs(ux - ghia::kU_Re1000[i]));
  }
  return worst;
}

}  // namespace stvms
