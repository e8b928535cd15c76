#include "stvms/stabilization.hpp"

#include <cmath>

namespace stvms {

double element_size(const SpaceTimeMesh& mesh, int elem) {
  const int dim = mesh.dim;
  const int order = mesh.order;
  const int n1d = order + 1;
  std::span<const int> nodes = mesh.elem_nodes(elem);

  // Corner lattice local indices and strides per axis.
  int strides[4] = {1, 0, 0, 0};
  for (int a = 1; a < dim; ++a) strides[a] = strides[a - 1] * n1d;

  const int n_corners = 1 << dim;
  double hmin = std::numeric_limits<double>::max();
  for (int c = 0; c < n_corners; ++c) {
    int local = 0;
    for (int a = 0; a < dim; ++a)
      if (c & (1 << a)) local += order * strides[a];
    for (int a = 0; a < dim; ++a) {
      if (c & (1 << a)) continue;  // each edge once, from the low corner
      const int other = local + order * strides[a];
      std::span<const double> x0 = mesh.node(nodes[local]);
      std::span<const double> x1 = mesh.node(nodes[other]);
      double d2 = 0.0;
      for (int m = 0; m < dim; ++m) {
        const double d = x1[m] - x0[m];
        d2 += d * d;
      }
      hmin = std::min(hmin, std::sqrt(d2));
    }
  }
  return hmin;
}

}  // namespace stvms
