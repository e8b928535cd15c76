#pragma once

#include <vector>

#include "stvms/core.hpp"

namespace stvms {

// One-dimensional Gauss-Legendre rule on [-1,1], exact for degree <= 2n-1.
struct GaussRule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

GaussRule1D gauss_1d(int n);

// Tensor-product rule on [-1,1]^dim. Point i occupies points[i*dim .. i*dim+dim).
// Weights sum to 2^dim.
struct QuadratureRule {
  int dim = 0;
  int points_per_axis = 0;
  std::vector<double> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
  std::span<const double> point(int q) const {
    return {points.data() + static_cast<std::size_t>(q) * dim,
            static_cast<std::size_t>(dim)};
  }
};

QuadratureRule tensor_gauss(int dim, int points_per_axis);

}  // namespace stvms
