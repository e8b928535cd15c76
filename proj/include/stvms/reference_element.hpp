#pragma once

#include <vector>

#include "stvms/core.hpp"
#include "stvms/quadrature.hpp"

namespace stvms {

// Tensor-product Lagrange element (Q1/Q2) on [-1,1]^dim with values, reference
// gradients and reference Hessians tabulated at the quadrature points of a
// tensor Gauss rule. Local basis ordering is lexicographic with axis 0 fastest;
// for space-time elements the last axis is time.
class ReferenceElement {
 public:
  static ReferenceElement create(int dim, int order, int quad_points_per_axis);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int n_basis() const { return n_basis_; }
  const QuadratureRule& quadrature() const { return quad_; }
  int n_quad() const { return quad_.size(); }

  // Tabulated data at quadrature point q.
  double value(int q, int b) const { return values_[idx2(q, b)]; }
  std::span<const double> gradient(int q, int b) const {
    return {gradients_.data() + (idx2(q, b)) * dim_,
            static_cast<std::size_t>(dim_)};
  }
  std::span<const double> hessian(int q, int b) const {
    return {hessians_.data() + (idx2(q, b)) * dim_ * dim_,
            static_cast<std::size_t>(dim_ * dim_)};
  }

  // Raw tables, [q][b] and [q][b][dim] layouts.
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& gradients() const { return gradients_; }
  const std::vector<double>& hessians() const { return hessians_; }

  // Nodal points of the Lagrange basis in reference coordinates.
  std::vector<double> node_points() const;

  // Basis evaluation at an arbitrary reference point. Output spans must hold
  // n_basis, n_basis*dim and n_basis*dim*dim entries; grads/hess may be empty.
  void eval_basis(std::span<const double> xi, std::span<double> values,
                  std::span<double> grads, std::span<double> hess) const;

 private:
  std::size_t idx2(int q, int b) const {
    return static_cast<std::size_t>(q) * n_basis_ + b;
  }

  int dim_ = 0;
  int order_ = 0;
  int n_basis_ = 0;
  QuadratureRule quad_;
  std::vector<double> values_;
  std::vector<double> gradients_;
  std::vector<double> hessians_;
};

// Tabulation of element basis data on a local face (reference axis fixed to
// +-1), at the points of a (dim-1)-dimensional tensor Gauss rule. Face index f
// fixes axis f/2 at side f%2 (0 -> -1, 1 -> +1).
struct FacetTable {
  int face = 0;
  QuadratureRule quad;              // (dim-1)-dimensional rule
  std::vector<double> values;       // [q][b]
  std::vector<double> gradients;    // [q][b][dim], reference
  std::vector<double> hessians;     // [q][b][dim][dim], reference
  std::vector<int> tangent_axes;    // the dim-1 free reference axes
};

FacetTable tabulate_facet(const ReferenceElement& ref, int face,
                          int quad_points_per_axis);

}  // namespace stvms
