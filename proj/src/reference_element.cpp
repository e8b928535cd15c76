#include "stvms/reference_element.hpp"

namespace stvms {

namespace {

// 1D Lagrange shape functions on [-1,1] with nodes {-1,1} (order 1) or
// {-1,0,1} (order 2).
inline void shape_1d(int order, double x, double* n, double* dn, double* d2n) {
  if (order == 1) {
    n[0] = 0.5 * (1.0 - x);
    n[1] = 0.5 * (1.0 + x);
    dn[0] = -0.5;
    dn[1] = 0.5;
    d2n[0] = 0.0;
    d2n[1] = 0.0;
  } else {
    n[0] = 0.5 * x * (x - 1.0);
    n[1] = 1.0 - x * x;
    n[2] = 0.5 * x * (x + 1.0);
    dn[0] = x - 0.5;
    dn[1] = -2.0 * x;
    dn[2] = x + 0.5;
    d2n[0] = 1.0;
    d2n[1] = -2.0;
    d2n[2] = 1.0;
  }
}

}  // namespace

void ReferenceElement::eval_basis(std::span<const double> xi,
                                  std::span<double> values,
                                  std::span<double> grads,
                                  std::span<double> hess) const {
  const int n1d = order_ + 1;
  double n[4][3], dn[4][3], d2n[4][3];
  for (int a = 0; a < dim_; ++a) shape_1d(order_, xi[a], n[a], dn[a], d2n[a]);

  for (int b = 0; b < n_basis_; ++b) {
    int rem = b;
    int ids[4] = {0, 0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      ids[a] = rem % n1d;
      rem /= n1d;
    }
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= n[a][ids[a]];
    values[b] = v;

    if (!grads.empty()) {
      for (int g = 0; g < dim_; ++g) {
        double p = 1.0;
        for (int a = 0; a < dim_; ++a)
          p *= (a == g) ? dn[a][ids[a]] : n[a][ids[a]];
        grads[static_cast<std::size_t>(b) * dim_ + g] = p;
      }
    }
    if (!hess.empty()) {
      for (int g = 0; g < dim_; ++g) {
        for (int h = 0; h < dim_; ++h) {
          double p = 1.0;
          for (int a = 0; a < dim_; ++a) {
            if (a == g && a == h)
              p *= d2n[a][ids[a]];
            else if (a == g || a == h)
              p *= dn[a][ids[a]];
            else
              p *= n[a][ids[a]];
          }
          hess[(static_cast<std::size_t>(b) * dim_ + g) * dim_ + h] = p;
        }
      }
    }
  }
}

ReferenceElement ReferenceElement::create(int dim, int order,
                                          int quad_points_per_axis) {
  require(dim >= 1 && dim <= 4, "reference element: dim must be in [1,4]");
  require(order == 1 || order == 2, "reference element: order must be 1 or 2");
  require(quad_points_per_axis >= order + 1,
          "reference element: need at least order+1 quadrature points per axis");

  ReferenceElement ref;
  ref.dim_ = dim;
  ref.order_ = order;
  ref.n_basis_ = 1;
  for (int a = 0; a < dim; ++a) ref.n_basis_ *= order + 1;
  ref.quad_ = tensor_gauss(dim, quad_points_per_axis);

  const int nq = ref.quad_.size();
  const int nb = ref.n_basis_;
  ref.values_.resize(static_cast<std::size_t>(nq) * nb);
  ref.gradients_.resize(static_cast<std::size_t>(nq) * nb * dim);
  ref.hessians_.resize(static_cast<std::size_t>(nq) * nb * dim * dim);
  for (int q = 0; q < nq; ++q) {
    ref.eval_basis(
        ref.quad_.point(q),
        {ref.values_.data() + static_cast<std::size_t>(q) * nb,
         static_cast<std::size_t>(nb)},
        {ref.gradients_.data() + static_cast<std::size_t>(q) * nb * dim,
         static_cast<std::size_t>(nb) * dim},
        {ref.hessians_.data() + static_cast<std::size_t>(q) * nb * dim * dim,
         static_cast<std::size_t>(nb) * dim * dim});
  }
  return ref;
}

std::vector<double> ReferenceElement::node_points() const {
  const int n1d = order_ + 1;
  const double coords1d[3] = {-1.0, (order_ == 1) ? 1.0 : 0.0, 1.0};
  std::vector<double> pts(static_cast<std::size_t>(n_basis_) * dim_);
  for (int b = 0; b < n_basis_; ++b) {
    int rem = b;
    for (int a = 0; a < dim_; ++a) {
      pts[static_cast<std::size_t>(b) * dim_ + a] = coords1d[rem % n1d];
      rem /= n1d;
    }
  }
  return pts;
}

FacetTable tabulate_facet(const ReferenceElement& ref, int face,
                          int quad_points_per_axis) {
  const int dim = ref.dim();
  require(face >= 0 && face < 2 * dim, "tabulate_facet: bad face index");
  const int axis = face / 2;
  const double side = (face % 2 == 0) ? -1.0 : 1.0;

  FacetTable tab;
  tab.face = face;
  tab.quad = tensor_gauss(dim - 1, quad_points_per_axis);
  for (int a = 0; a < dim; ++a)
    if (a != axis) tab.tangent_axes.push_back(a);

  const int nq = tab.quad.size();
  const int nb = ref.n_basis();
  tab.values.resize(static_cast<std::size_t>(nq) * nb);
  tab.gradients.resize(static_cast<std::size_t>(nq) * nb * dim);
  tab.hessians.resize(static_cast<std::size_t>(nq) * nb * dim * dim);
  for (int q = 0; q < nq; ++q) {
    double xi[4] = {0, 0, 0, 0};
    xi[axis] = side;
    std::span<const double> fq = tab.quad.point(q);
    for (int a = 0; a < dim - 1; ++a) xi[tab.tangent_axes[a]] = fq[a];
    ref.eval_basis(
        {xi, static_cast<std::size_t>(dim)},
        {tab.values.data() + static_cast<std::size_t>(q) * nb,
         static_cast<std::size_t>(nb)},
        {tab.gradients.data() + static_cast<std::size_t>(q) * nb * dim,
         static_cast<std::size_t>(nb) * dim},
        {tab.hessians.data() + static_cast<std::size_t>(q) * nb * dim * dim,
         static_cast<std::size_t>(nb) * dim * dim});
  }
  return tab;
}

}  // namespace stvms
