#include "stvms/quadrature.hpp"

namespace stvms {

// Newton iteration on Legendre polynomials; standard symmetric-root seeding.
GaussRule1D gauss_1d(int n) {
  require(n >= 1 && n <= 30, "gauss_1d: points per axis must be in [1,30]");
  GaussRule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n(x) and P_n'(x) via the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double p = (n == 1) ? x : p1;
      double pm1 = (n == 1) ? 1.0 : p0;
      dp = n * (x * p - pm1) / (x * x - 1.0);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.points[i] = -x;
    rule.points[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2] = 0.0;
  return rule;
}

QuadratureRule tensor_gauss(int dim, int points_per_axis) {
  require(dim >= 1 && dim <= 4, "tensor_gauss: dim must be in [1,4]");
  const GaussRule1D g = gauss_1d(points_per_axis);
  const int n = points_per_axis;
  int total = 1;
  for (int a = 0; a < dim; ++a) total *= n;

  QuadratureRule rule;
  rule.dim = dim;
  rule.points_per_axis = n;
  rule.points.resize(static_cast<std::size_t>(total) * dim);
  rule.weights.resize(total);
  for (int q = 0; q < total; ++q) {
    int rem = q;
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      const int ia = rem % n;
      rem /= n;
      rule.points[static_cast<std::size_t>(q) * dim + a] = g.points[ia];
      w *= g.weights[ia];
    }
    rule.weights[q] = w;
  }
  return rule;
}

}  // namespace stvms
