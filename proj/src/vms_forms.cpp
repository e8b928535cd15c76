#include "stvms/vms_forms.hpp"

#include <cmath>

namespace stvms {

void apply_Ltilde(std::span<const double> a, double div_a,
                  std::span<const double> u_value, std::span<const double> u_grad,
                  std::span<const double> u_dt, std::span<double> out) {
  const int d = static_cast<int>(u_value.size());
  for (int c = 0; c < d; ++c) {
    double v = u_dt[c] + 0.5 * div_a * u_value[c];
    for (int j = 0; j < d; ++j) v += a[j] * u_grad[static_cast<std::size_t>(c) * d + j];
    out[c] = v;
  }
}

double element_advection_norm(const SpaceTimeMesh& mesh, int elem,
                              const ReferenceElement& ref,
                              std::span<const double> state,
                              const AdvectionField* advection) {
  const int dim = mesh.dim;
  const int d = dim - 1;
  const int nf = d + 1;
  const int nb = ref.n_basis();
  std::span<const int> nodes = mesh.elem_nodes(elem);

  double max_sq = 0.0;
  for (int q = 0; q < ref.n_quad(); ++q) {
    double a[3] = {0, 0, 0};
    if (advection) {
      double x[4] = {0, 0, 0, 0};
      for (int b = 0; b < nb; ++b) {
        const double v = ref.value(q, b);
        std::span<const double> xb = mesh.node(nodes[b]);
        for (int m = 0; m < dim; ++m) x[m] += v * xb[m];
      }
      double div_a = 0.0;
      (*advection)({x, static_cast<std::size_t>(dim)},
                   {a, static_cast<std::size_t>(d)}, div_a);
    } else {
      for (int b = 0; b < nb; ++b) {
        const double v = ref.value(q, b);
        const double* ub = state.data() + static_cast<std::size_t>(nodes[b]) * nf;
        for (int c = 0; c < d; ++c) a[c] += v * ub[c];
      }
    }
    double sq = 1.0;  // the spatiotemporal extension a~ = (a, 1)
    for (int c = 0; c < d; ++c) sq += a[c] * a[c];
    max_sq = std::max(max_sq, sq);
  }
  return std::sqrt(max_sq);
}

std::vector<ElementStab> compute_element_stabs(
    const SpaceTimeMesh& mesh, const ReferenceElement& ref,
    std::span<const double> state, const StabilizationParams& params,
    const AdvectionField* advection) {
  std::vector<ElementStab> stabs(mesh.n_elems());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const double h = element_size(mesh, e);
    const double a_inf = element_advection_norm(mesh, e, ref, state, advection);
    stabs[e] = {tau_m(params, h, a_inf), tau_c(params, h, a_inf)};
  }
  return stabs;
}

namespace {

// Per-quadrature-point field values shared by the volume and facet kernels.
struct QpFields {
  double u[3];       // velocity
  double gu[3][4];   // space-time gradient per component
  double lap_u[3];   // spatial Laplacian per component
  double p;
  double gp[3];      // spatial pressure gradient
  double a[3];       // advection
  double div_a;
  double div_u;
  double f[3];       // forcing
  double Rm[3];      // L~_a u - nu lap u + grad p
};

inline void eval_qp_fields(std::span<const int> nodes, int nb, int d, int dim,
                           const double* values, const double* grads,
                           const double* lapl, std::span<const double> state,
                           std::span<const double> xq, double nu,
                           const Forcing* forcing,
                           const AdvectionField* advection, QpFields& F) {
  const int nf = d + 1;
  for (int c = 0; c < d; ++c) {
    F.u[c] = 0.0;
    F.lap_u[c] = 0.0;
    for (int m = 0; m < dim; ++m) F.gu[c][m] = 0.0;
    F.f[c] = 0.0;
  }
  F.p = 0.0;
  for (int m = 0; m < d; ++m) F.gp[m] = 0.0;

  for (int b = 0; b < nb; ++b) {
    const double* coeff = state.data() + static_cast<std::size_t>(nodes[b]) * nf;
    const double v = values[b];
    const double* g = grads + static_cast<std::size_t>(b) * dim;
    const double l = lapl[b];
    for (int c = 0; c < d; ++c) {
      const double uc = coeff[c];
      F.u[c] += v * uc;
      F.lap_u[c] += l * uc;
      for (int m = 0; m < dim; ++m) F.gu[c][m] += g[m] * uc;
    }
    const double pc = coeff[d];
    F.p += v * pc;
    for (int m = 0; m < d; ++m) F.gp[m] += g[m] * pc;
  }

  F.div_u = 0.0;
  for (int c = 0; c < d; ++c) F.div_u += F.gu[c][c];

  if (advection) {
    (*advection)(xq, {F.a, static_cast<std::size_t>(d)}, F.div_a);
  } else {
    for (int c = 0; c < d; ++c) F.a[c] = F.u[c];
    F.div_a = F.div_u;
  }

  if (forcing) (*forcing)(xq, {F.f, static_cast<std::size_t>(d)});

  for (int c = 0; c < d; ++c) {
    double r = F.gu[c][dim - 1] + 0.5 * F.div_a * F.u[c] - nu * F.lap_u[c] + F.gp[c];
    for (int j = 0; j < d; ++j) r += F.a[j] * F.gu[c][j];
    F.Rm[c] = r;
  }
}

}  // namespace

void element_system(const SpaceTimeMesh& mesh, int elem,
                    const ReferenceElement& ref, std::span<const double> state,
                    const StabilizationParams& params, const ElementStab& stab,
                    const Forcing* forcing, const AdvectionField* advection,
                    const TermFlags& flags, bool want_jacobian,
                    ElementWorkspace& ws, ElementSystem& out) {
  const int dim = mesh.dim;
  const int d = dim - 1;
  const int nf = d + 1;
  const int nb = ref.n_basis();
  const int nloc = nb * nf;
  const double nu = params.nu;
  const double tm = flags.supg ? stab.tau_m : 0.0;
  const double tc = flags.graddiv ? stab.tau_c : 0.0;
  const double sgnB = flags.paper_literal_signs ? 1.0 : -1.0;

  map_element(mesh, elem, ref, ws);
  const MappedElement& M = ws.mapped;
  std::span<const int> nodes = mesh.elem_nodes(elem);

  out.reset(elem, nloc, want_jacobian);
  double* res = out.residual.data();
  double* jac = want_jacobian ? out.jacobian.data() : nullptr;

  // test/trial operator scratch: s_b = L~_a N_b, WB_b = s_b + sgnB*nu*lap N_b,
  // WL_b = s_b - nu*lap N_b
  ws.test_ops.resize(static_cast<std::size_t>(nb) * 3);
  double* s = ws.test_ops.data();
  double* WB = s + nb;
  double* WL = WB + nb;

  QpFields F;
  const bool adv_state = advection == nullptr;

  for (int q = 0; q < M.nq; ++q) {
    const double jxw = M.jxw[q];
    const double* vals = ref.values().data() + static_cast<std::size_t>(q) * nb;
    const double* grads = M.grads.data() + static_cast<std::size_t>(q) * nb * dim;
    const double* lapl = M.lapl.data() + static_cast<std::size_t>(q) * nb;
    eval_qp_fields(nodes, nb, d, dim, vals, grads, lapl, state, M.point(q), nu,
                   forcing, advection, F);

    for (int b = 0; b < nb; ++b) {
      const double* g = grads + static_cast<std::size_t>(b) * dim;
      double sb = g[dim - 1] + 0.5 * F.div_a * vals[b];
      for (int j = 0; j < d; ++j) sb += F.a[j] * g[j];
      s[b] = sb;
      WB[b] = sb + sgnB * nu * lapl[b];
      WL[b] = sb - nu * lapl[b];
    }

    double Rres[3];  // Rm - f, the full momentum residual
    for (int c = 0; c < d; ++c) Rres[c] = F.Rm[c] - F.f[c];

    // residual
    for (int i = 0; i < nb; ++i) {
      const double Ni = vals[i];
      const double* gNi = grads + static_cast<std::size_t>(i) * dim;
      double* ri = res + static_cast<std::size_t>(i) * nf;
      for (int c = 0; c < d; ++c) {
        double r = 0.0;
        if (flags.galerkin) {
          double visc = 0.0;
          for (int m = 0; m < d; ++m) visc += F.gu[c][m] * gNi[m];
          r += -F.u[c] * s[i] + nu * visc - F.p * gNi[c] - F.f[c] * Ni;
        }
        r += tc * F.div_u * gNi[c];
        if (flags.supg) {
          if (flags.paper_literal_signs)
            r += tm * (F.Rm[c] * WB[i] - F.f[c] * WL[i]);
          else
            r += tm * Rres[c] * WB[i];
        }
        ri[c] += jxw * r;
      }
      double rp = 0.0;
      if (flags.galerkin) rp += F.div_u * Ni;
      if (flags.supg) {
        double sup = 0.0;
        for (int c = 0; c < d; ++c) sup += Rres[c] * gNi[c];
        rp += tm * sup;
      }
      ri[d] += jxw * rp;
    }

    if (!want_jacobian) continue;

    // coefficient of the advection-linearization helper
    //   B1_ij(e) = N_j dN_i/dx_e + 1/2 dN_j/dx_e N_i
    double vec1[3];
    for (int c = 0; c < d; ++c)
      vec1[c] = (flags.galerkin ? -F.u[c] : 0.0) + tm * Rres[c];

    for (int i = 0; i < nb; ++i) {
      const double Ni = vals[i];
      const double* gNi = grads + static_cast<std::size_t>(i) * dim;
      const double WBi = WB[i];
      for (int j = 0; j < nb; ++j) {
        const double Nj = vals[j];
        const double* gNj = grads + static_cast<std::size_t>(j) * dim;
        double gsp = 0.0;
        for (int m = 0; m < d; ++m) gsp += gNi[m] * gNj[m];

        double K = tm * WL[j] * WBi;
        if (flags.galerkin) K += -Nj * s[i] + nu * gsp;

        for (int c = 0; c < d; ++c) {
          double* row = jac + static_cast<std::size_t>(i * nf + c) * nloc + j * nf;
          for (int e = 0; e < d; ++e) {
            double v = (c == e) ? K : 0.0;
            v += tc * gNj[e] * gNi[c];
            if (adv_state) {
              const double B1 = Nj * gNi[e] + 0.5 * gNj[e] * Ni;
              v += vec1[c] * B1;
              v += tm * WBi * (Nj * F.gu[c][e] + 0.5 * gNj[e] * F.u[c]);
            }
            row[e] += jxw * v;
          }
          double vp = tm * gNj[c] * WBi;
          if (flags.galerkin) vp += -Nj * gNi[c];
          row[d] += jxw * vp;
        }

        double* prow = jac + static_cast<std::size_t>(i * nf + d) * nloc + j * nf;
        for (int e = 0; e < d; ++e) {
          double v = flags.galerkin ? gNj[e] * Ni : 0.0;
          if (flags.supg) {
            double sup = WL[j] * gNi[e];
            if (adv_state)
              for (int c = 0; c < d; ++c)
                sup += (Nj * F.gu[c][e] + 0.5 * gNj[e] * F.u[c]) * gNi[c];
            v += tm * sup;
          }
          prow[e] += jxw * v;
        }
        prow[d] += jxw * tm * gsp;
      }
    }
  }
}

void gammaT_facet_system(const SpaceTimeMesh& mesh, const BoundaryFacet& facet,
                         const ReferenceElement& ref, const FacetTable& table,
                         std::span<const double> state,
                         const StabilizationParams& params,
                         const ElementStab& stab, const Forcing* forcing,
                         const AdvectionField* advection, bool want_jacobian,
                         ElementWorkspace& ws, ElementSystem& out) {
  require(facet.tag == StTag::GammaT,
          "gammaT_facet_system: facet is not on GammaT");
  const int dim = mesh.dim;
  const int d = dim - 1;
  const int nf = d + 1;
  const int nb = ref.n_basis();
  const int nloc = nb * nf;
  const double nu = params.nu;
  const double tm = stab.tau_m;

  map_facet(mesh, facet.elem, table, ref, ws.mapped_facet);
  const MappedFacet& M = ws.mapped_facet;
  std::span<const int> nodes = mesh.elem_nodes(facet.elem);

  double* res = out.residual.data();
  double* jac = want_jacobian ? out.jacobian.data() : nullptr;

  QpFields F;
  const bool adv_state = advection == nullptr;
  for (int q = 0; q < M.nq; ++q) {
    const double jxw = M.measure_jxw[q];
    const double* vals = M.values.data() + static_cast<std::size_t>(q) * nb;
    const double* grads = M.grads.data() + static_cast<std::size_t>(q) * nb * dim;
    const double* lapl = M.lapl.data() + static_cast<std::size_t>(q) * nb;
    eval_qp_fields(nodes, nb, d, dim, vals, grads, lapl, state,
                   {M.coords.data() + static_cast<std::size_t>(q) * dim,
                    static_cast<std::size_t>(dim)},
                   nu, forcing, advection, F);

    double Rres[3];
    for (int c = 0; c < d; ++c) Rres[c] = F.Rm[c] - F.f[c];

    for (int i = 0; i < nb; ++i) {
      const double Ni = vals[i];
      double* ri = res + static_cast<std::size_t>(i) * nf;
      for (int c = 0; c < d; ++c)
        ri[c] += jxw * (F.u[c] * Ni - tm * Rres[c] * Ni);
    }

    if (!want_jacobian) continue;

    for (int i = 0; i < nb; ++i) {
      const double Ni = vals[i];
      for (int j = 0; j < nb; ++j) {
        const double Nj = vals[j];
        const double* gNj = grads + static_cast<std::size_t>(j) * dim;
        double sj = gNj[dim - 1] + 0.5 * F.div_a * Nj;
        for (int m = 0; m < d; ++m) sj += F.a[m] * gNj[m];
        const double WLj = sj - nu * lapl[j];
        for (int c = 0; c < d; ++c) {
          double* row = jac + static_cast<std::size_t>(i * nf + c) * nloc + j * nf;
          for (int e = 0; e < d; ++e) {
            double v = (c == e) ? (Nj * Ni - tm * WLj * Ni) : 0.0;
            if (adv_state)
              v -= tm * (Nj * F.gu[c][e] + 0.5 * gNj[e] * F.u[c]) * Ni;
            row[e] += jxw * v;
          }
          row[d] += jxw * (-tm * gNj[c] * Ni);
        }
      }
    }
  }
}

void outflow_facet_system(const SpaceTimeMesh& mesh, const BoundaryFacet& facet,
                          const ReferenceElement& ref, const FacetTable& table,
                          std::span<const double> state,
                          const AdvectionField* advection, bool want_jacobian,
                          ElementWorkspace& ws, ElementSystem& out) {
  require(facet.tag == StTag::GammaS,
          "outflow_facet_system: facet is not on GammaS");
  const int dim = mesh.dim;
  const int d = dim - 1;
  const int nf = d + 1;
  const int nb = ref.n_basis();
  const int nloc = nb * nf;

  map_facet(mesh, facet.elem, table, ref, ws.mapped_facet);
  const MappedFacet& M = ws.mapped_facet;
  std::span<const int> nodes = mesh.elem_nodes(facet.elem);

  double* res = out.residual.data();
  double* jac = want_jacobian ? out.jacobian.data() : nullptr;
  const bool adv_state = advection == nullptr;

  for (int q = 0; q < M.nq; ++q) {
    const double jxw = M.measure_jxw[q];
    const double* vals = M.values.data() + static_cast<std::size_t>(q) * nb;
    const double* n = M.normals.data() + static_cast<std::size_t>(q) * dim;

    double u[3] = {0, 0, 0};
    for (int b = 0; b < nb; ++b) {
      const double* coeff = state.data() + static_cast<std::size_t>(nodes[b]) * nf;
      for (int c = 0; c < d; ++c) u[c] += vals[b] * coeff[c];
    }
    double a[3] = {0, 0, 0};
    if (advection) {
      double div_a = 0.0;
      (*advection)({M.coords.data() + static_cast<std::size_t>(q) * dim,
                    static_cast<std::size_t>(dim)},
                   {a, static_cast<std::size_t>(d)}, div_a);
    } else {
      for (int c = 0; c < d; ++c) a[c] = u[c];
    }
    double an = 0.0;
    for (int c = 0; c < d; ++c) an += a[c] * n[c];

    for (int i = 0; i < nb; ++i) {
      const double Ni = vals[i];
      double* ri = res + static_cast<std::size_t>(i) * nf;
      for (int c = 0; c < d; ++c) ri[c] += jxw * an * u[c] * Ni;
    }
    if (!want_jacobian) continue;
    for (int i = 0; i < nb; ++i) {
      const double Ni = vals[i];
      for (int j = 0; j < nb; ++j) {
        const double Nj = vals[j];
        for (int c = 0; c < d; ++c) {
          double* row = jac + static_cast<std::size_t>(i * nf + c) * nloc + j * nf;
          for (int e = 0; e < d; ++e) {
            double v = (c == e) ? an * Nj * Ni : 0.0;
            if (adv_state) v += Nj * n[e] * u[c] * Ni;
            row[e] += jxw * v;
          }
        }
      }
    }
  }
}

}  // namespace stvms
