/// Stabilized-form kernels: tau formulas, the skew advection operator, the
/// finite-difference Jacobian oracle, facet terms and the analysis properties
/// (skew-adjointness, coercivity witness, constant-pressure null vector).
#include <doctest.h>

#include <cmath>
#include <random>

#include "stvms/assembly.hpp"
#include "stvms/mesh.hpp"
#include "stvms/vms_forms.hpp"

using namespace stvms;

namespace {

StabilizationParams make_params(double nu) {
  StabilizationParams p;
  p.nu = nu;
  return p;
}

FieldVector random_state(int n_dofs, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  FieldVector x(n_dofs);
  for (double& v : x) v = dist(rng);
  return x;
}

void smooth_forcing(std::span<const double> x, std::span<double> f) {
  f[0] = std::sin(x[0] + x[1]) + 0.3 * x[2];
  f[1] = std::cos(x[1]) - 0.2 * x[0] * x[2];
  if (f.size() > 2) f[2] = 0.4 * std::sin(x[2]);
}

}  // namespace

TEST_CASE("tau_m and tau_c match the closed forms") {
  StabilizationParams p;
  p.c1 = 4;
  p.c2 = 2;
  p.c3 = 1;
  p.c4 = 1;
  p.C_I = 1;
  p.nu = 0.01;
  CHECK(tau_m(p, 0.1, 1.0) == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
  CHECK(tau_c(p, 0.1, 1.0) == doctest::Approx(0.11).epsilon(1e-14));

  // advective limit: nu = 0, c2 = 1 -> tau_m = h
  StabilizationParams adv = p;
  adv.nu = 0.0;
  adv.c2 = 1.0;
  CHECK(tau_m(adv, 0.37, 1.0) == doctest::Approx(0.37).epsilon(1e-14));

  // |a~| -> infinity drives tau_m to 0
  CHECK(tau_m(p, 0.1, 1e14) < 1e-12);

  // monotone increasing in h
  double prev = 0.0;
  for (double h : {0.01, 0.02, 0.05, 0.1, 0.4}) {
    const double t = tau_m(p, h, 1.0);
    CHECK(t > prev);
    prev = t;
  }

  // tau_c: zero data, and linearity of the advective part in h
  StabilizationParams z = p;
  z.nu = 0.0;
  CHECK(tau_c(z, 0.3, 0.0) == 0.0);
  const double t1 = tau_c(z, 0.1, 2.0);
  const double t2 = tau_c(z, 0.2, 2.0);
  CHECK(t2 == doctest::Approx(2.0 * t1).epsilon(1e-14));
}

TEST_CASE("apply_Ltilde") {
  // a = 0, constant-in-time u -> 0
  {
    double a[2] = {0, 0}, u[2] = {3, -1}, g[4] = {0, 0, 0, 0}, dt[2] = {0, 0};
    double out[2];
    apply_Ltilde({a, 2}, 0.0, {u, 2}, {g, 4}, {dt, 2}, {out, 2});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
  }
  // a = (1,0), u = (x,0): pure advection gives (1,0) plus du/dt
  {
    double a[2] = {1, 0}, u[2] = {0.7, 0.0};
    double g[4] = {1, 0, 0, 0};  // grad u_x = (1,0), grad u_y = 0
    double dt[2] = {0.2, -0.1};
    double out[2];
    apply_Ltilde({a, 2}, 0.0, {u, 2}, {g, 4}, {dt, 2}, {out, 2});
    CHECK(out[0] == doctest::Approx(1.0 + 0.2));
    CHECK(out[1] == doctest::Approx(-0.1));
  }
  // a = (x,y) with div a = 2, u = (1,1), du/dt = 0 -> (1,1)
  {
    double a[2] = {0.3, 0.9}, u[2] = {1, 1}, g[4] = {0, 0, 0, 0},
           dt[2] = {0, 0};
    double out[2];
    apply_Ltilde({a, 2}, 2.0, {u, 2}, {g, 4}, {dt, 2}, {out, 2});
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(1.0));
  }
}

namespace {

// Central-difference Jacobian oracle for one element, frozen stabilization.
void fd_jacobian_check(int dim, int order, const TermFlags& flags,
                       bool override_advection, unsigned seed) {
  std::vector<double> ext(dim, 1.0);
  std::vector<int> cnt(dim, 2);
  SpaceTimeMesh mesh = build_box_mesh(dim, ext, cnt, order);
  ReferenceElement ref = ReferenceElement::create(dim, order, order + 1);
  const int nf = dim;  // d velocities + pressure = dim
  const int nb = ref.n_basis();
  const int nloc = nb * nf;

  StabilizationParams params = make_params(0.05);
  FieldVector x = random_state(mesh.n_nodes() * nf, seed);
  Forcing forcing = smooth_forcing;
  AdvectionField adv_field = [](std::span<const double> xq, std::span<double> a,
                                double& div_a) {
    a[0] = 0.5 + 0.3 * xq[0];
    a[1] = -0.2 * xq[1];
    if (a.size() > 2) a[2] = 0.1 * xq[0] * xq[1];
    div_a = 0.3 - 0.2;
  };
  const AdvectionField* adv = override_advection ? &adv_field : nullptr;

  const int elem = mesh.n_elems() / 2;
  const ElementStab stab = {tau_m(params, element_size(mesh, elem), 2.0),
                            tau_c(params, element_size(mesh, elem), 2.0)};

  ElementWorkspace ws;
  ElementSystem sys, plus, minus;
  element_system(mesh, elem, ref, x, params, stab, &forcing, adv, flags, true,
                 ws, sys);
  // Gamma_T terms act on elements owning a final-time facet; exercise them on
  // the last element.
  const BoundaryFacet* gT = nullptr;
  for (const BoundaryFacet& f : mesh.facets)
    if (f.tag == StTag::GammaT && f.elem == elem) gT = &f;
  FacetTable gT_table = tabulate_facet(ref, 2 * (dim - 1) + 1, order + 1);
  if (flags.gammaT && gT != nullptr)
    gammaT_facet_system(mesh, *gT, ref, gT_table, x, params, stab, &forcing,
                        adv, true, ws, sys);

  double jac_norm = 0.0;
  for (double v : sys.jacobian) jac_norm += v * v;
  jac_norm = std::sqrt(jac_norm);

  std::span<const int> nodes = mesh.elem_nodes(elem);
  const double eps = 1e-6;
  double worst = 0.0;
  for (int jl = 0; jl < nloc; ++jl) {
    const int dof = nodes[jl / nf] * nf + jl % nf;
    FieldVector xp = x, xm = x;
    xp[dof] += eps;
    xm[dof] -= eps;
    element_system(mesh, elem, ref, xp, params, stab, &forcing, adv, flags,
                   false, ws, plus);
    element_system(mesh, elem, ref, xm, params, stab, &forcing, adv, flags,
                   false, ws, minus);
    if (flags.gammaT && gT != nullptr) {
      gammaT_facet_system(mesh, *gT, ref, gT_table, xp, params, stab, &forcing,
                          adv, false, ws, plus);
      gammaT_facet_system(mesh, *gT, ref, gT_table, xm, params, stab, &forcing,
                          adv, false, ws, minus);
    }
    double col_err = 0.0;
    for (int il = 0; il < nloc; ++il) {
      const double fd = (plus.residual[il] - minus.residual[il]) / (2 * eps);
      const double an = sys.jacobian[static_cast<std::size_t>(il) * nloc + jl];
      col_err += (fd - an) * (fd - an);
    }
    worst = std::max(worst, std::sqrt(col_err));
  }
  CHECK(worst <= 1e-5 * (1.0 + jac_norm));
}

}  // namespace

TEST_CASE("element Jacobian matches central differences, term by term") {
  // each term group switched on alone, then everything together
  TermFlags only_galerkin{true, false, false, false, false};
  TermFlags only_supg{false, true, false, false, false};
  TermFlags only_graddiv{false, false, true, false, false};
  TermFlags only_gammaT{false, false, false, true, false};
  TermFlags all{};
  TermFlags literal{};
  literal.paper_literal_signs = true;

  for (int dim : {3, 4}) {
    fd_jacobian_check(dim, 1, only_galerkin, false, 11);
    fd_jacobian_check(dim, 1, only_supg, false, 12);
    fd_jacobian_check(dim, 1, only_graddiv, false, 13);
    fd_jacobian_check(dim, 1, only_gammaT, false, 14);
    fd_jacobian_check(dim, 1, all, false, 15);
    fd_jacobian_check(dim, 1, literal, false, 16);
    fd_jacobian_check(dim, 1, all, true, 17);  // frozen advection field
  }
  fd_jacobian_check(3, 2, all, false, 18);  // Q2
}

TEST_CASE("Stokes limit: Jacobian independent of the state") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {2, 2, 2};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  ReferenceElement ref = ReferenceElement::create(3, 1, 2);
  StabilizationParams params = make_params(0.1);
  AdvectionField stokes = [](std::span<const double>, std::span<double> a,
                             double& div_a) {
    for (double& v : a) v = 0.0;
    div_a = 0.0;
  };
  const ElementStab stab = {0.01, 0.2};
  ElementWorkspace ws;
  ElementSystem s1, s2;
  FieldVector x1 = random_state(mesh.n_nodes() * 3, 1);
  FieldVector x2 = random_state(mesh.n_nodes() * 3, 2);
  element_system(mesh, 0, ref, x1, params, stab, nullptr, &stokes, {}, true, ws,
                 s1);
  element_system(mesh, 0, ref, x2, params, stab, nullptr, &stokes, {}, true, ws,
                 s2);
  for (std::size_t i = 0; i < s1.jacobian.size(); ++i)
    CHECK(s1.jacobian[i] == doctest::Approx(s2.jacobian[i]).epsilon(1e-13));
}

TEST_CASE("viscous block of the Jacobian is symmetric") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {2, 2, 2};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  ReferenceElement ref = ReferenceElement::create(3, 1, 2);
  AdvectionField stokes = [](std::span<const double>, std::span<double> a,
                             double& div_a) {
    for (double& v : a) v = 0.0;
    div_a = 0.0;
  };
  TermFlags galerkin_only{true, false, false, false, false};
  const ElementStab stab = {0.0, 0.0};
  ElementWorkspace ws;
  ElementSystem sys_a, sys_b;
  FieldVector x = random_state(mesh.n_nodes() * 3, 3);
  StabilizationParams pa = make_params(0.5), pb = make_params(1.5);
  element_system(mesh, 0, ref, x, pa, stab, nullptr, &stokes, galerkin_only,
                 true, ws, sys_a);
  element_system(mesh, 0, ref, x, pb, stab, nullptr, &stokes, galerkin_only,
                 true, ws, sys_b);
  const int nloc = 8 * 3;
  // (J(nu2) - J(nu1))/(nu2 - nu1) is the <grad u, grad v> block
  for (int i = 0; i < nloc; ++i)
    for (int j = 0; j < nloc; ++j) {
      const double vij = (sys_b.jacobian[i * nloc + j] -
                          sys_a.jacobian[i * nloc + j]);
      const double vji = (sys_b.jacobian[j * nloc + i] -
                          sys_a.jacobian[j * nloc + i]);
      CHECK(std::abs(vij - vji) < 1e-12);
    }
}

TEST_CASE("zero state and zero forcing give a zero residual") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {2, 2, 2};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  ReferenceElement ref = ReferenceElement::create(3, 1, 2);
  StabilizationParams params = make_params(0.1);
  const ElementStab stab = {0.05, 0.1};
  ElementWorkspace ws;
  ElementSystem sys;
  FieldVector x(static_cast<std::size_t>(mesh.n_nodes()) * 3, 0.0);
  element_system(mesh, 0, ref, x, params, stab, nullptr, nullptr, {}, false, ws,
                 sys);
  for (double r : sys.residual) CHECK(r == 0.0);

  // Gamma_T facet with zero state and forcing contributes nothing
  FacetTable table = tabulate_facet(ref, 5, 2);
  for (const BoundaryFacet& f : mesh.facets) {
    if (f.tag != StTag::GammaT) continue;
    sys.reset(f.elem, 24, false);
    gammaT_facet_system(mesh, f, ref, table, x, params, stab, nullptr, nullptr,
                        false, ws, sys);
    for (double r : sys.residual) CHECK(r == 0.0);
  }
}

TEST_CASE("GammaT mass term of a constant field integrates to |D|") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {1, 1, 1};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  ReferenceElement ref = ReferenceElement::create(3, 1, 2);
  StabilizationParams params = make_params(0.1);
  const ElementStab stab = {0.05, 0.1};
  ElementWorkspace ws;
  ElementSystem sys;
  sys.reset(0, 24, false);

  FieldVector x(static_cast<std::size_t>(mesh.n_nodes()) * 3, 0.0);
  for (int n = 0; n < mesh.n_nodes(); ++n) x[n * 3] = 1.0;  // u_x = 1

  FacetTable table = tabulate_facet(ref, 5, 2);
  int checked = 0;
  for (const BoundaryFacet& f : mesh.facets) {
    if (f.tag != StTag::GammaT) continue;
    gammaT_facet_system(mesh, f, ref, table, x, params, stab, nullptr, nullptr,
                        false, ws, sys);
    ++checked;
  }
  CHECK(checked == 1);
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) sum += sys.residual[i * 3];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));

  // wrong tag is rejected
  BoundaryFacet bad{0, 0, StTag::GammaS, 0};
  ElementSystem out;
  out.reset(0, 24, false);
  CHECK_THROWS_AS(gammaT_facet_system(mesh, bad, ref, table, x, params, stab,
                                      nullptr, nullptr, false, ws, out),
                  std::invalid_argument);
}

TEST_CASE("skew-adjointness of the space-time advection operator") {
  // (L~_a u, v) + (u, L~_a v) = 0 for smooth fields vanishing on the whole
  // boundary; quadrature evaluation on a 16^3 grid with 3-point rules.
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {16, 16, 16};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 2);
  ReferenceElement ref = ReferenceElement::create(3, 2, 3);

  auto bump = [](double s) { return s * s * (1.0 - s) * (1.0 - s); };
  auto dbump = [](double s) { return 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s); };
  // u, v vector fields with compact support in the open cube
  auto eval_u = [&](std::span<const double> x, double* val, double* grad,
                    double* dt) {
    const double bx = bump(x[0]), by = bump(x[1]), bt = bump(x[2]);
    const double gx = dbump(x[0]), gy = dbump(x[1]), gt = dbump(x[2]);
    val[0] = bx * by * bt;
    val[1] = 2.0 * bx * by * bt;
    grad[0] = gx * by * bt;
    grad[1] = bx * gy * bt;
    grad[2] = 2.0 * gx * by * bt;
    grad[3] = 2.0 * bx * gy * bt;
    dt[0] = bx * by * gt;
    dt[1] = 2.0 * bx * by * gt;
  };
  auto eval_v = [&](std::span<const double> x, double* val, double* grad,
                    double* dt) {
    const double bx = bump(x[0]), by = bump(x[1]), bt = bump(x[2]);
    const double gx = dbump(x[0]), gy = dbump(x[1]), gt = dbump(x[2]);
    const double sx = std::sin(kPi * x[0]);
    const double cx = kPi * std::cos(kPi * x[0]);
    val[0] = sx * bx * by * bt;
    val[1] = -bx * by * bt;
    grad[0] = (cx * bx + sx * gx) * by * bt;
    grad[1] = sx * bx * gy * bt;
    grad[2] = -gx * by * bt;
    grad[3] = -bx * gy * bt;
    dt[0] = sx * bx * by * gt;
    dt[1] = -bx * by * gt;
  };
  // divergence-carrying advection field
  auto eval_a = [](std::span<const double> x, double* a, double& diva) {
    a[0] = 0.7 + x[0] * x[1];
    a[1] = -0.4 + x[1] * x[1] * 0.5;
    diva = x[1] + x[1];
  };

  ElementWorkspace ws;
  double integral = 0.0;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    map_element(mesh, e, ref, ws);
    for (int q = 0; q < ws.mapped.nq; ++q) {
      std::span<const double> x = ws.mapped.point(q);
      double uv[2], ug[4], ud[2], vv[2], vg[4], vd[2], a[2], diva;
      eval_u(x, uv, ug, ud);
      eval_v(x, vv, vg, vd);
      eval_a(x, a, diva);
      double Lu[2], Lv[2];
      apply_Ltilde({a, 2}, diva, {uv, 2}, {ug, 4}, {ud, 2}, {Lu, 2});
      apply_Ltilde({a, 2}, diva, {vv, 2}, {vg, 4}, {vd, 2}, {Lv, 2});
      integral += ws.mapped.jxw[q] *
                  (Lu[0] * vv[0] + Lu[1] * vv[1] + uv[0] * Lv[0] + uv[1] * Lv[1]);
    }
  }
  CHECK(std::abs(integral) < 1e-6);
}

TEST_CASE("coercivity witness: B_h(a; phi, phi) > 0 for admissible states") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {8, 8, 8};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  const int nf = 3;

  ProblemDefinition problem;
  problem.d = 2;
  problem.nu = 0.01;
  problem.stab = make_params(0.01);
  problem.stab.validate();  // c1 > 2 holds for the defaults

  DofMap dofs(mesh.n_nodes(), nf);  // no constraints: raw bilinear form rows
  SystemAssembler assembler(mesh, problem, dofs);
  assembler.set_advection_override([](std::span<const double> x,
                                      std::span<double> a, double& diva) {
    a[0] = 0.8 + 0.2 * std::sin(kPi * x[1]);
    a[1] = -0.3 * std::cos(kPi * x[0]);
    diva = 0.0;
  });

  // velocity dofs vanish on GammaS and Gamma0
  std::vector<uint8_t> constrained(mesh.n_nodes(), 0);
  for (const BoundaryFacet& f : mesh.facets) {
    if (f.tag == StTag::GammaT) continue;
    std::span<const int> enodes = mesh.elem_nodes(f.elem);
    for (int l : element_face_nodes(mesh.dim, mesh.order, f.local_face))
      constrained[enodes[l]] = 1;
  }

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> r(assembler.n_dofs());
  for (int trial = 0; trial < 100; ++trial) {
    FieldVector phi(assembler.n_dofs());
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      for (int c = 0; c < 2; ++c)
        phi[n * nf + c] = constrained[n] ? 0.0 : dist(rng);
      phi[n * nf + 2] = dist(rng);
    }
    assembler.assemble(phi, r, nullptr);
    double value = 0.0;
    for (int i = 0; i < assembler.n_dofs(); ++i) value += r[i] * phi[i];
    CHECK(value > 0.0);
  }
}

TEST_CASE("constant pressure is the Galerkin null vector on interior dofs") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {2, 2, 2};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  const int nf = 3;

  ProblemDefinition problem;
  problem.d = 2;
  problem.nu = 0.3;
  problem.stab = make_params(0.3);

  DofMap dofs(mesh.n_nodes(), nf);
  SystemAssembler assembler(mesh, problem, dofs);

  FieldVector x(static_cast<std::size_t>(mesh.n_nodes()) * nf, 0.0);
  for (int n = 0; n < mesh.n_nodes(); ++n) x[n * nf + 2] = 1.0;  // p = 1

  std::vector<double> r(assembler.n_dofs());
  assembler.assemble(x, r, nullptr);

  // interior nodes see nothing; the tau_m <grad p, ...> terms vanish exactly
  std::vector<uint8_t> on_boundary(mesh.n_nodes(), 0);
  for (const BoundaryFacet& f : mesh.facets) {
    std::span<const int> enodes = mesh.elem_nodes(f.elem);
    for (int l : element_face_nodes(mesh.dim, mesh.order, f.local_face))
      on_boundary[enodes[l]] = 1;
  }
  int interior = 0;
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    if (on_boundary[n]) continue;
    ++interior;
    for (int f = 0; f < nf; ++f) CHECK(std::abs(r[n * nf + f]) < 1e-13);
  }
  CHECK(interior == 1);

  // the whole residual equals the pure-Galerkin residual (stab terms see
  // nothing from a constant pressure)
  ProblemDefinition galerkin_only = problem;
  galerkin_only.terms.supg = false;
  galerkin_only.terms.graddiv = false;
  SystemAssembler plain(mesh, galerkin_only, dofs);
  std::vector<double> rg(plain.n_dofs());
  plain.assemble(x, rg, nullptr);
  for (int i = 0; i < plain.n_dofs(); ++i)
    CHECK(r[i] == doctest::Approx(rg[i]).epsilon(1e-13));
}

TEST_CASE("element advection norm includes the unit time component") {
  std::vector<double> ext = {1, 1, 1};
  std::vector<int> cnt = {1, 1, 1};
  SpaceTimeMesh mesh = build_box_mesh(3, ext, cnt, 1);
  ReferenceElement ref = ReferenceElement::create(3, 1, 2);
  FieldVector x(static_cast<std::size_t>(mesh.n_nodes()) * 3, 0.0);
  // zero velocity: |a~| = 1 exactly
  CHECK(element_advection_norm(mesh, 0, ref, x, nullptr) ==
        doctest::Approx(1.0).epsilon(1e-14));
  for (int n = 0; n < mesh.n_nodes(); ++n) x[n * 3] = 3.0;
  CHECK(element_advection_norm(mesh, 0, ref, x, nullptr) ==
        doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
}
