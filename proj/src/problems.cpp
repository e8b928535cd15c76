#include "stvms/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace stvms {

double ManufacturedSolution::divergence(std::span<const double> xhat) const {
  double g[3];
  double div = 0.0;
  for (int c = 0; c < d; ++c) {
    velocity[c].grad(xhat, {g, static_cast<std::size_t>(d)});
    div += g[c];
  }
  return div;
}

void ManufacturedSolution::forcing(std::span<const double> xhat,
                                   std::span<double> f) const {
  double u[3], g[3][3], gp[3];
  for (int c = 0; c < d; ++c) {
    u[c] = velocity[c].value(xhat);
    velocity[c].grad(xhat, {g[c], static_cast<std::size_t>(d)});
  }
  pressure.grad(xhat, {gp, static_cast<std::size_t>(d)});
  double div = 0.0;
  for (int c = 0; c < d; ++c) div += g[c][c];
  for (int c = 0; c < d; ++c) {
    double v = velocity[c].dt(xhat) + 0.5 * div * u[c] -
               nu * velocity[c].lap(xhat) + gp[c];
    for (int j = 0; j < d; ++j) v += u[j] * g[c][j];
    f[c] = v;
  }
}

namespace {

constexpr double P = kPi;

ScalarField field(std::function<double(std::span<const double>)> value,
                  std::function<void(std::span<const double>, std::span<double>)> grad,
                  std::function<double(std::span<const double>)> dt,
                  std::function<double(std::span<const double>)> lap) {
  return {std::move(value), std::move(grad), std::move(dt), std::move(lap)};
}

}  // namespace

ManufacturedSolution mms_2d(double nu) {
  require(nu > 0, "mms_2d: nu must be positive");
  ManufacturedSolution m;
  m.d = 2;
  m.nu = nu;
  // u_x = sin(pi x) cos(pi y) sin(pi t)
  m.velocity.push_back(field(
      [](std::span<const double> x) {
        return std::sin(P * x[0]) * std::cos(P * x[1]) * std::sin(P * x[2]);
      },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = P * std::cos(P * x[0]) * std::cos(P * x[1]) * std::sin(P * x[2]);
        g[1] = -P * std::sin(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[2]);
      },
      [](std::span<const double> x) {
        return P * std::sin(P * x[0]) * std::cos(P * x[1]) * std::cos(P * x[2]);
      },
      [](std::span<const double> x) {
        return -2 * P * P * std::sin(P * x[0]) * std::cos(P * x[1]) *
               std::sin(P * x[2]);
      }));
  // u_y = -cos(pi x) sin(pi y) sin(pi t)
  m.velocity.push_back(field(
      [](std::span<const double> x) {
        return -std::cos(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[2]);
      },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = P * std::sin(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[2]);
        g[1] = -P * std::cos(P * x[0]) * std::cos(P * x[1]) * std::sin(P * x[2]);
      },
      [](std::span<const double> x) {
        return -P * std::cos(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[2]);
      },
      [](std::span<const double> x) {
        return 2 * P * P * std::cos(P * x[0]) * std::sin(P * x[1]) *
               std::sin(P * x[2]);
      }));
  // p = sin(pi x) sin(pi y) cos(pi t)
  m.pressure = field(
      [](std::span<const double> x) {
        return std::sin(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[2]);
      },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = P * std::cos(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[2]);
        g[1] = P * std::sin(P * x[0]) * std::cos(P * x[1]) * std::cos(P * x[2]);
      },
      [](std::span<const double> x) {
        return -P * std::sin(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[2]);
      },
      [](std::span<const double>) { return 0.0; });
  return m;
}

ManufacturedSolution mms_3d(double nu) {
  require(nu > 0, "mms_3d: nu must be positive");
  ManufacturedSolution m;
  m.d = 3;
  m.nu = nu;
  // u_x = sin(pi x) cos(pi y) cos(pi z) sin(pi t)
  m.velocity.push_back(field(
      [](std::span<const double> x) {
        return std::sin(P * x[0]) * std::cos(P * x[1]) * std::cos(P * x[2]) *
               std::sin(P * x[3]);
      },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = P * std::cos(P * x[0]) * std::cos(P * x[1]) * std::cos(P * x[2]) *
               std::sin(P * x[3]);
        g[1] = -P * std::sin(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[2]) *
               std::sin(P * x[3]);
        g[2] = -P * std::sin(P * x[0]) * std::cos(P * x[1]) * std::sin(P * x[2]) *
               std::sin(P * x[3]);
      },
      [](std::span<const double> x) {
        return P * std::sin(P * x[0]) * std::cos(P * x[1]) * std::cos(P * x[2]) *
               std::cos(P * x[3]);
      },
      [](std::span<const double> x) {
        return -3 * P * P * std::sin(P * x[0]) * std::cos(P * x[1]) *
               std::cos(P * x[2]) * std::sin(P * x[3]);
      }));
  // u_y = -cos(pi x) sin(pi y) cos(pi z) sin(pi t)
  m.velocity.push_back(field(
      [](std::span<const double> x) {
        return -std::cos(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[2]) *
               std::sin(P * x[3]);
      },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = P * std::sin(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[2]) *
               std::sin(P * x[3]);
        g[1] = -P * std::cos(P * x[0]) * std::cos(P * x[1]) * std::cos(P * x[2]) *
               std::sin(P * x[3]);
        g[2] = P * std::cos(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[2]) *
               std::sin(P * x[3]);
      },
      [](std::span<const double> x) {
        return -P * std::cos(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[2]) *
               std::cos(P * x[3]);
      },
      [](std::span<const double> x) {
        return 3 * P * P * std::cos(P * x[0]) * std::sin(P * x[1]) *
               std::cos(P * x[2]) * std::sin(P * x[3]);
      }));
  // u_z = cos(pi x) sin(pi y) cos(pi t), z-independent
  m.velocity.push_back(field(
      [](std::span<const double> x) {
        return std::cos(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[3]);
      },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = -P * std::sin(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[3]);
        g[1] = P * std::cos(P * x[0]) * std::cos(P * x[1]) * std::cos(P * x[3]);
        g[2] = 0.0;
      },
      [](std::span<const double> x) {
        return -P * std::cos(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[3]);
      },
      [](std::span<const double> x) {
        return -2 * P * P * std::cos(P * x[0]) * std::sin(P * x[1]) *
               std::cos(P * x[3]);
      }));
  // p = sin(pi x) sin(pi y) sin(pi z) cos(pi t)
  m.pressure = field(
      [](std::span<const double> x) {
        return std::sin(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[2]) *
               std::cos(P * x[3]);
      },
      [](std::span<const double> x, std::span<double> g) {
        g[0] = P * std::cos(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[2]) *
               std::cos(P * x[3]);
        g[1] = P * std::sin(P * x[0]) * std::cos(P * x[1]) * std::sin(P * x[2]) *
               std::cos(P * x[3]);
        g[2] = P * std::sin(P * x[0]) * std::sin(P * x[1]) * std::cos(P * x[2]) *
               std::cos(P * x[3]);
      },
      [](std::span<const double> x) {
        return -P * std::sin(P * x[0]) * std::sin(P * x[1]) * std::sin(P * x[2]) *
               std::sin(P * x[3]);
      },
      [](std::span<const double>) { return 0.0; });
  return m;
}

// ---------------------------------------------------------------------------
// Problem factories
// ---------------------------------------------------------------------------

ProblemDefinition mms_problem(int d, double nu, int cells_per_axis, int order) {
  require(d == 2 || d == 3, "mms_problem: d must be 2 or 3");
  require(cells_per_axis >= 1, "mms_problem: need at least one cell per axis");
  ProblemDefinition p;
  p.name = (d == 2) ? "mms2d" : "mms3d";
  p.d = d;
  p.order = order;
  p.nu = nu;
  p.T = 1.0;
  p.extents.assign(d, 1.0);
  p.counts.assign(d, cells_per_axis);
  p.n_t = cells_per_axis;
  p.stab.nu = nu;

  ManufacturedSolution mms = (d == 2) ? mms_2d(nu) : mms_3d(nu);
  p.exact = mms;
  p.forcing = [mms](std::span<const double> x, std::span<double> f) {
    mms.forcing(x, f);
  };

  auto dirichlet = [mms](std::span<const double> x, std::span<double> u) {
    mms.velocity_value(x, u);
  };
  BoundaryCondition ic;
  ic.kind = BoundaryCondition::Kind::InitialCondition;
  ic.value = dirichlet;
  p.bcs.push_back(ic);
  for (int id = 0; id < 2 * d; ++id) {
    BoundaryCondition bc;
    bc.kind = BoundaryCondition::Kind::DirichletVelocity;
    bc.boundary_id = id;
    bc.value = dirichlet;
    p.bcs.push_back(bc);
  }
  p.pressure_pin = true;
  ManufacturedSolution pin_src = *p.exact;
  p.pin_value = [pin_src](std::span<const double> x) {
    return pin_src.pressure.value(x);
  };

  p.post.error_report = true;
  // Convergence-study solver presets
  p.ptc.newton.snes_rtol = (order == 1) ? 1e-10 : 1e-12;
  p.ptc.newton.snes_atol = 1e-10;
  p.ptc.newton.gamma1 = 1e-9;
  p.ptc.newton.eisenstat_walker = true;
  p.ptc.newton.krylov.method = KrylovMethod::BiCGStab;
  p.ptc.newton.krylov.precon = PreconType::Ilu0;
  p.ptc.newton.krylov.block_size = d + 1;
  p.ptc.dtau0 = 1e4;
  p.ptc.gamma2 = 1e-8;
  return p;
}

ProblemDefinition lid_driven_cavity(int d, double nu, double T,
                                    std::span<const int> spatial_counts,
                                    int n_t, int order, int n_blocks,
                                    bool lid_wins_corners) {
  require(d == 2 || d == 3, "lid_driven_cavity: d must be 2 or 3");
  require(T > 0, "lid_driven_cavity: T must be positive");
  ProblemDefinition p;
  p.name = (d == 2) ? "ldc2d" : "ldc3d";
  p.d = d;
  p.order = order;
  p.nu = nu;
  p.T = T;
  p.n_blocks = n_blocks;
  p.extents.assign(d, 1.0);
  p.counts.assign(spatial_counts.begin(), spatial_counts.begin() + d);
  p.n_t = n_t;
  p.stab.nu = nu;

  BoundaryCondition ic;
  ic.kind = BoundaryCondition::Kind::InitialCondition;
  ic.value = [](std::span<const double>, std::span<double> u) {
    for (double& v : u) v = 0.0;
  };
  p.bcs.push_back(ic);

  const int lid_id = 3;  // y = 1 face (axis 1, plus side)
  for (int id = 0; id < 2 * d; ++id) {
    BoundaryCondition bc;
    bc.kind = BoundaryCondition::Kind::DirichletVelocity;
    bc.boundary_id = id;
    if (id == lid_id) {
      bc.priority = lid_wins_corners ? 1 : -1;
      bc.value = [](std::span<const double>, std::span<double> u) {
        u[0] = 1.0;
        for (std::size_t c = 1; c < u.size(); ++c) u[c] = 0.0;
      };
    } else {
      bc.value = [](std::span<const double>, std::span<double> u) {
        for (double& v : u) v = 0.0;
      };
    }
    p.bcs.push_back(bc);
  }
  p.pressure_pin = true;

  p.ptc.newton.snes_rtol = 1e-8;
  p.ptc.newton.snes_atol = 1e-8;
  p.ptc.newton.eisenstat_walker = true;
  p.ptc.newton.krylov.method = KrylovMethod::BiCGStab;
  p.ptc.newton.krylov.precon = PreconType::Ilu0;
  p.ptc.newton.krylov.block_size = d + 1;
  p.ptc.dtau0 = 1.0;
  return p;
}

ProblemDefinition flow_past_cylinder(CylinderSetup setup, int Re, double T,
                                     int refinement, int n_t, int n_blocks) {
  ProblemDefinition p;
  p.d = 2;
  p.order = 1;
  p.T = T;
  p.n_blocks = n_blocks;
  p.n_t = n_t;
  p.mesh_kind = ProblemDefinition::MeshKind::Cylinder;
  p.cyl_refinement = refinement;

  double u_c = 0.0;
  if (setup == CylinderSetup::Schafer) {
    require(Re == 20 || Re == 100, "flow_past_cylinder: Schafer Re must be 20 or 100");
    p.name = "cylinder_schafer";
    p.cyl_D = 0.1;
    p.cyl_H = 4.1 * p.cyl_D;
    p.cyl_L = 22.0 * p.cyl_D;
    p.cyl_center = {0.2, 0.2};
    u_c = (Re == 20) ? 0.3 : 1.5;
    p.nu = 1e-3;
    p.u_ref = 2.0 / 3.0 * u_c;  // mean inlet velocity
  } else {
    require(Re == 15 || Re == 100, "flow_past_cylinder: Kanaris Re must be 15 or 100");
    p.name = "cylinder_kanaris";
    p.cyl_D = 1.0;
    p.cyl_H = 5.0 * p.cyl_D;
    p.cyl_L = 40.0 * p.cyl_D;
    p.cyl_center = {10.0, 2.5};
    u_c = 1.0;
    p.u_ref = u_c;  // centerline velocity
    p.nu = p.u_ref * p.cyl_D / Re;
  }
  p.d_ref = p.cyl_D;
  p.stab.nu = p.nu;

  BoundaryCondition ic;
  ic.kind = BoundaryCondition::Kind::InitialCondition;
  ic.value = [](std::span<const double>, std::span<double> u) {
    for (double& v : u) v = 0.0;
  };
  p.bcs.push_back(ic);

  const double H = p.cyl_H;
  BoundaryCondition inlet;
  inlet.kind = BoundaryCondition::Kind::DirichletVelocity;
  inlet.boundary_id = boundary_id::kInlet;
  inlet.value = [u_c, H](std::span<const double> x, std::span<double> u) {
    const double y = x[1];
    u[0] = 4.0 * u_c * y * (H - y) / (H * H);
    u[1] = 0.0;
  };
  p.bcs.push_back(inlet);

  BoundaryCondition noslip;
  noslip.kind = BoundaryCondition::Kind::DirichletVelocity;
  noslip.priority = 1;  // walls own the inlet/outlet corner nodes
  noslip.value = [](std::span<const double>, std::span<double> u) {
    for (double& v : u) v = 0.0;
  };
  noslip.boundary_id = boundary_id::kWall;
  p.bcs.push_back(noslip);
  noslip.boundary_id = boundary_id::kCylinder;
  p.bcs.push_back(noslip);

  BoundaryCondition outlet;
  outlet.kind = BoundaryCondition::Kind::DoNothingOutflow;
  outlet.boundary_id = boundary_id::kOutlet;
  p.bcs.push_back(outlet);

  p.pressure_pin = false;  // the outflow fixes the gauge
  p.post.lift_series = true;

  p.ptc.newton.snes_rtol = 1e-6;
  p.ptc.newton.snes_atol = 1e-8;
  p.ptc.newton.max_newton = 50;
  p.ptc.newton.krylov.method = KrylovMethod::BiCGStab;
  p.ptc.newton.krylov.rtol = 1e-8;
  p.ptc.newton.krylov.precon = PreconType::Ilu0;
  p.ptc.newton.krylov.block_size = 3;
  p.ptc.dtau0 = 1.0;
  return p;
}

SpatialMesh build_spatial_mesh(const ProblemDefinition& p) {
  if (p.mesh_kind == ProblemDefinition::MeshKind::Box) {
    std::vector<GradingSpec> spatial;
    for (const GradingSpec& g : p.gradings)
      if (g.axis < p.d) spatial.push_back(g);
    return build_spatial_box(p.d, p.extents, p.counts, p.order, spatial);
  }
  require(p.order == 1, "cylinder runs use Q1 elements");
  return build_cylinder_channel_mesh(p.cyl_L, p.cyl_H, p.cyl_D, p.cyl_center,
                                     p.cyl_refinement);
}

// ---------------------------------------------------------------------------
// Boundary conditions on a space-time block
// ---------------------------------------------------------------------------

void apply_boundary_conditions(const ProblemDefinition& p,
                               const SpaceTimeMesh& mesh, DofMap& dofs,
                               std::span<const double> initial_values) {
  const int d = p.d;
  const int nf = d + 1;
  require(dofs.n_nodes == mesh.n_nodes() && dofs.n_fields == nf,
          "apply_boundary_conditions: dof map does not match mesh");
  const double t0 = mesh.layer_times.front();

  // Initial condition: all first-layer nodes.
  const BoundaryCondition* ic = nullptr;
  for (const BoundaryCondition& bc : p.bcs)
    if (bc.kind == BoundaryCondition::Kind::InitialCondition) ic = &bc;
  require(ic != nullptr, "problem has no initial condition");
  double u[3];
  for (int s = 0; s < mesh.nodes_per_layer; ++s) {
    if (!initial_values.empty()) {
      for (int c = 0; c < d; ++c)
        dofs.set_dirichlet(s, c, initial_values[static_cast<std::size_t>(s) * nf + c]);
    } else {
      ic->value(mesh.node(s), {u, static_cast<std::size_t>(d)});
      for (int c = 0; c < d; ++c) dofs.set_dirichlet(s, c, u[c]);
    }
  }

  // Lateral Dirichlet data, lowest priority first so higher priorities win.
  std::vector<const BoundaryCondition*> dirichlet;
  for (const BoundaryCondition& bc : p.bcs)
    if (bc.kind == BoundaryCondition::Kind::DirichletVelocity)
      dirichlet.push_back(&bc);
  std::stable_sort(dirichlet.begin(), dirichlet.end(),
                   [](const BoundaryCondition* a, const BoundaryCondition* b) {
                     return a->priority < b->priority;
                   });

  for (const BoundaryCondition* bc : dirichlet) {
    for (const BoundaryFacet& f : mesh.facets) {
      if (f.tag != StTag::GammaS || f.boundary_id != bc->boundary_id) continue;
      std::span<const int> enodes = mesh.elem_nodes(f.elem);
      for (int l : element_face_nodes(mesh.dim, mesh.order, f.local_face)) {
        const int node = enodes[l];
        std::span<const double> x = mesh.node(node);
        if (x[mesh.dim - 1] <= t0) continue;  // first layer belongs to Gamma0
        bc->value(x, {u, static_cast<std::size_t>(d)});
        for (int c = 0; c < d; ++c) dofs.set_dirichlet(node, c, u[c]);
      }
    }
  }

  if (p.pressure_pin) {
    // The fully-Dirichlet space-time pressure is defined up to an arbitrary
    // function of time (spatially constant per layer), so the gauge needs one
    // pinned node on every layer: the spatially interior node nearest the
    // spatial centroid.
    std::vector<uint8_t> on_spatial_boundary(mesh.nodes_per_layer, 0);
    for (const BoundaryFacet& f : mesh.facets) {
      if (f.tag != StTag::GammaS) continue;
      std::span<const int> enodes = mesh.elem_nodes(f.elem);
      for (int l : element_face_nodes(mesh.dim, mesh.order, f.local_face))
        on_spatial_boundary[enodes[l] % mesh.nodes_per_layer] = 1;
    }
    double centroid[3] = {0, 0, 0};
    for (int s = 0; s < mesh.nodes_per_layer; ++s) {
      std::span<const double> x = mesh.node(s);
      for (int a = 0; a < d; ++a) centroid[a] += x[a];
    }
    for (int a = 0; a < d; ++a) centroid[a] /= mesh.nodes_per_layer;
    int best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (int s = 0; s < mesh.nodes_per_layer; ++s) {
      if (on_spatial_boundary[s]) continue;
      std::span<const double> x = mesh.node(s);
      double dist = 0.0;
      for (int a = 0; a < d; ++a) {
        const double e = x[a] - centroid[a];
        dist += e * e;
      }
      if (dist < best_d) {
        best_d = dist;
        best = s;
      }
    }
    require(best >= 0, "pressure pin: no spatially interior node found");
    for (int l = 0; l < mesh.n_layers(); ++l) {
      const int node = l * mesh.nodes_per_layer + best;
      const double value = p.pin_value ? p.pin_value(mesh.node(node)) : 0.0;
      dofs.set_dirichlet(node, d, value);
    }
  }
}

void ProblemDefinition::self_check(const SpaceTimeMesh& mesh) const {
  std::set<int> mesh_ids;
  bool has_gamma0 = false;
  for (const BoundaryFacet& f : mesh.facets) {
    if (f.tag == StTag::GammaS) mesh_ids.insert(f.boundary_id);
    if (f.tag == StTag::Gamma0) has_gamma0 = true;
  }
  require(has_gamma0, "self_check: mesh has no Gamma0 facets");

  int n_ic = 0;
  for (const BoundaryCondition& bc : bcs)
    if (bc.kind == BoundaryCondition::Kind::InitialCondition) ++n_ic;
  require(n_ic == 1, "self_check: need exactly one initial condition");

  for (int id : mesh_ids) {
    int covered = 0;
    for (const BoundaryCondition& bc : bcs)
      if (bc.kind != BoundaryCondition::Kind::InitialCondition &&
          bc.boundary_id == id)
        ++covered;
    require(covered == 1, "self_check: boundary id " + std::to_string(id) +
                              " must be covered by exactly one condition");
  }

  if (forcing) {
    double f[3];
    const int samples = std::min(mesh.n_nodes(), 32);
    for (int s = 0; s < samples; ++s) {
      const int n = s * std::max(1, mesh.n_nodes() / samples);
      forcing(mesh.node(std::min(n, mesh.n_nodes() - 1)),
              {f, static_cast<std::size_t>(d)});
      for (int c = 0; c < d; ++c)
        require(std::isfinite(f[c]), "self_check: forcing is not finite");
    }
  }
}

}  // namespace stvms
