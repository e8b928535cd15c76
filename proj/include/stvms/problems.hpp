#pragma once

#include <functional>
#include <optional>
#include <string>

#include "stvms/dofmap.hpp"
#include "stvms/mesh.hpp"
#include "stvms/newton.hpp"
#include "stvms/vms_forms.hpp"

namespace stvms {

// Analytic scalar field on the space-time domain with the derivatives the
// residual machinery needs. Gradients are spatial (d components).
struct ScalarField {
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> grad;
  std::function<double(std::span<const double>)> dt;
  std::function<double(std::span<const double>)> lap;
};

// Divergence-free exact solution with forcing derived by substitution into
// the skew-symmetrized momentum equation.
struct ManufacturedSolution {
  int d = 2;
  double nu = 1.0;
  std::vector<ScalarField> velocity;  // d components
  ScalarField pressure;               // lap unused

  void velocity_value(std::span<const double> xhat, std::span<double> u) const {
    for (int c = 0; c < d; ++c) u[c] = velocity[c].value(xhat);
  }
  double divergence(std::span<const double> xhat) const;
  // f = du/dt + (u.grad)u + 1/2(div u)u - nu lap u + grad p
  void forcing(std::span<const double> xhat, std::span<double> f) const;
};

ManufacturedSolution mms_2d(double nu);
ManufacturedSolution mms_3d(double nu);

struct BoundaryCondition {
  enum class Kind { DirichletVelocity, DoNothingOutflow, InitialCondition };
  Kind kind = Kind::DirichletVelocity;
  int boundary_id = -1;  // GammaS sub-tag; unused for InitialCondition
  int priority = 0;      // higher wins on shared nodes (lid over wall)
  std::function<void(std::span<const double>, std::span<double>)> value;
};

struct PostRequests {
  bool error_report = false;        // L2(Omega) errors vs the exact solution
  std::vector<double> slice_times;  // temporal slices to export
  bool lift_series = false;         // cylinder drag/lift per layer
  double settle_time = 0.0;         // Strouhal window start t_c
  bool strouhal = false;
};

struct ProblemDefinition {
  std::string name;
  int d = 2;
  int order = 1;
  double nu = 1.0;
  double T = 1.0;
  int n_blocks = 1;

  enum class MeshKind { Box, Cylinder } mesh_kind = MeshKind::Box;
  std::vector<double> extents;  // spatial extents (Box)
  std::vector<int> counts;      // spatial element counts (Box)
  int n_t = 8;                  // time slabs over the whole horizon T
  std::vector<GradingSpec> gradings;

  // cylinder geometry (MeshKind::Cylinder)
  double cyl_L = 0, cyl_H = 0, cyl_D = 0;
  std::array<double, 2> cyl_center = {0, 0};
  int cyl_refinement = 1;
  double u_ref = 1.0;  // force-coefficient reference velocity
  double d_ref = 1.0;  // force-coefficient reference length

  StabilizationParams stab;
  TermFlags terms;
  std::vector<BoundaryCondition> bcs;
  Forcing forcing;  // empty means f = 0
  bool pressure_pin = false;
  std::function<double(std::span<const double>)> pin_value;  // default 0

  std::optional<ManufacturedSolution> exact;

  KrylovConfig krylov;
  PtcConfig ptc;
  bool use_ptc = true;
  int threads = 1;

  PostRequests post;

  // Throws std::invalid_argument when the definition is inconsistent with the
  // mesh: a GammaS boundary id without exactly one condition, a missing
  // initial condition, or non-finite forcing at sampled points.
  void self_check(const SpaceTimeMesh& mesh) const;
};

// Problem factories.
ProblemDefinition mms_problem(int d, double nu, int cells_per_axis, int order);

ProblemDefinition lid_driven_cavity(int d, double nu, double T,
                                    std::span<const int> spatial_counts,
                                    int n_t, int order, int n_blocks,
                                    bool lid_wins_corners = true);

enum class CylinderSetup { Schafer, Kanaris };
ProblemDefinition flow_past_cylinder(CylinderSetup setup, int Re, double T,
                                     int refinement, int n_t, int n_blocks);

// Build the spatial mesh of a problem (the time axis is added per block by
// the driver).
SpatialMesh build_spatial_mesh(const ProblemDefinition& problem);

// Fill the Dirichlet mask/values of a space-time block: initial conditions on
// the first layer, velocity Dirichlet data on GammaS nodes above it, optional
// single-node pressure pin. `initial_values` overrides the InitialCondition
// callback with nodal data (block chaining).
void apply_boundary_conditions(const ProblemDefinition& problem,
                               const SpaceTimeMesh& mesh, DofMap& dofs,
                               std::span<const double> initial_values = {});

}  // namespace stvms
