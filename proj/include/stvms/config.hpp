#pragma once

#include <iosfwd>
#include <string>

#include "stvms/driver.hpp"
#include "stvms/problems.hpp"

namespace stvms {

// Sectioned key=value run configuration. Unknown keys are errors; every key
// has a documented default (see config_reference()).
struct RunConfig {
  // top level
  std::string problem = "mms2d";  // mms2d|mms3d|ldc2d|ldc3d|cylinder
  int order = 1;
  double nu = 1.0;
  double Re = 0.0;  // overrides nu when > 0 (ldc: nu = 1/Re)
  double T = 1.0;
  int blocks = 1;
  int threads = 1;

  // [mesh]
  double Lx = 1.0, Ly = 1.0, Lz = 1.0;
  int Nelemx = 8, Nelemy = 8, Nelemz = 8;
  int nt = 8;
  double grading_x = 0.0, grading_y = 0.0, grading_z = 0.0, grading_t = 0.0;

  // [cylinder]
  std::string setup = "schafer";  // schafer|kanaris
  int refinement = 1;

  // [stab]
  double c1 = 4.0, c2 = 2.0, c3 = 1.0, c4 = 1.0, C_I = 1.0;
  bool paper_literal_signs = false;

  // [krylov]
  std::string krylov_method = "bicgstab";  // bicgstab|gmres
  double krylov_rtol = 1e-6;
  double krylov_atol = 1e-50;
  int krylov_max_iters = 2000;
  int gmres_restart = 30;
  std::string precon = "ilu0";  // none|jacobi|blockjacobi|ilu0

  // [ptc]
  bool ptc_enabled = true;
  double dtau0 = 1.0;
  std::string growth = "ser";  // ser|fixed
  double dtau_max = 1e12;
  double gamma1 = 1e-8;
  double gamma2 = 1e-8;
  double snes_rtol = 1e-8;
  double snes_atol = 1e-8;
  int max_newton = 50;
  int max_ptc = 200;
  bool eisenstat_walker = false;

  // [output]
  std::string output_dir = "out";
  bool vtk = false;
  bool csv = true;
  bool history = true;
  std::vector<double> slice_times;

  // [post]
  double settle_time = 0.0;
  bool want_strouhal = false;
  bool want_lift = false;

  ProblemDefinition to_problem() const;
  RunOptions to_options() const;
};

// Throws std::invalid_argument with "line N: ..." on malformed input or
// unknown keys.
RunConfig parse_config(const std::string& text);

std::string serialize_config(const RunConfig& config);

// Key/default/description listing for --help.
std::string config_reference();

}  // namespace stvms
