#pragma once

#include <iosfwd>
#include <optional>

#include "stvms/mapping.hpp"
#include "stvms/mesh.hpp"
#include "stvms/problems.hpp"
#include "stvms/stabilization.hpp"

namespace stvms {

struct TimeSeries {
  std::vector<double> times;   // strictly increasing
  std::vector<double> values;
};

struct ErrorReport {
  double h = 0.0;
  int order = 1;
  std::vector<double> field_errors;  // d velocity components + pressure
  double velocity = 0.0;             // combined velocity L2 error
  double pressure = 0.0;
};

// L2(Omega) error of each field against the exact solution, sampled at
// quadrature points.
ErrorReport l2_error(std::span<const double> solution,
                     const ManufacturedSolution& exact,
                     const SpaceTimeMesh& mesh, const ReferenceElement& ref);

// Nodal plane at t = t_star (a node layer) as a spatial mesh plus fields.
struct TemporalSlice {
  double t = 0.0;
  int layer = 0;
  SpatialMesh mesh;
  std::vector<double> fields;  // nodes * (d+1)
};

TemporalSlice temporal_slice(std::span<const double> solution,
                             const SpaceTimeMesh& mesh, double t_star,
                             bool strict = false);

// Traction integral over the cylinder boundary of a 2D slice:
//   F_w = \oint [(nu (grad u + grad u^T) - p I) n] . w dS
// with n pointing from the cylinder surface into the fluid.
double cylinder_force(const TemporalSlice& slice, double nu,
                      std::array<double, 2> w);

// St = f D / U_ref with f from the mean zero-crossing spacing of the
// de-meaned settled lift signal (t >= t_c). Throws when fewer than two
// crossings exist.
double strouhal(const TimeSeries& lift, double D, double U_ref, double t_c);

// Earliest layer time t_s after which max-node velocity change between
// consecutive layers stays below tol; +infinity when never reached.
double steady_state_time(std::span<const double> solution,
                         const SpaceTimeMesh& mesh, double tol);

// Triple norm of the analysis: [ ||u||_GammaT^2 + nu ||grad u||^2
//   + sum_e ||tau_m^1/2 (L~_a u + grad p)||_e^2 ]^1/2, advection a = state
// velocity unless overridden.
double discrete_norm(const SpaceTimeMesh& mesh, const ReferenceElement& ref,
                     std::span<const double> state,
                     const StabilizationParams& params,
                     const AdvectionField* advection = nullptr);

// Legacy-VTK ASCII export of a temporal slice (UNSTRUCTURED_GRID; point data:
// VECTORS velocity, SCALARS pressure). Q2 cells are subdivided into linear
// sub-cells.
void write_vtk_slice(std::ostream& os, const TemporalSlice& slice);

void write_time_series_csv(std::ostream& os, const TimeSeries& series,
                           const std::string& value_name);

void write_error_table_csv(std::ostream& os,
                           std::span<const ErrorReport> reports);

}  // namespace stvms
