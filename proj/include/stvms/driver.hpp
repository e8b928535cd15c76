#pragma once

#include <optional>
#include <string>

#include "stvms/assembly.hpp"
#include "stvms/postprocess.hpp"
#include "stvms/problems.hpp"

namespace stvms {

struct RunOptions {
  std::string output_dir;  // empty: no files written
  bool write_vtk = false;
  bool write_csv = false;
  bool write_history = false;
  bool verbose = false;
};

struct PhaseTimings {
  double mesh_s = 0.0;
  double solve_s = 0.0;
  double post_s = 0.0;
};

struct RunResult {
  bool converged = false;
  std::string failure;  // phase-labelled diagnosis when not converged

  // final block state
  SpaceTimeMesh mesh;
  FieldVector solution;

  std::optional<ErrorReport> error;
  TimeSeries drag;  // C_d(t)
  TimeSeries lift;  // C_l(t)
  std::optional<double> strouhal_number;
  std::vector<PtcResult> block_histories;
  PhaseTimings timings;
};

RunResult run(const ProblemDefinition& problem, const RunOptions& opts = {});

struct StudyRow {
  int cells = 0;
  ErrorReport error;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<double> field_slopes;  // per field, least-squares log-log
  double velocity_slope = 0.0;
  double pressure_slope = 0.0;
  bool complete = false;
  std::string failure;
};

// MMS refinement study: meshes n^3 (d=2) or n^4 (d=3) for n in sizes.
StudyResult convergence_study(int d, double nu, std::span<const int> sizes,
                              int order, int threads = 1,
                              const RunOptions& opts = {});

// Least-squares slope of log(err) against log(h).
double fit_slope(std::span<const double> h, std::span<const double> err);

}  // namespace stvms
