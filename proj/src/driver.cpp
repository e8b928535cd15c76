#include "stvms/driver.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

namespace stvms {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void append_force_series(const ProblemDefinition& problem,
                         const SpaceTimeMesh& mesh,
                         std::span<const double> solution, bool skip_first_layer,
                         TimeSeries& drag, TimeSeries& lift) {
  const double scale = 2.0 / (problem.u_ref * problem.u_ref * problem.d_ref);
  for (int l = skip_first_layer ? 1 : 0; l < mesh.n_layers(); ++l) {
    TemporalSlice slice = temporal_slice(solution, mesh, mesh.layer_times[l]);
    drag.times.push_back(slice.t);
    drag.values.push_back(scale * cylinder_force(slice, problem.nu, {1.0, 0.0}));
    lift.times.push_back(slice.t);
    lift.values.push_back(scale * cylinder_force(slice, problem.nu, {0.0, 1.0}));
  }
}

}  // namespace

RunResult run(const ProblemDefinition& problem, const RunOptions& opts) {
  RunResult result;
  auto t_start = std::chrono::steady_clock::now();

  SpatialMesh spatial;
  try {
    spatial = build_spatial_mesh(problem);
  } catch (const std::exception& e) {
    result.failure = std::string("mesh: ") + e.what();
    return result;
  }

  require(problem.n_blocks >= 1, "run: n_blocks must be >= 1");
  require(problem.n_t % problem.n_blocks == 0,
          "run: n_t must be divisible by n_blocks");
  const int nt_block = problem.n_t / problem.n_blocks;
  const double T_block = problem.T / problem.n_blocks;
  const int nf = problem.d + 1;

  std::optional<GradingSpec> time_grading;
  for (const GradingSpec& g : problem.gradings)
    if (g.axis == problem.d) time_grading = g;

  result.timings.mesh_s = seconds_since(t_start);

  std::vector<double> chained_ic;  // previous block's final-time slice
  std::vector<double> error_sq;    // accumulated squared errors per field
  double error_h = 0.0;

  namespace fs = std::filesystem;
  if (!opts.output_dir.empty()) fs::create_directories(opts.output_dir);

  for (int b = 0; b < problem.n_blocks; ++b) {
    auto t_block = std::chrono::steady_clock::now();
    SpaceTimeMesh mesh;
    try {
      mesh = extrude_in_time(spatial, T_block, nt_block, problem.order,
                             b * T_block, time_grading);
      problem.self_check(mesh);
    } catch (const std::exception& e) {
      result.failure = "block " + std::to_string(b) + " setup: " + e.what();
      return result;
    }
    result.timings.mesh_s += seconds_since(t_block);

    DofMap dofs(mesh.n_nodes(), nf);
    apply_boundary_conditions(
        problem, mesh, dofs,
        b == 0 ? std::span<const double>{} : std::span<const double>(chained_ic));

    SystemAssembler assembler(mesh, problem, dofs);
    FieldVector x(static_cast<std::size_t>(mesh.n_nodes()) * nf, 0.0);
    assembler.dofs().apply_values(x);

    auto t_solve = std::chrono::steady_clock::now();
    PtcResult history;
    if (problem.use_ptc) {
      history = ptc_solve(assembler, x, problem.ptc);
    } else {
      NewtonResult newton = newton_solve(assembler, x, problem.ptc.newton);
      history.converged = newton.converged;
      history.failure = newton.failure;
      for (const NewtonIter& it : newton.history)
        history.outer_history.push_back(
            {std::numeric_limits<double>::infinity(), it.rnorm, it.dxnorm, 1});
    }
    result.timings.solve_s += seconds_since(t_solve);
    result.block_histories.push_back(history);

    if (opts.verbose) {
      std::cout << "[block " << b << "] " << (history.converged ? "converged" : "FAILED")
                << " in " << history.outer_history.size() << " outer steps\n";
    }
    if (!opts.output_dir.empty() && opts.write_history) {
      std::ofstream os(fs::path(opts.output_dir) /
                       ("history_block" + std::to_string(b) + ".csv"));
      write_history_csv(os, history);
    }
    if (!history.converged) {
      result.failure =
          "block " + std::to_string(b) + " solve: " + history.failure;
      result.mesh = std::move(mesh);
      result.solution = std::move(x);
      return result;
    }

    auto t_post = std::chrono::steady_clock::now();
    if (problem.post.error_report && problem.exact) {
      ErrorReport block_error =
          l2_error(x, *problem.exact, mesh, assembler.reference());
      if (error_sq.empty()) error_sq.assign(nf, 0.0);
      for (int f = 0; f < nf; ++f)
        error_sq[f] += block_error.field_errors[f] * block_error.field_errors[f];
      error_h = std::max(error_h, block_error.h);
    }
    if (problem.post.lift_series)
      append_force_series(problem, mesh, x, b > 0, result.drag, result.lift);

    if (!opts.output_dir.empty() && opts.write_vtk) {
      for (double t_req : problem.post.slice_times.empty()
                              ? std::vector<double>{problem.T}
                              : problem.post.slice_times) {
        if (t_req < mesh.layer_times.front() - 1e-12 ||
            t_req > mesh.layer_times.back() + 1e-12)
          continue;
        TemporalSlice slice = temporal_slice(x, mesh, t_req);
        std::ofstream os(fs::path(opts.output_dir) /
                         ("slice_t" + std::to_string(slice.t) + ".vtk"));
        write_vtk_slice(os, slice);
      }
    }

    // chain the final-time slice into the next block's initial condition
    if (b + 1 < problem.n_blocks) {
      TemporalSlice final_slice = temporal_slice(x, mesh, mesh.layer_times.back());
      chained_ic = final_slice.fields;
    }
    result.mesh = std::move(mesh);
    result.solution = std::move(x);
    result.timings.post_s += seconds_since(t_post);
  }

  if (problem.post.error_report && !error_sq.empty()) {
    ErrorReport report;
    report.order = problem.order;
    report.h = error_h;
    report.field_errors.resize(nf);
    double vel2 = 0.0;
    for (int f = 0; f < nf; ++f) {
      report.field_errors[f] = std::sqrt(error_sq[f]);
      if (f < problem.d) vel2 += error_sq[f];
    }
    report.velocity = std::sqrt(vel2);
    report.pressure = report.field_errors[nf - 1];
    result.error = report;
  }

  if (problem.post.strouhal && !result.lift.times.empty()) {
    try {
      result.strouhal_number = strouhal(result.lift, problem.d_ref,
                                        problem.u_ref, problem.post.settle_time);
    } catch (const std::exception&) {
      result.strouhal_number.reset();  // steady signal: no frequency
    }
  }

  if (!opts.output_dir.empty() && opts.write_csv) {
    if (!result.drag.times.empty()) {
      std::ofstream os(std::filesystem::path(opts.output_dir) / "drag.csv");
      write_time_series_csv(os, result.drag, "cd");
      std::ofstream os2(std::filesystem::path(opts.output_dir) / "lift.csv");
      write_time_series_csv(os2, result.lift, "cl");
    }
    if (result.error) {
      std::ofstream os(std::filesystem::path(opts.output_dir) / "errors.csv");
      const ErrorReport r = *result.error;
      write_error_table_csv(os, {&r, 1});
    }
  }

  result.converged = true;
  return result;
}

double fit_slope(std::span<const double> h, std::span<const double> err) {
  const int n = static_cast<int>(h.size());
  require(n >= 2, "fit_slope: need at least two points");
  double mx = 0, my = 0;
  std::vector<double> lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    lx[i] = std::log(h[i]);
    ly[i] = std::log(std::max(err[i], 1e-300));
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  return num / den;
}

StudyResult convergence_study(int d, double nu, std::span<const int> sizes,
                              int order, int threads, const RunOptions& opts) {
  require(sizes.size() >= 2, "convergence_study: need at least two mesh sizes");
  StudyResult study;
  for (int n : sizes) {
    ProblemDefinition problem = mms_problem(d, nu, n, order);
    problem.threads = threads;
    RunResult result = run(problem, opts);
    if (!result.converged) {
      study.failure = "mesh " + std::to_string(n) + ": " + result.failure;
      return study;
    }
    study.rows.push_back({n, *result.error});
    if (opts.verbose) {
      std::cout << "  n=" << n << "  h=" << result.error->h
                << "  |u err|=" << result.error->velocity
                << "  |p err|=" << result.error->pressure << "\n";
    }
  }

  const int nf = d + 1;
  std::vector<double> h;
  for (const StudyRow& row : study.rows) h.push_back(row.error.h);
  study.field_slopes.resize(nf);
  for (int f = 0; f < nf; ++f) {
    std::vector<double> e;
    for (const StudyRow& row : study.rows) e.push_back(row.error.field_errors[f]);
    study.field_slopes[f] = fit_slope(h, e);
  }
  std::vector<double> ve, pe;
  for (const StudyRow& row : study.rows) {
    ve.push_back(row.error.velocity);
    pe.push_back(row.error.pressure);
  }
  study.velocity_slope = fit_slope(h, ve);
  study.pressure_slope = fit_slope(h, pe);
  study.complete = true;
  return study;
}

}  // namespace stvms
