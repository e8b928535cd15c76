// stvms — space-time VMS Navier-Stokes solver CLI
//
// Subcommands:
//   run    --config FILE [--out DIR]
//   study  --problem mms2d|mms3d --order K --meshes 8,16,32 [--nu X] [--out DIR]
//   bench  ldc|cylinder [options]
//   mesh   --cylinder --setup schafer|kanaris [--refinement K] --out FILE
//          --box --dim D --extents a,b,.. --counts n,m,.. [--order K] --out FILE
//
// Exit codes: 0 success, 1 solver failure, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "stvms/config.hpp"
#include "stvms/driver.hpp"
#include "stvms/ghia.hpp"
#include "stvms/mesh.hpp"
#include "stvms/postprocess.hpp"

namespace {

using namespace stvms;

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitConfig = 2;

void print_usage() {
  std::cout <<
      R"(stvms — space-time VMS Navier-Stokes solver

usage:
  stvms run --config FILE [--out DIR] [--verbose]
  stvms study --problem mms2d|mms3d --order K --meshes 8,16,32
              [--nu X] [--threads N] [--out DIR]
  stvms bench ldc [--re 1000] [--mesh 32] [--T 30] [--nt 30] [--blocks 3]
              [--grading 1.5] [--out DIR]
  stvms bench cylinder [--setup schafer|kanaris] [--re 20] [--refinement 1]
              [--T 10] [--nt 20] [--blocks 1] [--settle 0] [--out DIR]
  stvms mesh --cylinder [--setup schafer|kanaris] [--refinement K] --out FILE
  stvms mesh --box --dim D --extents a,b,... --counts n,m,... [--order K] --out FILE
  stvms help config      # config file key reference

exit codes: 0 success, 1 solver failure, 2 configuration error
)";
}

struct Args {
  std::vector<std::string> positional;
  std::map<std::string, std::string> flags;

  bool has(const std::string& k) const { return flags.count(k) > 0; }
  std::string get(const std::string& k, const std::string& def = "") const {
    auto it = flags.find(k);
    return it == flags.end() ? def : it->second;
  }
  double get_double(const std::string& k, double def) const {
    auto it = flags.find(k);
    return it == flags.end() ? def : std::stod(it->second);
  }
  int get_int(const std::string& k, int def) const {
    auto it = flags.find(k);
    return it == flags.end() ? def : std::stoi(it->second);
  }
};

Args parse_args(int argc, char** argv, int start) {
  Args args;
  for (int i = start; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) == 0) {
      const std::string key = a.substr(2);
      if (i + 1 < argc && std::string(argv[i + 1]).rfind("--", 0) != 0)
        args.flags[key] = argv[++i];
      else
        args.flags[key] = "true";
    } else {
      args.positional.push_back(a);
    }
  }
  return args;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int cmd_run(const Args& args) {
  const std::string path = args.get("config");
  if (path.empty()) {
    std::cerr << "run: --config FILE is required\n";
    return kExitConfig;
  }
  std::ifstream file(path);
  if (!file) {
    std::cerr << "run: cannot open '" << path << "'\n";
    return kExitConfig;
  }
  std::stringstream text;
  text << file.rdbuf();

  RunConfig config;
  ProblemDefinition problem;
  RunOptions opts;
  try {
    config = parse_config(text.str());
    problem = config.to_problem();
    opts = config.to_options();
  } catch (const std::exception& e) {
    std::cerr << "config error in " << path << ": " << e.what() << "\n";
    return kExitConfig;
  }
  if (args.has("out")) opts.output_dir = args.get("out");
  opts.verbose = args.has("verbose");

  RunResult result = run(problem, opts);
  if (!result.converged) {
    std::cerr << "solver failure: " << result.failure << "\n";
    return kExitSolver;
  }
  std::cout << "converged (" << result.block_histories.size() << " block(s), "
            << std::fixed << std::setprecision(1) << result.timings.solve_s
            << " s solve)\n";
  if (result.error) {
    std::cout << "L2 errors: velocity " << std::scientific
              << result.error->velocity << ", pressure "
              << result.error->pressure << "\n";
  }
  if (!result.drag.values.empty())
    std::cout << "final Cd = " << std::fixed << std::setprecision(4)
              << result.drag.values.back() << "\n";
  if (result.strouhal_number)
    std::cout << "St = " << *result.strouhal_number << "\n";
  return kExitOk;
}

int cmd_study(const Args& args) {
  const std::string prob = args.get("problem", "mms2d");
  if (prob != "mms2d" && prob != "mms3d") {
    std::cerr << "study: --problem must be mms2d or mms3d\n";
    return kExitConfig;
  }
  const int d = (prob == "mms2d") ? 2 : 3;
  const int order = args.get_int("order", 1);
  const double nu = args.get_double("nu", 1.0);
  std::vector<int> sizes = parse_int_list(args.get("meshes", "4,8,16"));

  RunOptions opts;
  opts.verbose = true;
  StudyResult study;
  try {
    study = convergence_study(d, nu, sizes, order, args.get_int("threads", 1),
                              opts);
  } catch (const std::exception& e) {
    std::cerr << "study error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (!study.complete) {
    std::cerr << "study aborted: " << study.failure << "\n";
    // partial table
    for (const StudyRow& row : study.rows)
      std::cout << row.cells << " " << row.error.velocity << " "
                << row.error.pressure << "\n";
    return kExitSolver;
  }

  std::cout << "\n   n        h        |u-u_h|      |p-p_h|\n";
  for (const StudyRow& row : study.rows)
    std::cout << std::setw(4) << row.cells << "  " << std::scientific
              << std::setprecision(3) << row.error.h << "  "
              << row.error.velocity << "  " << row.error.pressure << "\n";
  std::cout << std::fixed << std::setprecision(2)
            << "velocity slope: " << study.velocity_slope
            << "\npressure slope: " << study.pressure_slope << "\n";

  if (args.has("out")) {
    std::filesystem::create_directories(args.get("out"));
    std::ofstream os(std::filesystem::path(args.get("out")) /
                     (prob + "_q" + std::to_string(order) + "_errors.csv"));
    std::vector<ErrorReport> reports;
    for (const StudyRow& row : study.rows) reports.push_back(row.error);
    write_error_table_csv(os, reports);
  }
  return kExitOk;
}

int cmd_bench(const Args& args) {
  if (args.positional.empty()) {
    std::cerr << "bench: expected 'ldc' or 'cylinder'\n";
    return kExitConfig;
  }
  RunOptions opts;
  opts.verbose = true;
  if (args.has("out")) {
    opts.output_dir = args.get("out");
    opts.write_csv = true;
    opts.write_history = true;
    opts.write_vtk = true;
  }

  if (args.positional[0] == "ldc") {
    const double re = args.get_double("re", 1000.0);
    const int n = args.get_int("mesh", 32);
    const double T = args.get_double("T", 30.0);
    const int nt = args.get_int("nt", 30);
    const int blocks = args.get_int("blocks", 3);
    const std::vector<int> counts = {n, n, n};
    ProblemDefinition problem =
        lid_driven_cavity(2, 1.0 / re, T, counts, nt, 1, blocks);
    const double grading = args.get_double("grading", 0.0);
    if (grading > 0) {
      problem.gradings.push_back({0, GradingSpec::Kind::TanhCluster, grading});
      problem.gradings.push_back({1, GradingSpec::Kind::TanhCluster, grading});
    }
    problem.threads = args.get_int("threads", 1);

    RunResult result = run(problem, opts);
    if (!result.converged) {
      std::cerr << "solver failure: " << result.failure << "\n";
      return kExitSolver;
    }
    TemporalSlice final_slice =
        temporal_slice(result.solution, result.mesh, T);
    std::cout << "\n  y        u_x(0.5,y,T)   Ghia(Re=1000)\n";
    for (int i = 0; i < ghia::kCount; ++i) {
      const double pt[2] = {0.5, ghia::kY[i]};
      const double ux = sample_slice(final_slice, {pt, 2}, 0);
      std::cout << std::fixed << std::setprecision(4) << std::setw(7)
                << ghia::kY[i] << "   " << std::setw(10) << ux << "    "
                << std::setw(10) << ghia::kU_Re1000[i] << "\n";
    }
    if (re == 1000.0)
      std::cout << "max deviation vs Ghia: "
                << ghia_re1000_max_deviation(final_slice) << "\n";
    const double ts = steady_state_time(result.solution, result.mesh, 1e-2);
    std::cout << "steady-state time (tol 1e-2, final block): " << ts << "\n";
    return kExitOk;
  }

  if (args.positional[0] == "cylinder") {
    const std::string setup_name = args.get("setup", "schafer");
    const CylinderSetup setup = (setup_name == "kanaris")
                                    ? CylinderSetup::Kanaris
                                    : CylinderSetup::Schafer;
    const int re = args.get_int("re", 20);
    const double T = args.get_double("T", 10.0);
    const int nt = args.get_int("nt", 20);
    const int blocks = args.get_int("blocks", 1);
    ProblemDefinition problem = flow_past_cylinder(
        setup, re, T, args.get_int("refinement", 1), nt, blocks);
    problem.threads = args.get_int("threads", 1);
    problem.post.settle_time = args.get_double("settle", 0.0);
    problem.post.strouhal = problem.post.settle_time > 0.0;

    RunResult result = run(problem, opts);
    if (!result.converged) {
      std::cerr << "solver failure: " << result.failure << "\n";
      return kExitSolver;
    }
    std::cout << std::fixed << std::setprecision(4);
    std::cout << "final Cd = " << result.drag.values.back() << "\n";
    std::cout << "final Cl = " << result.lift.values.back() << "\n";
    if (result.strouhal_number)
      std::cout << "St = " << *result.strouhal_number << "\n";
    return kExitOk;
  }

  std::cerr << "bench: unknown benchmark '" << args.positional[0] << "'\n";
  return kExitConfig;
}

int cmd_mesh(const Args& args) {
  const std::string out = args.get("out");
  if (out.empty()) {
    std::cerr << "mesh: --out FILE is required\n";
    return kExitConfig;
  }
  std::ofstream os(out);
  if (!os) {
    std::cerr << "mesh: cannot open '" << out << "'\n";
    return kExitConfig;
  }
  try {
    if (args.has("cylinder")) {
      const std::string setup = args.get("setup", "schafer");
      double L, H, D;
      std::array<double, 2> center;
      if (setup == "kanaris") {
        D = 1.0;
        H = 5.0;
        L = 40.0;
        center = {10.0, 2.5};
      } else {
        D = 0.1;
        H = 0.41;
        L = 2.2;
        center = {0.2, 0.2};
      }
      SpatialMesh mesh = build_cylinder_channel_mesh(
          L, H, D, center, args.get_int("refinement", 1));
      write_mesh(os, mesh);
      std::cout << "wrote " << mesh.n_nodes() << " nodes, " << mesh.n_elems()
                << " quads to " << out << "\n";
    } else if (args.has("box")) {
      const int dim = args.get_int("dim", 3);
      std::vector<double> extents = parse_double_list(args.get("extents", "1,1,1"));
      std::vector<int> counts = parse_int_list(args.get("counts", "4,4,4"));
      SpaceTimeMesh mesh = build_box_mesh(dim, extents, counts,
                                          args.get_int("order", 1));
      write_mesh(os, mesh);
      std::cout << "wrote " << mesh.n_nodes() << " nodes, " << mesh.n_elems()
                << " elements to " << out << "\n";
    } else {
      std::cerr << "mesh: expected --cylinder or --box\n";
      return kExitConfig;
    }
  } catch (const std::exception& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage();
    return kExitConfig;
  }
  const std::string cmd = argv[1];
  const Args args = parse_args(argc, argv, 2);
  try {
    if (cmd == "run") return cmd_run(args);
    if (cmd == "study") return cmd_study(args);
    if (cmd == "bench") return cmd_bench(args);
    if (cmd == "mesh") return cmd_mesh(args);
    if (cmd == "help") {
      if (!args.positional.empty() && args.positional[0] == "config")
        std::cout << "config file keys (section.key):\n" << config_reference();
      else
        print_usage();
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::cerr << "unknown command '" << cmd << "'\n";
  print_usage();
  return kExitConfig;
}
