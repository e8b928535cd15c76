#include "stvms/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace stvms {

namespace {

struct KeyBinding {
  std::string section;
  std::string key;
  std::string description;
  std::function<void(RunConfig&, const std::string&, int line)> set;
  std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void bad(int line, const std::string& msg) {
  throw std::invalid_argument("line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) bad(line, "trailing characters in number '" + v + "'");
    return x;
  } catch (const std::invalid_argument&) {
    bad(line, "not a number: '" + v + "'");
  } catch (const std::out_of_range&) {
    bad(line, "number out of range: '" + v + "'");
  }
}

int parse_int(const std::string& v, int line) {
  int x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    bad(line, "not an integer: '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(line, "not a boolean: '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<KeyBinding> bindings() {
  std::vector<KeyBinding> b;
  auto add_str = [&](const std::string& sec, const std::string& key,
                     std::string RunConfig::*field, const std::string& desc) {
    b.push_back({sec, key, desc,
                 [field](RunConfig& c, const std::string& v, int) { c.*field = v; },
                 [field](const RunConfig& c) { return c.*field; }});
  };
  auto add_double = [&](const std::string& sec, const std::string& key,
                        double RunConfig::*field, const std::string& desc) {
    b.push_back({sec, key, desc,
                 [field](RunConfig& c, const std::string& v, int line) {
                   c.*field = parse_double(v, line);
                 },
                 [field](const RunConfig& c) { return fmt(c.*field); }});
  };
  auto add_int = [&](const std::string& sec, const std::string& key,
                     int RunConfig::*field, const std::string& desc) {
    b.push_back({sec, key, desc,
                 [field](RunConfig& c, const std::string& v, int line) {
                   c.*field = parse_int(v, line);
                 },
                 [field](const RunConfig& c) { return std::to_string(c.*field); }});
  };
  auto add_bool = [&](const std::string& sec, const std::string& key,
                      bool RunConfig::*field, const std::string& desc) {
    b.push_back({sec, key, desc,
                 [field](RunConfig& c, const std::string& v, int line) {
                   c.*field = parse_bool(v, line);
                 },
                 [field](const RunConfig& c) {
                   return (c.*field) ? std::string("true") : std::string("false");
                 }});
  };

  add_str("", "problem", &RunConfig::problem,
          "mms2d|mms3d|ldc2d|ldc3d|cylinder");
  add_int("", "order", &RunConfig::order, "element order, 1 or 2");
  add_double("", "nu", &RunConfig::nu, "kinematic viscosity");
  add_double("", "Re", &RunConfig::Re, "Reynolds number; overrides nu when > 0");
  add_double("", "T", &RunConfig::T, "time horizon");
  add_int("", "blocks", &RunConfig::blocks, "sequential space-time blocks");
  add_int("", "threads", &RunConfig::threads, "assembly threads");

  add_double("mesh", "Lx", &RunConfig::Lx, "domain extent in x");
  add_double("mesh", "Ly", &RunConfig::Ly, "domain extent in y");
  add_double("mesh", "Lz", &RunConfig::Lz, "domain extent in z (3D problems)");
  add_int("mesh", "Nelemx", &RunConfig::Nelemx, "elements in x");
  add_int("mesh", "Nelemy", &RunConfig::Nelemy, "elements in y");
  add_int("mesh", "Nelemz", &RunConfig::Nelemz, "elements in z (3D problems)");
  add_int("mesh", "nt", &RunConfig::nt, "time slabs over the whole horizon");
  add_double("mesh", "grading_x", &RunConfig::grading_x,
             "tanh wall-clustering strength in x (0 = uniform)");
  add_double("mesh", "grading_y", &RunConfig::grading_y,
             "tanh wall-clustering strength in y");
  add_double("mesh", "grading_z", &RunConfig::grading_z,
             "tanh wall-clustering strength in z");
  add_double("mesh", "grading_t", &RunConfig::grading_t,
             "tanh clustering strength in time");

  add_str("cylinder", "setup", &RunConfig::setup, "schafer|kanaris");
  add_int("cylinder", "refinement", &RunConfig::refinement,
          "cylinder mesh refinement level");

  add_double("stab", "c1", &RunConfig::c1, "tau_m viscous constant (> 2)");
  add_double("stab", "c2", &RunConfig::c2, "tau_m advective constant");
  add_double("stab", "c3", &RunConfig::c3, "tau_c viscous constant");
  add_double("stab", "c4", &RunConfig::c4, "tau_c advective constant");
  add_double("stab", "C_I", &RunConfig::C_I, "inverse-estimate constant");
  add_bool("stab", "paper_literal_signs", &RunConfig::paper_literal_signs,
           "+nu lap(v) test sign inside B_h instead of the adjoint-consistent "
           "-nu lap(v)");

  add_str("krylov", "method", &RunConfig::krylov_method, "bicgstab|gmres");
  add_double("krylov", "rtol", &RunConfig::krylov_rtol,
             "linear relative tolerance");
  add_double("krylov", "atol", &RunConfig::krylov_atol,
             "linear absolute tolerance");
  add_int("krylov", "max_iters", &RunConfig::krylov_max_iters,
          "linear iteration cap");
  add_int("krylov", "restart", &RunConfig::gmres_restart, "GMRES restart");
  add_str("krylov", "precon", &RunConfig::precon,
          "none|jacobi|blockjacobi|ilu0");

  add_bool("ptc", "enabled", &RunConfig::ptc_enabled,
           "pseudo-transient continuation wrapper");
  add_double("ptc", "dtau0", &RunConfig::dtau0, "initial pseudo-time step");
  add_str("ptc", "growth", &RunConfig::growth, "ser|fixed");
  add_double("ptc", "dtau_max", &RunConfig::dtau_max, "pseudo-time step cap");
  add_double("ptc", "gamma1", &RunConfig::gamma1,
             "inner Newton increment tolerance");
  add_double("ptc", "gamma2", &RunConfig::gamma2, "outer PTC tolerance");
  add_double("ptc", "snes_rtol", &RunConfig::snes_rtol,
             "nonlinear residual relative tolerance");
  add_double("ptc", "snes_atol", &RunConfig::snes_atol,
             "nonlinear residual absolute tolerance");
  add_int("ptc", "max_newton", &RunConfig::max_newton, "inner Newton cap");
  add_int("ptc", "max_ptc", &RunConfig::max_ptc, "outer PTC cap");
  add_bool("ptc", "eisenstat_walker", &RunConfig::eisenstat_walker,
           "adaptive inner linear tolerance");

  add_str("output", "dir", &RunConfig::output_dir, "output directory");
  add_bool("output", "vtk", &RunConfig::vtk, "write VTK temporal slices");
  add_bool("output", "csv", &RunConfig::csv, "write CSV tables");
  add_bool("output", "history", &RunConfig::history,
           "write convergence history CSV");
  b.push_back(
      {"output", "slice_times", "comma-separated slice export times",
       [](RunConfig& c, const std::string& v, int line) {
         c.slice_times.clear();
         if (v.empty()) return;
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ','))
           c.slice_times.push_back(parse_double(item, line));
       },
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.slice_times.size(); ++i)
           out += (i ? "," : "") + fmt(c.slice_times[i]);
         return out;
       }});

  add_double("post", "settle_time", &RunConfig::settle_time,
             "Strouhal settled-window start t_c");
  add_bool("post", "strouhal", &RunConfig::want_strouhal,
           "extract Strouhal number from the lift series");
  add_bool("post", "lift", &RunConfig::want_lift,
           "record drag/lift coefficient series");
  return b;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const std::vector<KeyBinding> keys = bindings();
  std::map<std::pair<std::string, std::string>, const KeyBinding*> lookup;
  for (const KeyBinding& k : keys) lookup[{k.section, k.key}] = &k;

  RunConfig config;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') bad(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) bad(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    auto it = lookup.find({section, key});
    if (it == lookup.end())
      bad(line, "unknown key '" + (section.empty() ? key : section + "." + key) +
                    "'");
    it->second->set(config, value, line);
  }
  return config;
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  std::string section;
  for (const KeyBinding& k : bindings()) {
    if (k.section != section) {
      section = k.section;
      os << "\n[" << section << "]\n";
    }
    os << k.key << " = " << k.get(config) << "\n";
  }
  return os.str();
}

std::string config_reference() {
  std::ostringstream os;
  const RunConfig defaults;
  std::string section;
  for (const KeyBinding& k : bindings()) {
    if (k.section != section) {
      section = k.section;
      os << "\n[" << section << "]\n";
    }
    std::string def = k.get(defaults);
    if (def.empty()) def = "(empty)";
    os << "  " << k.key << " (default " << def << "): " << k.description << "\n";
  }
  return os.str();
}

ProblemDefinition RunConfig::to_problem() const {
  ProblemDefinition p;
  if (problem == "mms2d" || problem == "mms3d") {
    const int d = (problem == "mms2d") ? 2 : 3;
    p = mms_problem(d, Re > 0 ? 1.0 / Re : nu, Nelemx, order);
    p.counts = (d == 2) ? std::vector<int>{Nelemx, Nelemy}
                        : std::vector<int>{Nelemx, Nelemy, Nelemz};
    p.extents = (d == 2) ? std::vector<double>{Lx, Ly}
                         : std::vector<double>{Lx, Ly, Lz};
    p.n_t = nt;
    p.T = T;
  } else if (problem == "ldc2d" || problem == "ldc3d") {
    const int d = (problem == "ldc2d") ? 2 : 3;
    const double visc = Re > 0 ? 1.0 / Re : nu;
    const std::vector<int> counts = {Nelemx, Nelemy, Nelemz};
    p = lid_driven_cavity(d, visc, T, counts, nt, order, blocks);
  } else if (problem == "cylinder") {
    const CylinderSetup s =
        (setup == "kanaris") ? CylinderSetup::Kanaris : CylinderSetup::Schafer;
    require(setup == "kanaris" || setup == "schafer",
            "config: cylinder.setup must be schafer or kanaris");
    p = flow_past_cylinder(s, static_cast<int>(Re > 0 ? Re : 20), T, refinement,
                           nt, blocks);
  } else {
    throw std::invalid_argument("config: unknown problem '" + problem + "'");
  }

  if (grading_x > 0) p.gradings.push_back({0, GradingSpec::Kind::TanhCluster, grading_x});
  if (grading_y > 0) p.gradings.push_back({1, GradingSpec::Kind::TanhCluster, grading_y});
  if (grading_z > 0 && p.d == 3)
    p.gradings.push_back({2, GradingSpec::Kind::TanhCluster, grading_z});
  if (grading_t > 0)
    p.gradings.push_back({p.d, GradingSpec::Kind::TanhCluster, grading_t});

  p.stab.c1 = c1;
  p.stab.c2 = c2;
  p.stab.c3 = c3;
  p.stab.c4 = c4;
  p.stab.C_I = C_I;
  p.stab.validate();
  p.terms.paper_literal_signs = paper_literal_signs;
  p.threads = threads;

  KrylovConfig& kc = p.ptc.newton.krylov;
  if (krylov_method == "gmres")
    kc.method = KrylovMethod::Gmres;
  else if (krylov_method == "bicgstab")
    kc.method = KrylovMethod::BiCGStab;
  else
    throw std::invalid_argument("config: unknown krylov.method '" +
                                krylov_method + "'");
  kc.rtol = krylov_rtol;
  kc.atol = krylov_atol;
  kc.max_iters = krylov_max_iters;
  kc.gmres_restart = gmres_restart;
  if (precon == "none")
    kc.precon = PreconType::None;
  else if (precon == "jacobi")
    kc.precon = PreconType::Jacobi;
  else if (precon == "blockjacobi")
    kc.precon = PreconType::BlockJacobi;
  else if (precon == "ilu0")
    kc.precon = PreconType::Ilu0;
  else
    throw std::invalid_argument("config: unknown krylov.precon '" + precon + "'");
  kc.block_size = p.d + 1;

  p.use_ptc = ptc_enabled;
  p.ptc.dtau0 = dtau0;
  p.ptc.growth = (growth == "fixed") ? PtcConfig::Growth::Fixed
                                     : PtcConfig::Growth::SER;
  p.ptc.dtau_max = dtau_max;
  p.ptc.newton.gamma1 = gamma1;
  p.ptc.gamma2 = gamma2;
  p.ptc.newton.snes_rtol = snes_rtol;
  p.ptc.newton.snes_atol = snes_atol;
  p.ptc.newton.max_newton = max_newton;
  p.ptc.max_ptc = max_ptc;
  p.ptc.newton.eisenstat_walker = eisenstat_walker;

  p.post.slice_times = slice_times;
  p.post.settle_time = settle_time;
  p.post.strouhal = want_strouhal;
  if (want_lift) p.post.lift_series = true;
  return p;
}

RunOptions RunConfig::to_options() const {
  RunOptions opts;
  opts.output_dir = output_dir;
  opts.write_vtk = vtk;
  opts.write_csv = csv;
  opts.write_history = history;
  return opts;
}

}  // namespace stvms
