#include "specmg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

namespace specmg {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) bad("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) bad("cannot write '" + path + "'");
  return f;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

std::string problem_type(const Config& cfg) {
  return cfg.get_string("problem", "type", "single-phase");
}

void require_type(const Config& cfg, const std::string& want, const std::string& who) {
  const std::string got = problem_type(cfg);
  if (got != want) bad(who + ": problem.type must be " + want + ", got '" + got + "'");
}

std::string source_kind(const Config& cfg, const BoundarySpec& bc) {
  return cfg.get_string("sources", "kind", bc.any() ? "none" : "corner-spot");
}

Vector sources_from_config(const Config& cfg, const GridHierarchy& g, const BoundarySpec& bc) {
  const std::string kind = source_kind(cfg, bc);
  if (kind == "none") return Vector(static_cast<std::size_t>(g.num_cells()), 0.0);
  if (kind == "corner-spot") return default_sources(g, cfg.get_double("sources", "q", 1.0));
  bad("sources.kind '" + kind + "' is not one of none, corner-spot");
}

std::string spectrum_kind(const Config& cfg) {
  const std::string s = cfg.get_string("solver", "spectrum", "none");
  if (s != "none" && s != "lanczos" && s != "dense")
    bad("solver.spectrum '" + s + "' is not one of none, lanczos, dense");
  return s;
}

void warn_saturation(const CoarseSpace& cs, const char* level) {
  int hit = 0;
  for (const BlockSpectralBasis& b : cs.blocks) hit += b.saturated ? 1 : 0;
  if (hit > 0) {
    std::cerr << "warning: " << hit << " " << level
              << " block(s) hit the threshold candidate cap; consider raising coarse.cap\n";
  }
}

struct SweepRow {
  std::vector<std::string> axis;
  PointResult r;
  std::string status = "ok";
};

const char* kSolveHeader =
    "n,dim_c,dim_cc,iters,converged,relres,conservation,lambda_min,lambda_max,cond";
const char* kTimingHeader = "setup_s,solve_s";

std::vector<std::string> point_cells(const PointResult& r) {
  std::vector<std::string> c;
  c.push_back(std::to_string(r.n));
  c.push_back(std::to_string(r.dim_c));
  c.push_back(std::to_string(r.dim_cc));
  c.push_back(std::to_string(r.iterations));
  c.push_back(r.converged ? "1" : "0");
  c.push_back(format_double(r.relres));
  c.push_back(format_double(r.conservation));
  if (r.spectrum) {
    c.push_back(format_double(r.spectrum->lambda_min));
    c.push_back(format_double(r.spectrum->lambda_max));
    c.push_back(format_double(r.spectrum->cond()));
  } else {
    c.push_back("");
    c.push_back("");
    c.push_back("");
  }
  return c;
}

std::vector<std::string> timing_cells(const PointResult& r) {
  return {format_double(r.setup_seconds), format_double(r.solve_seconds)};
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

Vector log10_of(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log10(v[i]);
  return out;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : text) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_vtk_cells(const std::string& path, const GridHierarchy& g,
                     const std::vector<std::pair<std::string, const Vector*>>& fields) {
  std::ofstream f = open_out(path);
  f << "# vtk DataFile Version 3.0\n";
  f << "specmg cell data\n";
  f << "ASCII\n";
  f << "DATASET STRUCTURED_POINTS\n";
  f << "DIMENSIONS " << g.n[0] + 1 << " " << g.n[1] + 1 << " " << g.n[2] + 1 << "\n";
  f << "ORIGIN 0 0 0\n";
  f << "SPACING " << format_double(g.h[0]) << " " << format_double(g.h[1]) << " "
    << format_double(g.h[2]) << "\n";
  f << "CELL_DATA " << g.num_cells() << "\n";
  for (const auto& [name, data] : fields) {
    if (static_cast<int>(data->size()) != g.num_cells())
      bad("vtk: field '" + name + "' does not match the grid");
    f << "SCALARS " << name << " double 1\n";
    f << "LOOKUP_TABLE default\n";
    for (const double v : *data) f << format_double(v) << "\n";
  }
}

GridHierarchy grid_from_config(const Config& cfg) {
  const int dim = cfg.get_int("grid", "dim", 2);
  if (dim != 2 && dim != 3) bad("grid.dim must be 2 or 3");
  const int nx = cfg.get_int("grid", "nx");
  const int ny = cfg.get_int("grid", "ny", nx);
  const int nz = dim == 3 ? cfg.get_int("grid", "nz", nx) : 1;
  const double lx = cfg.get_double("grid", "lx", nx);
  const double ly = cfg.get_double("grid", "ly", ny);
  const double lz = dim == 3 ? cfg.get_double("grid", "lz", nz) : 1.0;
  const int ccx = cfg.get_int("grid", "ccx", 2);
  const int ccy = cfg.get_int("grid", "ccy", ccx);
  const int ccz = dim == 3 ? cfg.get_int("grid", "ccz", ccx) : 1;
  const int sd = cfg.get_int("grid", "sd", 2);
  try {
    return build_hierarchy(dim, {nx, ny, nz}, {lx, ly, lz}, {ccx, ccy, ccz}, sd);
  } catch (const std::exception& e) {
    bad(std::string("grid: ") + e.what());
  }
}

PermeabilityField field_from_config(const Config& cfg, const GridHierarchy& g) {
  const std::string gen = cfg.get_string("field", "generator", "uniform");
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("field", "seed", 12345));
  PermeabilityField f;
  try {
    if (gen == "uniform") {
      f = gen_uniform(g, cfg.get_double("field", "k", 1.0), cfg.get_double("field", "phi", 0.2));
    } else if (gen == "log-uniform") {
      f = gen_log_uniform(g, seed, cfg.get_double("field", "contrast", 4.0));
    } else if (gen == "periodic-cell") {
      f = gen_periodic_cell(g, default_channel_mask(),
                            std::pow(10.0, cfg.get_double("field", "contrast", 4.0)));
    } else if (gen == "fractured") {
      f = gen_fractured(g, default_fracture_network(g), cfg.get_double("field", "contrast", 4.0));
    } else if (gen == "spe10") {
      f = gen_spe10_like(g, seed, cfg.get_double("field", "log10_min", 0.0),
                         cfg.get_double("field", "log10_max", 3.0));
    } else if (gen == "file") {
      f = load_raw(cfg.get_string("field", "path"), g, cfg.get_bool("field", "with_phi", true));
    } else {
      bad("field.generator '" + gen +
          "' is not one of uniform, log-uniform, periodic-cell, fractured, spe10, file");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    bad(std::string("field: ") + e.what());
  }
  const std::string units = cfg.get_string("field", "units", "internal");
  if (units == "md") {
    scale_permeability(f, kMdToInternal);
  } else if (units != "internal") {
    bad("field.units '" + units + "' is not one of internal, md");
  }
  return f;
}

BoundarySpec bc_from_config(const Config& cfg, int dim) {
  const std::string spec = cfg.get_string("bc", "dirichlet", "none");
  if (spec == "none") return BoundarySpec::no_flow();
  if (spec == "all") return BoundarySpec::all_dirichlet(dim);
  static const std::map<std::string, std::pair<int, int>> sides = {
      {"xlo", {0, 0}}, {"xhi", {0, 1}}, {"ylo", {1, 0}},
      {"yhi", {1, 1}}, {"zlo", {2, 0}}, {"zhi", {2, 1}}};
  BoundarySpec b;
  for (const std::string& tok : split_values(spec)) {
    const auto it = sides.find(tok);
    if (it == sides.end())
      bad("bc.dirichlet side '" + tok + "' is not one of xlo, xhi, ylo, yhi, zlo, zhi");
    if (it->second.first >= dim) bad("bc.dirichlet side '" + tok + "' does not exist in 2D");
    b.dirichlet[it->second.first][it->second.second] = true;
  }
  return b;
}

SelectionRule rule_from_config(const Config& cfg, Level level) {
  const std::string strategy = cfg.get_string("coarse", "strategy", "fixed");
  const bool c = level == Level::Coarse;
  if (strategy == "fixed") {
    const int l = cfg.get_int("coarse", c ? "L_c" : "L_cc", 4);
    if (l < 1) bad(std::string("coarse.") + (c ? "L_c" : "L_cc") + " must be >= 1");
    return SelectionRule::fixed(l);
  }
  if (strategy == "threshold") {
    const double b = cfg.get_double("coarse", c ? "B_c" : "B_cc");
    const int cap = cfg.get_int("coarse", "cap", 20);
    if (cap < 1) bad("coarse.cap must be >= 1");
    return SelectionRule::by_threshold(b, cap);
  }
  bad("coarse.strategy '" + strategy + "' is not one of fixed, threshold");
}

ThreeGridPreconditioner::Options tg_from_config(const Config& cfg) {
  ThreeGridPreconditioner::Options opt;
  opt.nu = cfg.get_int("smoother", "nu", 1);
  opt.nu_c = cfg.get_int("smoother", "nu_c", 1);
  opt.omega = cfg.get_double("smoother", "omega", 1.0);
  if (opt.nu < 1 || opt.nu_c < 1) bad("smoother.nu and smoother.nu_c must be >= 1");
  if (!(opt.omega > 0.0) || opt.omega > 1.0) bad("smoother.omega must be in (0, 1]");
  const std::string mode = cfg.get_string("tg", "mode", "inexact");
  if (mode == "inexact") {
    opt.mode = TgMode::Inexact;
  } else if (mode == "exact") {
    opt.mode = TgMode::Exact;
  } else {
    bad("tg.mode '" + mode + "' is not one of inexact, exact");
  }
  return opt;
}

SolverConfig solver_from_config(const Config& cfg) {
  SolverConfig s;
  const std::string method = cfg.get_string("solver", "method", "cg");
  if (method == "cg") {
    s.method = SolverConfig::Method::CG;
  } else if (method == "gmres") {
    s.method = SolverConfig::Method::GMRES;
  } else {
    bad("solver.method '" + method + "' is not one of cg, gmres");
  }
  s.rtol = cfg.get_double("solver", "rtol", 1e-6);
  s.max_iters = cfg.get_int("solver", "max_iters", 1000);
  s.restart = cfg.get_int("solver", "restart", 30);
  if (!(s.rtol > 0.0)) bad("solver.rtol must be positive");
  if (s.max_iters < 1) bad("solver.max_iters must be >= 1");
  if (s.restart < 1) bad("solver.restart must be >= 1");
  s.estimate_spectrum =
      spectrum_kind(cfg) == "lanczos" && s.method == SolverConfig::Method::CG;
  return s;
}

SimulationConfig simulation_from_config(const Config& cfg) {
  SimulationConfig sim;
  sim.grid = grid_from_config(cfg);
  sim.field = field_from_config(cfg, sim.grid);

  sim.fluid.mu_w = cfg.get_double("fluid", "mu_w", 0.3);
  sim.fluid.mu_o = cfg.get_double("fluid", "mu_o", 3.0);
  sim.fluid.s_min = cfg.get_double("fluid", "s_min", 0.2);
  sim.fluid.s_max = cfg.get_double("fluid", "s_max", 0.8);
  if (!(sim.fluid.mu_w > 0.0) || !(sim.fluid.mu_o > 0.0))
    bad("fluid viscosities must be positive");
  if (!(sim.fluid.s_min >= 0.0) || !(sim.fluid.s_min < sim.fluid.s_max) ||
      !(sim.fluid.s_max <= 1.0))
    bad("fluid saturation bounds must satisfy 0 <= s_min < s_max <= 1");

  const double rate_bbl = cfg.get_double("wells", "rate_bbl", 500.0);
  const double p_bh = cfg.get_double("wells", "p_bh", 1000.0);
  const double r_wb = cfg.get_double("wells", "r_wb", 0.3);
  if (!(rate_bbl > 0.0)) bad("wells.rate_bbl must be positive");
  if (!(r_wb > 0.0)) bad("wells.r_wb must be positive");
  try {
    sim.wells = five_spot(sim.grid, sim.field, rate_bbl * kBblToFt3, p_bh, r_wb);
  } catch (const std::exception& e) {
    bad(std::string("wells: ") + e.what());
  }
  sim.wells.mobility_weighted = cfg.get_bool("wells", "mobility_weighted", false);

  sim.pressure.rule_c = rule_from_config(cfg, Level::Coarse);
  sim.pressure.rule_cc = rule_from_config(cfg, Level::CoarseCoarse);
  sim.pressure.tg = tg_from_config(cfg);
  sim.pressure.solver = solver_from_config(cfg);

  sim.ds_max = cfg.get_double("time", "ds_max", 1e-3);
  sim.substeps = cfg.get_int("time", "substeps", 50);
  sim.max_outer_steps = cfg.get_int("time", "max_outer_steps", 200);
  sim.end_time = cfg.get_double("time", "end_time", 1e30);
  sim.dt_max = cfg.get_double("time", "dt_max", 0.0);
  sim.refresh_every = cfg.get_int("time", "refresh_every", 1);
  if (!(sim.ds_max > 0.0)) bad("time.ds_max must be positive");
  if (sim.substeps < 1) bad("time.substeps must be >= 1");
  if (sim.max_outer_steps < 1) bad("time.max_outer_steps must be >= 1");
  if (!(sim.end_time > 0.0)) bad("time.end_time must be positive");
  if (sim.dt_max < 0.0) bad("time.dt_max must be >= 0");
  if (sim.refresh_every < 1) bad("time.refresh_every must be >= 1");
  return sim;
}

Config resolve_config(const Config& cfg) {
  Config r = cfg;
  const std::string type = problem_type(cfg);
  r.set("problem", "type", type);

  const GridHierarchy g = grid_from_config(cfg);
  r.set_int("grid", "dim", g.dim);
  r.set_int("grid", "nx", g.n[0]);
  r.set_int("grid", "ny", g.n[1]);
  r.set_int("grid", "nz", g.n[2]);
  r.set_double("grid", "lx", g.n[0] * g.h[0]);
  r.set_double("grid", "ly", g.n[1] * g.h[1]);
  r.set_double("grid", "lz", g.n[2] * g.h[2]);
  r.set_int("grid", "ccx", g.cc[0]);
  r.set_int("grid", "ccy", g.cc[1]);
  r.set_int("grid", "ccz", g.cc[2]);
  r.set_int("grid", "sd", g.sd);

  const std::string gen = cfg.get_string("field", "generator", "uniform");
  r.set("field", "generator", gen);
  r.set_int("field", "seed", cfg.get_int("field", "seed", 12345));
  r.set("field", "units", cfg.get_string("field", "units", "internal"));
  if (gen == "uniform") {
    r.set_double("field", "k", cfg.get_double("field", "k", 1.0));
    r.set_double("field", "phi", cfg.get_double("field", "phi", 0.2));
  } else if (gen == "log-uniform" || gen == "periodic-cell" || gen == "fractured") {
    r.set_double("field", "contrast", cfg.get_double("field", "contrast", 4.0));
  } else if (gen == "spe10") {
    r.set_double("field", "log10_min", cfg.get_double("field", "log10_min", 0.0));
    r.set_double("field", "log10_max", cfg.get_double("field", "log10_max", 3.0));
  } else if (gen == "file") {
    r.set("field", "path", cfg.get_string("field", "path"));
    r.set("field", "with_phi", cfg.get_bool("field", "with_phi", true) ? "true" : "false");
  }

  r.set("coarse", "strategy", cfg.get_string("coarse", "strategy", "fixed"));
  if (cfg.get_string("coarse", "strategy", "fixed") == "fixed") {
    r.set_int("coarse", "L_c", cfg.get_int("coarse", "L_c", 4));
    r.set_int("coarse", "L_cc", cfg.get_int("coarse", "L_cc", 4));
  } else {
    r.set_double("coarse", "B_c", cfg.get_double("coarse", "B_c"));
    r.set_double("coarse", "B_cc", cfg.get_double("coarse", "B_cc"));
    r.set_int("coarse", "cap", cfg.get_int("coarse", "cap", 20));
  }
  r.set_int("smoother", "nu", cfg.get_int("smoother", "nu", 1));
  r.set_int("smoother", "nu_c", cfg.get_int("smoother", "nu_c", 1));
  r.set_double("smoother", "omega", cfg.get_double("smoother", "omega", 1.0));
  r.set("tg", "mode", cfg.get_string("tg", "mode", "inexact"));
  r.set("solver", "method", cfg.get_string("solver", "method", "cg"));
  r.set_double("solver", "rtol", cfg.get_double("solver", "rtol", 1e-6));
  r.set_int("solver", "max_iters", cfg.get_int("solver", "max_iters", 1000));
  r.set_int("solver", "restart", cfg.get_int("solver", "restart", 30));
  r.set("solver", "spectrum", spectrum_kind(cfg));

  if (type == "two-phase") {
    r.set_double("fluid", "mu_w", cfg.get_double("fluid", "mu_w", 0.3));
    r.set_double("fluid", "mu_o", cfg.get_double("fluid", "mu_o", 3.0));
    r.set_double("fluid", "s_min", cfg.get_double("fluid", "s_min", 0.2));
    r.set_double("fluid", "s_max", cfg.get_double("fluid", "s_max", 0.8));
    r.set_double("wells", "rate_bbl", cfg.get_double("wells", "rate_bbl", 500.0));
    r.set_double("wells", "p_bh", cfg.get_double("wells", "p_bh", 1000.0));
    r.set_double("wells", "r_wb", cfg.get_double("wells", "r_wb", 0.3));
    r.set("wells", "mobility_weighted",
          cfg.get_bool("wells", "mobility_weighted", false) ? "true" : "false");
    r.set_double("time", "ds_max", cfg.get_double("time", "ds_max", 1e-3));
    r.set_int("time", "substeps", cfg.get_int("time", "substeps", 50));
    r.set_int("time", "max_outer_steps", cfg.get_int("time", "max_outer_steps", 200));
    r.set_double("time", "end_time", cfg.get_double("time", "end_time", 1e30));
    r.set_double("time", "dt_max", cfg.get_double("time", "dt_max", 0.0));
    r.set_int("time", "refresh_every", cfg.get_int("time", "refresh_every", 1));
  } else {
    const BoundarySpec bc = bc_from_config(cfg, g.dim);
    r.set("bc", "dirichlet", cfg.get_string("bc", "dirichlet", "none"));
    r.set("sources", "kind", source_kind(cfg, bc));
    if (source_kind(cfg, bc) == "corner-spot")
      r.set_double("sources", "q", cfg.get_double("sources", "q", 1.0));
  }
  r.set("output", "write_vtk", cfg.get_bool("output", "write_vtk", false) ? "true" : "false");
  return r;
}

PointResult solve_single_phase(const Config& cfg, bool keep_solution) {
  const GridHierarchy g = grid_from_config(cfg);
  const PermeabilityField f = field_from_config(cfg, g);
  const NormalizedField nf = normalize(f, g);
  const BoundarySpec bc = bc_from_config(cfg, g.dim);
  const Vector srcs = sources_from_config(cfg, g, bc);
  PressureSystem sys = assemble(nf, g, bc, &srcs);

  const SelectionRule rule_c = rule_from_config(cfg, Level::Coarse);
  const SelectionRule rule_cc = rule_from_config(cfg, Level::CoarseCoarse);
  ThreeGridPreconditioner::Options opt = tg_from_config(cfg);
  opt.singular = sys.nullspace.has_value();

  const auto t0 = Clock::now();
  const CoarseSpace wc = build_coarse_space_c(sys.A, nullptr, nf.trace, g, rule_c);
  const CoarseSpace wcc = build_coarse_space_cc(sys.A, nullptr, nf.trace, g, wc, rule_cc);
  const ThreeGridPreconditioner prec(sys.A, g, wc, wcc, opt);
  const double setup_s = seconds_since(t0);
  warn_saturation(wc, "coarse");
  warn_saturation(wcc, "coarse-coarse");

  const SolverConfig scfg = solver_from_config(cfg);
  const Vector* ns = sys.nullspace ? &*sys.nullspace : nullptr;
  const PrecApply papply = [&prec](const Vector& r) { return prec.apply(r); };

  Vector x(static_cast<std::size_t>(g.num_cells()), 0.0);
  const auto t1 = Clock::now();
  const SolveReport rep = scfg.method == SolverConfig::Method::CG
                              ? pcg(sys.A, papply, sys.rhs, x, scfg, ns)
                              : gmres(sys.A, papply, sys.rhs, x, scfg, ns);
  const double solve_s = seconds_since(t1);

  PointResult out;
  out.n = g.num_cells();
  out.dim_c = wc.dim();
  out.dim_cc = wcc.dim();
  out.iterations = rep.iterations;
  out.converged = rep.converged;
  out.relres = rep.relres.empty() ? 0.0 : rep.relres.back();
  out.setup_seconds = setup_s;
  out.solve_seconds = solve_s;

  const std::string spec_kind = spectrum_kind(cfg);
  if (spec_kind == "lanczos") {
    out.spectrum = rep.spectrum ? rep.spectrum
                                : std::optional<Spectrum>(estimate_condition_lanczos(
                                      sys.A, papply, ns));
  } else if (spec_kind == "dense") {
    if (g.num_cells() > 4096) bad("solver.spectrum = dense is limited to n <= 4096");
    out.spectrum = estimate_condition_dense(sys.A, papply, sys.nullspace.has_value());
  }

  // Flux consistency: net cell outflow must match the sources the solved
  // system actually saw (boundary and well closures evaluated at x).
  const FaceFluxField flux = recover_velocity(g, nf, x);
  Vector effective = sys.rhs;
  for (int c = 0; c < g.num_cells(); ++c) effective[c] -= sys.added_diag[c] * x[c];
  const double defect = check_conservation(g, flux, effective);
  double scale = 0.0;
  for (const double v : effective) scale = std::max(scale, std::abs(v));
  for (const double v : flux.flux) scale = std::max(scale, std::abs(v));
  out.conservation = scale > 0.0 ? defect / scale : defect;

  if (keep_solution) out.p = std::move(x);
  return out;
}

int run_solve(const Config& cfg, const std::string& out_dir) {
  require_type(cfg, "single-phase", "solve");
  ensure_dir(out_dir);
  resolve_config(cfg).save(join_path(out_dir, "manifest.cfg"));

  const PointResult r = solve_single_phase(cfg, true);
  {
    std::ofstream csv = open_out(join_path(out_dir, "results.csv"));
    csv << kSolveHeader << "," << kTimingHeader << "\n";
    std::vector<std::string> cells = point_cells(r);
    append(cells, timing_cells(r));
    csv << csv_row(cells) << "\n";
  }
  if (cfg.get_bool("output", "write_vtk", false)) {
    const GridHierarchy g = grid_from_config(cfg);
    const PermeabilityField f = field_from_config(cfg, g);
    const Vector logk = log10_of(f.kx);
    write_vtk_cells(join_path(out_dir, "solution.vtk"), g,
                    {{"pressure", &r.p}, {"log10_kx", &logk}});
  }
  if (cfg.has("output", "dump_field")) {
    const GridHierarchy g = grid_from_config(cfg);
    const PermeabilityField f = field_from_config(cfg, g);
    save_raw(join_path(out_dir, cfg.get_string("output", "dump_field")), f, true);
  }
  if (!r.converged) {
    std::cerr << "solve: not converged after " << r.iterations
              << " iterations, relres = " << format_double(r.relres) << "\n";
    return 3;
  }
  return 0;
}

int run_sweep(const Config& cfg, const std::string& out_dir) {
  const std::string kind = cfg.get_string("sweep", "kind", "point");
  if (kind == "compare") return compare_exact_inexact(cfg, out_dir);
  if (kind != "point") bad("sweep.kind '" + kind + "' is not one of point, compare");
  require_type(cfg, "single-phase", "sweep");

  const std::string key = cfg.get_string("sweep", "key");
  const std::vector<std::string> values = split_values(cfg.get_string("sweep", "values"));
  if (values.empty()) bad("sweep.values must be non-empty");
  std::vector<std::string> values2;
  std::string key2;
  if (cfg.has("sweep", "key2")) {
    key2 = cfg.get_string("sweep", "key2");
    values2 = split_values(cfg.get_string("sweep", "values2"));
    if (values2.empty()) bad("sweep.values2 must be non-empty");
  }
  const int workers =
      std::max(1, std::min(cfg.get_int("sweep", "workers", 1),
                           static_cast<int>(std::thread::hardware_concurrency() + 1)));

  ensure_dir(out_dir);
  resolve_config(cfg).save(join_path(out_dir, "manifest.cfg"));

  std::vector<SweepRow> rows;
  for (const std::string& v1 : values) {
    if (values2.empty()) {
      rows.push_back(SweepRow{{v1}, {}, "ok"});
    } else {
      for (const std::string& v2 : values2) rows.push_back(SweepRow{{v1, v2}, {}, "ok"});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr config_error;
  std::mutex err_mutex;

  const auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= rows.size() || abort.load()) return;
      SweepRow& row = rows[i];
      Config point = cfg;
      point.apply_override(key + "=" + row.axis[0]);
      if (!key2.empty()) point.apply_override(key2 + "=" + row.axis[1]);
      try {
        row.r = solve_single_phase(point, false);
        if (!row.r.converged) row.status = "noconv";
      } catch (const ConfigError&) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (!config_error) config_error = std::current_exception();
        abort.store(true);
        return;
      } catch (const std::exception& e) {
        row.status = "error";
        const std::lock_guard<std::mutex> lock(err_mutex);
        std::cerr << "sweep point " << i << " (" << key << " = " << row.axis[0];
        if (!key2.empty()) std::cerr << ", " << key2 << " = " << row.axis[1];
        std::cerr << ") failed: " << e.what() << "\n";
      }
    }
  };

  if (workers == 1 || rows.size() == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (config_error) std::rethrow_exception(config_error);

  bool all_ok = true;
  {
    std::ofstream csv = open_out(join_path(out_dir, "results.csv"));
    csv << "point," << key;
    if (!key2.empty()) csv << "," << key2;
    csv << "," << kSolveHeader << ",status," << kTimingHeader << "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const SweepRow& row = rows[i];
      std::vector<std::string> cells{std::to_string(i)};
      append(cells, row.axis);
      append(cells, point_cells(row.r));
      cells.push_back(row.status);
      append(cells, timing_cells(row.r));
      csv << csv_row(cells) << "\n";
      all_ok = all_ok && row.status == "ok";
    }
  }
  return all_ok ? 0 : 3;
}

int compare_exact_inexact(const Config& cfg, const std::string& out_dir) {
  require_type(cfg, "single-phase", "compare");
  if (cfg.get_string("coarse", "strategy", "fixed") != "fixed")
    bad("compare: fixed-count selection is required for the dimension formulas");
  std::vector<int> sd_list =
      cfg.has("compare", "sd_list") ? cfg.get_int_list("compare", "sd_list")
                                    : std::vector<int>{cfg.get_int("grid", "sd", 2)};
  if (sd_list.empty()) bad("compare.sd_list must be non-empty");
  const int l_c = cfg.get_int("coarse", "L_c", 4);
  const int l_cc = cfg.get_int("coarse", "L_cc", 4);

  ensure_dir(out_dir);
  resolve_config(cfg).save(join_path(out_dir, "manifest.cfg"));

  std::ofstream csv = open_out(join_path(out_dir, "compare.csv"));
  csv << "sd,mode,n,dim_c,dim_c_formula,dim_cc,dim_cc_formula,iters,converged,relres,"
      << "setup_s,solve_s\n";
  bool all_ok = true;
  for (const int sd : sd_list) {
    int iters_exact = 0;
    int iters_inexact = 0;
    for (const std::string mode : {"exact", "inexact"}) {
      Config point = cfg;
      point.set_int("grid", "sd", sd);
      point.set("tg", "mode", mode);
      const GridHierarchy g = grid_from_config(point);
      const PointResult r = solve_single_phase(point, false);
      const int proc = g.num_cc_blocks();
      const int dim_c_formula = g.num_coarse_blocks() * l_c;
      const int dim_cc_formula = proc * l_cc;
      (mode == std::string("exact") ? iters_exact : iters_inexact) = r.iterations;
      all_ok = all_ok && r.converged;
      csv << csv_row({std::to_string(sd), mode, std::to_string(r.n),
                      std::to_string(r.dim_c), std::to_string(dim_c_formula),
                      std::to_string(r.dim_cc), std::to_string(dim_cc_formula),
                      std::to_string(r.iterations), r.converged ? "1" : "0",
                      format_double(r.relres), format_double(r.setup_seconds),
                      format_double(r.solve_seconds)})
          << "\n";
    }
    if (iters_exact > iters_inexact) {
      std::cerr << "note: sd = " << sd << ": exact coarse solves took " << iters_exact
                << " iterations vs " << iters_inexact << " inexact; unusual but not fatal\n";
    }
  }
  return all_ok ? 0 : 3;
}

int run_verify_theory(const Config& cfg, const std::string& out_dir) {
  require_type(cfg, "verify-theory", "verify-theory");
  const GridHierarchy g = grid_from_config(cfg);
  if (g.num_cells() > 4096) bad("verify-theory is dense and limited to n <= 4096 cells");
  const BoundarySpec bc = bc_from_config(cfg, g.dim);
  if (!bc.any())
    bad("verify-theory needs a positive definite system; set bc.dirichlet to a side or all");
  const PermeabilityField f = field_from_config(cfg, g);
  const NormalizedField nf = normalize(f, g);
  const PressureSystem sys = assemble(nf, g, bc);

  const CoarseSpace wc =
      build_coarse_space_c(sys.A, nullptr, nf.trace, g, rule_from_config(cfg, Level::Coarse));
  const CoarseSpace wcc = build_coarse_space_cc(sys.A, nullptr, nf.trace, g, wc,
                                                rule_from_config(cfg, Level::CoarseCoarse));
  const TheoryReport tr = verify_theory(sys.A, g, wc, wcc, tg_from_config(cfg));

  ensure_dir(out_dir);
  resolve_config(cfg).save(join_path(out_dir, "manifest.cfg"));
  std::ofstream csv = open_out(join_path(out_dir, "theory.csv"));
  csv << "n,dim_c,dim_cc,contract_fine,contract_coarse,lmin_tg,lmax_tg,lmin_itg,lmax_itg,"
      << "lmin_inner,lmax_inner,xz_lhs,xz_rhs,c_star,c_lambda,c_c_lambda,lmax_mt_coarse,"
      << "tg_cond,tg_cond_bound,itg_cond,itg_cond_bound,sandwich_lower,sandwich_upper\n";
  csv << csv_row({std::to_string(g.num_cells()), std::to_string(wc.dim()),
                  std::to_string(wcc.dim()), format_double(tr.contract_margin_fine),
                  format_double(tr.contract_margin_coarse), format_double(tr.lmin_tg),
                  format_double(tr.lmax_tg), format_double(tr.lmin_itg),
                  format_double(tr.lmax_itg), format_double(tr.lmin_inner),
                  format_double(tr.lmax_inner), format_double(tr.xz_lhs),
                  format_double(tr.xz_rhs), format_double(tr.c_star),
                  format_double(tr.c_lambda), format_double(tr.c_c_lambda),
                  format_double(tr.lmax_mt_coarse), format_double(tr.tg_cond()),
                  format_double(tr.tg_cond_bound()), format_double(tr.itg_cond()),
                  format_double(tr.itg_cond_bound()), format_double(tr.sandwich_lower()),
                  format_double(tr.sandwich_upper())})
      << "\n";

  std::cout << "n = " << g.num_cells() << ", dim W_c = " << wc.dim()
            << ", dim W_cc = " << wcc.dim() << "\n"
            << "two-grid spectrum      [" << format_double(tr.lmin_tg) << ", "
            << format_double(tr.lmax_tg) << "], cond " << format_double(tr.tg_cond())
            << " (bound " << format_double(tr.tg_cond_bound()) << ")\n"
            << "three-grid spectrum    [" << format_double(tr.lmin_itg) << ", "
            << format_double(tr.lmax_itg) << "], cond " << format_double(tr.itg_cond())
            << " (bound " << format_double(tr.itg_cond_bound()) << ")\n"
            << "inner operator spectrum [" << format_double(tr.lmin_inner) << ", "
            << format_double(tr.lmax_inner) << "]\n"
            << "min-max identity: 1/lmin = " << format_double(1.0 / tr.lmin_tg)
            << " vs brute force " << format_double(tr.xz_rhs) << "\n"
            << "sandwich: [" << format_double(tr.sandwich_lower()) << ", "
            << format_double(tr.sandwich_upper()) << "] contains ["
            << format_double(tr.lmin_itg) << ", " << format_double(tr.lmax_itg) << "]\n";

  const double tol = 1e-8;
  if (tr.lmax_itg > tr.sandwich_upper() + tol || tr.lmin_itg < tr.sandwich_lower() - tol)
    std::cerr << "warning: measured three-grid spectrum escapes the sandwich bounds\n";
  if (tr.tg_cond() > tr.tg_cond_bound() * (1.0 + 1e-8))
    std::cerr << "warning: two-grid condition number exceeds its bound\n";
  if (tr.itg_cond() > tr.itg_cond_bound() * (1.0 + 1e-8))
    std::cerr << "warning: three-grid condition number exceeds its bound\n";
  return 0;
}

int run_simulate(const Config& cfg, const std::string& out_dir) {
  require_type(cfg, "two-phase", "simulate");
  const SimulationConfig sim = simulation_from_config(cfg);
  const int vtk_every = cfg.get_int("output", "vtk_every", 0);

  ensure_dir(out_dir);
  resolve_config(cfg).save(join_path(out_dir, "manifest.cfg"));
  std::ofstream csv = open_out(join_path(out_dir, "steps.csv"));
  csv << "step,time_days,dt_days,iters,max_dS,water_in_ft3,water_out_ft3,balance_error,"
      << "s_low,s_high,conservation\n";

  const SnapshotHook hook = [&](const OuterStepRecord& rec, const Vector& p, const Vector& s) {
    csv << csv_row({std::to_string(rec.step), format_double(rec.time),
                    format_double(rec.dt), std::to_string(rec.iterations),
                    format_double(rec.max_delta_s), format_double(rec.water_in),
                    format_double(rec.water_out), format_double(rec.balance_error),
                    format_double(rec.s_low), format_double(rec.s_high),
                    format_double(rec.conservation_defect)})
        << "\n";
    csv.flush();
    if (vtk_every > 0 && rec.step % vtk_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "state_%05d.vtk", rec.step);
      write_vtk_cells(join_path(out_dir, name), sim.grid,
                      {{"pressure", &p}, {"saturation", &s}});
    }
  };

  try {
    const SimulationResult result = run_simulation(sim, hook);
    if (cfg.get_bool("output", "write_vtk", false)) {
      const Vector logk = log10_of(sim.field.kx);
      write_vtk_cells(join_path(out_dir, "state_final.vtk"), sim.grid,
                      {{"pressure", &result.p},
                       {"saturation", &result.s},
                       {"log10_kx", &logk}});
    }
    std::cout << "completed " << result.steps.size() << " outer steps to t = "
              << format_double(result.time) << " days\n";
  } catch (const SolverFailure& e) {
    std::cerr << "simulate: " << e.what() << " (per-step rows up to the failure are kept)\n";
    return 3;
  }
  return 0;
}

}  // namespace specmg
