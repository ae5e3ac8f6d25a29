#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specmg/experiment.hpp"

using namespace specmg;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(bool(in), "cannot open " << path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string drop_timing(const std::string& line) {
  // timing columns are always the last two
  std::size_t pos = line.rfind(',');
  REQUIRE(pos != std::string::npos);
  pos = line.rfind(',', pos - 1);
  REQUIRE(pos != std::string::npos);
  return line.substr(0, pos);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / "specmg_exp_tests" / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

const char* kSolveCfg = R"([grid]
nx = 8

[field]
generator = log-uniform
contrast = 3
seed = 42

[bc]
dirichlet = all

[coarse]
L_c = 2
L_cc = 3

[solver]
rtol = 1e-10
spectrum = dense
)";

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("grid reader: defaults, explicit 3d, and failure wrapping") {
  const Config c = Config::parse_string("[grid]\nnx = 8\n");
  const GridHierarchy g = grid_from_config(c);
  CHECK(g.dim == 2);
  CHECK(g.n[0] == 8);
  CHECK(g.n[1] == 8);
  CHECK(g.n[2] == 1);
  CHECK(g.h[0] == doctest::Approx(1.0));
  CHECK(g.cc[0] == 2);
  CHECK(g.sd == 2);
  CHECK(g.num_coarse_blocks() == 16);
  CHECK(g.num_cc_blocks() == 4);

  const Config c3 = Config::parse_string(
      "[grid]\ndim = 3\nnx = 8\nny = 4\nnz = 4\nlx = 16\nccx = 2\nccy = 1\nccz = 1\nsd = 2\n");
  const GridHierarchy g3 = grid_from_config(c3);
  CHECK(g3.dim == 3);
  CHECK(g3.n[1] == 4);
  CHECK(g3.h[0] == doctest::Approx(2.0));

  CHECK_THROWS_AS(grid_from_config(Config::parse_string("[grid]\nnx = 10\n")),
                  ConfigError);  // indivisible by cc * sd
  CHECK_THROWS_AS(grid_from_config(Config::parse_string("[grid]\nnx = 8\ndim = 4\n")),
                  ConfigError);
  CHECK_THROWS_AS(grid_from_config(Config::parse_string("[grid]\nny = 8\n")),
                  std::runtime_error);  // nx is required
}

TEST_CASE("field reader: generators, unit scaling, and bad names") {
  const Config c = Config::parse_string("[grid]\nnx = 8\n");
  const GridHierarchy g = grid_from_config(c);

  const PermeabilityField uni =
      field_from_config(Config::parse_string("[field]\nk = 5\n"), g);
  CHECK(uni.kx[0] == doctest::Approx(5.0));
  const PermeabilityField md =
      field_from_config(Config::parse_string("[field]\nk = 5\nunits = md\n"), g);
  CHECK(md.kx[0] == doctest::Approx(5.0 * kMdToInternal));

  const Config lu = Config::parse_string("[field]\ngenerator = log-uniform\ncontrast = 4\n");
  const PermeabilityField f1 = field_from_config(lu, g);
  const PermeabilityField f2 = field_from_config(lu, g);
  CHECK(f1.kx == f2.kx);  // same seed, same field

  const PermeabilityField sp = field_from_config(
      Config::parse_string("[field]\ngenerator = spe10\nlog10_max = 2\n"), g);
  CHECK(sp.kx == sp.ky);

  CHECK_THROWS_AS(
      field_from_config(Config::parse_string("[field]\ngenerator = perlin\n"), g),
      ConfigError);
  CHECK_THROWS_AS(
      field_from_config(Config::parse_string("[field]\nunits = darcy\n"), g),
      ConfigError);
  CHECK_THROWS_AS(
      field_from_config(Config::parse_string("[field]\ngenerator = file\npath = /nope\n"), g),
      ConfigError);
}

TEST_CASE("boundary, selection, smoother, and solver readers validate input") {
  const Config sides = Config::parse_string("[bc]\ndirichlet = xlo, yhi\n");
  const BoundarySpec b = bc_from_config(sides, 2);
  CHECK(b.dirichlet[0][0]);
  CHECK_FALSE(b.dirichlet[0][1]);
  CHECK(b.dirichlet[1][1]);
  CHECK(b.any());
  CHECK_FALSE(bc_from_config(Config::parse_string("[bc]\ndirichlet = none\n"), 2).any());
  CHECK(bc_from_config(Config::parse_string("[bc]\ndirichlet = all\n"), 3).dirichlet[2][0]);
  CHECK_THROWS_AS(bc_from_config(Config::parse_string("[bc]\ndirichlet = zlo\n"), 2),
                  ConfigError);
  CHECK_THROWS_AS(bc_from_config(Config::parse_string("[bc]\ndirichlet = north\n"), 2),
                  ConfigError);

  const SelectionRule fixed =
      rule_from_config(Config::parse_string("[coarse]\nL_c = 6\n"), Level::Coarse);
  CHECK(fixed.kind == SelectionRule::Kind::FixedCount);
  CHECK(fixed.count == 6);
  const SelectionRule thr = rule_from_config(
      Config::parse_string("[coarse]\nstrategy = threshold\nB_c = 0.5\nB_cc = 0.2\ncap = 9\n"),
      Level::Coarse);
  CHECK(thr.kind == SelectionRule::Kind::Threshold);
  CHECK(thr.threshold == doctest::Approx(0.5));
  CHECK(thr.cap == 9);
  CHECK_THROWS_AS(
      rule_from_config(Config::parse_string("[coarse]\nstrategy = magic\n"), Level::Coarse),
      ConfigError);
  CHECK_THROWS_AS(rule_from_config(Config::parse_string("[coarse]\nstrategy = threshold\n"),
                                   Level::Coarse),
                  std::runtime_error);  // threshold value is required

  CHECK_THROWS_AS(tg_from_config(Config::parse_string("[smoother]\nomega = 1.5\n")),
                  ConfigError);
  CHECK_THROWS_AS(tg_from_config(Config::parse_string("[tg]\nmode = direct\n")), ConfigError);
  CHECK(tg_from_config(Config::parse_string("[tg]\nmode = exact\n")).mode == TgMode::Exact);

  const SolverConfig s =
      solver_from_config(Config::parse_string("[solver]\nmethod = gmres\nrestart = 12\n"));
  CHECK(s.method == SolverConfig::Method::GMRES);
  CHECK(s.restart == 12);
  CHECK(s.rtol == doctest::Approx(1e-6));
  CHECK_THROWS_AS(solver_from_config(Config::parse_string("[solver]\nmethod = sor\n")),
                  ConfigError);
  CHECK_THROWS_AS(solver_from_config(Config::parse_string("[solver]\nrtol = -1\n")),
                  ConfigError);
  CHECK_THROWS_AS(solver_from_config(Config::parse_string("[solver]\nspectrum = exactly\n")),
                  ConfigError);
}

TEST_CASE("two-phase reader assembles wells and step controls") {
  const Config c = Config::parse_string(
      "[problem]\ntype = two-phase\n[grid]\nnx = 8\n[wells]\nrate_bbl = 2\n"
      "mobility_weighted = true\n[time]\nds_max = 0.01\nsubsteps = 5\n");
  const SimulationConfig sim = simulation_from_config(c);
  REQUIRE(sim.wells.injectors.size() == 1);
  CHECK(sim.wells.injectors[0].rate == doctest::Approx(2.0 * kBblToFt3));
  CHECK(sim.wells.producers.size() == 4);
  CHECK(sim.wells.mobility_weighted);
  CHECK(sim.ds_max == doctest::Approx(0.01));
  CHECK(sim.substeps == 5);
  CHECK(sim.max_outer_steps == 200);

  CHECK_THROWS_AS(simulation_from_config(Config::parse_string(
                      "[problem]\ntype = two-phase\n[grid]\nnx = 8\n[fluid]\nmu_w = 0\n")),
                  ConfigError);
  CHECK_THROWS_AS(simulation_from_config(Config::parse_string(
                      "[problem]\ntype = two-phase\n[grid]\nnx = 8\n[time]\nds_max = 0\n")),
                  ConfigError);
}

TEST_CASE("resolved manifests materialize defaults and are idempotent") {
  const Config cfg = Config::parse_string(kSolveCfg);
  const Config once = resolve_config(cfg);
  CHECK(once.get_int("grid", "ny") == 8);      // default filled in
  CHECK(once.get_int("grid", "sd") == 2);
  CHECK(once.get_string("problem", "type") == "single-phase");
  CHECK(once.get_string("sources", "kind") == "none");  // dirichlet = all
  CHECK(once.get_int("solver", "max_iters") == 1000);
  CHECK(resolve_config(once).serialize() == once.serialize());

  const Config two = Config::parse_string("[problem]\ntype = two-phase\n[grid]\nnx = 8\n");
  const Config rtwo = resolve_config(two);
  CHECK(rtwo.get_double("wells", "rate_bbl") == doctest::Approx(500.0));
  CHECK(rtwo.get_int("time", "substeps") == 50);
  CHECK(resolve_config(rtwo).serialize() == rtwo.serialize());
}

TEST_CASE("single-phase point solve: dimensions, conservation, determinism") {
  const Config cfg = Config::parse_string(kSolveCfg);
  const PointResult a = solve_single_phase(cfg, true);
  const PointResult b = solve_single_phase(cfg, true);

  CHECK(a.n == 64);
  CHECK(a.dim_c == 16 * 2);
  CHECK(a.dim_cc == 4 * 3);
  CHECK(a.converged);
  CHECK(a.relres <= 1e-10);
  CHECK(a.conservation < 1e-8);
  REQUIRE(a.spectrum.has_value());
  CHECK(a.spectrum->lambda_max == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(a.p.size() == 64);

  // bitwise reproducibility of everything except wall-clock timings
  CHECK(a.iterations == b.iterations);
  CHECK(a.relres == b.relres);
  CHECK(a.conservation == b.conservation);
  CHECK(a.spectrum->lambda_min == b.spectrum->lambda_min);
  CHECK(a.p == b.p);
}

TEST_CASE("solve driver writes manifest, csv, vtk; manifest rerun reproduces") {
  const TempDir tmp("solve");
  Config cfg = Config::parse_string(kSolveCfg);
  cfg.set("output", "write_vtk", "true");

  REQUIRE(run_solve(cfg, tmp.sub("a")) == 0);
  const std::vector<std::string> rows = read_lines(tmp.sub("a") + "/results.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] ==
        "n,dim_c,dim_cc,iters,converged,relres,conservation,lambda_min,lambda_max,cond,"
        "setup_s,solve_s");
  const std::vector<std::string> cells = split_csv(rows[1]);
  REQUIRE(cells.size() == 12);
  CHECK(cells[0] == "64");
  CHECK(cells[4] == "1");  // converged

  const std::vector<std::string> vtk = read_lines(tmp.sub("a") + "/solution.vtk");
  CHECK(vtk[0] == "# vtk DataFile Version 3.0");
  CHECK(std::count(vtk.begin(), vtk.end(), std::string("DATASET STRUCTURED_POINTS")) == 1);
  CHECK(std::count(vtk.begin(), vtk.end(), std::string("SCALARS pressure double 1")) == 1);
  CHECK(std::count(vtk.begin(), vtk.end(), std::string("SCALARS log10_kx double 1")) == 1);

  // a rerun driven by the manifest matches except for the timing columns
  const Config manifest = Config::parse_file(tmp.sub("a") + "/manifest.cfg");
  REQUIRE(run_solve(manifest, tmp.sub("b")) == 0);
  const std::vector<std::string> rows2 = read_lines(tmp.sub("b") + "/results.csv");
  REQUIRE(rows2.size() == 2);
  CHECK(drop_timing(rows2[1]) == drop_timing(rows[1]));
}

TEST_CASE("sweep driver: cross product, worker pool, determinism, validation") {
  const TempDir tmp("sweep");
  Config cfg = Config::parse_string(kSolveCfg);
  cfg.set("sweep", "key", "grid.nx");
  cfg.set("sweep", "values", "8 12");
  cfg.set("sweep", "key2", "coarse.L_c");
  cfg.set("sweep", "values2", "2, 3");
  cfg.set("sweep", "workers", "2");
  cfg.set("solver", "spectrum", "none");

  REQUIRE(run_sweep(cfg, tmp.sub("a")) == 0);
  const std::vector<std::string> rows = read_lines(tmp.sub("a") + "/results.csv");
  REQUIRE(rows.size() == 5);  // header + 2 x 2 points
  CHECK(split_csv(rows[0])[0] == "point");
  CHECK(split_csv(rows[0])[1] == "grid.nx");
  CHECK(split_csv(rows[0])[2] == "coarse.L_c");
  for (int i = 1; i <= 4; ++i) {
    const std::vector<std::string> cells = split_csv(rows[i]);
    CHECK(cells[0] == std::to_string(i - 1));
    CHECK(cells[cells.size() - 3] == "ok");
  }
  CHECK(split_csv(rows[1])[1] == "8");
  CHECK(split_csv(rows[2])[2] == "3");  // v1-major ordering
  CHECK(split_csv(rows[3])[1] == "12");

  // the block count is fixed by cc and sd, so dim_c tracks the swept L_c
  CHECK(split_csv(rows[3])[3] == "144");
  CHECK(split_csv(rows[3])[4] == "32");  // 16 coarse blocks x 2
  CHECK(split_csv(rows[4])[4] == "48");  // 16 coarse blocks x 3

  REQUIRE(run_sweep(cfg, tmp.sub("b")) == 0);
  const std::vector<std::string> again = read_lines(tmp.sub("b") + "/results.csv");
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(drop_timing(again[i]) == drop_timing(rows[i]));

  Config bad = cfg;
  bad.set("sweep", "kind", "scan");
  CHECK_THROWS_AS(run_sweep(bad, tmp.sub("c")), ConfigError);
  Config nokey = Config::parse_string(kSolveCfg);
  nokey.set("sweep", "values", "8");
  CHECK_THROWS_AS(run_sweep(nokey, tmp.sub("d")), std::runtime_error);
}

TEST_CASE("compare driver tabulates both modes with the dimension formulas") {
  const TempDir tmp("compare");
  Config cfg = Config::parse_string(
      "[grid]\nnx = 12\n[field]\ngenerator = log-uniform\ncontrast = 2\n"
      "[bc]\ndirichlet = all\n[coarse]\nL_c = 2\nL_cc = 2\n[solver]\nrtol = 1e-8\n");
  cfg.set("sweep", "kind", "compare");
  cfg.set("compare", "sd_list", "2 3");

  REQUIRE(run_sweep(cfg, tmp.sub("a")) == 0);
  const std::vector<std::string> rows = read_lines(tmp.sub("a") + "/compare.csv");
  REQUIRE(rows.size() == 5);  // header + 2 sd x 2 modes
  CHECK(split_csv(rows[0])[0] == "sd");
  for (int i = 1; i <= 4; ++i) {
    const std::vector<std::string> cells = split_csv(rows[i]);
    CHECK(cells[1] == ((i % 2) ? "exact" : "inexact"));
    CHECK(cells[3] == cells[4]);  // dim_c equals its closed form
    CHECK(cells[5] == cells[6]);  // dim_cc equals its closed form
    CHECK(cells[8] == "1");       // converged
  }
  CHECK(split_csv(rows[1])[0] == "2");
  CHECK(split_csv(rows[3])[0] == "3");
  CHECK(split_csv(rows[1])[4] == "32");  // 16 blocks x L_c
  CHECK(split_csv(rows[3])[4] == "72");  // 36 blocks x L_c

  Config thr = cfg;
  thr.set("coarse", "strategy", "threshold");
  thr.set_double("coarse", "B_c", 1.0);
  thr.set_double("coarse", "B_cc", 1.0);
  CHECK_THROWS_AS(run_sweep(thr, tmp.sub("b")), ConfigError);
}

TEST_CASE("verify-theory driver writes the full report row") {
  const TempDir tmp("theory");
  Config cfg = Config::parse_string(kSolveCfg);
  cfg.set("problem", "type", "verify-theory");
  cfg.set("solver", "spectrum", "none");

  REQUIRE(run_verify_theory(cfg, tmp.sub("a")) == 0);
  const std::vector<std::string> rows = read_lines(tmp.sub("a") + "/theory.csv");
  REQUIRE(rows.size() == 2);
  const std::vector<std::string> head = split_csv(rows[0]);
  const std::vector<std::string> cells = split_csv(rows[1]);
  REQUIRE(head.size() == cells.size());
  CHECK(head[0] == "n");
  CHECK(cells[0] == "64");
  CHECK(head.back() == "sandwich_upper");

  Config wrong = Config::parse_string(kSolveCfg);
  CHECK_THROWS_AS(run_verify_theory(wrong, tmp.sub("b")), ConfigError);  // wrong type
  Config noflow = Config::parse_string(kSolveCfg);
  noflow.set("problem", "type", "verify-theory");
  noflow.set("bc", "dirichlet", "none");
  CHECK_THROWS_AS(run_verify_theory(noflow, tmp.sub("c")), ConfigError);
}

TEST_CASE("simulate driver streams per-step rows and snapshots") {
  const TempDir tmp("simulate");
  const Config cfg = Config::parse_string(
      "[problem]\ntype = two-phase\n[grid]\nnx = 8\n[wells]\nrate_bbl = 2\n"
      "[time]\nds_max = 0.01\nsubsteps = 5\nmax_outer_steps = 3\nend_time = 1e6\n"
      "[solver]\nrtol = 1e-8\n[coarse]\nL_c = 3\nL_cc = 3\n"
      "[output]\nvtk_every = 2\nwrite_vtk = true\n");

  REQUIRE(run_simulate(cfg, tmp.sub("a")) == 0);
  const std::vector<std::string> rows = read_lines(tmp.sub("a") + "/steps.csv");
  REQUIRE(rows.size() == 4);  // header + 3 outer steps
  CHECK(split_csv(rows[0])[0] == "step");
  CHECK(split_csv(rows[1])[0] == "1");
  CHECK(split_csv(rows[3])[0] == "3");
  for (int i = 1; i <= 3; ++i) {
    const std::vector<std::string> cells = split_csv(rows[i]);
    CHECK(std::stod(cells[7]) < 1e-12);   // balance_error
    CHECK(std::stod(cells[8]) >= 0.2 - 1e-9);
    CHECK(std::stod(cells[9]) <= 0.8 + 1e-9);
  }
  CHECK(fs::exists(tmp.sub("a") + "/state_00002.vtk"));
  CHECK_FALSE(fs::exists(tmp.sub("a") + "/state_00001.vtk"));
  CHECK(fs::exists(tmp.sub("a") + "/state_final.vtk"));
  CHECK(fs::exists(tmp.sub("a") + "/manifest.cfg"));

  Config wrong = Config::parse_string(kSolveCfg);
  CHECK_THROWS_AS(run_simulate(wrong, tmp.sub("b")), ConfigError);
}

TEST_CASE("double formatting is stable and round-trippable at 12 digits") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-9) == "-2.5e-09");
  CHECK(format_double(1234567.0) == "1234567");
  CHECK(format_double(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("vtk writer validates field sizes") {
  const TempDir tmp("vtk");
  const GridHierarchy g = build_hierarchy(2, {2, 2, 1}, {2.0, 2.0, 1.0}, {2, 2, 1}, 1);
  const Vector ok(4, 1.5);
  const Vector short_vec(3, 1.0);
  write_vtk_cells(tmp.sub("f.vtk"), g, {{"v", &ok}});
  const std::vector<std::string> lines = read_lines(tmp.sub("f.vtk"));
  CHECK(std::count(lines.begin(), lines.end(), std::string("DIMENSIONS 3 3 2")) == 1);
  CHECK(std::count(lines.begin(), lines.end(), std::string("CELL_DATA 4")) == 1);
  CHECK_THROWS_AS(write_vtk_cells(tmp.sub("g.vtk"), g, {{"v", &short_vec}}), ConfigError);
}

}  // TEST_SUITE
