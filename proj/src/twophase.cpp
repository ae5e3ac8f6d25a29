#include "specmg/twophase.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace specmg {

void scale_permeability(PermeabilityField& f, double factor) {
  for (double& v : f.kx) v *= factor;
  for (double& v : f.ky) v *= factor;
  for (double& v : f.kz) v *= factor;
}

double well_index(double hx, double hy, double r_wb) {
  if (!(hx > 0.0) || !(hy > 0.0) || !(r_wb > 0.0))
    throw std::invalid_argument("well_index: sizes must be positive");
  const double r1 = std::sqrt(9.0 * hx * hx + hy * hy) / 2.0;
  const double r2 = std::sqrt(hx * hx + 9.0 * hy * hy) / 2.0;
  const double num = 1.0 / (hx * hx) + 1.0 / (hy * hy);
  const double den = (2.0 / std::numbers::pi) *
                         ((hy / hx) * std::log(r1 / r_wb) + (hx / hy) * std::log(r2 / r_wb)) -
                     1.0;
  if (!(den > 0.0))
    throw std::invalid_argument("well_index: wellbore radius too large for the cell");
  return num / den;
}

WellSet five_spot(const GridHierarchy& g, const PermeabilityField& f, double rate_ft3,
                  double p_bh, double r_wb) {
  WellSet w;
  const double wi = well_index(g.h[0], g.h[1], r_wb);
  auto column = [&](int i, int j) {
    std::vector<int> cells;
    for (int k = 0; k < g.n[2]; ++k) cells.push_back(g.cell_index(i, j, k));
    return cells;
  };
  WellSet::Injector inj;
  inj.cells = column(g.n[0] / 2, g.n[1] / 2);
  inj.rate = rate_ft3;
  w.injectors.push_back(std::move(inj));
  const std::array<std::array<int, 2>, 4> corners = {
      {{0, 0}, {g.n[0] - 1, 0}, {0, g.n[1] - 1}, {g.n[0] - 1, g.n[1] - 1}}};
  for (const auto& c : corners) {
    WellSet::Producer prod;
    prod.cells = column(c[0], c[1]);
    prod.p_bh = p_bh;
    for (int cell : prod.cells)
      prod.wi_kappa.push_back(wi * std::sqrt(f.kx[cell] * f.ky[cell]));
    w.producers.push_back(std::move(prod));
  }
  return w;
}

WellSources make_well_sources(const GridHierarchy& g, const WellSet& wells,
                              const FluidModel& fluid, const Vector* lambda_cells) {
  const int n = g.num_cells();
  WellSources src;
  src.coupling.diag.assign(n, 0.0);
  src.coupling.rhs.assign(n, 0.0);
  src.inj_density.assign(n, 0.0);
  const double vol = g.cell_volume();
  for (const auto& inj : wells.injectors) {
    if (inj.cells.empty()) throw std::invalid_argument("well: injector without cells");
    const double density = inj.rate / (static_cast<double>(inj.cells.size()) * vol);
    for (int c : inj.cells) {
      src.inj_density[c] += density;
      src.coupling.rhs[c] += density;
    }
  }
  for (const auto& prod : wells.producers) {
    if (prod.cells.size() != prod.wi_kappa.size())
      throw std::invalid_argument("well: producer factors do not match cells");
    for (size_t i = 0; i < prod.cells.size(); ++i) {
      const int c = prod.cells[i];
      const double slope = wells.mobility_weighted && lambda_cells
                               ? (*lambda_cells)[c]
                               : fluid.coupling_slope();
      const double factor = prod.wi_kappa[i] * slope;
      src.coupling.diag[c] += factor;
      src.coupling.rhs[c] += factor * prod.p_bh;
    }
  }
  return src;
}

void mobilities(const FluidModel& fluid, const Vector& s, Vector& lambda, Vector& fw) {
  lambda.resize(s.size());
  fw.resize(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    lambda[i] = fluid.total_mobility(s[i]);
    fw[i] = fluid.frac_flow(s[i]);
  }
}

PressureStepResult pressure_step(const GridHierarchy& g, const NormalizedField& nf,
                                 const FluidModel& fluid, const WellSet& wells,
                                 const Vector& s, const PressureStepConfig& cfg,
                                 CoarsePair& spaces, bool rebuild_spaces,
                                 const Vector* p_prev) {
  const int n = g.num_cells();
  Vector lambda, fw;
  mobilities(fluid, s, lambda, fw);

  const WellSources src = make_well_sources(g, wells, fluid, &lambda);
  PressureSystem sys = assemble(nf, g, BoundarySpec::no_flow(), nullptr, &src.coupling,
                                &lambda);

  // weight of the local spectral problems on the mobility-scaled operator
  Vector weight(n);
  for (int c = 0; c < n; ++c) weight[c] = lambda[c] * nf.trace[c];

  if (rebuild_spaces || !spaces.ready) {
    // Local spectral problems stay pure Neumann (block-internal faces only);
    // the well coupling enters A but not the local operators.
    spaces.wc = build_coarse_space_c(sys.A, nullptr, weight, g, cfg.rule_c);
    spaces.wcc = build_coarse_space_cc(sys.A, nullptr, weight, g, spaces.wc, cfg.rule_cc);
    spaces.ready = true;
  } else {
    refresh_galerkin(spaces.wc, sys.A);
    refresh_galerkin(spaces.wcc, spaces.wc.A_level);
  }

  ThreeGridPreconditioner::Options opt = cfg.tg;
  opt.singular = sys.nullspace.has_value();
  const ThreeGridPreconditioner prec(sys.A, g, spaces.wc, spaces.wcc, opt);

  PressureStepResult out;
  out.p = p_prev ? *p_prev : Vector(n, 0.0);
  const Vector* ns = sys.nullspace ? &*sys.nullspace : nullptr;
  const PrecApply papply = [&](const Vector& r) { return prec.apply(r); };
  out.report = cfg.solver.method == SolverConfig::Method::CG
                   ? pcg(sys.A, papply, sys.rhs, out.p, cfg.solver, ns)
                   : gmres(sys.A, papply, sys.rhs, out.p, cfg.solver, ns);
  if (!out.report.converged)
    throw SolverFailure("pressure_step: solver did not converge in " +
                        std::to_string(out.report.iterations) + " iterations");

  out.flux = recover_velocity(g, nf, out.p, &lambda);
  out.q_producer.assign(n, 0.0);
  for (int c = 0; c < n; ++c)
    out.q_producer[c] =
        (src.coupling.rhs[c] - src.inj_density[c]) - src.coupling.diag[c] * out.p[c];
  Vector effective(n);
  for (int c = 0; c < n; ++c) effective[c] = src.inj_density[c] + out.q_producer[c];
  out.conservation_defect = check_conservation(g, out.flux, effective);
  return out;
}

TransportResult transport_substeps(const GridHierarchy& g, const FluidModel& fluid,
                                   const WellSources& sources, const FaceFluxField& flux,
                                   const Vector& p, const Vector& phi, Vector& s,
                                   double& time, double ds_max, int substeps,
                                   double dt_max) {
  if (!(ds_max > 0.0) || substeps < 1 || !(dt_max > 0.0))
    throw std::invalid_argument("transport_substeps: bad step controls");
  const int n = g.num_cells();
  const std::vector<Face> faces = internal_faces(g);
  const double vol = g.cell_volume();

  // producer totals are fixed within the outer step: the pressure is frozen
  Vector q_prod(n);
  for (int c = 0; c < n; ++c)
    q_prod[c] =
        (sources.coupling.rhs[c] - sources.inj_density[c]) - sources.coupling.diag[c] * p[c];

  TransportResult res;
  Vector fw(n), net(n), gs(n);
  for (int m = 0; m < substeps; ++m) {
    for (int c = 0; c < n; ++c) fw[c] = fluid.frac_flow(s[c]);
    std::fill(net.begin(), net.end(), 0.0);
    for (size_t e = 0; e < faces.size(); ++e) {
      const Face& f = faces[e];
      const double q = flux.flux[e];
      const double w = (q >= 0.0 ? fw[f.minus] : fw[f.plus]) * q;
      net[f.minus] += w;
      net[f.plus] -= w;
    }
    double rate = 0.0;
    double in_rate = 0.0, out_rate = 0.0;
    for (int c = 0; c < n; ++c) {
      gs[c] = (sources.inj_density[c] + fw[c] * q_prod[c] - net[c]) / phi[c];
      rate = std::max(rate, std::abs(gs[c]));
      in_rate += sources.inj_density[c];
      out_rate -= fw[c] * q_prod[c];
    }
    const double dt = rate > 0.0 ? std::min(ds_max / rate, dt_max) : dt_max;
    for (int c = 0; c < n; ++c) {
      s[c] += dt * gs[c];
      if (s[c] < fluid.s_min - 1e-9 || s[c] > fluid.s_max + 1e-9) {
        char what[160];
        std::snprintf(what, sizeof(what),
                      "transport_substeps: saturation %.17g left [%g, %g] at cell %d",
                      s[c], fluid.s_min, fluid.s_max, c);
        throw std::runtime_error(what);
      }
    }
    time += dt;
    res.dt_total += dt;
    res.max_delta_s = std::max(res.max_delta_s, dt * rate);
    res.water_in += dt * in_rate * vol;
    res.water_out += dt * out_rate * vol;
    ++res.substeps;
  }
  res.substeps = substeps;
  return res;
}

SimulationResult run_simulation(const SimulationConfig& cfg, const SnapshotHook& snapshot) {
  const GridHierarchy& g = cfg.grid;
  const int n = g.num_cells();
  const NormalizedField nf = normalize(cfg.field, g);
  const double dt_max = cfg.dt_max > 0.0 ? cfg.dt_max : cfg.end_time / 1000.0;
  if (cfg.refresh_every < 1)
    throw std::invalid_argument("run_simulation: refresh_every must be >= 1");

  SimulationResult result;
  result.s.assign(n, cfg.fluid.s_min);
  result.time = 0.0;
  CoarsePair spaces;
  Vector p_prev;

  for (int step = 1; step <= cfg.max_outer_steps && result.time < cfg.end_time; ++step) {
    const bool rebuild = ((step - 1) % cfg.refresh_every) == 0;
    PressureStepResult pr =
        pressure_step(g, nf, cfg.fluid, cfg.wells, result.s, cfg.pressure, spaces, rebuild,
                      p_prev.empty() ? nullptr : &p_prev);

    // the transport sees exactly the sources the pressure equation used
    Vector lambda, fw;
    mobilities(cfg.fluid, result.s, lambda, fw);
    const WellSources src = make_well_sources(g, cfg.wells, cfg.fluid, &lambda);

    Vector s_before = result.s;
    TransportResult tr =
        transport_substeps(g, cfg.fluid, src, pr.flux, pr.p, cfg.field.phi, result.s,
                           result.time, cfg.ds_max, cfg.substeps, dt_max);

    OuterStepRecord rec;
    rec.step = step;
    rec.time = result.time;
    rec.dt = tr.dt_total;
    rec.iterations = pr.report.iterations;
    rec.max_delta_s = tr.max_delta_s;
    rec.water_in = tr.water_in;
    rec.water_out = tr.water_out;
    rec.conservation_defect = pr.conservation_defect;
    double dv = 0.0;
    const double vol = g.cell_volume();
    for (int c = 0; c < n; ++c) dv += cfg.field.phi[c] * vol * (result.s[c] - s_before[c]);
    rec.balance_error = std::abs(dv - (tr.water_in - tr.water_out)) /
                        std::max(std::abs(tr.water_in) + std::abs(tr.water_out), 1e-300);
    rec.s_low = *std::min_element(result.s.begin(), result.s.end());
    rec.s_high = *std::max_element(result.s.begin(), result.s.end());
    result.steps.push_back(rec);
    result.p = pr.p;
    p_prev = pr.p;

    if (snapshot) snapshot(rec, result.p, result.s);
  }
  return result;
}

}  // namespace specmg
