#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "specmg/grid.hpp"
#include "specmg/linalg.hpp"

namespace specmg {

/// Cell-wise diagonal permeability (orthotropic) and porosity, lexicographic
/// cell order. kz is unused in 2D.
struct PermeabilityField {
  int dim = 0;
  Vector kx, ky, kz;
  Vector phi;

  double component(int axis, int cell) const {
    return axis == 0 ? kx[cell] : (axis == 1 ? ky[cell] : kz[cell]);
  }
};

/// Dimensionless cell conductances kt = k / h^2 and their per-cell trace,
/// the weight of the local spectral problems.
struct NormalizedField {
  int dim = 0;
  Vector ktx, kty, ktz;
  Vector trace;

  double component(int axis, int cell) const {
    return axis == 0 ? ktx[cell] : (axis == 1 ? kty[cell] : ktz[cell]);
  }
};

NormalizedField normalize(const PermeabilityField& f, const GridHierarchy& g);

/// Harmonic mean of the two adjacent axis conductances.
double face_transmissibility(const NormalizedField& nf, const Face& face);

// --------------------------------------------------------------- generators

PermeabilityField gen_uniform(const GridHierarchy& g, double k, double phi = 0.2);

/// Isotropic cells with log10 k drawn uniformly from [0, log10_contrast].
PermeabilityField gen_log_uniform(const GridHierarchy& g, std::uint64_t seed,
                                  double log10_contrast);

/// 8x8x8 binary inclusion pattern tiled periodically over a 3D grid whose
/// cell counts are divisible by 8. Masked cells get k = contrast, the rest 1.
PermeabilityField gen_periodic_cell(const GridHierarchy& g,
                                    const std::vector<std::uint8_t>& mask,
                                    double contrast);

/// Default tile: three orthogonal 2-cell-wide channels crossing at the center.
std::vector<std::uint8_t> default_channel_mask();

/// Axis-aligned box of fine cells, half-open bounds per axis.
struct Slab {
  std::array<int, 3> lo;
  std::array<int, 3> hi;
};

/// Background k = 1, k = 10^cr inside the slab union.
PermeabilityField gen_fractured(const GridHierarchy& g, const std::vector<Slab>& slabs,
                                double cr);

/// A connected set of full-extent slabs, one cell thick, crossing the domain.
std::vector<Slab> default_fracture_network(const GridHierarchy& g);

/// Layered log-normal-style orthotropic field: layer bases drawn in
/// [log10_min, log10_max] with cell jitter, kz <= kx with a per-cell ratio up
/// to 1e4, porosity correlated with log k and floored at 0.05.
PermeabilityField gen_spe10_like(const GridHierarchy& g, std::uint64_t seed,
                                 double log10_min, double log10_max);

// ----------------------------------------------------------------- file io

/// Raw little-endian float64 cell records, lexicographic order:
/// kx ky kz with with_phi=false, kx ky kz phi otherwise. Porosity is floored
/// at 0.05 on load; permeability must be strictly positive.
PermeabilityField load_raw(const std::string& path, const GridHierarchy& g,
                           bool with_phi);
void save_raw(const std::string& path, const PermeabilityField& f, bool with_phi);

}  // namespace specmg
