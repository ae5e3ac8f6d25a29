#include "specmg/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace specmg {

namespace {

void require_positive(const Vector& v, const char* what) {
  for (size_t i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0))
      throw std::invalid_argument(std::string(what) + " must be strictly positive (cell " +
                                  std::to_string(i) + ")");
}

PermeabilityField blank(const GridHierarchy& g, double phi) {
  PermeabilityField f;
  f.dim = g.dim;
  const int n = g.num_cells();
  f.kx.assign(n, 0.0);
  f.ky.assign(n, 0.0);
  if (g.dim == 3) f.kz.assign(n, 0.0);
  f.phi.assign(n, phi);
  return f;
}

}  // namespace

NormalizedField normalize(const PermeabilityField& f, const GridHierarchy& g) {
  const int n = g.num_cells();
  if (f.dim != g.dim || static_cast<int>(f.kx.size()) != n)
    throw std::invalid_argument("normalize: field does not match grid");
  require_positive(f.kx, "kx");
  require_positive(f.ky, "ky");
  if (g.dim == 3) require_positive(f.kz, "kz");
  NormalizedField nf;
  nf.dim = g.dim;
  nf.ktx.resize(n);
  nf.kty.resize(n);
  if (g.dim == 3) nf.ktz.resize(n);
  nf.trace.assign(n, 0.0);
  const double sx = 1.0 / (g.h[0] * g.h[0]);
  const double sy = 1.0 / (g.h[1] * g.h[1]);
  const double sz = 1.0 / (g.h[2] * g.h[2]);
  for (int c = 0; c < n; ++c) {
    nf.ktx[c] = f.kx[c] * sx;
    nf.kty[c] = f.ky[c] * sy;
    nf.trace[c] = nf.ktx[c] + nf.kty[c];
    if (g.dim == 3) {
      nf.ktz[c] = f.kz[c] * sz;
      nf.trace[c] += nf.ktz[c];
    }
  }
  return nf;
}

double face_transmissibility(const NormalizedField& nf, const Face& face) {
  const double a = nf.component(face.axis, face.minus);
  const double b = nf.component(face.axis, face.plus);
  return 2.0 / (1.0 / a + 1.0 / b);
}

// --------------------------------------------------------------- generators

PermeabilityField gen_uniform(const GridHierarchy& g, double k, double phi) {
  PermeabilityField f = blank(g, phi);
  std::fill(f.kx.begin(), f.kx.end(), k);
  std::fill(f.ky.begin(), f.ky.end(), k);
  std::fill(f.kz.begin(), f.kz.end(), k);
  return f;
}

PermeabilityField gen_log_uniform(const GridHierarchy& g, std::uint64_t seed,
                                  double log10_contrast) {
  PermeabilityField f = blank(g, 0.2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, log10_contrast);
  for (int c = 0; c < g.num_cells(); ++c) {
    const double k = std::pow(10.0, u(rng));
    f.kx[c] = k;
    f.ky[c] = k;
    if (g.dim == 3) f.kz[c] = k;
  }
  return f;
}

std::vector<std::uint8_t> default_channel_mask() {
  std::vector<std::uint8_t> mask(512, 0);
  auto central = [](int v) { return v == 3 || v == 4; };
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        const bool on = (central(j) && central(k)) || (central(i) && central(k)) ||
                        (central(i) && central(j));
        mask[i + 8 * (j + 8 * k)] = on ? 1 : 0;
      }
  return mask;
}

PermeabilityField gen_periodic_cell(const GridHierarchy& g,
                                    const std::vector<std::uint8_t>& mask,
                                    double contrast) {
  if (g.dim != 3) throw std::invalid_argument("gen_periodic_cell: needs a 3D grid");
  if (mask.size() != 512) throw std::invalid_argument("gen_periodic_cell: mask must be 8x8x8");
  for (int a = 0; a < 3; ++a)
    if (g.n[a] % 8 != 0)
      throw std::invalid_argument("gen_periodic_cell: cell counts must be divisible by 8");
  PermeabilityField f = blank(g, 0.2);
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        const int c = g.cell_index(i, j, k);
        const double v = mask[(i % 8) + 8 * ((j % 8) + 8 * (k % 8))] ? contrast : 1.0;
        f.kx[c] = v;
        f.ky[c] = v;
        f.kz[c] = v;
      }
  return f;
}

PermeabilityField gen_fractured(const GridHierarchy& g, const std::vector<Slab>& slabs,
                                double cr) {
  for (const Slab& s : slabs)
    for (int a = 0; a < 3; ++a)
      if (s.lo[a] < 0 || s.hi[a] > g.n[a] || s.lo[a] >= s.hi[a])
        throw std::invalid_argument("gen_fractured: slab out of bounds");
  PermeabilityField f = gen_uniform(g, 1.0);
  const double kf = std::pow(10.0, cr);
  for (const Slab& s : slabs)
    for (int k = s.lo[2]; k < s.hi[2]; ++k)
      for (int j = s.lo[1]; j < s.hi[1]; ++j)
        for (int i = s.lo[0]; i < s.hi[0]; ++i) {
          const int c = g.cell_index(i, j, k);
          f.kx[c] = kf;
          f.ky[c] = kf;
          if (g.dim == 3) f.kz[c] = kf;
        }
  return f;
}

std::vector<Slab> default_fracture_network(const GridHierarchy& g) {
  std::vector<Slab> slabs;
  const int nx = g.n[0], ny = g.n[1], nz = g.n[2];
  auto full = [&](int axis, int pos) {
    Slab s{{0, 0, 0}, {nx, ny, nz}};
    s.lo[axis] = pos;
    s.hi[axis] = pos + 1;
    return s;
  };
  // two horizontal sheets and crossing vertical sheets form one connected set
  slabs.push_back(full(0, nx / 4));
  slabs.push_back(full(0, (3 * nx) / 4));
  slabs.push_back(full(1, ny / 3));
  slabs.push_back(full(1, (2 * ny) / 3));
  if (g.dim == 3 && nz > 1) {
    slabs.push_back(full(2, nz / 4));
    slabs.push_back(full(2, (3 * nz) / 4));
  }
  return slabs;
}

PermeabilityField gen_spe10_like(const GridHierarchy& g, std::uint64_t seed,
                                 double log10_min, double log10_max) {
  if (!(log10_max > log10_min))
    throw std::invalid_argument("gen_spe10_like: empty log10 range");
  PermeabilityField f = blank(g, 0.2);
  std::mt19937_64 rng(seed);
  const int layer_axis = (g.dim == 3) ? 2 : 1;
  const int layers = g.n[layer_axis];
  std::uniform_real_distribution<double> ubase(log10_min, log10_max);
  std::uniform_real_distribution<double> uaniso(0.0, 4.0);
  std::uniform_real_distribution<double> ujit(-0.5, 0.5);
  std::vector<double> base(layers), aniso(layers);
  for (int l = 0; l < layers; ++l) {
    base[l] = ubase(rng);
    aniso[l] = uaniso(rng);
  }
  const double span = log10_max - log10_min;
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        const int c = g.cell_index(i, j, k);
        const int l = (layer_axis == 2) ? k : j;
        const double lk =
            std::clamp(base[l] + 0.15 * span * ujit(rng), log10_min, log10_max);
        const double kx = std::pow(10.0, lk);
        f.kx[c] = kx;
        f.ky[c] = kx;
        if (g.dim == 3) {
          const double ratio = std::clamp(aniso[l] + ujit(rng), 0.0, 4.0);
          f.kz[c] = kx / std::pow(10.0, ratio);
        }
        f.phi[c] = std::clamp(0.05 + 0.3 * (lk - log10_min) / span, 0.05, 0.35);
      }
  return f;
}

// ----------------------------------------------------------------- file io

PermeabilityField load_raw(const std::string& path, const GridHierarchy& g,
                           bool with_phi) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("load_raw: cannot open " + path);
  const int n = g.num_cells();
  const int cols = with_phi ? 4 : 3;
  std::vector<double> buf(static_cast<size_t>(n) * cols);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(double)))
    throw std::invalid_argument("load_raw: file too short for grid");
  char extra;
  if (in.read(&extra, 1))
    throw std::invalid_argument("load_raw: file longer than grid requires");
  PermeabilityField f = blank(g, 0.2);
  for (int c = 0; c < n; ++c) {
    f.kx[c] = buf[static_cast<size_t>(c) * cols + 0];
    f.ky[c] = buf[static_cast<size_t>(c) * cols + 1];
    const double kz = buf[static_cast<size_t>(c) * cols + 2];
    if (g.dim == 3) f.kz[c] = kz;
    if (with_phi) {
      double phi = buf[static_cast<size_t>(c) * cols + 3];
      if (!(phi > 0.0) || phi > 1.0)
        throw std::invalid_argument("load_raw: porosity outside (0, 1] at cell " +
                                    std::to_string(c));
      f.phi[c] = std::max(phi, 0.05);
    }
  }
  require_positive(f.kx, "kx");
  require_positive(f.ky, "ky");
  if (g.dim == 3) require_positive(f.kz, "kz");
  return f;
}

void save_raw(const std::string& path, const PermeabilityField& f, bool with_phi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("save_raw: cannot open " + path);
  const size_t n = f.kx.size();
  for (size_t c = 0; c < n; ++c) {
    double rec[4] = {f.kx[c], f.ky[c], f.dim == 3 ? f.kz[c] : 1.0,
                     with_phi ? f.phi[c] : 0.0};
    out.write(reinterpret_cast<const char*>(rec), (with_phi ? 4 : 3) * sizeof(double));
  }
}

}  // namespace specmg
