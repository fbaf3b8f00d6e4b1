#include "gmsfem/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gmsfem/localspaces.hpp"

namespace gmsfem {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

DenseVector read_matrix_file(const std::string& path, const StructuredGrids& grids) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_field: cannot open '" + path + "'");

  // row-major text matrix, one row per fine-cell row, top row first
  DenseVector kappa(grids.n_fine_cells, 0.0);
  std::string line;
  int rows_read = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    DenseVector row;
    double v;
    while (ls >> v) row.push_back(v);
    if (row.empty()) continue;
    if (static_cast<int>(row.size()) != grids.nx_fine)
      throw std::invalid_argument("load_field: row " + std::to_string(rows_read) + " of '" +
                                  path + "' has " + std::to_string(row.size()) +
                                  " entries, expected " + std::to_string(grids.nx_fine));
    if (rows_read >= grids.ny_fine)
      throw std::invalid_argument("load_field: '" + path + "' has more than " +
                                  std::to_string(grids.ny_fine) + " rows");
    const int cy = grids.ny_fine - 1 - rows_read;  // top row = top of domain
    for (int cx = 0; cx < grids.nx_fine; ++cx) kappa[grids.fine_cell(cx, cy)] = row[cx];
    ++rows_read;
  }
  if (rows_read != grids.ny_fine)
    throw std::invalid_argument("load_field: '" + path + "' has " + std::to_string(rows_read) +
                                " rows, expected " + std::to_string(grids.ny_fine));
  for (double v : kappa)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("load_field: field values must be positive and finite");
  return kappa;
}

}  // namespace

std::vector<std::uint8_t> channel_mask(const StructuredGrids& grids, std::uint64_t seed) {
  std::vector<std::uint8_t> mask(grids.n_fine_cells, 0);
  std::uint64_t state = seed;

  const int th = std::max(1, grids.ny_fine / 16);
  const int tv = std::max(1, grids.nx_fine / 16);

  // two full-width horizontal channels and two full-height vertical ones,
  // giving crossing high-contrast strips away from the domain boundary
  for (int r = 0; r < 2; ++r) {
    const int span = std::max(1, grids.ny_fine - th - 2);
    const int y0 = 1 + static_cast<int>(splitmix64(state) % span);
    for (int cy = y0; cy < std::min(y0 + th, grids.ny_fine); ++cy)
      for (int cx = 0; cx < grids.nx_fine; ++cx) mask[grids.fine_cell(cx, cy)] = 1;
  }
  for (int r = 0; r < 2; ++r) {
    const int span = std::max(1, grids.nx_fine - tv - 2);
    const int x0 = 1 + static_cast<int>(splitmix64(state) % span);
    for (int cx = x0; cx < std::min(x0 + tv, grids.nx_fine); ++cx)
      for (int cy = 0; cy < grids.ny_fine; ++cy) mask[grids.fine_cell(cx, cy)] = 1;
  }
  return mask;
}

CoefficientField load_field(const FieldSpec& spec, const StructuredGrids& grids) {
  CoefficientField f;
  switch (spec.kind) {
    case FieldKind::uniform:
      f.kappa.assign(grids.n_fine_cells, 1.0);
      break;
    case FieldKind::channels: {
      if (spec.contrast < 1.0)
        throw std::invalid_argument("load_field: contrast must be >= 1");
      const auto mask = channel_mask(grids, spec.seed);
      f.kappa.assign(grids.n_fine_cells, 1.0);
      for (int c = 0; c < grids.n_fine_cells; ++c)
        if (mask[c]) f.kappa[c] = spec.contrast;
      break;
    }
    case FieldKind::file:
      f.kappa = read_matrix_file(spec.path, grids);
      break;
  }
  return f;
}

void compute_kappa_tilde(CoefficientField& field, const StructuredGrids& grids,
                         const PartitionOfUnity& pou) {
  if (pou.chi.empty()) throw std::logic_error("compute_kappa_tilde: partition of unity not built");

  const double H = std::max(grids.Hx, grids.Hy);
  const double H2 = H * H;

  field.kappa_tilde.assign(grids.n_fine_cells, 0.0);
  for (int c = 0; c < grids.n_fine_cells; ++c) {
    const auto [cx, cy] = grids.fine_cell_xy(c);
    const int nd[4] = {grids.fine_node(cx, cy), grids.fine_node(cx + 1, cy),
                       grids.fine_node(cx + 1, cy + 1), grids.fine_node(cx, cy + 1)};
    // coarse cell containing this fine cell, and its four vertex nodes
    const int kx = cx / grids.nx_sub, ky = cy / grids.ny_sub;
    const int verts[4] = {grids.coarse_node(kx, ky), grids.coarse_node(kx + 1, ky),
                          grids.coarse_node(kx + 1, ky + 1), grids.coarse_node(kx, ky + 1)};

    double grad2_sum = 0.0;
    for (int v = 0; v < 4; ++v) {
      const int i = verts[v];
      double chi[4];
      for (int a = 0; a < 4; ++a) chi[a] = pou.at(grids, i, nd[a]);
      const double px = (chi[1] + chi[2] - chi[0] - chi[3]) / (2.0 * grids.hx);
      const double py = (chi[3] + chi[2] - chi[0] - chi[1]) / (2.0 * grids.hy);
      grad2_sum += px * px + py * py;
    }
    field.kappa_tilde[c] = field.kappa[c] * H2 * grad2_sum;
  }

  field.kappa_tilde_min.assign(grids.n_coarse_nodes, std::numeric_limits<double>::infinity());
  for (int i = 0; i < grids.n_coarse_nodes; ++i)
    for (int c : grids.omega_fine_cells[i])
      field.kappa_tilde_min[i] = std::min(field.kappa_tilde_min[i], field.kappa_tilde[c]);
}

}  // namespace gmsfem
