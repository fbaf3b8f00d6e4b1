#include "gmsfem/fem.hpp"

#include <stdexcept>

namespace gmsfem {

namespace {

// reference integrals of bilinear shape-function derivative products,
// node order SW, SE, NE, NW (times 1/6)
constexpr double kXi[16] = {2, -2, -1, 1,   //
                            -2, 2, 1, -1,   //
                            -1, 1, 2, -2,   //
                            1, -1, -2, 2};
constexpr double kEta[16] = {2, 1, -1, -2,  //
                             1, 2, -2, -1,  //
                             -1, -2, 2, 1,  //
                             -2, -1, 1, 2};
// reference mass integrals (times 1/36)
constexpr double kMass[16] = {4, 2, 1, 2,  //
                              2, 4, 2, 1,  //
                              1, 2, 4, 2,  //
                              2, 1, 2, 4};

void cell_nodes(const StructuredGrids& g, int cell, int out[4]) {
  const auto [cx, cy] = g.fine_cell_xy(cell);
  out[0] = g.fine_node(cx, cy);
  out[1] = g.fine_node(cx + 1, cy);
  out[2] = g.fine_node(cx + 1, cy + 1);
  out[3] = g.fine_node(cx, cy + 1);
}

}  // namespace

std::array<double, 16> element_stiffness(double hx, double hy, double kappa) {
  std::array<double, 16> k;
  const double ax = kappa * hy / hx / 6.0;
  const double ay = kappa * hx / hy / 6.0;
  for (int i = 0; i < 16; ++i) k[i] = ax * kXi[i] + ay * kEta[i];
  return k;
}

std::array<double, 16> element_mass(double hx, double hy, double kappa_tilde) {
  std::array<double, 16> m;
  const double s = kappa_tilde * hx * hy / 36.0;
  for (int i = 0; i < 16; ++i) m[i] = s * kMass[i];
  return m;
}

SparseMatrix assemble_stiffness(const StructuredGrids& grids, const CoefficientField& field,
                                std::span<const int> cells,
                                std::span<const int> dirichlet_nodes) {
  if (cells.empty()) throw std::invalid_argument("assemble_stiffness: empty cell subset");

  std::vector<char> fixed(grids.n_fine_nodes, 0);
  for (int p : dirichlet_nodes) fixed[p] = 1;

  std::vector<SparseMatrix::Triplet> trip;
  trip.reserve(cells.size() * 16 + dirichlet_nodes.size());
  for (int c : cells) {
    int nd[4];
    cell_nodes(grids, c, nd);
    const auto k = element_stiffness(grids.hx, grids.hy, field.kappa[c]);
    for (int a = 0; a < 4; ++a) {
      if (fixed[nd[a]]) continue;
      for (int b = 0; b < 4; ++b) {
        if (fixed[nd[b]]) continue;
        trip.push_back({nd[a], nd[b], k[a * 4 + b]});
      }
    }
  }
  for (int p : dirichlet_nodes) trip.push_back({p, p, 1.0});
  return SparseMatrix::from_triplets(grids.n_fine_nodes, trip);
}

SparseMatrix assemble_weighted_mass(const StructuredGrids& grids, const CoefficientField& field,
                                    std::span<const int> cells) {
  if (cells.empty()) throw std::invalid_argument("assemble_weighted_mass: empty cell subset");
  if (!field.has_tilde())
    throw std::logic_error("assemble_weighted_mass: kappa_tilde not yet computed");

  std::vector<SparseMatrix::Triplet> trip;
  trip.reserve(cells.size() * 16);
  for (int c : cells) {
    int nd[4];
    cell_nodes(grids, c, nd);
    const auto m = element_mass(grids.hx, grids.hy, field.kappa_tilde[c]);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) trip.push_back({nd[a], nd[b], m[a * 4 + b]});
  }
  return SparseMatrix::from_triplets(grids.n_fine_nodes, trip);
}

DenseVector assemble_load(const StructuredGrids& grids, double f_const,
                          std::span<const int> cells) {
  DenseVector f(grids.n_fine_nodes, 0.0);
  const double w = f_const * grids.hx * grids.hy / 4.0;
  for (int c : cells) {
    int nd[4];
    cell_nodes(grids, c, nd);
    for (int a = 0; a < 4; ++a) f[nd[a]] += w;
  }
  return f;
}

DenseMatrix assemble_dense(const StructuredGrids& grids, const DenseVector& coeff,
                           std::span<const int> cells, std::span<const int> nodes,
                           bool stiffness) {
  std::vector<int> local(grids.n_fine_nodes, -1);
  for (size_t j = 0; j < nodes.size(); ++j) local[nodes[j]] = static_cast<int>(j);

  DenseMatrix M(static_cast<int>(nodes.size()), static_cast<int>(nodes.size()));
  for (int c : cells) {
    int nd[4];
    cell_nodes(grids, c, nd);
    const auto k = stiffness ? element_stiffness(grids.hx, grids.hy, coeff[c])
                             : element_mass(grids.hx, grids.hy, coeff[c]);
    for (int a = 0; a < 4; ++a) {
      const int la = local[nd[a]];
      if (la < 0) continue;
      for (int b = 0; b < 4; ++b) {
        const int lb = local[nd[b]];
        if (lb < 0) continue;
        M(la, lb) += k[a * 4 + b];
      }
    }
  }
  return M;
}

}  // namespace gmsfem
