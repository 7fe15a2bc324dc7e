#include "biwave/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace biwave {

Grid build_grid(int dim, std::array<double, 2> extents, std::array<int, 2> n_nodes,
                std::array<double, 2> x0) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("build_grid: dimension must be 1 or 2, got " +
                                std::to_string(dim));
  if (dim == 1) {
    extents[1] = 0.0;
    n_nodes[1] = 1;
    x0[1] = 0.0;
  }
  for (int a = 0; a < dim; ++a) {
    if (n_nodes[a] < 5)
      throw std::invalid_argument("build_grid: need at least 5 nodes per axis, got " +
                                  std::to_string(n_nodes[a]));
    if (!(extents[a] > 0.0))
      throw std::invalid_argument("build_grid: extents must be positive");
    if (x0[a] < 0.0 || x0[a] > extents[a])
      throw std::invalid_argument("build_grid: observation point x0 lies outside the domain");
  }

  Grid g;
  g.dim = dim;
  g.n = n_nodes;
  g.extents = extents;
  g.x0 = x0;
  g.h = {extents[0] / (n_nodes[0] - 1), dim == 2 ? extents[1] / (n_nodes[1] - 1) : 0.0};
  g.n_nodes = n_nodes[0] * n_nodes[1];
  g.cell = dim == 2 ? g.h[0] * g.h[1] : g.h[0];
  g.diam = dim == 2 ? std::hypot(extents[0], extents[1]) : extents[0];

  g.interior_ordinal.assign(g.n_nodes, -1);
  g.tau = Eigen::VectorXd::Ones(g.n_nodes);
  const int nx = g.n[0], ny = g.n[1];
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      const int node = g.index(ix, iy);
      const bool bx = (ix == 0 || ix == nx - 1);
      const bool by = dim == 2 && (iy == 0 || iy == ny - 1);
      if (bx) g.tau[node] *= 0.5;
      if (by) g.tau[node] *= 0.5;
      if (!bx && !by) {
        g.interior_ordinal[node] = static_cast<int>(g.interior.size());
        g.interior.push_back(node);
        continue;
      }
      BoundaryNode b;
      b.node = node;
      b.corner = bx && by;
      if (bx) {
        b.normal = {ix == 0 ? -1.0 : 1.0, 0.0};
      } else {
        b.normal = {0.0, iy == 0 ? -1.0 : 1.0};
      }
      if (dim == 1) {
        b.weight = 1.0;  // the boundary of an interval carries counting measure
      } else if (b.corner) {
        b.weight = 0.5 * (g.h[0] + g.h[1]);
      } else {
        b.weight = bx ? g.h[1] : g.h[0];
      }
      g.boundary.push_back(b);
    }
  }

  g.c0 = std::numeric_limits<double>::infinity();
  for (const auto& b : g.boundary) {
    const auto x = g.coord(b.node);
    const double s = (x[0] - x0[0]) * b.normal[0] + (x[1] - x0[1]) * b.normal[1];
    g.c0 = std::min(g.c0, s);
  }
  return g;
}

std::shared_ptr<const Grid> build_grid_shared(int dim, std::array<double, 2> extents,
                                              std::array<int, 2> n_nodes,
                                              std::array<double, 2> x0) {
  return std::make_shared<const Grid>(build_grid(dim, extents, n_nodes, x0));
}

double min_observation_time(const Grid& grid, double rho_min) {
  if (!(rho_min > 0.0))
    throw std::invalid_argument("min_observation_time: density lower bound must be positive");
  return 2.0 * grid.diam / std::sqrt(rho_min);
}

bool grids_nested(const Grid& coarse, const Grid& fine) {
  if (coarse.dim != fine.dim) return false;
  for (int a = 0; a < coarse.dim; ++a) {
    if (std::abs(coarse.extents[a] - fine.extents[a]) > 1e-14 * coarse.extents[a]) return false;
    const int rc = coarse.n[a] - 1, rf = fine.n[a] - 1;
    if (rf % rc != 0) return false;
  }
  return true;
}

}  // namespace biwave
