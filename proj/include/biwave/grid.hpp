#pragma once

#include <Eigen/Core>

#include <array>
#include <memory>
#include <vector>

namespace biwave {

// One node of the discrete boundary: flat node index, outward unit normal and
// the weight it carries in the boundary quadrature. Rectangle corners are
// assigned the normal of the adjacent vertical edge; their weight is the sum
// of the trapezoid end-point halves of the two edges meeting there.
struct BoundaryNode {
  int node = 0;
  std::array<double, 2> normal{0.0, 0.0};
  double weight = 0.0;
  bool corner = false;
};

// Uniform tensor grid on [0,Lx] (1D) or [0,Lx]x[0,Ly] (2D) plus the
// bookkeeping every other module leans on: lexicographic node indexing,
// interior/boundary index sets, tensor-trapezoid volume weights, boundary
// normals/weights, and the star-shape data for the observation point x0.
//
// Node (ix,iy) sits at (ix*hx, iy*hy) and maps to flat index ix*ny + iy.
// Grid functions are Eigen vectors over all nodes in that order; fields that
// live on the boundary follow the ascending flat order of `boundary`.
struct Grid {
  int dim = 2;
  std::array<int, 2> n{0, 1};           // nodes per axis; n[1] = 1 in 1D
  std::array<double, 2> extents{0, 0};  // edge lengths; extents[1] = 0 in 1D
  std::array<double, 2> h{0, 0};        // node spacing per axis
  std::array<double, 2> x0{0, 0};       // base point of the multiplier m = x - x0
  int n_nodes = 0;
  double cell = 0;  // hx*hy in 2D, h in 1D
  double diam = 0;  // Euclidean diameter of the domain
  double c0 = 0;    // min over boundary nodes of (x - x0) . n

  std::vector<int> interior;           // flat indices of interior nodes, ascending
  std::vector<BoundaryNode> boundary;  // ascending by flat index
  std::vector<int> interior_ordinal;   // node -> position in `interior`, -1 on the boundary
  Eigen::VectorXd tau;                 // tensor-trapezoid weight per node (1, 1/2, 1/4)

  int index(int ix, int iy = 0) const { return ix * n[1] + iy; }
  std::array<int, 2> multi_index(int node) const { return {node / n[1], node % n[1]}; }
  std::array<double, 2> coord(int node) const {
    const auto m = multi_index(node);
    return {m[0] * h[0], m[1] * h[1]};
  }
  bool is_boundary(int node) const { return interior_ordinal[node] < 0; }
  int n_interior() const { return static_cast<int>(interior.size()); }
  int n_boundary() const { return static_cast<int>(boundary.size()); }
};

// Builds and validates the grid. Throws std::invalid_argument for a dimension
// other than 1 or 2, fewer than 5 nodes per axis, non-positive extents, or an
// observation point outside the closed domain. In 1D the second entries of
// extents/n_nodes/x0 are ignored.
Grid build_grid(int dim, std::array<double, 2> extents, std::array<int, 2> n_nodes,
                std::array<double, 2> x0);

std::shared_ptr<const Grid> build_grid_shared(int dim, std::array<double, 2> extents,
                                              std::array<int, 2> n_nodes,
                                              std::array<double, 2> x0);

// Lower bound on the observation time: twice the domain diameter over the
// slowest admissible wave speed. Throws for rho_min <= 0.
double min_observation_time(const Grid& grid, double rho_min);

// True when `fine` refines `coarse` with coincident nodes (same extents, each
// axis has n_fine - 1 an integer multiple of n_coarse - 1).
bool grids_nested(const Grid& coarse, const Grid& fine);

}  // namespace biwave
