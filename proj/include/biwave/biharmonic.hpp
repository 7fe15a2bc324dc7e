#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <memory>
#include <vector>

#include "biwave/fields.hpp"
#include "biwave/grid.hpp"

namespace biwave {

// Discrete clamped plate operator on a tensor grid.
//
// The Dirichlet Laplacian is the usual 3/5-point stencil. Clamped boundary
// conditions (u = du/dn = 0) enter through a ghost closure: when the Laplacian
// of a clamped field is needed *at* a boundary node, the missing exterior
// value is the mirror of the first interior one, which gives 2*u_in/h^2 on
// edges and 0 at corners. The bilaplacian is the composition "Laplacian of the
// closed Laplacian field", assembled on interior unknowns as A^T diag(tau) A
// with A = lap_to_field, which makes it symmetric by construction and makes
// the summation-by-parts identity <bilap u, v> = <lap u, lap v>_tau hold to
// round-off for all clamped u, v.
struct ClampedOperator {
  std::shared_ptr<const Grid> grid;
  Eigen::SparseMatrix<double> lap_to_field;  // interior u -> Laplacian field on all nodes
  Eigen::SparseMatrix<double> bilap;         // interior -> interior, SPD
};

ClampedOperator make_clamped_operator(std::shared_ptr<const Grid> grid);

// Gather/scatter between all-node grid functions and interior vectors.
Eigen::VectorXd interior_values(const Grid& grid, const Eigen::VectorXd& u_all);
Eigen::VectorXd scatter_interior(const Grid& grid, const Eigen::VectorXd& u_int);

// Plain centered Laplacian at interior nodes, reading boundary values of u
// directly; boundary entries of the result are zero. Makes no clamped
// assumption on u.
Eigen::VectorXd laplacian(const Grid& grid, const Eigen::VectorXd& u_all);

// Laplacian field of a clamped function on all nodes (ghost closure on the
// boundary). This is the field whose tau-weighted square is the bending
// energy.
Eigen::VectorXd clamped_laplacian_field(const ClampedOperator& op, const Eigen::VectorXd& u_all);

// Discrete bilaplacian of a clamped function; interior entries carry the
// operator value, boundary entries are zero.
Eigen::VectorXd bilaplacian(const ClampedOperator& op, const Eigen::VectorXd& u_all);

// Second-order one-sided boundary traces of a clamped field, in the order of
// grid->boundary. `lap` approximates the Laplacian at the wall from two
// interior layers along the normal; `nlap` is the outward normal derivative of
// the interior Laplacian field from three layers. Corner values are zero (the
// Laplacian of a clamped field vanishes there).
struct BoundaryTraces {
  Eigen::VectorXd lap, nlap;
};
BoundaryTraces boundary_traces(const ClampedOperator& op, const Eigen::VectorXd& u_all);

// Energy content of a state (u, v):
//   kinetic = 1/2 * sum tau * rho * v^2 * cell
//   bending = 1/2 * sum tau * (lap u)^2 * cell   (ghost-closed Laplacian field)
//   E       = kinetic + bending
// `state_norm_sq` = 2E is the square of the norm in which the generator is
// dissipative (the semigroup contracts in it); `graph_norm_sq` additionally
// replaces the bending term by the full fourth-order term |bilap u|^2 and is
// the natural partner of the H^4-type norm below.
struct EnergyValue {
  double kinetic = 0, bending = 0, E = 0;
  double state_norm_sq = 0, graph_norm_sq = 0;
};
EnergyValue energy(const ClampedOperator& op, const DensityField& rho, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& v);

// tau-weighted L2 norm of an all-node field.
double l2_norm(const Grid& grid, const Eigen::VectorXd& w);
// Plain interior-sum L2 norm, for fields only defined at interior nodes
// (stored as all-node vectors with zero boundary entries).
double l2_norm_interior(const Grid& grid, const Eigen::VectorXd& w);
// Discrete H^4-type norm sqrt(|f|^2 + |lap f|^2 + |bilap f|^2) of a clamped f.
double h4_norm(const ClampedOperator& op, const Eigen::VectorXd& f);

// Generalized eigenpairs bilap(phi) = lambda * rho * phi on interior nodes,
// solved densely (oracle-grade). Shapes are returned on all nodes, normalized
// to ||sqrt(rho) phi||_{L2,h} = 1, ascending in lambda. Throws when k exceeds
// the interior dimension or the interior dimension exceeds 4096.
struct Mode {
  double lambda = 0;
  Eigen::VectorXd shape;
};
std::vector<Mode> spectrum(const ClampedOperator& op, const DensityField& rho, int k);

// Initial data from eigenmode k (1-based), scaled so the bending energy is
// exactly 1/2 (E = 0.5 with zero velocity).
InitialData eigenmode_data(const ClampedOperator& op, const DensityField& rho, int k);

// Empirical two-sided bounds of graph_norm_sq(f,g) against |f|_{H4,h}^2 +
// |g|_{L2,h}^2 over a seeded ensemble of random clamped pairs.
struct NormEquivalence {
  double C1_est = 0, C2_est = 0;
};
NormEquivalence norm_equivalence_bounds(const ClampedOperator& op, const DensityField& rho,
                                        int count, std::uint64_t seed);

}  // namespace biwave
