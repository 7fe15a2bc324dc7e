#pragma once

#include <Eigen/SparseCholesky>

#include <cstdint>

#include "biwave/biharmonic.hpp"

namespace biwave {

// Direct solver for (bilap + diag(c)) u = F on interior nodes, c >= 0
// nodewise. The factorization is computed once; solves run one or two steps of
// iterative refinement until the relative residual meets `tol` and throw if it
// cannot be reached (the system is SPD, so this only happens on severe
// ill-conditioning).
class ReactionSolver {
 public:
  ReactionSolver(const ClampedOperator& op, const Eigen::VectorXd& reaction_interior);

  // F and result are interior vectors.
  Eigen::VectorXd solve(const Eigen::VectorXd& F, double tol = 1e-12) const;
  double last_residual() const { return last_residual_; }

 private:
  Eigen::SparseMatrix<double> mat_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  mutable double last_residual_ = 0.0;
};

// State-space norm ||(u,v)||^2 = |lap u|^2_tau + |sqrt(rho) v|^2_tau = 2E, the
// norm in which the evolution generator is dissipative.
double state_norm_sq(const ClampedOperator& op, const DensityField& rho, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& v);

// Solves (lambda I - A)(u, v) = (y1, y2) for the damped plate generator
//   A (u, v) = (v, -(bilap u + gamma v) / rho)
// by eliminating v = lambda u - y1, which leaves one SPD reaction-bilaplacian
// problem with nodewise reaction lambda^2 rho + gamma lambda and right side
// rho y2 + lambda rho y1 + gamma y1. Requires lambda > 0, gamma >= 0, and
// clamped y1. `residual` is the state-norm residual of the recomposed system
// relative to ||y||.
struct ResolventResult {
  Eigen::VectorXd u, v;  // all-node
  double residual = 0;
};
ResolventResult solve_resolvent(const ClampedOperator& op, const DensityField& rho, double gamma,
                                double lambda, const Eigen::VectorXd& y1,
                                const Eigen::VectorXd& y2);

// Max over a seeded ensemble of lambda * ||R(lambda) y|| / ||y|| in the state
// norm; dissipativity makes the exact value <= 1.
struct ContractionReport {
  double resolvent_bound = 0;
  double max_residual = 0;
  int count = 0;
};
ContractionReport contraction_check(const ClampedOperator& op, const DensityField& rho,
                                    double gamma, double lambda, int count, std::uint64_t seed);

}  // namespace biwave
