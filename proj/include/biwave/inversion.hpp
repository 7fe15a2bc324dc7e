#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "biwave/observability.hpp"

namespace biwave {

// Everything measured by one paired-solution difference experiment: the
// difference system rho1 u_tt + bilap u + gamma u_t = -(rho1 - rho2) u2_tt is
// co-evolved in lockstep with u2, and u1 is simulated independently so that
// u + u2 = u1 serves as a cross-check. Ratios normalize the parameter
// discrepancies by sqrt((1 + gamma) J); they are 0 when J = 0.
struct StabilityReport {
  double rho_diff_inf = 0;  // |rho1 - rho2|_inf
  double f_diff_H4 = 0;     // discrete H4 norm of f1 - f2
  double g_diff_L2 = 0;
  double E0_diff = 0;  // initial energy of the difference state
  double J = 0;        // observation functional of the difference traces
  double gamma = 0, T = 0;
  double M_observed = 0;  // max over stored times of |u2_tt|_L2, equation-evaluated
  double ratio_density = 0;  // rho_diff_inf / sqrt((1+gamma) J)
  double ratio_initial = 0;  // f_diff_H4 / sqrt((1+gamma) J), needs g1 = g2
  bool ratio_initial_defined = false;
  double cross_check_rel = 0;  // max_t |(u + u2) - u1|_inf / max_t |u1|_inf
  // E_diff(t) <= 2 E_diff(0) + (M^2 / (2 rho1_min)) |rho1-rho2|_inf^2 T^2,
  // checked at every stored time; margin is the worst signed excess over the
  // bound, relative to the bound.
  double uniform_bound_margin = 0;
  bool uniform_bound_ok = true;
  // Initial-time acceleration estimates: lhs = |bilap (f1 - f2)|_L2 against
  // rhs = |rho1|_inf |u_tt(0)|_L2 + |rho1 - rho2|_inf |u2_tt(0)|_L2, and the
  // empirical constant lhs / (|g1 - g2|_L2 + |rho1 - rho2|_inf).
  double lhs_bilap_f = 0;
  double rhs_accel = 0;
  double C1_empirical = 0;
  bool C1_defined = false;
};

StabilityReport difference_experiment(const ClampedOperator& op, const DensityField& rho1,
                                      const InitialData& data1, const DensityField& rho2,
                                      const InitialData& data2, double gamma, double T,
                                      double dt);

// One report per (contrast, gamma) pair, sharing initial data across the pair
// so only the density differs.
std::vector<StabilityReport> stability_scan(const ClampedOperator& op, const DensityField& rho2,
                                            const InitialData& data,
                                            const std::vector<DensityField>& contrasts,
                                            const std::vector<double>& gammas, double T,
                                            double dt);

// Time-integrated boundary quadrature of the squared trace differences
// between two records with identical sampling.
double record_misfit(const Grid& grid, const BoundaryRecord& a, const BoundaryRecord& b);

// Restricts a record sampled on the boundary of a nested finer grid to the
// coarse boundary nodes (coincident coordinates), recomputing J with the
// coarse weights. Used to generate observations on a refined grid and invert
// on the working one.
BoundaryRecord restrict_record(const Grid& fine, const Grid& coarse, const BoundaryRecord& rec);

// Additive Gaussian noise on both trace fields, scaled per field to
// level * rms so levels are comparable across experiments; one seed drives
// both fields, so different levels reuse the same noise realization (common
// random numbers). J is recomputed from the noisy traces.
BoundaryRecord add_trace_noise(const Grid& grid, const BoundaryRecord& record, double level,
                               std::uint64_t seed);

// Scalar density recovery: golden-section search of the inclusion contrast
// minimizing record_misfit against `observed`, which must have been sampled
// with the same grid, T, and dt. Returns the best evaluated sample (argmin
// over all evaluations, also when the sampled misfits are not unimodal — that
// case is reported in `warnings` and `unimodal`).
struct DensityRecovery {
  double rho1_hat = 0;
  double misfit_at_hat = 0;
  std::vector<std::array<double, 2>> evaluations;  // (contrast, misfit), in order
  bool unimodal = true;
  std::vector<std::string> warnings;
};
DensityRecovery reconstruct_density(const ClampedOperator& op, const BoundaryRecord& observed,
                                    double rho0, const Inclusion& inc, const InitialData& data,
                                    double gamma, double T, double dt, double lo, double hi,
                                    double tol);

// Modal recovery of the initial displacement (zero initial velocity): least
// squares over the boundary records of the first k eigenmodes with Tikhonov
// weight reg * tr(G)/k. `rank_deficient` flags a numerically singular Gram
// matrix.
struct InitialRecovery {
  Eigen::VectorXd coeffs;
  Eigen::VectorXd f_hat;  // all-node reconstruction sum_j c_j phi_j
  double residual = 0;    // sqrt of the quadratic misfit at the minimizer
  double relative_residual = 0;
  bool rank_deficient = false;
};
InitialRecovery reconstruct_initial(const ClampedOperator& op, const DensityField& rho,
                                    const BoundaryRecord& observed, double gamma, double T,
                                    double dt, int k, double reg);

}  // namespace biwave
