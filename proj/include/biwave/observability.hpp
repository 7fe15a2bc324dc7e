#pragma once

#include <vector>

#include "biwave/evolution.hpp"

namespace biwave {

// Outcome of one boundary-observation run: initial energy E0, observation
// functional J, and the normalized ratio E0 / ((1 + gamma) J). The ratio is
// defined as 0 when either E0 or J vanishes. `time_condition_met` compares the
// horizon against the geometric minimal time 2 diam / sqrt(rho_min).
struct ObservabilityReport {
  double T = 0;
  double gamma = 0;
  double E0 = 0;
  double J = 0;
  double ratio = 0;
  double T_min = 0;
  bool time_condition_met = false;
};

// Recomputes J from a stored record: trapezoid in time of the weighted
// boundary sums of nlap^2 + lap^2. Matches record.J to round-off.
double boundary_functional(const Grid& grid, const BoundaryRecord& record);

// Simulates (f, g) over [0, T] and reports E0, J, and the normalized ratio.
ObservabilityReport observability_ratio(const ClampedOperator& op, const DensityField& rho,
                                        double gamma, const InitialData& data, double T,
                                        double dt);

// Max of the per-datum ratios over an ensemble; members with E0 = 0 are
// skipped. Throws if the ensemble is empty or entirely zero.
struct ConstantEstimate {
  double C_obs = 0;
  std::vector<ObservabilityReport> per_datum;
};
ConstantEstimate estimate_constant(const ClampedOperator& op, const DensityField& rho,
                                   double gamma, const std::vector<InitialData>& ensemble,
                                   double T, double dt);

// The three multiplier integrals over a stored stride-1 trajectory, with the
// multiplier field m(x) = x - x0:
//   I1 = int int rho u_tt (m . grad u),  u_tt by second-order time
//        differencing of the stored velocities,
//   I2 = int int (bilap u) (m . grad u),
//   I3 = gamma int int u_t (m . grad u).
// `closure` = I1 + I2 + I3 vanishes at O(dt^2) for trajectories of the
// homogeneous system. I2 is checked against its integration-by-parts form
//   (2 - n/2) int int |lap u|^2 - boundary_term,
//   boundary_term = 1/2 int int_bdry (m . n) |lap u|^2,
// and I3 against i3_rhs = -(gamma n / 2) int int |u_t|^2. The I3 comparison
// is reported, not asserted: for the multiplier m . grad u the damping
// integral reduces to pure temporal boundary terms, not to i3_rhs (pairing
// with m . grad u_t would give i3_rhs exactly), so i3_residual stays O(1).
struct MultiplierDiagnostics {
  double I1 = 0, I2 = 0, I3 = 0;
  double closure = 0;
  double closure_rel = 0;  // |closure| / (|I1| + |I2| + |I3|)
  double I2_identity_residual = 0;
  double boundary_term = 0;
  double i3_rhs = 0;
  double i3_residual = 0;  // |I3 - i3_rhs| / max(|i3_rhs|, tiny)
};
MultiplierDiagnostics multiplier_diagnostics(const ClampedOperator& op, const DensityField& rho,
                                             const Trajectory& traj, double gamma);

}  // namespace biwave
