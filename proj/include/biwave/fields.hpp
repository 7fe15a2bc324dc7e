#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "biwave/grid.hpp"

namespace biwave {

// Shape of the density inclusion: a disk in 2D, a subinterval in 1D.
struct Inclusion {
  enum class Kind { None, Disk, Interval };
  Kind kind = Kind::None;
  std::array<double, 2> center{0, 0};  // disk
  double radius = 0.0;                 // disk
  double lo = 0.0, hi = 0.0;           // interval
};

// Piecewise-constant density rho = rho0 + (rho1 - rho0) * indicator(inclusion),
// sampled nodewise, together with its exact bounds.
struct DensityField {
  Eigen::VectorXd values;
  double rho0 = 1.0, rho1 = 1.0;
  double rho_min = 1.0, rho_max = 1.0;
  Inclusion inclusion;
};

// Constant density rho0 everywhere.
DensityField make_density(const Grid& grid, double rho0);

// Density with one inclusion of value rho1. The inclusion must lie strictly
// inside the domain and match the grid dimension; a zero-radius disk or empty
// interval degenerates to the constant field. Throws std::invalid_argument on
// non-positive values or an inclusion escaping the domain.
DensityField make_density(const Grid& grid, double rho0, double rho1, const Inclusion& inc);

// Initial displacement/velocity pair. Fields are stored on all nodes; clamped
// data vanishes on the boundary and has (to the scheme's order) vanishing
// normal derivative there. `bilap_compat` records whether the family satisfies
// the fourth-order boundary compatibility analytically (eigenmodes do, the
// polynomial bump does not); it is family metadata, not an enforced check.
struct InitialData {
  Eigen::VectorXd f, g;
  std::string family = "custom";
  bool bilap_compat = false;
};

// f = amplitude * prod_a (x_a (L_a - x_a))^2 / (L_a/2)^4, g = 0. Peak value is
// `amplitude` at the domain center; f and its gradient vanish analytically on
// the boundary.
InitialData make_bump(const Grid& grid, double amplitude = 1.0);

// Seeded random clamped data: a low-degree tensor polynomial with U[-1,1]
// coefficients multiplied by the squared-bump mask, rescaled to the requested
// sup norm. Deterministic in (seed, degree, grid).
InitialData make_random_data(const Grid& grid, std::uint64_t seed, int degree = 3,
                             double amplitude = 1.0);

// Wraps a precomputed eigenmode (or any clamped shape) as initial data with
// zero velocity.
InitialData make_mode_data(const Grid& grid, const Eigen::VectorXd& mode, double scale = 1.0);

struct AdmissibilityReport {
  bool ok = true;
  std::vector<std::string> violations;  // one human-readable line per failed condition
};

// Checks 0 < rho everywhere and within the declared bounds, f = g = 0 on the
// boundary within tol * sup-norm, and vanishing discrete normal derivatives of
// f and g at every boundary node. The derivative is measured with a one-sided
// five-point formula (exact for quartics, so the polynomial bump passes at
// round-off); its threshold is floored at h^2 times the wall trace of the
// third normal derivative, the consistency-order defect that non-polynomial
// clamped data (eigenmodes) necessarily carries. Fields with a genuinely
// nonzero wall slope exceed the floor by orders of magnitude and are rejected.
AdmissibilityReport check_admissible(const Grid& grid, const DensityField& rho,
                                     const InitialData& data, double tol = 1e-12);

}  // namespace biwave
