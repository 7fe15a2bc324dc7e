#include <cmath>
#include <stdexcept>

#include "biwave/observability.hpp"
#include "doctest.h"

using namespace biwave;

namespace {

std::shared_ptr<const Grid> square(int n) {
  return build_grid_shared(2, {1.0, 1.0}, {n, n}, {0.5, 0.5});
}

}  // namespace

TEST_CASE("recomputed observation functional matches the running one") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d = make_bump(*g);
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 1e-3;
  o.gamma = 0.5;
  const SimulationResult res = simulate(op, rho, d, o);
  const double J = boundary_functional(*g, res.record);
  CHECK(J == doctest::Approx(res.record.J).epsilon(1e-12));
  CHECK(J > 0.0);
}

TEST_CASE("scaling the traces scales the functional quadratically") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d = make_bump(*g);
  SimulateOptions o;
  o.T = 0.1;
  o.dt = 1e-3;
  const SimulationResult res = simulate(op, rho, d, o);
  BoundaryRecord doubled = res.record;
  doubled.lap *= 2.0;
  doubled.nlap *= 2.0;
  CHECK(boundary_functional(*g, doubled) ==
        doctest::Approx(4.0 * boundary_functional(*g, res.record)).epsilon(1e-12));
}

TEST_CASE("observability report fields are coherent") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d = eigenmode_data(op, rho, 1);
  const double T_min = min_observation_time(*g, rho.rho_min);
  const ObservabilityReport rep = observability_ratio(op, rho, 1.0, d, 1.1 * T_min, 2e-3);
  CHECK(rep.gamma == 1.0);
  CHECK(rep.T_min == doctest::Approx(T_min).epsilon(1e-13));
  CHECK(rep.time_condition_met);
  CHECK(rep.E0 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.J > 0.0);
  CHECK(rep.ratio == doctest::Approx(rep.E0 / ((1.0 + rep.gamma) * rep.J)).epsilon(1e-12));
  // A horizon below the minimal time is reported as such.
  const ObservabilityReport small = observability_ratio(op, rho, 1.0, d, 0.2, 2e-3);
  CHECK_FALSE(small.time_condition_met);
}

TEST_CASE("longer observation cannot shrink the functional") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d = eigenmode_data(op, rho, 2);
  const double T_min = min_observation_time(*g, rho.rho_min);
  const ObservabilityReport r1 = observability_ratio(op, rho, 0.5, d, 1.1 * T_min, 2e-3);
  const ObservabilityReport r2 = observability_ratio(op, rho, 0.5, d, 2.2 * T_min, 2e-3);
  // J is a time integral of nonnegative quantities, so it grows with T and
  // the per-datum ratio cannot increase.
  CHECK(r2.J >= r1.J * (1.0 - 1e-10));
  CHECK(r2.ratio <= r1.ratio * (1.0 + 1e-10));
}

TEST_CASE("ensemble constant estimate takes the worst member") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  std::vector<InitialData> ensemble;
  for (int k = 1; k <= 3; ++k) ensemble.push_back(eigenmode_data(op, rho, k));
  const double T = 1.1 * min_observation_time(*g, rho.rho_min);
  const ConstantEstimate est = estimate_constant(op, rho, 0.0, ensemble, T, 2e-3);
  REQUIRE(est.per_datum.size() == 3);
  double worst = 0;
  for (const auto& rep : est.per_datum) {
    CHECK(rep.ratio > 0.0);
    CHECK(std::isfinite(rep.ratio));
    worst = std::max(worst, rep.ratio);
  }
  CHECK(est.C_obs == doctest::Approx(worst).epsilon(1e-14));
  CHECK_THROWS_AS(estimate_constant(op, rho, 0.0, {}, T, 2e-3), std::invalid_argument);
}

TEST_CASE("multiplier closure shrinks under joint refinement") {
  // Same eigenmode run on (9^2, dt=4e-3) and its (h, dt)-halved companion.
  auto run = [](int n, double dt) {
    auto g = square(n);
    const ClampedOperator op = make_clamped_operator(g);
    const DensityField rho = make_density(*g, 1.0);
    const InitialData d = eigenmode_data(op, rho, 1);
    SimulateOptions o;
    o.T = 0.4;
    o.dt = dt;
    o.gamma = 1.0;
    o.snapshot_stride = 1;
    const SimulationResult res = simulate(op, rho, d, o);
    return multiplier_diagnostics(op, rho, res.snapshots, o.gamma);
  };
  const MultiplierDiagnostics coarse = run(9, 4e-3);
  const MultiplierDiagnostics fine = run(17, 2e-3);
  CHECK(coarse.closure_rel > 0.0);
  CHECK(fine.closure_rel > 0.0);
  CHECK(coarse.closure_rel / fine.closure_rel >= 2.0);
  // The integration-by-parts form of I2 agrees to the accuracy of the wall
  // traces, which converge at first order only: the residual shrinks with
  // resolution (0.75 -> 0.59 -> 0.35 -> 0.19 on 9/17/33/65) but stays O(1)
  // on coarse grids.
  CHECK(fine.I2_identity_residual < coarse.I2_identity_residual);
  CHECK(fine.I2_identity_residual < 1.0);
}

TEST_CASE("a gamma-zero run has no damping integral") {
  auto g = square(9);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d = eigenmode_data(op, rho, 1);
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 4e-3;
  o.gamma = 0.0;
  o.snapshot_stride = 1;
  const SimulationResult res = simulate(op, rho, d, o);
  const MultiplierDiagnostics diag = multiplier_diagnostics(op, rho, res.snapshots, 0.0);
  CHECK(diag.I3 == 0.0);
  CHECK(diag.i3_rhs == 0.0);
  CHECK(diag.i3_residual == 0.0);
}

TEST_CASE("multiplier diagnostics reject broken trajectories") {
  auto g = square(9);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d = eigenmode_data(op, rho, 1);
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 4e-3;
  o.snapshot_stride = 1;
  const SimulationResult res = simulate(op, rho, d, o);

  Trajectory jittered = res.snapshots;
  jittered.times[5] += 0.3 * jittered.dt;  // non-uniform sampling
  CHECK_THROWS_AS(multiplier_diagnostics(op, rho, jittered, 0.0), std::invalid_argument);

  Trajectory stub;
  stub.dt = 1e-3;
  stub.times = {0.0, 1e-3};
  stub.u = {d.f, d.f};
  stub.v = {d.g, d.g};
  CHECK_THROWS_AS(multiplier_diagnostics(op, rho, stub, 0.0), std::invalid_argument);
}
