#include <cmath>
#include <stdexcept>

#include "biwave/inversion.hpp"
#include "doctest.h"

using namespace biwave;

namespace {

std::shared_ptr<const Grid> square(int n) {
  return build_grid_shared(2, {1.0, 1.0}, {n, n}, {0.5, 0.5});
}

Inclusion center_disk(double radius = 0.2) {
  Inclusion inc;
  inc.kind = Inclusion::Kind::Disk;
  inc.center = {0.5, 0.5};
  inc.radius = radius;
  return inc;
}

}  // namespace

TEST_CASE("difference system reproduces the independent pair to round-off") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho1 = make_density(*g, 1.0, 2.0, center_disk());
  const DensityField rho2 = make_density(*g, 1.0);
  const InitialData d = make_bump(*g);
  const StabilityReport rep = difference_experiment(op, rho1, d, rho2, d, 0.5, 0.5, 2e-3);
  CHECK(rep.rho_diff_inf == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rep.f_diff_H4 == 0.0);
  CHECK(rep.g_diff_L2 == 0.0);
  CHECK(rep.E0_diff == 0.0);
  CHECK(rep.J > 0.0);
  // The co-evolved difference matches u1 - u2 to solver round-off, far below
  // the discretization-level tolerance.
  CHECK(rep.cross_check_rel <= 1e-9);
  CHECK(rep.uniform_bound_ok);
  CHECK(rep.uniform_bound_margin <= 0.0);
  CHECK(rep.M_observed > 0.0);
  CHECK(rep.ratio_density > 0.0);
  CHECK(rep.ratio_initial_defined);  // g1 = g2 here
}

TEST_CASE("identical parameters give a silent difference system") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d = make_bump(*g);
  const StabilityReport rep = difference_experiment(op, rho, d, rho, d, 0.0, 0.2, 2e-3);
  CHECK(rep.rho_diff_inf == 0.0);
  CHECK(rep.J <= 1e-20);
  CHECK(rep.ratio_density == 0.0);
  CHECK(rep.ratio_initial == 0.0);
}

TEST_CASE("initial-data difference drives the ratios when densities agree") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d1 = make_bump(*g, 1.0);
  const InitialData d2 = make_bump(*g, 0.5);
  const StabilityReport rep = difference_experiment(op, rho, d1, rho, d2, 1.0, 0.5, 2e-3);
  CHECK(rep.rho_diff_inf == 0.0);
  CHECK(rep.f_diff_H4 > 0.0);
  CHECK(rep.g_diff_L2 == 0.0);
  CHECK(rep.ratio_initial_defined);
  CHECK(rep.ratio_initial > 0.0);
  CHECK(std::isfinite(rep.ratio_initial));
  CHECK(rep.E0_diff > 0.0);
  CHECK(rep.cross_check_rel <= 1e-9);
}

TEST_CASE("velocity mismatch leaves the initial-data ratio undefined") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d1 = make_bump(*g);
  InitialData d2 = make_bump(*g);
  d2.g = 0.1 * d2.f;  // clamped velocity, different from d1's zero
  const StabilityReport rep = difference_experiment(op, rho, d1, rho, d2, 0.0, 0.2, 2e-3);
  CHECK(rep.g_diff_L2 > 0.0);
  CHECK_FALSE(rep.ratio_initial_defined);
}

TEST_CASE("stability scan covers the contrast-gamma grid") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho2 = make_density(*g, 1.0);
  const InitialData d = make_bump(*g);
  std::vector<DensityField> contrasts;
  for (double c : {0.5, 1.0}) contrasts.push_back(make_density(*g, 1.0, 1.0 + c, center_disk()));
  const auto reports = stability_scan(op, rho2, d, contrasts, {0.0, 1.0}, 0.3, 2e-3);
  REQUIRE(reports.size() == 4);
  for (const auto& rep : reports) {
    CHECK(rep.J > 0.0);
    CHECK(std::isfinite(rep.ratio_density));
    CHECK(rep.ratio_density > 0.0);
    CHECK(rep.uniform_bound_ok);
  }
  CHECK_THROWS_AS(stability_scan(op, rho2, d, {}, {0.0}, 0.3, 2e-3), std::invalid_argument);
}

TEST_CASE("record misfit is a norm on matching records") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const InitialData d = make_bump(*g);
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 2e-3;
  const SimulationResult a = simulate(op, rho, d, o);
  CHECK(record_misfit(*g, a.record, a.record) == 0.0);
  const DensityField rho_b = make_density(*g, 1.0, 1.5, center_disk());
  const SimulationResult b = simulate(op, rho_b, d, o);
  const double m = record_misfit(*g, a.record, b.record);
  CHECK(m > 0.0);
  CHECK(record_misfit(*g, b.record, a.record) == doctest::Approx(m).epsilon(1e-14));
}

TEST_CASE("fine-grid records restrict onto the coarse boundary") {
  auto gc = square(17);
  auto gf = square(33);
  const ClampedOperator oc = make_clamped_operator(gc);
  const ClampedOperator of = make_clamped_operator(gf);
  const DensityField rc = make_density(*gc, 1.0);
  const DensityField rf = make_density(*gf, 1.0);
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 2e-3;
  const SimulationResult coarse = simulate(oc, rc, make_bump(*gc), o);
  const SimulationResult fine = simulate(of, rf, make_bump(*gf), o);

  // Restricting a record to its own grid is the identity.
  const BoundaryRecord same = restrict_record(*gc, *gc, coarse.record);
  CHECK((same.lap - coarse.record.lap).norm() == 0.0);
  CHECK(same.J == doctest::Approx(coarse.record.J).epsilon(1e-12));

  const BoundaryRecord down = restrict_record(*gf, *gc, fine.record);
  CHECK(down.lap.rows() == gc->n_boundary());
  CHECK(down.lap.cols() == coarse.record.lap.cols());
  // The restricted fine traces differ from the coarse-run traces only at
  // discretization level. Boundary traces are one-sided extrapolations, the
  // least-resolved quantities in the scheme, so the inter-resolution mismatch
  // sits around 15% of J at h = 1/16 — small against the O(1) signal but far
  // from round-off.
  const double rel = record_misfit(*gc, down, coarse.record) / coarse.record.J;
  CHECK(rel < 0.25);
  CHECK(rel > 1e-6);

  auto skew = build_grid_shared(2, {1.0, 1.0}, {18, 18}, {0.5, 0.5});
  CHECK_THROWS_AS(restrict_record(*gf, *skew, fine.record), std::invalid_argument);
}

TEST_CASE("trace noise scales linearly under common random numbers") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 2e-3;
  const SimulationResult res = simulate(op, rho, make_bump(*g), o);
  const BoundaryRecord n1 = add_trace_noise(*g, res.record, 0.01, 42);
  const BoundaryRecord n2 = add_trace_noise(*g, res.record, 0.02, 42);
  const Eigen::MatrixXd d1 = n1.lap - res.record.lap;
  const Eigen::MatrixXd d2 = n2.lap - res.record.lap;
  CHECK(d1.norm() > 0.0);
  CHECK((d2 - 2.0 * d1).norm() <= 1e-12 * d2.norm());
  // Zero level is the identity.
  const BoundaryRecord n0 = add_trace_noise(*g, res.record, 0.0, 42);
  CHECK((n0.lap - res.record.lap).norm() == 0.0);
  CHECK(n0.J == doctest::Approx(res.record.J).epsilon(1e-12));
}

TEST_CASE("scalar density recovery finds the true contrast") {
  auto g = square(13);
  const ClampedOperator op = make_clamped_operator(g);
  const Inclusion inc = center_disk(0.22);
  const InitialData d = make_bump(*g);
  const double gamma = 0.5, T = 0.3, dt = 4e-3;
  SimulateOptions o;
  o.T = T;
  o.dt = dt;
  o.gamma = gamma;
  const DensityField truth = make_density(*g, 1.0, 2.0, inc);
  const SimulationResult obs = simulate(op, truth, d, o);
  const DensityRecovery rec =
      reconstruct_density(op, obs.record, 1.0, inc, d, gamma, T, dt, 1.4, 2.6, 5e-3);
  CHECK(std::abs(rec.rho1_hat - 2.0) <= 1e-2);
  // The minimiser cannot land exactly on the truth, but its misfit must be
  // far below the misfit at the bracket ends.
  REQUIRE(!rec.evaluations.empty());
  CHECK(rec.misfit_at_hat < 1e-3 * rec.evaluations.front()[1]);
  CHECK(rec.unimodal);
  CHECK(rec.warnings.empty());
  CHECK(rec.evaluations.size() >= 5);
}

TEST_CASE("modal recovery is exact on basis data and rejects bad arguments") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const auto modes = spectrum(op, rho, 3);
  const Eigen::VectorXd f = 0.8 * modes[0].shape - 0.3 * modes[2].shape;
  SimulateOptions o;
  o.T = 0.3;
  o.dt = 2e-3;
  const SimulationResult obs = simulate(op, rho, make_mode_data(*g, f), o);
  const InitialRecovery rec = reconstruct_initial(op, rho, obs.record, 0.0, 0.3, 2e-3, 3, 1e-12);
  CHECK(rec.coeffs.size() == 3);
  CHECK(rec.coeffs[0] == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(std::abs(rec.coeffs[1]) <= 1e-6);
  CHECK(rec.coeffs[2] == doctest::Approx(-0.3).epsilon(1e-6));
  CHECK(rec.relative_residual <= 1e-6);
  CHECK_FALSE(rec.rank_deficient);
  CHECK_THROWS_AS(reconstruct_initial(op, rho, obs.record, 0.0, 0.3, 2e-3, 0, 1e-12),
                  std::invalid_argument);
}

TEST_CASE("boundary records are linear in the initial data") {
  auto g = square(17);
  const ClampedOperator op = make_clamped_operator(g);
  const DensityField rho = make_density(*g, 1.0);
  const auto modes = spectrum(op, rho, 2);
  SimulateOptions o;
  o.T = 0.2;
  o.dt = 2e-3;
  o.gamma = 1.0;
  const SimulationResult ra = simulate(op, rho, make_mode_data(*g, modes[0].shape), o);
  const SimulationResult rb = simulate(op, rho, make_mode_data(*g, modes[1].shape), o);
  const Eigen::VectorXd combo = 2.0 * modes[0].shape - 0.5 * modes[1].shape;
  const SimulationResult rc = simulate(op, rho, make_mode_data(*g, combo), o);
  const Eigen::MatrixXd expect_lap = 2.0 * ra.record.lap - 0.5 * rb.record.lap;
  const Eigen::MatrixXd expect_nlap = 2.0 * ra.record.nlap - 0.5 * rb.record.nlap;
  CHECK((rc.record.lap - expect_lap).norm() <= 1e-10 * expect_lap.norm());
  CHECK((rc.record.nlap - expect_nlap).norm() <= 1e-10 * expect_nlap.norm());
}
