#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "biwave/inversion.hpp"
#include "biwave/version.hpp"

namespace py = pybind11;
using namespace biwave;

PYBIND11_MODULE(_biwave, m) {
  m.doc() = "Clamped-plate wave laboratory: grids, spectra, simulation, inversion";
  m.attr("__version__") = BIWAVE_VERSION;

  py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
      .def_readonly("dim", &Grid::dim)
      .def_readonly("n", &Grid::n)
      .def_readonly("extents", &Grid::extents)
      .def_readonly("h", &Grid::h)
      .def_readonly("x0", &Grid::x0)
      .def_readonly("n_nodes", &Grid::n_nodes)
      .def_readonly("cell", &Grid::cell)
      .def_readonly("diam", &Grid::diam)
      .def_readonly("c0", &Grid::c0)
      .def("n_interior", &Grid::n_interior)
      .def("n_boundary", &Grid::n_boundary)
      .def("coord", &Grid::coord, py::arg("node"))
      .def("is_boundary", &Grid::is_boundary, py::arg("node"));

  m.def(
      "build_grid",
      [](int dim, std::array<double, 2> extents, std::array<int, 2> nodes,
         std::optional<std::array<double, 2>> x0) {
        std::array<double, 2> base = x0 ? *x0
                                        : std::array<double, 2>{0.5 * extents[0],
                                                                dim == 2 ? 0.5 * extents[1] : 0.0};
        return std::make_shared<Grid>(build_grid(dim, extents, nodes, base));
      },
      py::arg("dim"), py::arg("extents"), py::arg("nodes"), py::arg("x0") = std::nullopt);
  m.def("min_observation_time", &min_observation_time, py::arg("grid"), py::arg("rho_min"));

  py::class_<Inclusion>(m, "Inclusion");
  m.def(
      "disk_inclusion",
      [](std::array<double, 2> center, double radius) {
        Inclusion inc;
        inc.kind = Inclusion::Kind::Disk;
        inc.center = center;
        inc.radius = radius;
        return inc;
      },
      py::arg("center"), py::arg("radius"));
  m.def(
      "interval_inclusion",
      [](double lo, double hi) {
        Inclusion inc;
        inc.kind = Inclusion::Kind::Interval;
        inc.lo = lo;
        inc.hi = hi;
        return inc;
      },
      py::arg("lo"), py::arg("hi"));

  py::class_<DensityField>(m, "DensityField")
      .def_readonly("values", &DensityField::values)
      .def_readonly("rho0", &DensityField::rho0)
      .def_readonly("rho1", &DensityField::rho1)
      .def_readonly("rho_min", &DensityField::rho_min)
      .def_readonly("rho_max", &DensityField::rho_max);
  m.def(
      "make_density", [](const Grid& g, double rho0) { return make_density(g, rho0); },
      py::arg("grid"), py::arg("rho0"));
  m.def(
      "make_density",
      [](const Grid& g, double rho0, double rho1, const Inclusion& inc) {
        return make_density(g, rho0, rho1, inc);
      },
      py::arg("grid"), py::arg("rho0"), py::arg("rho1"), py::arg("inclusion"));

  py::class_<InitialData>(m, "InitialData")
      .def_readonly("f", &InitialData::f)
      .def_readonly("g", &InitialData::g)
      .def_readonly("family", &InitialData::family)
      .def_readonly("bilap_compat", &InitialData::bilap_compat);
  m.def("make_bump", &make_bump, py::arg("grid"), py::arg("amplitude") = 1.0);
  m.def("make_random_data", &make_random_data, py::arg("grid"), py::arg("seed"),
        py::arg("degree") = 3, py::arg("amplitude") = 1.0);
  m.def("make_mode_data", &make_mode_data, py::arg("grid"), py::arg("mode"),
        py::arg("scale") = 1.0);
  m.def(
      "make_data",
      [](Eigen::VectorXd f, Eigen::VectorXd g) {
        InitialData d;
        d.f = std::move(f);
        d.g = std::move(g);
        return d;
      },
      py::arg("f"), py::arg("g"));

  py::class_<AdmissibilityReport>(m, "AdmissibilityReport")
      .def_readonly("ok", &AdmissibilityReport::ok)
      .def_readonly("violations", &AdmissibilityReport::violations);
  m.def("check_admissible", &check_admissible, py::arg("grid"), py::arg("rho"), py::arg("data"),
        py::arg("tol") = 1e-12);

  py::class_<ClampedOperator>(m, "ClampedOperator");
  m.def(
      "make_operator", [](std::shared_ptr<Grid> g) { return make_clamped_operator(g); },
      py::arg("grid"), py::keep_alive<0, 1>());

  py::class_<Mode>(m, "Mode")
      .def_readonly("eigenvalue", &Mode::lambda)
      .def_readonly("shape", &Mode::shape);
  m.def("spectrum", &spectrum, py::arg("op"), py::arg("rho"), py::arg("k"));
  m.def("eigenmode_data", &eigenmode_data, py::arg("op"), py::arg("rho"), py::arg("k"));

  py::class_<EnergyValue>(m, "EnergyValue")
      .def_readonly("kinetic", &EnergyValue::kinetic)
      .def_readonly("bending", &EnergyValue::bending)
      .def_readonly("E", &EnergyValue::E)
      .def_readonly("state_norm_sq", &EnergyValue::state_norm_sq)
      .def_readonly("graph_norm_sq", &EnergyValue::graph_norm_sq);
  m.def(
      "energy",
      [](const ClampedOperator& op, const DensityField& rho, const Eigen::VectorXd& u,
         const Eigen::VectorXd& v) { return energy(op, rho, u, v); },
      py::arg("op"), py::arg("rho"), py::arg("u"), py::arg("v"));
  m.def("default_dt", &default_dt, py::arg("grid"));

  py::class_<BoundaryRecord>(m, "BoundaryRecord")
      .def_readonly("times", &BoundaryRecord::times)
      .def_readonly("lap", &BoundaryRecord::lap)
      .def_readonly("nlap", &BoundaryRecord::nlap)
      .def_readonly("J", &BoundaryRecord::J);

  m.def(
      "simulate",
      [](const ClampedOperator& op, const DensityField& rho, const InitialData& data, double T,
         double dt, double gamma, int snapshot_stride, bool record_traces) {
        SimulateOptions opt;
        opt.T = T;
        opt.dt = dt;
        opt.gamma = gamma;
        opt.snapshot_stride = snapshot_stride;
        opt.record_traces = record_traces;
        const SimulationResult res = simulate(op, rho, data, opt);
        py::dict out;
        out["times"] = res.energy.times;
        out["E"] = res.energy.E;
        out["dissipated"] = res.energy.dissipated;
        out["state_norm"] = res.energy.state_norm;
        out["J"] = res.record.J;
        out["record"] = res.record;
        out["final_t"] = res.final.t;
        out["final_u"] = res.final.u;
        out["final_v"] = res.final.v;
        out["dt"] = res.dt;
        out["steps"] = res.steps;
        return out;
      },
      py::arg("op"), py::arg("rho"), py::arg("data"), py::arg("T"), py::arg("dt") = 0.0,
      py::arg("gamma") = 0.0, py::arg("snapshot_stride") = 0, py::arg("record_traces") = true);

  py::class_<ObservabilityReport>(m, "ObservabilityReport")
      .def_readonly("T", &ObservabilityReport::T)
      .def_readonly("gamma", &ObservabilityReport::gamma)
      .def_readonly("E0", &ObservabilityReport::E0)
      .def_readonly("J", &ObservabilityReport::J)
      .def_readonly("ratio", &ObservabilityReport::ratio)
      .def_readonly("T_min", &ObservabilityReport::T_min)
      .def_readonly("time_condition_met", &ObservabilityReport::time_condition_met);
  m.def("observability_ratio", &observability_ratio, py::arg("op"), py::arg("rho"),
        py::arg("gamma"), py::arg("data"), py::arg("T"), py::arg("dt"));

  py::class_<ConstantEstimate>(m, "ConstantEstimate")
      .def_readonly("C_obs", &ConstantEstimate::C_obs)
      .def_readonly("per_datum", &ConstantEstimate::per_datum);
  m.def("estimate_constant", &estimate_constant, py::arg("op"), py::arg("rho"), py::arg("gamma"),
        py::arg("ensemble"), py::arg("T"), py::arg("dt"));

  py::class_<StabilityReport>(m, "StabilityReport")
      .def_readonly("rho_diff_inf", &StabilityReport::rho_diff_inf)
      .def_readonly("f_diff_H4", &StabilityReport::f_diff_H4)
      .def_readonly("g_diff_L2", &StabilityReport::g_diff_L2)
      .def_readonly("E0_diff", &StabilityReport::E0_diff)
      .def_readonly("J", &StabilityReport::J)
      .def_readonly("gamma", &StabilityReport::gamma)
      .def_readonly("T", &StabilityReport::T)
      .def_readonly("M_observed", &StabilityReport::M_observed)
      .def_readonly("ratio_density", &StabilityReport::ratio_density)
      .def_readonly("ratio_initial", &StabilityReport::ratio_initial)
      .def_readonly("ratio_initial_defined", &StabilityReport::ratio_initial_defined)
      .def_readonly("cross_check_rel", &StabilityReport::cross_check_rel)
      .def_readonly("uniform_bound_margin", &StabilityReport::uniform_bound_margin)
      .def_readonly("uniform_bound_ok", &StabilityReport::uniform_bound_ok)
      .def_readonly("lhs_bilap_f", &StabilityReport::lhs_bilap_f)
      .def_readonly("rhs_accel", &StabilityReport::rhs_accel)
      .def_readonly("C1_empirical", &StabilityReport::C1_empirical)
      .def_readonly("C1_defined", &StabilityReport::C1_defined);
  m.def("difference_experiment", &difference_experiment, py::arg("op"), py::arg("rho1"),
        py::arg("data1"), py::arg("rho2"), py::arg("data2"), py::arg("gamma"), py::arg("T"),
        py::arg("dt"));

  m.def("record_misfit", &record_misfit, py::arg("grid"), py::arg("a"), py::arg("b"));
  m.def("add_trace_noise", &add_trace_noise, py::arg("grid"), py::arg("record"), py::arg("level"),
        py::arg("seed"));

  py::class_<DensityRecovery>(m, "DensityRecovery")
      .def_readonly("rho1_hat", &DensityRecovery::rho1_hat)
      .def_readonly("misfit_at_hat", &DensityRecovery::misfit_at_hat)
      .def_readonly("evaluations", &DensityRecovery::evaluations)
      .def_readonly("unimodal", &DensityRecovery::unimodal)
      .def_readonly("warnings", &DensityRecovery::warnings);
  m.def("reconstruct_density", &reconstruct_density, py::arg("op"), py::arg("observed"),
        py::arg("rho0"), py::arg("inclusion"), py::arg("data"), py::arg("gamma"), py::arg("T"),
        py::arg("dt"), py::arg("lo"), py::arg("hi"), py::arg("tol"));

  py::class_<InitialRecovery>(m, "InitialRecovery")
      .def_readonly("coeffs", &InitialRecovery::coeffs)
      .def_readonly("f_hat", &InitialRecovery::f_hat)
      .def_readonly("residual", &InitialRecovery::residual)
      .def_readonly("relative_residual", &InitialRecovery::relative_residual)
      .def_readonly("rank_deficient", &InitialRecovery::rank_deficient);
  m.def("reconstruct_initial", &reconstruct_initial, py::arg("op"), py::arg("rho"),
        py::arg("observed"), py::arg("gamma"), py::arg("T"), py::arg("dt"), py::arg("k"),
        py::arg("reg"));
}
