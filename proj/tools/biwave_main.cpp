#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biwave/inversion.hpp"
#include "biwave/io.hpp"

namespace {

using namespace biwave;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;  // --out override; empty = config / default
  int threads = 1;
  bool fine_data = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

const json& require_block(const json& cfg, const char* name) {
  if (!cfg.contains(name))
    throw std::runtime_error(std::string("config: missing block '") + name + "'");
  return cfg.at(name);
}

double require_number(const json& block, const char* block_name, const char* key) {
  if (!block.contains(key) || !block.at(key).is_number())
    throw std::runtime_error(std::string("config: ") + block_name + "." + key +
                             " must be a number");
  return block.at(key).get<double>();
}

std::vector<double> number_list(const json& block, const char* block_name, const char* key,
                                std::vector<double> fallback) {
  if (!block.contains(key)) return fallback;
  if (!block.at(key).is_array())
    throw std::runtime_error(std::string("config: ") + block_name + "." + key +
                             " must be an array of numbers");
  return block.at(key).get<std::vector<double>>();
}

std::shared_ptr<const Grid> grid_from_config(const json& cfg) {
  const json& gj = require_block(cfg, "grid");
  const int dim = gj.value("dimension", 2);
  if (dim != 1 && dim != 2)
    throw std::runtime_error("config: grid.dimension must be 1 or 2");
  const auto ext = number_list(gj, "grid", "extents", {});
  if (static_cast<int>(ext.size()) != dim)
    throw std::runtime_error("config: grid.extents must list one length per axis");
  if (!gj.contains("nodes") || !gj.at("nodes").is_array() ||
      static_cast<int>(gj.at("nodes").size()) != dim)
    throw std::runtime_error("config: grid.nodes must list one node count per axis");
  const auto nodes = gj.at("nodes").get<std::vector<int>>();

  std::array<double, 2> extents{ext[0], dim == 2 ? ext[1] : 0.0};
  std::array<int, 2> n{nodes[0], dim == 2 ? nodes[1] : 1};
  std::array<double, 2> x0{0.5 * extents[0], dim == 2 ? 0.5 * extents[1] : 0.0};
  if (gj.contains("x0")) {
    const auto x = number_list(gj, "grid", "x0", {});
    if (static_cast<int>(x.size()) != dim)
      throw std::runtime_error("config: grid.x0 must list one coordinate per axis");
    x0 = {x[0], dim == 2 ? x[1] : 0.0};
  }
  return build_grid_shared(dim, extents, n, x0);
}

Inclusion inclusion_from_config(const json& dj, int dim) {
  const json& ij = dj.at("inclusion");
  Inclusion inc;
  const std::string kind = ij.value("kind", "");
  if (kind == "disk") {
    if (dim != 1) {
      const auto c = number_list(ij, "density.inclusion", "center", {});
      if (c.size() != 2)
        throw std::runtime_error("config: density.inclusion.center must have 2 entries");
      inc.kind = Inclusion::Kind::Disk;
      inc.center = {c[0], c[1]};
      inc.radius = require_number(ij, "density.inclusion", "radius");
      return inc;
    }
    throw std::runtime_error("config: a disk inclusion needs a 2D grid");
  }
  if (kind == "interval") {
    inc.kind = Inclusion::Kind::Interval;
    inc.lo = require_number(ij, "density.inclusion", "lo");
    inc.hi = require_number(ij, "density.inclusion", "hi");
    return inc;
  }
  throw std::runtime_error("config: density.inclusion.kind must be 'disk' or 'interval'");
}

DensityField density_from_config(const Grid& grid, const json& cfg) {
  const json& dj = require_block(cfg, "density");
  const double rho0 = require_number(dj, "density", "rho0");
  if (!dj.contains("rho1")) return make_density(grid, rho0);
  if (!dj.contains("inclusion"))
    throw std::runtime_error("config: density.rho1 given without density.inclusion");
  return make_density(grid, rho0, require_number(dj, "density", "rho1"),
                      inclusion_from_config(dj, grid.dim));
}

InitialData data_from_block(const json& ij, const char* block_name, const ClampedOperator& op,
                            const DensityField& rho, const CommonOpts& co) {
  const Grid& grid = *op.grid;
  const std::string family = ij.value("family", "bump");
  if (family == "bump") return make_bump(grid, ij.value("amplitude", 1.0));
  if (family == "eigenmode") return eigenmode_data(op, rho, ij.value("mode", 1));
  if (family == "random") {
    const std::uint64_t seed =
        co.seed_given ? co.seed : ij.value("seed", std::uint64_t{1});
    return make_random_data(grid, seed, ij.value("degree", 3), ij.value("amplitude", 1.0));
  }
  throw std::runtime_error(std::string("config: ") + block_name +
                           ".family must be 'bump', 'eigenmode', or 'random'");
}

InitialData data_from_config(const json& cfg, const ClampedOperator& op, const DensityField& rho,
                             const CommonOpts& co) {
  return data_from_block(require_block(cfg, "initial_data"), "initial_data", op, rho, co);
}

struct Dynamics {
  double gamma = 0, T = 1, dt = 0;
  int snapshot_stride = 0;
};

Dynamics dynamics_from_config(const json& cfg, const Grid& grid) {
  const json& dj = require_block(cfg, "dynamics");
  Dynamics dyn;
  dyn.gamma = dj.value("gamma", 0.0);
  dyn.T = require_number(dj, "dynamics", "T");
  dyn.dt = dj.value("dt", 0.0);
  if (dyn.dt <= 0) dyn.dt = default_dt(grid);
  dyn.snapshot_stride = dj.value("snapshot_stride", 0);
  if (dyn.gamma < 0) throw std::runtime_error("config: dynamics.gamma must be >= 0");
  if (dyn.T <= 0) throw std::runtime_error("config: dynamics.T must be > 0");
  return dyn;
}

std::filesystem::path resolve_out_dir(const CommonOpts& co, const json& cfg) {
  if (!co.out_dir.empty()) return co.out_dir;
  if (cfg.contains("output") && cfg.at("output").contains("directory"))
    return cfg.at("output").at("directory").get<std::string>();
  return "biwave_out";
}

void warn_time_condition(json& manifest, const Grid& grid, const DensityField& rho, double T) {
  const double tmin = min_observation_time(grid, rho.rho_min);
  if (T <= tmin)
    manifest["warnings"].push_back("horizon T=" + fmt(T) +
                                   " does not exceed the minimal observation time T_min=" +
                                   fmt(tmin));
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must go into
// preallocated slots so the output order stays deterministic.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::future<void>> futures;
  const int workers = std::min(threads, n);
  futures.reserve(workers);
  for (int t = 0; t < workers; ++t)
    futures.push_back(std::async(std::launch::async, worker));
  for (auto& f : futures) f.get();
}

void finish_manifest(json& manifest, const std::filesystem::path& out,
                     const std::vector<std::string>& files) {
  for (const auto& f : files) manifest["outputs"].push_back(f);
  manifest["outputs"].push_back("manifest.json");
  write_json(out / "manifest.json", manifest);
}

// ---------------------------------------------------------------------------

int run_simulate(const CommonOpts& co, const json& cfg) {
  auto grid = grid_from_config(cfg);
  const ClampedOperator op = make_clamped_operator(grid);
  const DensityField rho = density_from_config(*grid, cfg);
  const InitialData data = data_from_config(cfg, op, rho, co);
  const Dynamics dyn = dynamics_from_config(cfg, *grid);
  const json& ej = cfg.contains("experiment") ? cfg.at("experiment") : json::object();

  const auto out = resolve_out_dir(co, cfg);
  std::filesystem::create_directories(out);
  json manifest = make_manifest("simulate", co.seed, co.threads, cfg);
  warn_time_condition(manifest, *grid, rho, dyn.T);

  SimulateOptions opt;
  opt.T = dyn.T;
  opt.dt = dyn.dt;
  opt.gamma = dyn.gamma;
  opt.snapshot_stride = dyn.snapshot_stride;
  const SimulationResult res = simulate(op, rho, data, opt);

  std::vector<std::string> files;
  std::vector<std::vector<double>> rows;
  rows.reserve(res.energy.times.size());
  for (size_t i = 0; i < res.energy.times.size(); ++i)
    rows.push_back({res.energy.times[i], res.energy.E[i], res.energy.dissipated[i],
                    res.energy.state_norm[i]});
  write_csv(out / "energy.csv", {"time", "E", "dissipated", "state_norm"}, rows);
  files.push_back("energy.csv");

  if (ej.value("write_traces", false)) {
    std::vector<std::string> header{"time"};
    for (int b = 0; b < grid->n_boundary(); ++b) header.push_back("lap" + std::to_string(b));
    for (int b = 0; b < grid->n_boundary(); ++b) header.push_back("nlap" + std::to_string(b));
    std::vector<std::vector<double>> trows;
    for (size_t k = 0; k < res.record.times.size(); ++k) {
      std::vector<double> row{res.record.times[k]};
      for (int b = 0; b < grid->n_boundary(); ++b) row.push_back(res.record.lap(b, k));
      for (int b = 0; b < grid->n_boundary(); ++b) row.push_back(res.record.nlap(b, k));
      trows.push_back(std::move(row));
    }
    write_csv(out / "traces.csv", header, trows);
    files.push_back("traces.csv");
  }

  if (dyn.snapshot_stride > 0) {
    const auto snap_files = write_snapshots(out, *grid, res.snapshots);
    files.insert(files.end(), snap_files.begin(), snap_files.end());
  }

  manifest["results"] = {{"steps", res.steps},
                         {"dt", res.dt},
                         {"E0", res.energy.E.front()},
                         {"E_final", res.energy.E.back()},
                         {"J", res.record.J},
                         {"dissipation_residual", dissipation_residual(res.energy)},
                         {"fitted_K", res.energy.fitted_K}};
  finish_manifest(manifest, out, files);
  return 0;
}

int run_resolvent(const CommonOpts& co, const json& cfg) {
  auto grid = grid_from_config(cfg);
  const ClampedOperator op = make_clamped_operator(grid);
  const DensityField rho = density_from_config(*grid, cfg);
  const json& ej = cfg.contains("experiment") ? cfg.at("experiment") : json::object();
  const auto lambdas = number_list(ej, "experiment", "lambdas", {0.1, 1.0, 10.0});
  const auto gammas = number_list(ej, "experiment", "gammas", {0.0, 1.0, 5.0});
  const int count = ej.value("count", 10);
  const std::uint64_t seed = co.seed_given ? co.seed : ej.value("seed", std::uint64_t{1});

  const auto out = resolve_out_dir(co, cfg);
  std::filesystem::create_directories(out);
  json manifest = make_manifest("resolvent", seed, co.threads, cfg);

  struct Job {
    double lambda, gamma;
    ContractionReport rep;
  };
  std::vector<Job> jobs;
  for (double l : lambdas)
    for (double g : gammas) jobs.push_back({l, g, {}});
  parallel_for(static_cast<int>(jobs.size()), co.threads, [&](int i) {
    jobs[i].rep = contraction_check(op, rho, jobs[i].gamma, jobs[i].lambda, count, seed);
  });

  std::vector<std::vector<double>> rows;
  double worst_bound = 0, worst_residual = 0;
  for (const Job& j : jobs) {
    rows.push_back({j.lambda, j.gamma, static_cast<double>(j.rep.count), j.rep.resolvent_bound,
                    j.rep.max_residual});
    worst_bound = std::max(worst_bound, j.rep.resolvent_bound);
    worst_residual = std::max(worst_residual, j.rep.max_residual);
  }
  write_csv(out / "resolvent.csv", {"lambda", "gamma", "count", "resolvent_bound", "max_residual"},
            rows);
  manifest["results"] = {{"worst_bound", worst_bound}, {"worst_residual", worst_residual}};
  finish_manifest(manifest, out, {"resolvent.csv"});
  return 0;
}

int run_spectrum(const CommonOpts& co, const json& cfg) {
  auto grid = grid_from_config(cfg);
  const ClampedOperator op = make_clamped_operator(grid);
  const DensityField rho = density_from_config(*grid, cfg);
  const json& ej = cfg.contains("experiment") ? cfg.at("experiment") : json::object();
  const int count = ej.value("count", 5);

  const auto out = resolve_out_dir(co, cfg);
  std::filesystem::create_directories(out);
  json manifest = make_manifest("spectrum", co.seed, co.threads, cfg);

  const auto modes = spectrum(op, rho, count);
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < modes.size(); ++k)
    rows.push_back({static_cast<double>(k + 1), modes[k].lambda, std::sqrt(modes[k].lambda)});
  write_csv(out / "spectrum.csv", {"mode", "lambda", "omega"}, rows);
  manifest["results"] = {{"lambda1", modes.front().lambda}};
  finish_manifest(manifest, out, {"spectrum.csv"});
  return 0;
}

int run_observability(const CommonOpts& co, const json& cfg) {
  auto grid = grid_from_config(cfg);
  const ClampedOperator op = make_clamped_operator(grid);
  const DensityField rho = density_from_config(*grid, cfg);
  const Dynamics dyn = dynamics_from_config(cfg, *grid);
  const json& ej = cfg.contains("experiment") ? cfg.at("experiment") : json::object();
  const int n_modes = ej.value("modes", 5);
  const auto gammas = number_list(ej, "experiment", "gammas", {dyn.gamma});
  double T = dyn.T;
  if (ej.contains("T_factor"))
    T = ej.at("T_factor").get<double>() * min_observation_time(*grid, rho.rho_min);

  const auto out = resolve_out_dir(co, cfg);
  std::filesystem::create_directories(out);
  json manifest = make_manifest("observability", co.seed, co.threads, cfg);
  warn_time_condition(manifest, *grid, rho, T);

  std::vector<InitialData> ensemble;
  for (int k = 1; k <= n_modes; ++k) ensemble.push_back(eigenmode_data(op, rho, k));

  struct Job {
    double gamma;
    int member;
    ObservabilityReport rep;
  };
  std::vector<Job> jobs;
  for (double g : gammas)
    for (int m = 0; m < n_modes; ++m) jobs.push_back({g, m, {}});
  parallel_for(static_cast<int>(jobs.size()), co.threads, [&](int i) {
    jobs[i].rep = observability_ratio(op, rho, jobs[i].gamma, ensemble[jobs[i].member], T,
                                      dyn.dt);
  });

  std::vector<std::vector<double>> rows, crows;
  for (const Job& j : jobs)
    rows.push_back({j.gamma, static_cast<double>(j.member + 1), j.rep.T, j.rep.E0, j.rep.J,
                    j.rep.ratio});
  write_csv(out / "observability.csv", {"gamma", "member", "T", "E0", "J", "ratio"}, rows);

  double cmin = 0, cmax = 0;
  bool first = true;
  for (double g : gammas) {
    double c = 0;
    for (const Job& j : jobs)
      if (j.gamma == g && j.rep.E0 > 0) c = std::max(c, j.rep.ratio);
    crows.push_back({g, c});
    cmin = first ? c : std::min(cmin, c);
    cmax = first ? c : std::max(cmax, c);
    first = false;
  }
  write_csv(out / "constants.csv", {"gamma", "C_obs"}, crows);
  manifest["results"] = {{"C_obs_min", cmin},
                         {"C_obs_max", cmax},
                         {"gamma_variation", cmin > 0 ? cmax / cmin : 0.0}};
  finish_manifest(manifest, out, {"observability.csv", "constants.csv"});
  return 0;
}

int run_multiplier(const CommonOpts& co, const json& cfg) {
  auto grid = grid_from_config(cfg);
  const ClampedOperator op = make_clamped_operator(grid);
  const DensityField rho = density_from_config(*grid, cfg);
  const InitialData data = data_from_config(cfg, op, rho, co);
  const Dynamics dyn = dynamics_from_config(cfg, *grid);

  const auto out = resolve_out_dir(co, cfg);
  std::filesystem::create_directories(out);
  json manifest = make_manifest("multiplier", co.seed, co.threads, cfg);
  warn_time_condition(manifest, *grid, rho, dyn.T);

  SimulateOptions opt;
  opt.T = dyn.T;
  opt.dt = dyn.dt;
  opt.gamma = dyn.gamma;
  opt.snapshot_stride = 1;  // the diagnostics need every step
  const SimulationResult res = simulate(op, rho, data, opt);
  const MultiplierDiagnostics d = multiplier_diagnostics(op, rho, res.snapshots, dyn.gamma);

  write_csv(out / "multiplier.csv",
            {"I1", "I2", "I3", "closure", "closure_rel", "I2_identity_residual", "boundary_term",
             "i3_rhs", "i3_residual"},
            {{d.I1, d.I2, d.I3, d.closure, d.closure_rel, d.I2_identity_residual, d.boundary_term,
              d.i3_rhs, d.i3_residual}});
  manifest["results"] = {{"closure_rel", d.closure_rel},
                         {"I2_identity_residual", d.I2_identity_residual},
                         {"i3_residual", d.i3_residual}};
  finish_manifest(manifest, out, {"multiplier.csv"});
  return 0;
}

int run_stability(const CommonOpts& co, const json& cfg) {
  auto grid = grid_from_config(cfg);
  const ClampedOperator op = make_clamped_operator(grid);
  const json& dj = require_block(cfg, "density");
  const double rho0 = require_number(dj, "density", "rho0");
  const DensityField rho2 = make_density(*grid, rho0);
  const Dynamics dyn = dynamics_from_config(cfg, *grid);
  const json& ej = require_block(cfg, "experiment");
  const auto contrasts = number_list(ej, "experiment", "contrasts", {});
  const auto gammas = number_list(ej, "experiment", "gammas", {dyn.gamma});
  if (contrasts.empty()) throw std::runtime_error("config: experiment.contrasts must be nonempty");
  if (!dj.contains("inclusion"))
    throw std::runtime_error("config: the stability scan needs density.inclusion");
  const Inclusion inc = inclusion_from_config(dj, grid->dim);

  const InitialData data1 = data_from_config(cfg, op, rho2, co);
  const InitialData data2 = ej.contains("initial_data2")
                                ? data_from_block(ej.at("initial_data2"), "experiment.initial_data2",
                                                  op, rho2, co)
                                : data1;

  const auto out = resolve_out_dir(co, cfg);
  std::filesystem::create_directories(out);
  json manifest = make_manifest("stability", co.seed, co.threads, cfg);
  warn_time_condition(manifest, *grid, rho2, dyn.T);

  struct Job {
    double contrast, gamma;
    StabilityReport rep;
  };
  std::vector<Job> jobs;
  for (double c : contrasts)
    for (double g : gammas) jobs.push_back({c, g, {}});
  parallel_for(static_cast<int>(jobs.size()), co.threads, [&](int i) {
    const DensityField rho1 = make_density(*grid, rho0, rho0 + jobs[i].contrast, inc);
    jobs[i].rep =
        difference_experiment(op, rho1, data1, rho2, data2, jobs[i].gamma, dyn.T, dyn.dt);
  });

  std::vector<std::vector<double>> rows;
  double worst_cross = 0;
  bool bounds_ok = true;
  for (const Job& j : jobs) {
    rows.push_back({j.contrast, j.gamma, j.rep.T, j.rep.rho_diff_inf, j.rep.f_diff_H4,
                    j.rep.g_diff_L2, j.rep.E0_diff, j.rep.J, j.rep.M_observed,
                    j.rep.ratio_density, j.rep.ratio_initial,
                    j.rep.ratio_initial_defined ? 1.0 : 0.0, j.rep.cross_check_rel,
                    j.rep.uniform_bound_ok ? 1.0 : 0.0, j.rep.C1_empirical});
    worst_cross = std::max(worst_cross, j.rep.cross_check_rel);
    bounds_ok = bounds_ok && j.rep.uniform_bound_ok;
  }
  write_csv(out / "stability.csv",
            {"contrast", "gamma", "T", "rho_diff_inf", "f_diff_H4", "g_diff_L2", "E0_diff", "J",
             "M_observed", "ratio_density", "ratio_initial", "ratio_initial_defined",
             "cross_check_rel", "uniform_bound_ok", "C1_empirical"},
            rows);
  if (!bounds_ok) manifest["warnings"].push_back("uniform energy bound violated in some row");
  manifest["results"] = {{"worst_cross_check_rel", worst_cross},
                         {"uniform_bounds_ok", bounds_ok}};
  finish_manifest(manifest, out, {"stability.csv"});
  return 0;
}

// Builds the 2x-refined companion of `grid` (same extents, same x0 ratio).
std::shared_ptr<const Grid> refine_grid(const Grid& grid) {
  std::array<int, 2> n{2 * (grid.n[0] - 1) + 1, grid.dim == 2 ? 2 * (grid.n[1] - 1) + 1 : 1};
  return build_grid_shared(grid.dim, grid.extents, n, grid.x0);
}

int run_invert_density(const CommonOpts& co, const json& cfg) {
  auto grid = grid_from_config(cfg);
  const ClampedOperator op = make_clamped_operator(grid);
  const json& dj = require_block(cfg, "density");
  const double rho0 = require_number(dj, "density", "rho0");
  const double true_rho1 = require_number(dj, "density", "rho1");
  if (!dj.contains("inclusion"))
    throw std::runtime_error("config: density inversion needs density.inclusion");
  const Inclusion inc = inclusion_from_config(dj, grid->dim);
  const Dynamics dyn = dynamics_from_config(cfg, *grid);
  const json& ej = require_block(cfg, "experiment");
  const auto search = number_list(ej, "experiment", "search", {});
  if (search.size() != 2)
    throw std::runtime_error("config: experiment.search must be [lo, hi]");
  const double tol = ej.value("tol", 2.5e-4);
  const auto noise_levels = number_list(ej, "experiment", "noise_levels", {0.0});
  const std::uint64_t noise_seed =
      co.seed_given ? co.seed : ej.value("noise_seed", std::uint64_t{7});

  const auto out = resolve_out_dir(co, cfg);
  std::filesystem::create_directories(out);
  json manifest = make_manifest("invert-density", noise_seed, co.threads, cfg);
  warn_time_condition(manifest, *grid, make_density(*grid, rho0), dyn.T);

  // Synthetic observation from the true contrast; --fine-data generates it on
  // the 2x-refined grid and restricts the traces to the working boundary.
  SimulateOptions opt;
  opt.T = dyn.T;
  opt.dt = dyn.dt;
  opt.gamma = dyn.gamma;
  const InitialData data = data_from_config(cfg, op, make_density(*grid, rho0), co);
  BoundaryRecord observed;
  if (co.fine_data) {
    auto fine = refine_grid(*grid);
    const ClampedOperator fine_op = make_clamped_operator(fine);
    const DensityField fine_rho = make_density(*fine, rho0, true_rho1, inc);
    const InitialData fine_data =
        data_from_block(require_block(cfg, "initial_data"), "initial_data", fine_op, fine_rho, co);
    observed =
        restrict_record(*fine, *grid, simulate(fine_op, fine_rho, fine_data, opt).record);
    manifest["warnings"].push_back("observations generated on the 2x-refined grid");
  } else {
    observed = simulate(op, make_density(*grid, rho0, true_rho1, inc), data, opt).record;
  }

  struct Level {
    double level;
    DensityRecovery rec;
  };
  std::vector<Level> levels;
  for (double l : noise_levels) levels.push_back({l, {}});
  parallel_for(static_cast<int>(levels.size()), co.threads, [&](int i) {
    const BoundaryRecord obs = add_trace_noise(*grid, observed, levels[i].level, noise_seed);
    levels[i].rec = reconstruct_density(op, obs, rho0, inc, data, dyn.gamma, dyn.T, dyn.dt,
                                        search[0], search[1], tol);
  });

  std::vector<std::vector<double>> rows;
  for (const Level& l : levels) {
    rows.push_back({l.level, l.rec.rho1_hat, std::abs(l.rec.rho1_hat - true_rho1),
                    l.rec.misfit_at_hat, static_cast<double>(l.rec.evaluations.size()),
                    l.rec.unimodal ? 1.0 : 0.0});
    for (const auto& w : l.rec.warnings)
      manifest["warnings"].push_back("noise " + fmt(l.level) + ": " + w);
  }
  write_csv(out / "recovery.csv",
            {"noise_level", "rho1_hat", "abs_error", "misfit", "evaluations", "unimodal"}, rows);

  std::vector<std::vector<double>> curve;
  auto sorted = levels.front().rec.evaluations;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& p : sorted) curve.push_back({p[0], p[1]});
  write_csv(out / "misfit_curve.csv", {"contrast", "misfit"}, curve);

  manifest["results"] = {{"true_rho1", true_rho1},
                         {"rho1_hat", levels.front().rec.rho1_hat},
                         {"abs_error", std::abs(levels.front().rec.rho1_hat - true_rho1)},
                         {"fine_data", co.fine_data}};
  finish_manifest(manifest, out, {"recovery.csv", "misfit_curve.csv"});
  return 0;
}

int run_invert_initial(const CommonOpts& co, const json& cfg) {
  auto grid = grid_from_config(cfg);
  const ClampedOperator op = make_clamped_operator(grid);
  const DensityField rho = density_from_config(*grid, cfg);
  const Dynamics dyn = dynamics_from_config(cfg, *grid);
  const json& ej = require_block(cfg, "experiment");
  const auto true_coeffs = number_list(ej, "experiment", "true_coeffs", {});
  if (true_coeffs.empty())
    throw std::runtime_error("config: experiment.true_coeffs must be nonempty");
  const int k = ej.value("modes", static_cast<int>(true_coeffs.size()));
  const double reg = ej.value("reg", 1e-10);

  const auto out = resolve_out_dir(co, cfg);
  std::filesystem::create_directories(out);
  json manifest = make_manifest("invert-initial", co.seed, co.threads, cfg);
  warn_time_condition(manifest, *grid, rho, dyn.T);

  SimulateOptions opt;
  opt.T = dyn.T;
  opt.dt = dyn.dt;
  opt.gamma = dyn.gamma;

  // Truth = the requested combination of eigenmodes, simulated either on the
  // working grid or (with --fine-data) on its 2x refinement.
  BoundaryRecord observed;
  if (co.fine_data) {
    auto fine = refine_grid(*grid);
    const ClampedOperator fine_op = make_clamped_operator(fine);
    const DensityField fine_rho =
        rho.inclusion.kind == Inclusion::Kind::None
            ? make_density(*fine, rho.rho0)
            : make_density(*fine, rho.rho0, rho.rho1, rho.inclusion);
    const auto fine_modes = spectrum(fine_op, fine_rho, static_cast<int>(true_coeffs.size()));
    Eigen::VectorXd f = Eigen::VectorXd::Zero(fine->n_nodes);
    for (size_t j = 0; j < true_coeffs.size(); ++j) f += true_coeffs[j] * fine_modes[j].shape;
    observed = restrict_record(
        *fine, *grid, simulate(fine_op, fine_rho, make_mode_data(*fine, f), opt).record);
    manifest["warnings"].push_back("observations generated on the 2x-refined grid");
  } else {
    const auto modes = spectrum(op, rho, static_cast<int>(true_coeffs.size()));
    Eigen::VectorXd f = Eigen::VectorXd::Zero(grid->n_nodes);
    for (size_t j = 0; j < true_coeffs.size(); ++j) f += true_coeffs[j] * modes[j].shape;
    observed = simulate(op, rho, make_mode_data(*grid, f), opt).record;
  }

  const InitialRecovery rec = reconstruct_initial(op, rho, observed, dyn.gamma, dyn.T, dyn.dt, k,
                                                  reg);

  std::vector<std::vector<double>> rows;
  double max_err = 0;
  for (int j = 0; j < k; ++j) {
    const double truth = j < static_cast<int>(true_coeffs.size()) ? true_coeffs[j] : 0.0;
    max_err = std::max(max_err, std::abs(rec.coeffs[j] - truth));
    rows.push_back({static_cast<double>(j + 1), truth, rec.coeffs[j],
                    std::abs(rec.coeffs[j] - truth)});
  }
  write_csv(out / "coefficients.csv", {"mode", "true", "recovered", "abs_error"}, rows);
  if (rec.rank_deficient)
    manifest["warnings"].push_back("mode-response Gram matrix is numerically rank-deficient");
  manifest["results"] = {{"max_abs_coeff_error", max_err},
                         {"residual", rec.residual},
                         {"relative_residual", rec.relative_residual},
                         {"rank_deficient", rec.rank_deficient},
                         {"fine_data", co.fine_data}};
  finish_manifest(manifest, out, {"coefficients.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for the damped clamped-plate wave equation"};
  app.require_subcommand(1);

  CommonOpts co;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Integrate the system and store energy traces and snapshots"},
      {"resolvent", "Resolvent residual and contraction bounds over a (lambda, gamma) scan"},
      {"spectrum", "Generalized eigenvalues of the clamped bilaplacian"},
      {"observability", "Boundary observability ratios over an eigenmode ensemble"},
      {"multiplier", "Multiplier-identity diagnostics on a stored trajectory"},
      {"stability", "Paired-solution difference experiments over contrast/gamma scans"},
      {"invert-density", "Recover the inclusion contrast from boundary traces"},
      {"invert-initial", "Recover modal initial-displacement coefficients from boundary traces"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", co.config_path, "Path to the JSON experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", co.out_dir, "Output directory (overrides output.directory)");
    sub->add_option("--threads", co.threads, "Worker threads for independent runs")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--fine-data", co.fine_data,
                  "Generate synthetic observations on a 2x-refined grid");
    sub->add_option_function<std::uint64_t>(
           "--seed", [&co](std::uint64_t s) { co.seed = s; co.seed_given = true; },
           "Override every seed in the config");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    const json cfg = load_config(co.config_path);
    if (cmd == "simulate") return run_simulate(co, cfg);
    if (cmd == "resolvent") return run_resolvent(co, cfg);
    if (cmd == "spectrum") return run_spectrum(co, cfg);
    if (cmd == "observability") return run_observability(co, cfg);
    if (cmd == "multiplier") return run_multiplier(co, cfg);
    if (cmd == "stability") return run_stability(co, cfg);
    if (cmd == "invert-density") return run_invert_density(co, cfg);
    if (cmd == "invert-initial") return run_invert_initial(co, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: unknown subcommand\n";
  return 1;
}
