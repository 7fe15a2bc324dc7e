#include "biwave/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace biwave {

namespace {

Eigen::VectorXd midpoint_coef(const ClampedOperator& op, const DensityField& rho, double gamma,
                              double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("MidpointStepper: dt must be positive");
  if (gamma < 0.0) throw std::invalid_argument("MidpointStepper: gamma must be nonnegative");
  const Grid& g = *op.grid;
  Eigen::VectorXd c(g.n_interior());
  for (int i = 0; i < g.n_interior(); ++i)
    c[i] = 4.0 * rho.values[g.interior[i]] / (dt * dt) + 2.0 * gamma / dt;
  return c;
}

}  // namespace

MidpointStepper::MidpointStepper(const ClampedOperator& op, const DensityField& rho, double gamma,
                                 double dt)
    : op_(op),
      rho_(rho),
      gamma_(gamma),
      dt_(dt),
      coef_(midpoint_coef(op, rho, gamma, dt)),
      solver_(op, coef_) {}

void MidpointStepper::step(State& s, const Eigen::VectorXd* forcing_mid) {
  const Grid& g = *op_.grid;
  const int ni = g.n_interior();

  // Eliminate v_mid = 2 (u_mid - u) / dt from the midpoint equations; the
  // remaining system for u_mid is (bilap + diag(coef)) u_mid = rhs.
  Eigen::VectorXd rhs(ni);
  for (int i = 0; i < ni; ++i) {
    const int node = g.interior[i];
    rhs[i] = coef_[i] * s.u[node] + 2.0 * rho_.values[node] / dt_ * s.v[node];
  }
  if (forcing_mid) {
    if (forcing_mid->size() != ni)
      throw std::invalid_argument("MidpointStepper: forcing must be an interior vector");
    rhs += *forcing_mid;
  }
  const Eigen::VectorXd u_mid = solver_.solve(rhs);

  vmid_.resize(ni);
  for (int i = 0; i < ni; ++i) {
    const int node = g.interior[i];
    const double um = u_mid[i];
    const double vm = 2.0 * (um - s.u[node]) / dt_;
    vmid_[i] = vm;
    s.u[node] = 2.0 * um - s.u[node];
    s.v[node] = 2.0 * vm - s.v[node];
  }
  s.t += dt_;
}

double default_dt(const Grid& grid) {
  double h = grid.h[0];
  if (grid.dim == 2) h = std::min(h, grid.h[1]);
  return std::min(1e-3, h * h);
}

SimulationResult simulate(const ClampedOperator& op, const DensityField& rho,
                          const InitialData& data, const SimulateOptions& opt,
                          const std::function<void(double, Eigen::VectorXd&)>* forcing) {
  const Grid& g = *op.grid;
  const auto adm = check_admissible(g, rho, data);
  if (!adm.ok) {
    std::string msg = "simulate: data is not admissible";
    for (const auto& v : adm.violations) msg += "; " + v;
    throw std::invalid_argument(msg);
  }
  if (!(opt.T > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");

  const double dt = opt.dt > 0.0 ? opt.dt : default_dt(g);
  const int steps = std::max(1, static_cast<int>(std::lround(opt.T / dt)));

  SimulationResult res;
  res.dt = dt;
  res.steps = steps;
  res.final.t = 0.0;
  res.final.u = data.f;
  res.final.v = data.g;

  MidpointStepper stepper(op, rho, opt.gamma, dt);

  res.energy.times.reserve(steps + 1);
  res.energy.E.reserve(steps + 1);
  res.energy.dissipated.reserve(steps + 1);
  res.energy.state_norm.reserve(steps + 1);

  auto push_energy = [&](double t, double dissipated) {
    const EnergyValue e = energy(op, rho, res.final.u, res.final.v);
    res.energy.times.push_back(t);
    res.energy.E.push_back(e.E);
    res.energy.dissipated.push_back(dissipated);
    res.energy.state_norm.push_back(std::sqrt(e.state_norm_sq));
  };

  double trace_integrand_prev = 0.0;
  auto push_traces = [&](double t) {
    const BoundaryTraces tr = boundary_traces(op, res.final.u);
    const int nb = g.n_boundary();
    const int col = static_cast<int>(res.record.times.size());
    if (res.record.lap.cols() <= col) {
      res.record.lap.conservativeResize(nb, steps + 1);
      res.record.nlap.conservativeResize(nb, steps + 1);
    }
    res.record.lap.col(col) = tr.lap;
    res.record.nlap.col(col) = tr.nlap;
    res.record.times.push_back(t);
    double s = 0;
    for (int bi = 0; bi < nb; ++bi)
      s += g.boundary[bi].weight * (tr.nlap[bi] * tr.nlap[bi] + tr.lap[bi] * tr.lap[bi]);
    if (col > 0) res.record.J += 0.5 * dt * (trace_integrand_prev + s);
    trace_integrand_prev = s;
  };

  auto push_snapshot = [&]() {
    res.snapshots.times.push_back(res.final.t);
    res.snapshots.u.push_back(res.final.u);
    res.snapshots.v.push_back(res.final.v);
  };

  push_energy(0.0, 0.0);
  if (opt.record_traces) {
    res.record.lap.resize(g.n_boundary(), steps + 1);
    res.record.nlap.resize(g.n_boundary(), steps + 1);
    push_traces(0.0);
  }
  if (opt.snapshot_stride > 0) {
    res.snapshots.dt = dt * opt.snapshot_stride;
    push_snapshot();
  }

  Eigen::VectorXd S_mid;
  double dissipated = 0.0;
  for (int n = 0; n < steps; ++n) {
    const Eigen::VectorXd* fptr = nullptr;
    if (forcing) {
      S_mid.setZero(g.n_interior());
      (*forcing)(res.final.t + 0.5 * dt, S_mid);
      fptr = &S_mid;
    }
    stepper.step(res.final, fptr);
    dissipated += opt.gamma * dt * stepper.last_vmid().squaredNorm() * g.cell;
    push_energy(res.final.t, dissipated);
    if (opt.record_traces) push_traces(res.final.t);
    if (opt.snapshot_stride > 0 && ((n + 1) % opt.snapshot_stride == 0 || n + 1 == steps))
      push_snapshot();
  }

  res.energy.fitted_K = growth_bound_check(res.energy).fitted_K;
  return res;
}

double dissipation_residual(const EnergyTrace& trace) {
  if (trace.E.empty()) return 0.0;
  const double defect =
      std::abs(trace.E.back() - trace.E.front() + trace.dissipated.back());
  return defect / std::max(trace.E.front(), 1e-300);
}

GrowthCheck growth_bound_check(const EnergyTrace& trace) {
  GrowthCheck gc;
  const size_t n = trace.times.size();
  if (n < 2 || trace.state_norm.front() <= 0.0) return gc;
  const double h0 = trace.state_norm.front();

  // Least-squares slope of log(state_norm / h0) over t, zero-clamped.
  double st = 0, stt = 0, sy = 0, sty = 0;
  size_t m = 0;
  for (size_t i = 0; i < n; ++i) {
    if (trace.state_norm[i] <= 0.0) continue;
    const double t = trace.times[i], y = std::log(trace.state_norm[i] / h0);
    st += t;
    stt += t * t;
    sy += y;
    sty += t * y;
    ++m;
  }
  const double denom = m * stt - st * st;
  const double slope = denom > 0 ? (m * sty - st * sy) / denom : 0.0;
  gc.fitted_K = std::max(0.0, slope);

  for (size_t i = 0; i < n; ++i) {
    const double envelope = h0 * std::exp(gc.fitted_K * trace.times[i]) * (1.0 + 1e-6);
    if (trace.state_norm[i] > envelope) {
      gc.violated = true;
      break;
    }
  }
  return gc;
}

}  // namespace biwave
