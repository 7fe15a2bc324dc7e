#include "biwave/observability.hpp"

#include <cmath>
#include <stdexcept>

namespace biwave {

namespace {

double record_integrand(const Grid& grid, const BoundaryRecord& record, int col) {
  double s = 0;
  for (int b = 0; b < grid.n_boundary(); ++b) {
    const double lap = record.lap(b, col), nlap = record.nlap(b, col);
    s += grid.boundary[b].weight * (nlap * nlap + lap * lap);
  }
  return s;
}

// m . grad u at the interior nodes by centered differences, m(x) = x - x0.
Eigen::VectorXd multiplier_gradient(const Grid& g, const Eigen::VectorXd& u) {
  Eigen::VectorXd out(g.n_interior());
  for (int i = 0; i < g.n_interior(); ++i) {
    const int node = g.interior[i];
    const auto c = g.coord(node);
    double val = (c[0] - g.x0[0]) * (u[node + g.n[1]] - u[node - g.n[1]]) / (2.0 * g.h[0]);
    if (g.dim == 2)
      val += (c[1] - g.x0[1]) * (u[node + 1] - u[node - 1]) / (2.0 * g.h[1]);
    out[i] = val;
  }
  return out;
}

double trapezoid(const std::vector<double>& f, double dt) {
  double s = 0;
  for (size_t i = 0; i + 1 < f.size(); ++i) s += 0.5 * dt * (f[i] + f[i + 1]);
  return s;
}

}  // namespace

double boundary_functional(const Grid& grid, const BoundaryRecord& record) {
  const size_t n = record.times.size();
  if (n == 0) throw std::invalid_argument("boundary_functional: empty record");
  double J = 0, prev = record_integrand(grid, record, 0);
  for (size_t i = 1; i < n; ++i) {
    const double cur = record_integrand(grid, record, static_cast<int>(i));
    J += 0.5 * (record.times[i] - record.times[i - 1]) * (prev + cur);
    prev = cur;
  }
  return J;
}

ObservabilityReport observability_ratio(const ClampedOperator& op, const DensityField& rho,
                                        double gamma, const InitialData& data, double T,
                                        double dt) {
  const Grid& g = *op.grid;
  ObservabilityReport rep;
  rep.gamma = gamma;
  rep.T_min = min_observation_time(g, rho.rho_min);
  rep.E0 = energy(op, rho, data.f, data.g).E;

  SimulateOptions opt;
  opt.T = T;
  opt.dt = dt;
  opt.gamma = gamma;
  opt.record_traces = true;
  const SimulationResult res = simulate(op, rho, data, opt);

  rep.T = res.final.t;
  rep.J = res.record.J;
  rep.ratio = (rep.E0 > 0 && rep.J > 0) ? rep.E0 / ((1.0 + gamma) * rep.J) : 0.0;
  rep.time_condition_met = rep.T > rep.T_min;
  return rep;
}

ConstantEstimate estimate_constant(const ClampedOperator& op, const DensityField& rho,
                                   double gamma, const std::vector<InitialData>& ensemble,
                                   double T, double dt) {
  if (ensemble.empty()) throw std::invalid_argument("estimate_constant: empty ensemble");
  ConstantEstimate est;
  bool any = false;
  for (const InitialData& data : ensemble) {
    est.per_datum.push_back(observability_ratio(op, rho, gamma, data, T, dt));
    const ObservabilityReport& rep = est.per_datum.back();
    if (rep.E0 > 0) {
      est.C_obs = any ? std::max(est.C_obs, rep.ratio) : rep.ratio;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("estimate_constant: all ensemble members are zero");
  return est;
}

MultiplierDiagnostics multiplier_diagnostics(const ClampedOperator& op, const DensityField& rho,
                                             const Trajectory& traj, double gamma) {
  const Grid& g = *op.grid;
  const size_t nt = traj.times.size();
  if (nt < 3 || traj.u.size() != nt || traj.v.size() != nt)
    throw std::invalid_argument("multiplier_diagnostics: need at least 3 stride-1 snapshots");
  const double dt = traj.dt;
  for (size_t i = 1; i < nt; ++i)
    if (std::abs(traj.times[i] - traj.times[i - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw std::invalid_argument("multiplier_diagnostics: snapshots must be stored at stride 1");

  std::vector<double> a1(nt), a2(nt), a3(nt), lap2(nt), bnd(nt), vol(nt);
  for (size_t k = 0; k < nt; ++k) {
    const Eigen::VectorXd& u = traj.u[k];
    const Eigen::VectorXd mgrad = multiplier_gradient(g, u);

    // Second-order acceleration from the stored velocities: centered inside,
    // one-sided three-point at the ends.
    Eigen::VectorXd utt;
    if (k == 0)
      utt = (-3.0 * traj.v[0] + 4.0 * traj.v[1] - traj.v[2]) / (2.0 * dt);
    else if (k + 1 == nt)
      utt = (3.0 * traj.v[nt - 1] - 4.0 * traj.v[nt - 2] + traj.v[nt - 3]) / (2.0 * dt);
    else
      utt = (traj.v[k + 1] - traj.v[k - 1]) / (2.0 * dt);

    const Eigen::VectorXd bu = op.bilap * interior_values(g, u);
    const BoundaryTraces tr = boundary_traces(op, u);
    const Eigen::VectorXd lap_field = clamped_laplacian_field(op, u);

    double s1 = 0, s2 = 0, s3 = 0, sl = 0, sv = 0;
    for (int i = 0; i < g.n_interior(); ++i) {
      const int node = g.interior[i];
      s1 += rho.values[node] * utt[node] * mgrad[i];
      s2 += bu[i] * mgrad[i];
      s3 += traj.v[k][node] * mgrad[i];
      sl += lap_field[node] * lap_field[node];
      sv += traj.v[k][node] * traj.v[k][node];
    }
    double sb = 0, sbw = 0;
    for (int b = 0; b < g.n_boundary(); ++b) {
      const BoundaryNode& bn = g.boundary[b];
      const double t = tr.lap[b];
      sb += g.tau[bn.node] * t * t;  // volume-quadrature share of the trace
      const auto c = g.coord(bn.node);
      double mn = (c[0] - g.x0[0]) * bn.normal[0];
      if (g.dim == 2) mn += (c[1] - g.x0[1]) * bn.normal[1];
      sbw += bn.weight * mn * t * t;
    }
    a1[k] = g.cell * s1;
    a2[k] = g.cell * s2;
    a3[k] = gamma * g.cell * s3;
    lap2[k] = g.cell * (sl + sb);
    bnd[k] = 0.5 * sbw;
    vol[k] = g.cell * sv;
  }

  MultiplierDiagnostics d;
  d.I1 = trapezoid(a1, dt);
  d.I2 = trapezoid(a2, dt);
  d.I3 = trapezoid(a3, dt);
  d.closure = d.I1 + d.I2 + d.I3;
  const double scale = std::abs(d.I1) + std::abs(d.I2) + std::abs(d.I3);
  d.closure_rel = scale > 0 ? std::abs(d.closure) / scale : 0.0;

  d.boundary_term = trapezoid(bnd, dt);
  const double rhs_i2 = (2.0 - 0.5 * g.dim) * trapezoid(lap2, dt) - d.boundary_term;
  d.I2_identity_residual = std::abs(d.I2 - rhs_i2) / std::max(std::abs(d.I2), 1e-300);

  d.i3_rhs = -0.5 * gamma * g.dim * trapezoid(vol, dt);
  d.i3_residual = std::abs(d.I3 - d.i3_rhs) / std::max(std::abs(d.i3_rhs), 1e-300);
  if (gamma == 0.0) d.i3_residual = 0.0;
  return d;
}

}  // namespace biwave
