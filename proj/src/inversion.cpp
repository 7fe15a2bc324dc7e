#include "biwave/inversion.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace biwave {

namespace {

void require_admissible(const Grid& g, const DensityField& rho, const InitialData& data,
                        const char* who) {
  const AdmissibilityReport adm = check_admissible(g, rho, data);
  if (adm.ok) return;
  std::string msg = std::string(who) + ": data is not admissible";
  for (const auto& v : adm.violations) msg += "; " + v;
  throw std::invalid_argument(msg);
}

// Equation-evaluated acceleration rho u_tt = -(bilap u + gamma v) - extra,
// returned on all nodes with zero boundary entries. `extra` is an optional
// interior vector added to the right-hand side before dividing by rho.
Eigen::VectorXd equation_accel(const ClampedOperator& op, const DensityField& rho, double gamma,
                               const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                               const Eigen::VectorXd* extra) {
  const Grid& g = *op.grid;
  const Eigen::VectorXd bu = op.bilap * interior_values(g, u);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.n_nodes);
  for (int i = 0; i < g.n_interior(); ++i) {
    const int node = g.interior[i];
    double rhs = -(bu[i] + gamma * v[node]);
    if (extra) rhs -= (*extra)[i];
    out[node] = rhs / rho.values[node];
  }
  return out;
}

double trace_integrand(const Grid& g, const BoundaryTraces& tr) {
  double s = 0;
  for (int b = 0; b < g.n_boundary(); ++b)
    s += g.boundary[b].weight * (tr.nlap[b] * tr.nlap[b] + tr.lap[b] * tr.lap[b]);
  return s;
}

void require_same_sampling(const BoundaryRecord& observed, int steps, double dt,
                           const char* who) {
  if (static_cast<int>(observed.times.size()) != steps + 1 ||
      std::abs(observed.times.back() - steps * dt) > 1e-9)
    throw std::invalid_argument(std::string(who) +
                                ": observed record does not match the requested T and dt");
}

// Trapezoid-in-time, weighted-in-space inner product of two records.
double record_dot(const Grid& g, const BoundaryRecord& a, const BoundaryRecord& b) {
  const size_t nt = a.times.size();
  std::vector<double> f(nt);
  for (size_t k = 0; k < nt; ++k) {
    double s = 0;
    for (int i = 0; i < g.n_boundary(); ++i)
      s += g.boundary[i].weight *
           (a.lap(i, k) * b.lap(i, k) + a.nlap(i, k) * b.nlap(i, k));
    f[k] = s;
  }
  double out = 0;
  for (size_t k = 0; k + 1 < nt; ++k)
    out += 0.5 * (a.times[k + 1] - a.times[k]) * (f[k] + f[k + 1]);
  return out;
}

}  // namespace

StabilityReport difference_experiment(const ClampedOperator& op, const DensityField& rho1,
                                      const InitialData& data1, const DensityField& rho2,
                                      const InitialData& data2, double gamma, double T,
                                      double dt) {
  const Grid& g = *op.grid;
  require_admissible(g, rho1, data1, "difference_experiment");
  require_admissible(g, rho2, data2, "difference_experiment");
  if (!(T > 0) || !(dt > 0))
    throw std::invalid_argument("difference_experiment: T and dt must be positive");

  const int steps = std::max(1, static_cast<int>(std::lround(T / dt)));
  const double horizon = steps * dt;

  StabilityReport rep;
  rep.gamma = gamma;
  rep.T = horizon;

  const Eigen::VectorXd rho_d = rho1.values - rho2.values;
  const Eigen::VectorXd f_d = data1.f - data2.f;
  const Eigen::VectorXd g_d = data1.g - data2.g;
  rep.rho_diff_inf = rho_d.lpNorm<Eigen::Infinity>();
  rep.f_diff_H4 = h4_norm(op, f_d);
  rep.g_diff_L2 = l2_norm(g, g_d);
  rep.E0_diff = energy(op, rho1, f_d, g_d).E;

  // Initial-time acceleration estimates, all equation-evaluated at t = 0.
  const Eigen::VectorXd utt2_0 = equation_accel(op, rho2, gamma, data2.f, data2.g, nullptr);
  Eigen::VectorXd extra0(g.n_interior());
  for (int i = 0; i < g.n_interior(); ++i) {
    const int node = g.interior[i];
    extra0[i] = rho_d[node] * utt2_0[node];
  }
  const Eigen::VectorXd uttd_0 = equation_accel(op, rho1, gamma, f_d, g_d, &extra0);
  rep.lhs_bilap_f = l2_norm_interior(g, bilaplacian(op, f_d));
  rep.rhs_accel = rho1.rho_max * l2_norm_interior(g, uttd_0) +
                  rep.rho_diff_inf * l2_norm_interior(g, utt2_0);
  const double c1_denom = rep.g_diff_L2 + rep.rho_diff_inf;
  rep.C1_defined = c1_denom > 0;
  rep.C1_empirical = rep.C1_defined ? rep.lhs_bilap_f / c1_denom : 0.0;

  // Lockstep evolution: u2 first (its realized midpoint acceleration feeds the
  // forcing), then the difference u and the reference u1, both under rho1.
  MidpointStepper st1(op, rho1, gamma, dt);
  MidpointStepper st2(op, rho2, gamma, dt);
  State sd{0.0, f_d, g_d};
  State s1{0.0, data1.f, data1.g};
  State s2{0.0, data2.f, data2.g};

  std::vector<double> Ed;
  Ed.reserve(steps + 1);
  Ed.push_back(rep.E0_diff);
  double M = l2_norm_interior(g, utt2_0);
  double cross_num = (sd.u + s2.u - s1.u).lpNorm<Eigen::Infinity>();
  double cross_den = s1.u.lpNorm<Eigen::Infinity>();
  double J = 0, prev = trace_integrand(g, boundary_traces(op, sd.u));

  Eigen::VectorXd v2_before, S_mid(g.n_interior());
  for (int n = 0; n < steps; ++n) {
    v2_before = s2.v;
    st2.step(s2);
    for (int i = 0; i < g.n_interior(); ++i) {
      const int node = g.interior[i];
      S_mid[i] = -rho_d[node] * (s2.v[node] - v2_before[node]) / dt;
    }
    st1.step(sd, &S_mid);
    st1.step(s1);

    Ed.push_back(energy(op, rho1, sd.u, sd.v).E);
    const double cur = trace_integrand(g, boundary_traces(op, sd.u));
    J += 0.5 * dt * (prev + cur);
    prev = cur;
    M = std::max(M, l2_norm_interior(
                        g, equation_accel(op, rho2, gamma, s2.u, s2.v, nullptr)));
    cross_num = std::max(cross_num, (sd.u + s2.u - s1.u).lpNorm<Eigen::Infinity>());
    cross_den = std::max(cross_den, s1.u.lpNorm<Eigen::Infinity>());
  }

  rep.J = J;
  rep.M_observed = M;
  rep.cross_check_rel = cross_den > 0 ? cross_num / cross_den : 0.0;

  if (J > 0) rep.ratio_density = rep.rho_diff_inf / std::sqrt((1.0 + gamma) * J);
  rep.ratio_initial_defined =
      rep.g_diff_L2 <= 1e-14 * std::max(1.0, l2_norm(g, data1.g) + l2_norm(g, data2.g));
  if (rep.ratio_initial_defined && J > 0)
    rep.ratio_initial = rep.f_diff_H4 / std::sqrt((1.0 + gamma) * J);

  const double bound = 2.0 * rep.E0_diff +
                       (M * M / (2.0 * rho1.rho_min)) * rep.rho_diff_inf * rep.rho_diff_inf *
                           horizon * horizon;
  double excess = 0;
  for (double e : Ed) excess = std::max(excess, e - bound);
  rep.uniform_bound_margin = bound > 0 ? excess / bound : excess;
  rep.uniform_bound_ok = rep.uniform_bound_margin <= 1e-9;
  return rep;
}

std::vector<StabilityReport> stability_scan(const ClampedOperator& op, const DensityField& rho2,
                                            const InitialData& data,
                                            const std::vector<DensityField>& contrasts,
                                            const std::vector<double>& gammas, double T,
                                            double dt) {
  if (contrasts.empty() || gammas.empty())
    throw std::invalid_argument("stability_scan: contrast and gamma lists must be nonempty");
  std::vector<StabilityReport> table;
  table.reserve(contrasts.size() * gammas.size());
  for (const DensityField& rho1 : contrasts)
    for (double gamma : gammas)
      table.push_back(difference_experiment(op, rho1, data, rho2, data, gamma, T, dt));
  return table;
}

double record_misfit(const Grid& grid, const BoundaryRecord& a, const BoundaryRecord& b) {
  const size_t nt = a.times.size();
  if (b.times.size() != nt || a.lap.rows() != b.lap.rows())
    throw std::invalid_argument("record_misfit: records have different shapes");
  for (size_t k = 0; k < nt; ++k)
    if (std::abs(a.times[k] - b.times[k]) > 1e-9)
      throw std::invalid_argument("record_misfit: records sampled at different times");

  std::vector<double> f(nt);
  for (size_t k = 0; k < nt; ++k) {
    double s = 0;
    for (int i = 0; i < grid.n_boundary(); ++i) {
      const double dl = a.lap(i, k) - b.lap(i, k);
      const double dn = a.nlap(i, k) - b.nlap(i, k);
      s += grid.boundary[i].weight * (dn * dn + dl * dl);
    }
    f[k] = s;
  }
  double out = 0;
  for (size_t k = 0; k + 1 < nt; ++k)
    out += 0.5 * (a.times[k + 1] - a.times[k]) * (f[k] + f[k + 1]);
  return out;
}

BoundaryRecord restrict_record(const Grid& fine, const Grid& coarse, const BoundaryRecord& rec) {
  if (!grids_nested(coarse, fine))
    throw std::invalid_argument("restrict_record: grids are not nested");
  if (rec.lap.rows() != fine.n_boundary())
    throw std::invalid_argument("restrict_record: record does not live on the fine boundary");
  const int rx = (fine.n[0] - 1) / (coarse.n[0] - 1);
  const int ry = coarse.n[1] > 1 ? (fine.n[1] - 1) / (coarse.n[1] - 1) : 1;

  std::vector<int> fine_row(fine.n_nodes, -1);
  for (int b = 0; b < fine.n_boundary(); ++b) fine_row[fine.boundary[b].node] = b;

  BoundaryRecord out;
  out.times = rec.times;
  const int nb = coarse.n_boundary();
  const int nt = static_cast<int>(rec.times.size());
  out.lap.resize(nb, nt);
  out.nlap.resize(nb, nt);
  for (int b = 0; b < nb; ++b) {
    const auto m = coarse.multi_index(coarse.boundary[b].node);
    const int row = fine_row[fine.index(m[0] * rx, m[1] * ry)];
    out.lap.row(b) = rec.lap.row(row);
    out.nlap.row(b) = rec.nlap.row(row);
  }

  double J = 0, prev = 0;
  for (int k = 0; k < nt; ++k) {
    double s = 0;
    for (int b = 0; b < nb; ++b)
      s += coarse.boundary[b].weight *
           (out.nlap(b, k) * out.nlap(b, k) + out.lap(b, k) * out.lap(b, k));
    if (k > 0) J += 0.5 * (out.times[k] - out.times[k - 1]) * (prev + s);
    prev = s;
  }
  out.J = J;
  return out;
}

BoundaryRecord add_trace_noise(const Grid& grid, const BoundaryRecord& record, double level,
                               std::uint64_t seed) {
  BoundaryRecord noisy = record;
  if (level == 0) return noisy;
  if (level < 0) throw std::invalid_argument("add_trace_noise: level must be nonnegative");

  const auto rms = [](const Eigen::MatrixXd& m) {
    return m.size() > 0 ? std::sqrt(m.squaredNorm() / m.size()) : 0.0;
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s_lap = level * rms(record.lap), s_nlap = level * rms(record.nlap);
  for (Eigen::Index r = 0; r < noisy.lap.rows(); ++r)
    for (Eigen::Index c = 0; c < noisy.lap.cols(); ++c) noisy.lap(r, c) += s_lap * normal(rng);
  for (Eigen::Index r = 0; r < noisy.nlap.rows(); ++r)
    for (Eigen::Index c = 0; c < noisy.nlap.cols(); ++c) noisy.nlap(r, c) += s_nlap * normal(rng);

  // J is a derived quantity; keep it consistent with the stored traces.
  double J = 0, prev = 0;
  for (size_t k = 0; k < noisy.times.size(); ++k) {
    double s = 0;
    for (int b = 0; b < grid.n_boundary(); ++b)
      s += grid.boundary[b].weight *
           (noisy.nlap(b, k) * noisy.nlap(b, k) + noisy.lap(b, k) * noisy.lap(b, k));
    if (k > 0) J += 0.5 * (noisy.times[k] - noisy.times[k - 1]) * (prev + s);
    prev = s;
  }
  noisy.J = J;
  return noisy;
}

DensityRecovery reconstruct_density(const ClampedOperator& op, const BoundaryRecord& observed,
                                    double rho0, const Inclusion& inc, const InitialData& data,
                                    double gamma, double T, double dt, double lo, double hi,
                                    double tol) {
  const Grid& g = *op.grid;
  if (!(lo > 0) || !(hi > lo)) throw std::invalid_argument("reconstruct_density: bad range");
  if (!(tol > 0)) throw std::invalid_argument("reconstruct_density: tolerance must be positive");
  const int steps = std::max(1, static_cast<int>(std::lround(T / dt)));
  require_same_sampling(observed, steps, dt, "reconstruct_density");

  DensityRecovery out;
  SimulateOptions opt;
  opt.T = T;
  opt.dt = dt;
  opt.gamma = gamma;
  opt.record_traces = true;

  const auto eval = [&](double contrast) {
    const DensityField rho = make_density(g, rho0, contrast, inc);
    const SimulationResult res = simulate(op, rho, data, opt);
    const double misfit = record_misfit(g, res.record, observed);
    out.evaluations.push_back({contrast, misfit});
    return misfit;
  };

  eval(lo);
  eval(hi);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double m1 = eval(x1), m2 = eval(x2);
  while (b - a > tol) {
    if (m1 < m2) {
      b = x2;
      x2 = x1;
      m2 = m1;
      x1 = b - phi * (b - a);
      m1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      m1 = m2;
      x2 = a + phi * (b - a);
      m2 = eval(x2);
    }
  }
  eval(0.5 * (a + b));

  // Best evaluated sample wins, also when the sampled misfits were not
  // unimodal (reported below, not fatal).
  const auto best = std::min_element(
      out.evaluations.begin(), out.evaluations.end(),
      [](const std::array<double, 2>& p, const std::array<double, 2>& q) { return p[1] < q[1]; });
  out.rho1_hat = (*best)[0];
  out.misfit_at_hat = (*best)[1];

  std::vector<std::array<double, 2>> sorted = out.evaluations;
  std::sort(sorted.begin(), sorted.end());
  double mmax = 0;
  for (const auto& p : sorted) mmax = std::max(mmax, std::abs(p[1]));
  const double eps = 1e-12 * std::max(mmax, 1e-300);
  bool rising = false;
  for (size_t i = 1; i < sorted.size(); ++i) {
    const double d = sorted[i][1] - sorted[i - 1][1];
    if (d > eps) rising = true;
    if (d < -eps && rising) {
      out.unimodal = false;
      break;
    }
  }
  if (!out.unimodal)
    out.warnings.push_back("misfit samples are not unimodal; returning the best sample");
  if (out.rho1_hat == (*sorted.begin())[0] || out.rho1_hat == sorted.back()[0])
    out.warnings.push_back("misfit minimized at the edge of the search range");
  return out;
}

InitialRecovery reconstruct_initial(const ClampedOperator& op, const DensityField& rho,
                                    const BoundaryRecord& observed, double gamma, double T,
                                    double dt, int k, double reg) {
  const Grid& g = *op.grid;
  if (k < 1) throw std::invalid_argument("reconstruct_initial: need at least one mode");
  if (reg < 0) throw std::invalid_argument("reconstruct_initial: regularization must be >= 0");
  const int steps = std::max(1, static_cast<int>(std::lround(T / dt)));
  require_same_sampling(observed, steps, dt, "reconstruct_initial");

  const std::vector<Mode> modes = spectrum(op, rho, k);
  SimulateOptions opt;
  opt.T = T;
  opt.dt = dt;
  opt.gamma = gamma;
  opt.record_traces = true;

  std::vector<BoundaryRecord> records;
  records.reserve(k);
  for (int j = 0; j < k; ++j)
    records.push_back(simulate(op, rho, make_mode_data(g, modes[j].shape), opt).record);

  Eigen::MatrixXd G(k, k);
  Eigen::VectorXd rhs(k);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      G(i, j) = record_dot(g, records[i], records[j]);
      G(j, i) = G(i, j);
    }
    rhs[i] = record_dot(g, records[i], observed);
  }

  InitialRecovery out;
  const double scale = G.trace() / k;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  out.rank_deficient = es.eigenvalues()(0) <= 1e-12 * std::max(scale, 1e-300);

  Eigen::MatrixXd Greg = G;
  if (reg > 0) Greg += reg * scale * Eigen::MatrixXd::Identity(k, k);
  out.coeffs = Greg.ldlt().solve(rhs);

  const double obs_sq = record_dot(g, observed, observed);
  const double quad =
      out.coeffs.dot(G * out.coeffs) - 2.0 * out.coeffs.dot(rhs) + obs_sq;
  out.residual = std::sqrt(std::max(0.0, quad));
  out.relative_residual = obs_sq > 0 ? out.residual / std::sqrt(obs_sq) : 0.0;

  out.f_hat = Eigen::VectorXd::Zero(g.n_nodes);
  for (int j = 0; j < k; ++j) out.f_hat += out.coeffs[j] * modes[j].shape;
  return out;
}

}  // namespace biwave
