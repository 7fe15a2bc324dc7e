#include "biwave/biharmonic.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace biwave {

ClampedOperator make_clamped_operator(std::shared_ptr<const Grid> grid) {
  const Grid& g = *grid;
  const double ihx2 = 1.0 / (g.h[0] * g.h[0]);
  const double ihy2 = g.dim == 2 ? 1.0 / (g.h[1] * g.h[1]) : 0.0;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(g.n_interior()) * 5 + g.boundary.size());

  auto interior_col = [&](int node) { return g.interior_ordinal[node]; };

  // Interior rows: centered stencil; boundary neighbours are zero for clamped
  // fields and simply drop out.
  for (int node : g.interior) {
    const auto m = g.multi_index(node);
    double diag = -2.0 * ihx2;
    if (g.dim == 2) diag -= 2.0 * ihy2;
    trips.emplace_back(node, interior_col(node), diag);
    const int xm = g.index(m[0] - 1, m[1]), xp = g.index(m[0] + 1, m[1]);
    if (!g.is_boundary(xm)) trips.emplace_back(node, interior_col(xm), ihx2);
    if (!g.is_boundary(xp)) trips.emplace_back(node, interior_col(xp), ihx2);
    if (g.dim == 2) {
      const int ym = g.index(m[0], m[1] - 1), yp = g.index(m[0], m[1] + 1);
      if (!g.is_boundary(ym)) trips.emplace_back(node, interior_col(ym), ihy2);
      if (!g.is_boundary(yp)) trips.emplace_back(node, interior_col(yp), ihy2);
    }
  }

  // Ghost closure rows: on an edge the mirrored exterior value turns the
  // stencil into 2*u_in/h^2; at a corner every stencil neighbour lies on the
  // boundary, so the closed value is zero (no row entries).
  for (const auto& b : g.boundary) {
    if (b.corner) continue;
    const auto m = g.multi_index(b.node);
    int in_node;
    double w;
    if (b.normal[0] != 0.0) {
      in_node = g.index(m[0] + (b.normal[0] < 0 ? 1 : -1), m[1]);
      w = 2.0 * ihx2;
    } else {
      in_node = g.index(m[0], m[1] + (b.normal[1] < 0 ? 1 : -1));
      w = 2.0 * ihy2;
    }
    trips.emplace_back(b.node, interior_col(in_node), w);
  }

  ClampedOperator op;
  op.grid = std::move(grid);
  op.lap_to_field.resize(g.n_nodes, g.n_interior());
  op.lap_to_field.setFromTriplets(trips.begin(), trips.end());
  op.lap_to_field.makeCompressed();

  // A^T diag(tau) A: numerically symmetric entry by entry, and exactly the
  // composition "interior Laplacian of the closed Laplacian field".
  op.bilap = (op.lap_to_field.transpose() * g.tau.asDiagonal() * op.lap_to_field).pruned();
  op.bilap.makeCompressed();
  return op;
}

Eigen::VectorXd interior_values(const Grid& grid, const Eigen::VectorXd& u_all) {
  Eigen::VectorXd out(grid.n_interior());
  for (int i = 0; i < grid.n_interior(); ++i) out[i] = u_all[grid.interior[i]];
  return out;
}

Eigen::VectorXd scatter_interior(const Grid& grid, const Eigen::VectorXd& u_int) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.n_nodes);
  for (int i = 0; i < grid.n_interior(); ++i) out[grid.interior[i]] = u_int[i];
  return out;
}

Eigen::VectorXd laplacian(const Grid& g, const Eigen::VectorXd& u) {
  if (u.size() != g.n_nodes) throw std::invalid_argument("laplacian: field does not match grid");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(g.n_nodes);
  const double ihx2 = 1.0 / (g.h[0] * g.h[0]);
  const double ihy2 = g.dim == 2 ? 1.0 / (g.h[1] * g.h[1]) : 0.0;
  for (int node : g.interior) {
    const auto m = g.multi_index(node);
    double v = (u[g.index(m[0] - 1, m[1])] - 2.0 * u[node] + u[g.index(m[0] + 1, m[1])]) * ihx2;
    if (g.dim == 2)
      v += (u[g.index(m[0], m[1] - 1)] - 2.0 * u[node] + u[g.index(m[0], m[1] + 1)]) * ihy2;
    w[node] = v;
  }
  return w;
}

Eigen::VectorXd clamped_laplacian_field(const ClampedOperator& op, const Eigen::VectorXd& u_all) {
  return op.lap_to_field * interior_values(*op.grid, u_all);
}

Eigen::VectorXd bilaplacian(const ClampedOperator& op, const Eigen::VectorXd& u_all) {
  return scatter_interior(*op.grid, op.bilap * interior_values(*op.grid, u_all));
}

BoundaryTraces boundary_traces(const ClampedOperator& op, const Eigen::VectorXd& u_all) {
  const Grid& g = *op.grid;
  if (u_all.size() != g.n_nodes)
    throw std::invalid_argument("boundary_traces: field does not match grid");
  const Eigen::VectorXd w = clamped_laplacian_field(op, u_all);

  BoundaryTraces tr;
  tr.lap.resize(g.n_boundary());
  tr.nlap.resize(g.n_boundary());
  for (int bi = 0; bi < g.n_boundary(); ++bi) {
    const auto& b = g.boundary[bi];
    if (b.corner) {  // clamped fields have vanishing Laplacian at corners
      tr.lap[bi] = 0.0;
      tr.nlap[bi] = 0.0;
      continue;
    }
    int step, axis;
    if (b.normal[0] != 0.0) {
      axis = 0;
      step = b.normal[0] < 0 ? g.n[1] : -g.n[1];
    } else {
      axis = 1;
      step = b.normal[1] < 0 ? 1 : -1;
    }
    const double h = g.h[axis];
    const int n1 = b.node + step, n2 = b.node + 2 * step, n3 = b.node + 3 * step;
    // Laplacian at the wall from the displacement itself (u = u_n = 0 there):
    // (8 u1 - u2) / (2 h^2), second order, exact up to the quartic term.
    tr.lap[bi] = (8.0 * u_all[n1] - u_all[n2]) / (2.0 * h * h);
    // Outward normal derivative of the Laplacian field, one-sided from three
    // interior layers (second order).
    tr.nlap[bi] = (5.0 * w[n1] - 8.0 * w[n2] + 3.0 * w[n3]) / (2.0 * h);
  }
  return tr;
}

EnergyValue energy(const ClampedOperator& op, const DensityField& rho, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& v) {
  const Grid& g = *op.grid;
  const Eigen::VectorXd w = clamped_laplacian_field(op, u);
  EnergyValue e;
  double kin = 0, bend = 0;
  for (int node = 0; node < g.n_nodes; ++node) {
    kin += g.tau[node] * rho.values[node] * v[node] * v[node];
    bend += g.tau[node] * w[node] * w[node];
  }
  e.kinetic = 0.5 * kin * g.cell;
  e.bending = 0.5 * bend * g.cell;
  e.E = e.kinetic + e.bending;
  e.state_norm_sq = 2.0 * e.E;

  const Eigen::VectorXd b = op.bilap * interior_values(g, u);
  e.graph_norm_sq = b.squaredNorm() * g.cell + 2.0 * e.kinetic;
  return e;
}

double l2_norm(const Grid& g, const Eigen::VectorXd& w) {
  double s = 0;
  for (int node = 0; node < g.n_nodes; ++node) s += g.tau[node] * w[node] * w[node];
  return std::sqrt(s * g.cell);
}

double l2_norm_interior(const Grid& g, const Eigen::VectorXd& w) {
  double s = 0;
  for (int node : g.interior) s += w[node] * w[node];
  return std::sqrt(s * g.cell);
}

double h4_norm(const ClampedOperator& op, const Eigen::VectorXd& f) {
  const Grid& g = *op.grid;
  const double a = l2_norm(g, f);
  const double b = l2_norm(g, clamped_laplacian_field(op, f));
  const double c = l2_norm_interior(g, bilaplacian(op, f));
  return std::sqrt(a * a + b * b + c * c);
}

std::vector<Mode> spectrum(const ClampedOperator& op, const DensityField& rho, int k) {
  const Grid& g = *op.grid;
  const int ni = g.n_interior();
  if (k < 1 || k > ni)
    throw std::invalid_argument("spectrum: requested " + std::to_string(k) + " modes, have " +
                                std::to_string(ni) + " interior nodes");
  if (ni > 4096)
    throw std::invalid_argument("spectrum: dense solve capped at 4096 interior nodes, grid has " +
                                std::to_string(ni));

  Eigen::MatrixXd A = Eigen::MatrixXd(op.bilap);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ni, ni);
  for (int i = 0; i < ni; ++i) M(i, i) = rho.values[g.interior[i]];
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, M);
  if (es.info() != Eigen::Success) throw std::runtime_error("spectrum: dense eigensolve failed");

  // Solver normalization is phi^T M phi = 1; rescale so the quadrature-weighted
  // norm ||sqrt(rho) phi||_{L2,h} is 1.
  const double scale = 1.0 / std::sqrt(g.cell);
  std::vector<Mode> modes(k);
  for (int j = 0; j < k; ++j) {
    modes[j].lambda = es.eigenvalues()[j];
    Eigen::VectorXd shape = es.eigenvectors().col(j) * scale;
    // Fix an orientation so results are reproducible: largest-magnitude entry positive.
    int imax = 0;
    shape.cwiseAbs().maxCoeff(&imax);
    if (shape[imax] < 0) shape = -shape;
    modes[j].shape = scatter_interior(g, shape);
  }
  return modes;
}

InitialData eigenmode_data(const ClampedOperator& op, const DensityField& rho, int k) {
  const auto modes = spectrum(op, rho, k);
  const Mode& m = modes.back();
  // ||lap phi||^2_tau = <bilap phi, phi> = lambda ||sqrt(rho) phi||^2 = lambda,
  // so phi / sqrt(lambda) has unit bending norm and energy exactly 1/2.
  return make_mode_data(*op.grid, m.shape, 1.0 / std::sqrt(m.lambda));
}

NormEquivalence norm_equivalence_bounds(const ClampedOperator& op, const DensityField& rho,
                                        int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("norm_equivalence_bounds: need a positive count");
  NormEquivalence ne;
  ne.C1_est = std::numeric_limits<double>::infinity();
  ne.C2_est = 0.0;
  for (int i = 0; i < count; ++i) {
    const InitialData d = make_random_data(*op.grid, seed + static_cast<std::uint64_t>(i));
    const EnergyValue e = energy(op, rho, d.f, d.g);
    const double hf = h4_norm(op, d.f);
    const double lg = l2_norm(*op.grid, d.g);
    const double denom = hf * hf + lg * lg;
    if (denom == 0.0) continue;
    const double r = e.graph_norm_sq / denom;
    ne.C1_est = std::min(ne.C1_est, r);
    ne.C2_est = std::max(ne.C2_est, r);
  }
  return ne;
}

}  // namespace biwave
