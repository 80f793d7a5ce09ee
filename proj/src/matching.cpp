#include "odc/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

namespace odc {

PointCloud PointCloud::uniform(Matrix pts) {
  PointCloud c;
  c.weights = Vector::Constant(pts.rows(), 1.0 / static_cast<double>(pts.rows()));
  c.points = std::move(pts);
  c.validate();
  return c;
}

PointCloud PointCloud::weighted(Matrix pts, Vector w) {
  PointCloud c;
  c.points = std::move(pts);
  c.weights = std::move(w);
  c.validate();
  return c;
}

bool PointCloud::is_uniform(double tol) const {
  const double w = 1.0 / static_cast<double>(size());
  return (weights.array() - w).abs().maxCoeff() <= tol;
}

void PointCloud::validate() const {
  require(points.rows() >= 1, "PointCloud: must hold at least one point");
  require(weights.size() == points.rows(), "PointCloud: weight count mismatch");
  require(weights.minCoeff() >= 0.0, "PointCloud: negative weight");
  require(std::abs(weights.sum() - 1.0) <= 1e-9, "PointCloud: weights must sum to 1");
}

namespace {

ad::Var weighted_sum(ad::Var values, const Vector& weights) {
  ad::Tape& t = values.tape();
  if (weights.size() == 0) return ad::mean(values);
  require(weights.size() == values.rows(), "dual_gap: weight count mismatch");
  ad::Var w = ad::wrap(t, t.constant(Matrix(weights)));
  return ad::sum(w * values);
}

/// Pairwise squared distances via the Gram identity, clamped at zero.
ad::Var squared_distances(ad::Var x, ad::Var z) {
  ad::Var rx = ad::squared_norm_rows(x);
  ad::Var rz = ad::squared_norm_rows(z);
  ad::Var d2 = ad::broadcast_cols(rx, z.rows()) +
               ad::transpose(ad::broadcast_cols(rz, x.rows())) -
               2.0 * ad::matmul(x, ad::transpose(z));
  return ad::relu(d2);
}

}  // namespace

ad::Var dual_gap(const MLPSpec& phi_spec, const ParamVars& phi, ad::Var x_points,
                 const Vector& x_weights, ad::Var z_points, const Vector& z_weights) {
  ad::Var phi_x = mlp_forward(phi_spec, phi, x_points);
  ad::Var phi_z = mlp_forward(phi_spec, phi, z_points);
  return weighted_sum(phi_x, x_weights) - weighted_sum(phi_z, z_weights);
}

double dual_gap_value(const MLPSpec& phi_spec, const NetworkParams& phi, const PointCloud& x,
                      const PointCloud& z) {
  ad::Tape tape;
  ParamVars p = load_params(tape, phi, /*trainable=*/false);
  ad::Var xs = ad::wrap(tape, tape.constant(x.points));
  ad::Var zs = ad::wrap(tape, tape.constant(z.points));
  return dual_gap(phi_spec, p, xs, x.weights, zs, z.weights).value()(0, 0);
}

double chamfer(const PointCloud& x, const PointCloud& z) {
  const Matrix& a = x.points;
  const Matrix& b = z.points;
  require(a.cols() == b.cols(), "chamfer: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
    total += best;
  }
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
    total += best;
  }
  return total;
}

ad::Var chamfer(ad::Var x_points, const Matrix& z_points) {
  ad::Tape& t = x_points.tape();
  require(x_points.cols() == z_points.cols(), "chamfer: dimension mismatch");
  ad::Var z = ad::wrap(t, t.constant(z_points));
  ad::Var d2 = squared_distances(x_points, z);
  ad::Var to_target = ad::sum(ad::row_min(d2));
  ad::Var to_cloud = ad::sum(ad::row_min(ad::transpose(d2)));
  return to_target + to_cloud;
}

// ---------------------------------------------------------------------------
// Exact discrete W1.

double assignment_min_cost(const Matrix& cost) {
  require(cost.rows() == cost.cols(), "assignment_min_cost: cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();

  // Shortest augmenting paths with dual potentials, O(n^3).
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(match[static_cast<std::size_t>(j)] - 1, j - 1);
  return total;
}

namespace {

struct BasicCell {
  int i, j;
  double flow;
};

}  // namespace

double transport_min_cost(const Matrix& cost, const Vector& supply, const Vector& demand) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  require(cost.rows() == m && cost.cols() == n, "transport_min_cost: shape mismatch");
  require(supply.minCoeff() > 0.0 && demand.minCoeff() > 0.0,
          "transport_min_cost: supplies and demands must be positive");
  require(std::abs(supply.sum() - demand.sum()) <= 1e-9, "transport_min_cost: unbalanced problem");

  // Northwest-corner start: m+n-1 basic cells forming a spanning tree.
  std::vector<BasicCell> basis;
  basis.reserve(static_cast<std::size_t>(m + n));
  {
    Vector a = supply, b = demand;
    int i = 0, j = 0;
    while (i < m && j < n) {
      const double t = std::min(a(i), b(j));
      basis.push_back({i, j, t});
      a(i) -= t;
      b(j) -= t;
      if (i == m - 1 && j == n - 1) break;
      if (a(i) <= 0.0 && i < m - 1)
        ++i;
      else
        ++j;
    }
  }

  // Nodes: rows 0..m-1, cols m..m+n-1. The basis is kept as a spanning tree.
  const auto solve_duals = [&](std::vector<double>& u, std::vector<double>& v) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m + n));
    for (int e = 0; e < static_cast<int>(basis.size()); ++e) {
      adj[static_cast<std::size_t>(basis[static_cast<std::size_t>(e)].i)].push_back(e);
      adj[static_cast<std::size_t>(m + basis[static_cast<std::size_t>(e)].j)].push_back(e);
    }
    std::vector<char> seen(static_cast<std::size_t>(m + n), 0);
    std::queue<int> q;
    u[0] = 0.0;
    seen[0] = 1;
    q.push(0);
    while (!q.empty()) {
      const int node = q.front();
      q.pop();
      for (int e : adj[static_cast<std::size_t>(node)]) {
        const BasicCell& c = basis[static_cast<std::size_t>(e)];
        const int other = node < m ? m + c.j : c.i;
        if (seen[static_cast<std::size_t>(other)]) continue;
        seen[static_cast<std::size_t>(other)] = 1;
        if (other >= m)
          v[static_cast<std::size_t>(other - m)] = cost(c.i, c.j) - u[static_cast<std::size_t>(c.i)];
        else
          u[static_cast<std::size_t>(other)] = cost(c.i, c.j) - v[static_cast<std::size_t>(c.j)];
        q.push(other);
      }
    }
    for (char s : seen)
      if (!s) throw std::logic_error("transport_min_cost: basis lost connectivity");
  };

  const long max_pivots = 200L * (m + n) * (m + n) + 10000L;
  for (long pivot = 0;; ++pivot) {
    if (pivot > max_pivots)
      throw NumericError("transport_min_cost: pivot limit exceeded (degenerate cycling?)");

    std::vector<double> u(static_cast<std::size_t>(m), 0.0), v(static_cast<std::size_t>(n), 0.0);
    solve_duals(u, v);

    int bi = -1, bj = -1;
    double best = -1e-10;  // stop when no reduced cost is meaningfully negative
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double rc = cost(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
        if (rc < best) {
          best = rc;
          bi = i;
          bj = j;
        }
      }
    if (bi < 0) break;

    // Path from row bi to col bj through the tree; with the entering cell it
    // closes the pivot cycle.
    std::vector<int> parent_edge(static_cast<std::size_t>(m + n), -1);
    std::vector<int> parent_node(static_cast<std::size_t>(m + n), -1);
    {
      std::vector<std::vector<int>> adj(static_cast<std::size_t>(m + n));
      for (int e = 0; e < static_cast<int>(basis.size()); ++e) {
        adj[static_cast<std::size_t>(basis[static_cast<std::size_t>(e)].i)].push_back(e);
        adj[static_cast<std::size_t>(m + basis[static_cast<std::size_t>(e)].j)].push_back(e);
      }
      std::vector<char> seen(static_cast<std::size_t>(m + n), 0);
      std::queue<int> q;
      seen[static_cast<std::size_t>(bi)] = 1;
      q.push(bi);
      while (!q.empty()) {
        const int node = q.front();
        q.pop();
        if (node == m + bj) break;
        for (int e : adj[static_cast<std::size_t>(node)]) {
          const BasicCell& c = basis[static_cast<std::size_t>(e)];
          const int other = node < m ? m + c.j : c.i;
          if (seen[static_cast<std::size_t>(other)]) continue;
          seen[static_cast<std::size_t>(other)] = 1;
          parent_edge[static_cast<std::size_t>(other)] = e;
          parent_node[static_cast<std::size_t>(other)] = node;
          q.push(other);
        }
      }
      if (!seen[static_cast<std::size_t>(m + bj)])
        throw std::logic_error("transport_min_cost: no tree path for entering cell");
    }

    // Walk back col bj -> row bi; edges alternate -,+,-,... after the
    // entering (+) cell.
    std::vector<int> cycle_edges;
    for (int node = m + bj; node != bi; node = parent_node[static_cast<std::size_t>(node)])
      cycle_edges.push_back(parent_edge[static_cast<std::size_t>(node)]);

    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    for (std::size_t k = 0; k < cycle_edges.size(); ++k) {
      if (k % 2 != 0) continue;  // minus edges are the 1st, 3rd, ... from the col end
      const BasicCell& c = basis[static_cast<std::size_t>(cycle_edges[k])];
      if (c.flow < theta) {
        theta = c.flow;
        leave = cycle_edges[k];
      }
    }
    for (std::size_t k = 0; k < cycle_edges.size(); ++k) {
      BasicCell& c = basis[static_cast<std::size_t>(cycle_edges[k])];
      c.flow += (k % 2 == 0) ? -theta : theta;
    }
    basis[static_cast<std::size_t>(leave)] = {bi, bj, theta};
  }

  double total = 0.0;
  for (const BasicCell& c : basis) total += c.flow * cost(c.i, c.j);
  return total;
}

double emd_exact(const PointCloud& x, const PointCloud& z, std::size_t max_cells) {
  x.validate();
  z.validate();
  require(x.dim() == z.dim(), "emd_exact: dimension mismatch");
  const std::size_t cells = static_cast<std::size_t>(x.size()) * static_cast<std::size_t>(z.size());
  if (cells > max_cells)
    throw std::invalid_argument("emd_exact: size limit exceeded (" + std::to_string(cells) + " > " +
                                std::to_string(max_cells) + " cells)");

  if (x.size() == z.size() && x.is_uniform() && z.is_uniform()) {
    Matrix cost(x.size(), z.size());
    for (int i = 0; i < x.size(); ++i)
      for (int j = 0; j < z.size(); ++j)
        cost(i, j) = (x.points.row(i) - z.points.row(j)).norm();
    return assignment_min_cost(cost) / static_cast<double>(x.size());
  }

  // General case: drop zero-weight points, then solve the balanced LP.
  std::vector<int> xi, zi;
  for (int i = 0; i < x.size(); ++i)
    if (x.weights(i) > 0.0) xi.push_back(i);
  for (int j = 0; j < z.size(); ++j)
    if (z.weights(j) > 0.0) zi.push_back(j);
  require(!xi.empty() && !zi.empty(), "emd_exact: cloud has zero total weight");

  Matrix cost(xi.size(), zi.size());
  Vector supply(xi.size()), demand(zi.size());
  for (std::size_t a = 0; a < xi.size(); ++a) {
    supply(static_cast<Eigen::Index>(a)) = x.weights(xi[a]);
    for (std::size_t b = 0; b < zi.size(); ++b)
      cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          (x.points.row(xi[a]) - z.points.row(zi[b])).norm();
  }
  for (std::size_t b = 0; b < zi.size(); ++b) demand(static_cast<Eigen::Index>(b)) = z.weights(zi[b]);
  return transport_min_cost(cost, supply, demand);
}

}  // namespace odc
