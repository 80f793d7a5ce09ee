#pragma once

#include "odc/common.hpp"
#include "odc/network.hpp"
#include "odc/tape.hpp"

#include <cstddef>

namespace odc {

/// A weighted point set; weights default to uniform and must sum to 1.
struct PointCloud {
  Matrix points;   // M x d
  Vector weights;  // size M

  static PointCloud uniform(Matrix pts);
  static PointCloud weighted(Matrix pts, Vector w);

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
  bool is_uniform(double tol = 1e-12) const;
  void validate() const;
};

/// Empirical W1 dual objective E_X[phi] - E_Z[phi] for a (spectrally
/// normalized) potential phi, built on the tape of `x_points`. Differentiable
/// w.r.t. the potential parameters and the X points. Weights may be empty
/// (uniform).
ad::Var dual_gap(const MLPSpec& phi_spec, const ParamVars& phi, ad::Var x_points,
                 const Vector& x_weights, ad::Var z_points, const Vector& z_weights);

/// Convenience: the dual gap as a number, on a scratch tape.
double dual_gap_value(const MLPSpec& phi_spec, const NetworkParams& phi, const PointCloud& x,
                      const PointCloud& z);

/// Chamfer distance: sum_i min_j |x_i - z_j|^2 + sum_j min_i |x_i - z_j|^2
/// (squared distances, plain sums). Weights play no role.
double chamfer(const PointCloud& x, const PointCloud& z);

/// Tape version, differentiable w.r.t. the X points.
ad::Var chamfer(ad::Var x_points, const Matrix& z_points);

/// Exact discrete W1 (Earth Mover's Distance) with Euclidean ground cost:
/// Hungarian assignment for equal-size uniform clouds, otherwise a
/// transportation-simplex solve of the balanced LP. Test/eval oracle.
double emd_exact(const PointCloud& x, const PointCloud& z, std::size_t max_cells = 1000000);

/// Minimum-cost perfect matching value of a square cost matrix (exact).
double assignment_min_cost(const Matrix& cost);

/// Optimal value of the balanced transportation LP min <C, P> subject to
/// row sums = supply, col sums = demand (both positive, equal totals).
double transport_min_cost(const Matrix& cost, const Vector& supply, const Vector& demand);

}  // namespace odc
