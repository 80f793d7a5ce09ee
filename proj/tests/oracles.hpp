#pragma once

// Independent oracles used by the tests: finite differences, plain-arithmetic
// recomputations and brute-force loops. Nothing here goes through the tape.

#include "odc/common.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <random>

namespace oracles {

using odc::Matrix;
using odc::RowVector;
using odc::Vector;

inline double rel_err(double got, double want) {
  const double scale = std::max({std::abs(got), std::abs(want), 1e-12});
  return std::abs(got - want) / scale;
}

/// Central finite differences of a scalar function, step 1e-5.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double step = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector hi = x, lo = x;
    hi(i) += step;
    lo(i) -= step;
    g(i) = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

inline double max_rel_err(const Vector& got, const Vector& want) {
  double worst = 0.0;
  const double scale = std::max(1e-10, want.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < got.size(); ++i)
    worst = std::max(worst, std::abs(got(i) - want(i)) / std::max(scale, std::abs(want(i))));
  return worst;
}

/// Largest singular value by full SVD (oracle for power iteration).
inline double svd_top_singular(const Matrix& w) {
  Eigen::JacobiSVD<Matrix> svd(w);
  return svd.singularValues()(0);
}

/// Plain-arithmetic forward pass of a tanh MLP given explicit layers,
/// independent of the network module's assembly.
inline Matrix plain_tanh_mlp(const std::vector<Matrix>& weights,
                             const std::vector<RowVector>& biases, const Matrix& x) {
  Matrix h = x;
  for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
    h = h * weights[l];
    h.rowwise() += biases[l];
    h = h.array().tanh().matrix();
  }
  Matrix out = h * weights.back();
  out.rowwise() += biases.back();
  return out;
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  double normal() { return std::normal_distribution<double>()(gen); }
  Matrix matrix(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * normal();
    return m;
  }
  Vector vector(Eigen::Index n, double scale = 1.0) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal();
    return v;
  }
};

}  // namespace oracles
