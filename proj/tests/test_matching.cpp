#include "odc/matching.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace odc;
using ad::Tape;
using ad::Var;
using oracles::Rng;

namespace {

PointCloud cloud1d(std::initializer_list<double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double v : xs) m(i++, 0) = v;
  return PointCloud::uniform(std::move(m));
}

/// Linear potential phi(x) = a.x as a degenerate (no-hidden-layer) network.
struct LinearPhi {
  MLPSpec spec;
  NetworkParams params;
  explicit LinearPhi(const Vector& a) {
    spec.input_dim = static_cast<int>(a.size());
    spec.hidden_layers = 0;
    spec.hidden_width = 1;
    spec.output_dim = 1;
    params.weights.push_back(Matrix(a));
    params.biases.emplace_back(RowVector::Zero(1));
    params.spectral_u.emplace_back();
  }
};

double naive_chamfer(const Matrix& a, const Matrix& b) {
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

}  // namespace

TEST_CASE("dual gap") {
  Rng rng(1);

  SUBCASE("identical clouds give zero for any potential") {
    const Matrix pts = rng.matrix(12, 2);
    const PointCloud x = PointCloud::uniform(pts);
    MLPSpec spec;
    spec.input_dim = 2;
    spec.hidden_layers = 2;
    spec.hidden_width = 9;
    spec.output_dim = 1;
    const NetworkParams phi = xavier_initialize(spec, 4);
    CHECK(dual_gap_value(spec, phi, x, x) == 0.0);
  }

  SUBCASE("unit linear potential on a shifted cloud recovers the shift exactly") {
    Vector a(2);
    a << 3.0 / 5.0, 4.0 / 5.0;  // |a| = 1
    const double t = 1.75;
    const Matrix pts = rng.matrix(20, 2);
    Matrix shifted = pts;
    shifted.rowwise() -= (t * a).transpose();
    LinearPhi phi(a);
    const double gap =
        dual_gap_value(phi.spec, phi.params, PointCloud::uniform(pts), PointCloud::uniform(shifted));
    CHECK(gap == doctest::Approx(t).epsilon(1e-12));
  }

  SUBCASE("weak duality: 1-Lipschitz potential never exceeds the exact EMD") {
    for (int trial = 0; trial < 25; ++trial) {
      const Matrix xs = rng.matrix(9, 2, 2.0);
      const Matrix zs = rng.matrix(7, 2, 2.0);
      Vector a = rng.vector(2);
      a.normalize();
      LinearPhi phi(a);
      const double gap = dual_gap_value(phi.spec, phi.params, PointCloud::uniform(xs),
                                        PointCloud::uniform(zs));
      const double emd = emd_exact(PointCloud::uniform(xs), PointCloud::uniform(zs));
      CHECK(gap <= emd + 1e-6);
    }
  }

  SUBCASE("gap is differentiable in the X points") {
    MLPSpec spec;
    spec.input_dim = 2;
    spec.hidden_layers = 1;
    spec.hidden_width = 6;
    spec.output_dim = 1;
    const NetworkParams phi = xavier_initialize(spec, 9);
    const Matrix x0 = rng.matrix(4, 2);
    const Matrix z0 = rng.matrix(5, 2);

    Tape t;
    ParamVars pv = load_params(t, phi, false);
    Var xs = ad::wrap(t, t.input(x0));
    Var zs = ad::wrap(t, t.constant(z0));
    Var gap = dual_gap(spec, pv, xs, Vector(), zs, Vector());
    const Matrix got = t.gradients(gap.id(), {xs.id()})[0];

    const auto f = [&](const Matrix& x) {
      return dual_gap_value(spec, phi, PointCloud::uniform(x), PointCloud::uniform(z0));
    };
    const double step = 1e-6;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) {
        Matrix hi = x0, lo = x0;
        hi(i, j) += step;
        lo(i, j) -= step;
        CHECK(oracles::rel_err(got(i, j), (f(hi) - f(lo)) / (2 * step)) < 1e-4);
      }
  }
}

TEST_CASE("chamfer distance") {
  SUBCASE("identical clouds score zero") {
    Rng rng(2);
    const PointCloud x = PointCloud::uniform(rng.matrix(10, 3));
    CHECK(chamfer(x, x) == 0.0);
  }

  SUBCASE("singletons 0 and 1 in 1D score 2") {
    CHECK(chamfer(cloud1d({0.0}), cloud1d({1.0})) == 2.0);
  }

  SUBCASE("random 20 vs 15 points match the naive double loop") {
    Rng rng(3);
    const Matrix a = rng.matrix(20, 3);
    const Matrix b = rng.matrix(15, 3);
    const double want = naive_chamfer(a, b);
    CHECK(oracles::rel_err(chamfer(PointCloud::uniform(a), PointCloud::uniform(b)), want) < 1e-10);

    Tape t;
    Var xs = ad::wrap(t, t.constant(a));
    CHECK(oracles::rel_err(chamfer(xs, b).value()(0, 0), want) < 1e-10);
  }

  SUBCASE("zero iff the clouds are equal as sets") {
    Matrix a(3, 2), b(3, 2);
    a << 0, 0, 1, 1, 2, 2;
    b << 2, 2, 0, 0, 1, 1;  // same set, different order
    CHECK(chamfer(PointCloud::uniform(a), PointCloud::uniform(b)) <= 1e-24);
    b(0, 0) += 1e-3;
    CHECK(chamfer(PointCloud::uniform(a), PointCloud::uniform(b)) > 1e-7);
  }

  SUBCASE("gradient w.r.t. the moving cloud matches finite differences") {
    Rng rng(4);
    const Matrix a0 = rng.matrix(6, 2);
    const Matrix b = rng.matrix(4, 2);
    Tape t;
    Var xs = ad::wrap(t, t.input(a0));
    Var c = chamfer(xs, b);
    const Matrix got = t.gradients(c.id(), {xs.id()})[0];
    const double step = 1e-6;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) {
        Matrix hi = a0, lo = a0;
        hi(i, j) += step;
        lo(i, j) -= step;
        const double want = (naive_chamfer(hi, b) - naive_chamfer(lo, b)) / (2 * step);
        CHECK(oracles::rel_err(got(i, j), want) < 1e-4);
      }
  }
}

TEST_CASE("exact EMD") {
  SUBCASE("identical clouds and singletons") {
    Rng rng(5);
    const PointCloud x = PointCloud::uniform(rng.matrix(8, 2));
    CHECK(emd_exact(x, x) == doctest::Approx(0.0).epsilon(1e-12));

    Matrix a(1, 2), b(1, 2);
    a << 0.0, 0.0;
    b << 3.0, 4.0;
    CHECK(emd_exact(PointCloud::uniform(a), PointCloud::uniform(b)) ==
          doctest::Approx(5.0).epsilon(1e-12));
  }

  SUBCASE("the two-point example picks the monotone matching") {
    // identity assignment: (|0-1| + |2-3|)/2 = 1; the swap costs 2.
    CHECK(emd_exact(cloud1d({0.0, 2.0}), cloud1d({1.0, 3.0})) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("equal-size uniform clouds follow the 1D quantile coupling") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 12;
      std::vector<double> xs(n), zs(n);
      for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = rng.uniform(-5, 5);
        zs[static_cast<std::size_t>(i)] = rng.uniform(-5, 5);
      }
      Matrix mx(n, 1), mz(n, 1);
      for (int i = 0; i < n; ++i) {
        mx(i, 0) = xs[static_cast<std::size_t>(i)];
        mz(i, 0) = zs[static_cast<std::size_t>(i)];
      }
      std::sort(xs.begin(), xs.end());
      std::sort(zs.begin(), zs.end());
      double want = 0.0;
      for (int i = 0; i < n; ++i) want += std::abs(xs[static_cast<std::size_t>(i)] - zs[static_cast<std::size_t>(i)]) / n;
      CHECK(emd_exact(PointCloud::uniform(mx), PointCloud::uniform(mz)) ==
            doctest::Approx(want).epsilon(1e-9));
    }
  }

  SUBCASE("metric axioms hold on random triples") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      const PointCloud a = PointCloud::uniform(rng.matrix(6, 2));
      const PointCloud b = PointCloud::uniform(rng.matrix(6, 2));
      const PointCloud c = PointCloud::uniform(rng.matrix(6, 2));
      const double ab = emd_exact(a, b), ba = emd_exact(b, a);
      const double bc = emd_exact(b, c), ac = emd_exact(a, c);
      CHECK(std::abs(ab - ba) < 1e-8);
      CHECK(ac <= ab + bc + 1e-8);
      CHECK(emd_exact(a, a) < 1e-10);
    }
  }

  SUBCASE("weighted clouds agree with a replicated uniform oracle") {
    Rng rng(8);
    for (int trial = 0; trial < 15; ++trial) {
      // Integer weights over a common denominator L, expanded to L copies.
      const int nx = 3, nz = 4, L = 12;
      Matrix xs = rng.matrix(nx, 2), zs = rng.matrix(nz, 2);
      std::vector<int> wx = {2, 4, 6};
      std::vector<int> wz = {3, 3, 3, 3};
      Vector vx(nx), vz(nz);
      for (int i = 0; i < nx; ++i) vx(i) = wx[static_cast<std::size_t>(i)] / double(L);
      for (int j = 0; j < nz; ++j) vz(j) = wz[static_cast<std::size_t>(j)] / double(L);

      Matrix ex(L, 2), ez(L, 2);
      int r = 0;
      for (int i = 0; i < nx; ++i)
        for (int k = 0; k < wx[static_cast<std::size_t>(i)]; ++k) ex.row(r++) = xs.row(i);
      r = 0;
      for (int j = 0; j < nz; ++j)
        for (int k = 0; k < wz[static_cast<std::size_t>(j)]; ++k) ez.row(r++) = zs.row(j);

      const double weighted = emd_exact(PointCloud::weighted(xs, vx), PointCloud::weighted(zs, vz));
      const double expanded = emd_exact(PointCloud::uniform(ex), PointCloud::uniform(ez));
      CHECK(weighted == doctest::Approx(expanded).epsilon(1e-9));
    }
  }

  SUBCASE("unequal-size uniform clouds (transport route) on a hand case") {
    // X = {0} vs Z = {1, 3}: cost 0.5*1 + 0.5*3 = 2.
    CHECK(emd_exact(cloud1d({0.0}), cloud1d({1.0, 3.0})) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("size limit is enforced") {
    Rng rng(9);
    const PointCloud a = PointCloud::uniform(rng.matrix(40, 2));
    CHECK_THROWS_AS(emd_exact(a, a, /*max_cells=*/100), std::invalid_argument);
  }
}
