#include "odc/costs.hpp"

#include "odc/flow.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace odc;
using ad::Tape;
using ad::Var;
using oracles::Rng;

TEST_CASE("pointwise cost functionals") {
  Rng rng(1);

  SUBCASE("quadratic energy") {
    CHECK(quadratic_energy(Vector::Zero(3)) == 0.0);
    Vector u(2);
    u << 2.0, 0.0;
    CHECK(quadratic_energy(u) == 2.0);
    for (int i = 0; i < 20; ++i) {
      const Vector r = rng.vector(4);
      CHECK(std::abs(quadratic_energy(r) - 0.5 * r.dot(r)) < 1e-12);
    }
  }

  SUBCASE("flow deviation") {
    const Vector u = rng.vector(3);
    CHECK(flow_deviation(u, u) == 0.0);
    CHECK(flow_deviation(u, Vector::Zero(3)) == quadratic_energy(u));
    for (int i = 0; i < 20; ++i) {
      const Vector a = rng.vector(3), b = rng.vector(3);
      CHECK(std::abs(flow_deviation(a, b) - 0.5 * (a - b).squaredNorm()) < 1e-12);
    }
  }

  SUBCASE("scaling: quadratic_energy(l*u) = l^2 * quadratic_energy(u)") {
    for (int i = 0; i < 20; ++i) {
      const Vector u = rng.vector(3);
      const double l = rng.uniform(0.1, 4.0);
      CHECK(quadratic_energy(l * u) == doctest::Approx(l * l * quadratic_energy(u)).epsilon(1e-12));
    }
  }
}

TEST_CASE("interaction penalty") {
  InteractionSpec inv;  // defaults: inverse_power, c=1, alpha=2

  SUBCASE("single neighbor at distance 1 and 2") {
    Vector x = Vector::Zero(2);
    Matrix other(1, 2);
    other << 1.0, 0.0;
    CHECK(interaction_penalty(x, other, inv) == doctest::Approx(1.0).epsilon(1e-14));
    other << 2.0, 0.0;
    CHECK(interaction_penalty(x, other, inv) == doctest::Approx(0.25).epsilon(1e-14));
  }

  SUBCASE("kernel symmetry and monotonicity") {
    Rng rng(2);
    for (int i = 0; i < 30; ++i) {
      const Vector a = rng.vector(3), b = rng.vector(3);
      if ((a - b).norm() < 1e-6) continue;
      Matrix mb(1, 3), ma(1, 3);
      mb.row(0) = b.transpose();
      ma.row(0) = a.transpose();
      CHECK(interaction_penalty(a, mb, inv) ==
            doctest::Approx(interaction_penalty(b, ma, inv)).epsilon(1e-12));
    }
    // strictly decreasing in |x - y| for the inverse-power kernel
    Vector x = Vector::Zero(2);
    double prev = std::numeric_limits<double>::infinity();
    for (double r = 0.5; r < 5.0; r += 0.25) {
      Matrix other(1, 2);
      other << r, 0.0;
      const double v = interaction_penalty(x, other, inv);
      CHECK(v < prev);
      CHECK(v >= 0.0);
      prev = v;
    }
  }

  SUBCASE("log kernel matches c*ln|x-y|") {
    InteractionSpec lg;
    lg.kernel = InteractionKernel::kLog;
    lg.coeff = 1.7;
    Vector x = Vector::Zero(2);
    Matrix other(1, 2);
    other << 3.0, 4.0;  // distance 5
    CHECK(interaction_penalty(x, other, lg) == doctest::Approx(1.7 * std::log(5.0)).epsilon(1e-12));
  }

  SUBCASE("coincident points raise a numeric error naming the pair") {
    Vector x = Vector::Zero(2);
    Matrix others(2, 2);
    others << 1.0, 0.0, 1e-12, 0.0;
    CHECK_THROWS_AS(interaction_penalty(x, others, inv), NumericError);
  }

  SUBCASE("batched tape version matches the naive pairwise loop") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix x = rng.matrix(10, 3, 2.0);
      InteractionSpec spec;
      spec.alpha = trial % 2 == 0 ? 2.0 : 1.5;
      spec.coeff = 0.8;
      spec.weight = 1.3;
      Tape t;
      const Matrix got = batch_interaction(ad::wrap(t, t.constant(x)), spec).value();
      for (int i = 0; i < 10; ++i) {
        Matrix others(9, 3);
        int r = 0;
        for (int j = 0; j < 10; ++j)
          if (j != i) others.row(r++) = x.row(j);
        const double want = spec.weight * interaction_penalty(x.row(i).transpose(), others, spec);
        CHECK(oracles::rel_err(got(i, 0), want) < 1e-12);
      }
    }
  }

  SUBCASE("batched log kernel matches too") {
    Rng rng(4);
    const Matrix x = rng.matrix(6, 2, 3.0);
    InteractionSpec spec;
    spec.kernel = InteractionKernel::kLog;
    spec.coeff = 2.0;
    Tape t;
    const Matrix got = batch_interaction(ad::wrap(t, t.constant(x)), spec).value();
    for (int i = 0; i < 6; ++i) {
      Matrix others(5, 2);
      int r = 0;
      for (int j = 0; j < 6; ++j)
        if (j != i) others.row(r++) = x.row(j);
      CHECK(oracles::rel_err(got(i, 0), interaction_penalty(x.row(i).transpose(), others, spec)) <
            1e-10);
    }
  }
}

namespace {

ControlFn linear_control(const Matrix& gain) {
  return [gain](Var x) {
    return ad::matmul(x, ad::wrap(x.tape(), x.tape().constant(gain)));
  };
}

}  // namespace

TEST_CASE("accumulate_running_cost") {
  SUBCASE("u = 0 with quadratic energy costs nothing") {
    Tape t;
    ControlFn zero = [](Var x) { return 0.0 * x; };
    TrajectoryBatch traj = rollout(t, Matrix::Ones(4, 2), zero, DiffusionSpec::zero(), 0.1, 1.0,
                                   counter_noise(rng::Stream(0, "n")));
    CostSpec cost;
    CHECK(accumulate_running_cost(t, traj, cost).value()(0, 0) == 0.0);
  }

  SUBCASE("constant control costs T/2 |c|^2 exactly") {
    RowVector c(2);
    c << 1.5, -0.5;
    Tape t;
    ControlFn fn = [&](Var x) {
      return ad::wrap(t, t.constant(Matrix(c.replicate(x.rows(), 1))));
    };
    TrajectoryBatch traj =
        rollout(t, Matrix::Zero(3, 2), fn, DiffusionSpec::zero(), 0.25, 1.0,
                counter_noise(rng::Stream(0, "n")));
    CostSpec cost;
    const double want = 1.0 * 0.5 * c.squaredNorm();  // left Riemann sum of a constant
    CHECK(accumulate_running_cost(t, traj, cost).value()(0, 0) ==
          doctest::Approx(want).epsilon(1e-14));
  }

  SUBCASE("random control over 3 particles and 4 steps matches the naive loop") {
    Rng rng(5);
    const Matrix gain = rng.matrix(2, 2, 0.4);
    const Matrix x0 = rng.matrix(3, 2);
    const double h = 0.25, T = 1.0;

    InteractionSpec inter;
    inter.weight = 0.7;
    CostSpec cost;
    cost.interaction = inter;

    Tape t;
    TrajectoryBatch traj = rollout(t, x0, linear_control(gain), DiffusionSpec::isotropic(0.2), h,
                                   T, counter_noise(rng::Stream(1, "n")));
    const double got = accumulate_running_cost(t, traj, cost).value()(0, 0);

    // Naive recomputation: step the states by hand, sum h*(energy + V).
    double want = 0.0;
    Matrix x = x0;
    for (int k = 0; k < 4; ++k) {
      const Matrix u = x * gain;
      for (int i = 0; i < 3; ++i) {
        want += h * quadratic_energy(u.row(i).transpose()) / 3.0;
        Matrix others(2, 2);
        int r = 0;
        for (int j = 0; j < 3; ++j)
          if (j != i) others.row(r++) = x.row(j);
        want += h * inter.weight * interaction_penalty(x.row(i).transpose(), others, inter) / 3.0;
      }
      x = x + h * u + std::sqrt(h) * 0.2 * traj.noise[static_cast<std::size_t>(k)];
    }
    CHECK(oracles::rel_err(got, want) < 1e-10);
  }

  SUBCASE("flow deviation vanishes when the control rides the flow") {
    UniformFlow flow{(Vector(2) << 0.7, -0.2).finished()};
    CostSpec cost;
    cost.base = BaseCost::kFlowDeviation;
    cost.flow = &flow;

    Tape t;
    ControlFn ride = [&](Var x) {
      return ad::wrap(t, t.field_eval(x.id(), &flow));
    };
    TrajectoryBatch traj = rollout(t, Matrix::Zero(3, 2), ride, DiffusionSpec::zero(), 0.1, 1.0,
                                   counter_noise(rng::Stream(0, "n")));
    CHECK(accumulate_running_cost(t, traj, cost).value()(0, 0) == 0.0);
  }

  SUBCASE("base costs are nonnegative along arbitrary rollouts") {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
      Tape t;
      TrajectoryBatch traj =
          rollout(t, rng.matrix(4, 2), linear_control(rng.matrix(2, 2, 0.5)),
                  DiffusionSpec::isotropic(0.1), 0.2, 1.0,
                  counter_noise(rng::Stream(static_cast<std::uint64_t>(trial), "n")));
      CostSpec cost;
      CHECK(accumulate_running_cost(t, traj, cost).value()(0, 0) >= 0.0);
    }
  }
}
