#include "odc/tape.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace odc;
using ad::Tape;
using ad::Var;
using oracles::Rng;

namespace {

Matrix scalar1(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

/// d<seed,out>/d(input) by replaying the tape at perturbed input values.
Matrix fd_input_gradient(Tape& tape, ad::NodeId out, int input_index, const Matrix& x0,
                         const Matrix& seed, double step = 1e-5) {
  Matrix g(x0.rows(), x0.cols());
  for (Eigen::Index i = 0; i < x0.rows(); ++i)
    for (Eigen::Index j = 0; j < x0.cols(); ++j) {
      Matrix hi = x0, lo = x0;
      hi(i, j) += step;
      lo(i, j) -= step;
      tape.set_input(input_index, hi);
      tape.replay();
      const double fhi = seed.cwiseProduct(tape.value(out)).sum();
      tape.set_input(input_index, lo);
      tape.replay();
      const double flo = seed.cwiseProduct(tape.value(out)).sum();
      g(i, j) = (fhi - flo) / (2.0 * step);
    }
  tape.set_input(input_index, x0);
  tape.replay();
  return g;
}

struct QuadraticField final : ad::ExternalField {
  int input_dim() const override { return 2; }
  int output_dim() const override { return 2; }
  Vector value(const Vector& x) const override {
    Vector v(2);
    v << x(0) * x(0) - x(1), 3.0 * x(0) * x(1);
    return v;
  }
  Matrix jacobian(const Vector& x) const override {
    Matrix j(2, 2);
    j << 2.0 * x(0), -1.0, 3.0 * x(1), 3.0 * x(0);
    return j;
  }
};

}  // namespace

TEST_CASE("forward evaluation of simple expressions") {
  Tape t;
  Var x = ad::wrap(t, t.input(scalar1(0.0)));
  CHECK(ad::tanh(x).value()(0, 0) == 0.0);

  Tape t2;
  Var y = ad::wrap(t2, t2.input(scalar1(3.0)));
  CHECK((y * y).value()(0, 0) == 9.0);
}

TEST_CASE("two-layer network forward matches plain matrix arithmetic") {
  Rng rng(42);
  const Matrix w0 = rng.matrix(3, 5, 0.6);
  const Matrix w1 = rng.matrix(5, 2, 0.6);
  const RowVector b0 = rng.vector(5, 0.3).transpose();
  const RowVector b1 = rng.vector(2, 0.3).transpose();
  const Matrix x = rng.matrix(4, 3);

  Tape t;
  Var xs = ad::wrap(t, t.input(x));
  Var h = ad::tanh(ad::add_row_vector(ad::matmul(xs, ad::wrap(t, t.constant(w0))),
                                      ad::wrap(t, t.constant(Matrix(b0)))));
  Var out = ad::add_row_vector(ad::matmul(h, ad::wrap(t, t.constant(w1))),
                               ad::wrap(t, t.constant(Matrix(b1))));

  const Matrix want = oracles::plain_tanh_mlp({w0, w1}, {b0, b1}, x);
  CHECK((out.value() - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reverse gradients of scalar classics") {
  Tape t;
  Var x = ad::wrap(t, t.input(scalar1(3.0)));
  Var y = x * x;
  CHECK(t.gradients(y.id(), {x.id()})[0](0, 0) == doctest::Approx(6.0).epsilon(1e-14));

  Tape t2;
  Var z = ad::wrap(t2, t2.input(scalar1(0.0)));
  Var w = ad::tanh(z);
  CHECK(t2.gradients(w.id(), {z.id()})[0](0, 0) == 1.0);
}

TEST_CASE("gradient check across the primitive set") {
  Rng rng(7);
  const auto check_unary = [&](const char* name, const std::function<Var(Var)>& build,
                               double lo, double hi) {
    for (int trial = 0; trial < 100; ++trial) {
      Tape t;
      Matrix x0(2, 3);
      for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) x0(i, j) = rng.uniform(lo, hi);
      Var x = ad::wrap(t, t.input(x0));
      Var y = build(x);
      const Matrix seed = rng.matrix(y.rows(), y.cols());
      const Matrix got = t.gradients(y.id(), {x.id()}, t.constant(seed))[0];
      const Matrix want = fd_input_gradient(t, y.id(), 0, x0, seed);
      const double err = (got - want).cwiseAbs().maxCoeff() /
                         std::max(1.0, want.cwiseAbs().maxCoeff());
      INFO(name << " trial " << trial);
      CHECK(err < 1e-5);
    }
  };

  check_unary("tanh", [](Var x) { return ad::tanh(x); }, -2, 2);
  check_unary("neg", [](Var x) { return -x; }, -2, 2);
  check_unary("scale", [](Var x) { return 2.5 * x; }, -2, 2);
  check_unary("add_scalar", [](Var x) { return x + 0.7; }, -2, 2);
  check_unary("mul_self", [](Var x) { return x * x; }, -2, 2);
  check_unary("pow", [](Var x) { return ad::pow(x, -1.5); }, 0.5, 2.0);
  check_unary("log", [](Var x) { return ad::log(x); }, 0.5, 3.0);
  check_unary("relu", [](Var x) { return ad::relu(x); }, 0.2, 2.0);
  check_unary("repu", [](Var x) { return ad::repu(x); }, -2, 2);
  check_unary("sin", [](Var x) { return ad::sin(x); }, -2, 2);
  check_unary("cos", [](Var x) { return ad::cos(x); }, -2, 2);
  check_unary("transpose", [](Var x) { return ad::transpose(x); }, -2, 2);
  check_unary("sum", [](Var x) { return ad::sum(x); }, -2, 2);
  check_unary("mean", [](Var x) { return ad::mean(x); }, -2, 2);
  check_unary("row_sum", [](Var x) { return ad::row_sum(x); }, -2, 2);
  check_unary("col_sum", [](Var x) { return ad::col_sum(x); }, -2, 2);
  check_unary("squared_norm_rows", [](Var x) { return ad::squared_norm_rows(x); }, -2, 2);

  SUBCASE("binary and structured ops") {
    for (int trial = 0; trial < 100; ++trial) {
      Tape t;
      const Matrix a0 = rng.matrix(3, 2);
      const Matrix b0 = rng.matrix(2, 4);
      Var a = ad::wrap(t, t.input(a0));
      Var b = ad::wrap(t, t.input(b0));
      Var y = ad::matmul(a, b);
      const Matrix seed = rng.matrix(3, 4);
      const auto grads = t.gradients(y.id(), {a.id(), b.id()}, t.constant(seed));
      CHECK((grads[0] - fd_input_gradient(t, y.id(), 0, a0, seed)).cwiseAbs().maxCoeff() < 1e-5);
      CHECK((grads[1] - fd_input_gradient(t, y.id(), 1, b0, seed)).cwiseAbs().maxCoeff() < 1e-5);
    }
    for (int trial = 0; trial < 100; ++trial) {
      Tape t;
      const Matrix x0 = rng.matrix(4, 3);
      const Matrix r0 = rng.matrix(1, 3);
      Var x = ad::wrap(t, t.input(x0));
      Var r = ad::wrap(t, t.input(r0));
      Var y = ad::add_row_vector(x, r);
      const Matrix seed = rng.matrix(4, 3);
      const auto grads = t.gradients(y.id(), {x.id(), r.id()}, t.constant(seed));
      CHECK((grads[0] - fd_input_gradient(t, y.id(), 0, x0, seed)).cwiseAbs().maxCoeff() < 1e-5);
      CHECK((grads[1] - fd_input_gradient(t, y.id(), 1, r0, seed)).cwiseAbs().maxCoeff() < 1e-5);
    }
  }

  SUBCASE("broadcasts, row_min, external field") {
    for (int trial = 0; trial < 50; ++trial) {
      Tape t;
      const Matrix x0 = rng.matrix(3, 1);
      Var x = ad::wrap(t, t.input(x0));
      Var y = ad::broadcast_cols(x, 4);
      const Matrix seed = rng.matrix(3, 4);
      CHECK((t.gradients(y.id(), {x.id()}, t.constant(seed))[0] -
             fd_input_gradient(t, y.id(), 0, x0, seed))
                .cwiseAbs()
                .maxCoeff() < 1e-5);
    }
    for (int trial = 0; trial < 50; ++trial) {
      Tape t;
      const Matrix x0 = rng.matrix(3, 4);  // generic entries: argmin is stable
      Var x = ad::wrap(t, t.input(x0));
      Var y = ad::row_min(x);
      const Matrix seed = rng.matrix(3, 1);
      CHECK((t.gradients(y.id(), {x.id()}, t.constant(seed))[0] -
             fd_input_gradient(t, y.id(), 0, x0, seed))
                .cwiseAbs()
                .maxCoeff() < 1e-5);
    }
    QuadraticField field;
    for (int trial = 0; trial < 50; ++trial) {
      Tape t;
      const Matrix x0 = rng.matrix(3, 2);
      Var x = ad::wrap(t, t.input(x0));
      Var y = ad::wrap(t, t.field_eval(x.id(), &field));
      const Matrix seed = rng.matrix(3, 2);
      CHECK((t.gradients(y.id(), {x.id()}, t.constant(seed))[0] -
             fd_input_gradient(t, y.id(), 0, x0, seed))
                .cwiseAbs()
                .maxCoeff() < 1e-4);
    }
  }
}

TEST_CASE("gradient is linear in the seed cotangent") {
  Rng rng(11);
  Tape t;
  const Matrix x0 = rng.matrix(3, 3);
  Var x = ad::wrap(t, t.input(x0));
  Var y = ad::tanh(ad::matmul(x, x)) * x;
  const Matrix c1 = rng.matrix(3, 3);
  const Matrix c2 = rng.matrix(3, 3);
  const double a = 1.7, b = -0.4;

  const Matrix g1 = t.gradients(y.id(), {x.id()}, t.constant(c1))[0];
  const Matrix g2 = t.gradients(y.id(), {x.id()}, t.constant(c2))[0];
  const Matrix gc = t.gradients(y.id(), {x.id()}, t.constant(a * c1 + b * c2))[0];
  CHECK((gc - (a * g1 + b * g2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("determinism: identical tapes give bit-identical values and gradients") {
  const auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    Tape t;
    Var x = ad::wrap(t, t.input(rng.matrix(4, 4)));
    Var y = ad::sum(ad::tanh(ad::matmul(x, x)) * x);
    const Matrix g = t.gradients(y.id(), {x.id()})[0];
    return std::make_pair(y.value()(0, 0), g);
  };
  const auto [v1, g1] = run(99);
  const auto [v2, g2] = run(99);
  CHECK(v1 == v2);
  CHECK((g1 - g2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("input_gradient: linear and quadratic potentials") {
  SUBCASE("psi = a.x has constant gradient a") {
    Tape t;
    Matrix a(3, 1);
    a << 2.0, -1.0, 0.5;
    Matrix x0(2, 3);
    x0 << 1, 2, 3, -1, 0, 4;
    Var x = ad::wrap(t, t.input(x0));
    Var psi = ad::matmul(x, ad::wrap(t, t.constant(a)));  // (2 x 1)
    ad::NodeId g = t.input_gradient(t.sum_all(psi.id()), x.id());
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) CHECK(t.value(g)(i, j) == a(j, 0));
  }
  SUBCASE("psi = 0.5|x|^2 has gradient x") {
    Tape t;
    Matrix x0(2, 3);
    x0 << 1, 2, 3, -1, 0, 4;
    Var x = ad::wrap(t, t.input(x0));
    Var psi = 0.5 * ad::sum(x * x);
    ad::NodeId g = t.input_gradient(psi.id(), x.id());
    CHECK((t.value(g) - x0).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("input_gradient rejects non-scalar outputs") {
    Tape t;
    Var x = ad::wrap(t, t.input(Matrix::Ones(2, 2)));
    CHECK_THROWS_AS(t.input_gradient(x.id(), x.id()), std::invalid_argument);
  }
}

TEST_CASE("grad-of-grad through an input gradient matches finite differences") {
  // theta scales the potential psi_theta(x) = sum tanh(x * (theta W)); the
  // loss |grad_x psi|^2 is differentiated w.r.t. theta.
  Rng rng(21);
  const Matrix w = rng.matrix(3, 4, 0.8);
  const Matrix x0 = rng.matrix(5, 3);

  const auto loss_at = [&](double theta) {
    Tape t;
    Var th = ad::wrap(t, t.input(scalar1(theta)));
    Var x = ad::wrap(t, t.input(x0));
    Var wth = ad::wrap(t, t.broadcast_all(th.id(), 3, 4)) * ad::wrap(t, t.constant(w));
    Var psi = ad::sum(ad::tanh(ad::matmul(x, wth)));
    Var u = ad::wrap(t, t.input_gradient(psi.id(), x.id()));
    Var loss = ad::sum(u * u);
    return std::make_pair(loss.value()(0, 0), t.gradients(loss.id(), {th.id()})[0](0, 0));
  };

  const double theta = 0.6;
  const double got = loss_at(theta).second;
  const double step = 1e-5;
  const double want = (loss_at(theta + step).first - loss_at(theta - step).first) / (2 * step);
  CHECK(oracles::rel_err(got, want) < 1e-4);
}

TEST_CASE("second-order consistency on psi = 0.5 s^2 |x|^2 is exact") {
  // u = grad psi = s^2 x; d|u|^2/ds = 4 s^3 |x|^2. Small integers keep every
  // intermediate product exact in floating point.
  Tape t;
  Var s = ad::wrap(t, t.input(scalar1(2.0)));
  Matrix x0(1, 2);
  x0 << 1.0, 2.0;
  Var x = ad::wrap(t, t.input(x0));
  Var s2 = s * s;
  Var psi = 0.5 * ad::sum(ad::wrap(t, t.broadcast_all(s2.id(), 1, 2)) * x * x);
  Var u = ad::wrap(t, t.input_gradient(psi.id(), x.id()));
  CHECK(u.value()(0, 0) == 4.0);
  CHECK(u.value()(0, 1) == 8.0);
  Var loss = ad::sum(u * u);
  CHECK(loss.value()(0, 0) == 80.0);
  CHECK(t.gradients(loss.id(), {s.id()})[0](0, 0) == 160.0);  // 4 s^3 |x|^2
}

TEST_CASE("error paths") {
  Tape t;
  Var a = ad::wrap(t, t.input(Matrix::Ones(2, 3)));
  Var b = ad::wrap(t, t.input(Matrix::Ones(3, 2)));
  CHECK_THROWS_AS(a + b, std::invalid_argument);

  SUBCASE("non-finite values are rejected with the op named") {
    Tape t2;
    Var x = ad::wrap(t2, t2.input(scalar1(-1.0)));
    CHECK_THROWS_AS(ad::log(x), NumericError);
    try {
      ad::log(ad::wrap(t2, t2.input(scalar1(-2.0))));
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("log") != std::string::npos);
    }
  }

  SUBCASE("third-order rules are reported as missing") {
    QuadraticField field;
    Tape t3;
    Var x = ad::wrap(t3, t3.input(Matrix::Ones(2, 2)));
    Var y = ad::wrap(t3, t3.field_eval(x.id(), &field));
    Var s = ad::sum(y);
    ad::NodeId g = t3.backward(s.id(), {x.id()})[0];  // appends a field_vjp node
    CHECK_THROWS_AS(t3.backward(t3.sum_all(g), {x.id()}), std::invalid_argument);
  }
}

TEST_CASE("replay reproduces stored values bit for bit") {
  Rng rng(33);
  Tape t;
  const Matrix x0 = rng.matrix(3, 3);
  Var x = ad::wrap(t, t.input(x0));
  Var y = ad::tanh(ad::matmul(x, x)) + 0.3 * x;
  t.mark_output(y.id());
  const Matrix before = y.value();
  const std::vector<Matrix> out = t.forward_eval({x0});
  CHECK((out[0] - before).cwiseAbs().maxCoeff() == 0.0);

  // Perturbed inputs propagate through the same graph.
  Matrix x1 = x0;
  x1(0, 0) += 0.5;
  const Matrix moved = t.forward_eval({x1})[0];
  CHECK(moved(0, 0) != before(0, 0));
}
