#include "odc/trainer.hpp"

#include "odc/rng.hpp"

#include <chrono>
#include <cmath>

namespace odc {

Matcher matcher_from_string(const std::string& s) {
  if (s == "wasserstein") return Matcher::kWasserstein;
  if (s == "chamfer") return Matcher::kChamfer;
  throw std::invalid_argument("unknown matcher '" + s + "' (expected wasserstein or chamfer)");
}

std::string to_string(Matcher m) {
  return m == Matcher::kWasserstein ? "wasserstein" : "chamfer";
}

void TrainConfig::validate() const {
  require(gamma >= 0.0, "TrainConfig: gamma must be >= 0");
  require(outer_iters >= 1, "TrainConfig: outer_iters must be >= 1");
  require(lr > 0.0, "TrainConfig: learning rate must be > 0");
  require(matcher != Matcher::kWasserstein || inner_iters >= 1,
          "TrainConfig: inner_iters must be >= 1 with the wasserstein matcher");
  require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  require(param_radius > 0.0, "TrainConfig: param_radius must be > 0");
  require(metrics_every >= 1, "TrainConfig: metrics_every must be >= 1");
}

OptimizerState OptimizerState::adam(AdamParams hp_) {
  OptimizerState s;
  s.kind = OptimizerKind::kAdam;
  s.hp = hp_;
  return s;
}

Vector adam_update(OptimizerState& state, const Vector& grad, double lr) {
  if (state.m.size() != grad.size()) {
    state.m = Vector::Zero(grad.size());
    state.v = Vector::Zero(grad.size());
    state.step_count = 0;
  }
  state.step_count += 1;
  const double b1 = state.hp.beta1, b2 = state.hp.beta2;
  state.m = b1 * state.m + (1.0 - b1) * grad;
  state.v = b2 * state.v + (1.0 - b2) * grad.cwiseProduct(grad);
  const double mc = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double vc = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  Vector mhat = state.m / mc;
  Vector denom = ((state.v / vc).array().sqrt() + state.hp.eps).matrix();
  return (-lr) * mhat.cwiseQuotient(denom);
}

Vector project_ball(const Vector& theta, double radius) {
  const double norm = theta.norm();
  if (!(norm > radius)) return theta;
  return theta * (radius / norm);
}

Vector outer_control_step(const Vector& theta, const Vector& grad, OptimizerState& state,
                          double lr, double radius) {
  Vector step = state.kind == OptimizerKind::kAdam ? adam_update(state, grad, lr)
                                                   : Vector((-lr) * grad);
  return project_ball(theta + step, radius);
}

Vector gradient_mapping(const Vector& theta, const Vector& grad, double tau, double radius) {
  require(tau > 0.0, "gradient_mapping: tau must be > 0");
  Vector candidate = theta - tau * grad;
  if (!(candidate.norm() > radius)) return grad;  // interior step: exactly the gradient
  return (theta - project_ball(candidate, radius)) / tau;
}

ControlFn make_control_fn(const MLPSpec& spec, ControlKind kind, const ParamVars& params) {
  if (kind == ControlKind::kPotentialGradient)
    return [&spec, &params](ad::Var x) { return potential_gradient_control(spec, params, x); };
  return [&spec, &params](ad::Var x) { return direct_control(spec, params, x); };
}

namespace {

Vector flatten_grads(const NetworkParams& shape, const std::vector<Matrix>& grads) {
  Vector g(shape.parameter_count());
  Eigen::Index at = 0;
  std::size_t idx = 0;
  for (const Matrix& w : shape.weights) {
    g.segment(at, w.size()) = Eigen::Map<const Vector>(grads[idx].data(), grads[idx].size());
    at += w.size();
    ++idx;
  }
  for (const RowVector& b : shape.biases) {
    g.segment(at, b.size()) = Eigen::Map<const Vector>(grads[idx].data(), grads[idx].size());
    at += b.size();
    ++idx;
  }
  return g;
}

}  // namespace

int inner_dual_ascent(NetworkParams& dual, const MLPSpec& dual_spec, const Matrix& x_terminal,
                      const Matrix& z_targets, double lr, int steps, OptimizerState* opt) {
  require(lr >= 0.0, "inner_dual_ascent: lr must be >= 0");
  int done = 0;
  for (int s = 0; s < steps; ++s) {
    ad::Tape tape;
    ParamVars eta = load_params(tape, dual, /*trainable=*/true);
    ad::Var xs = ad::wrap(tape, tape.constant(x_terminal));
    ad::Var zs = ad::wrap(tape, tape.constant(z_targets));
    ad::Var gap = dual_gap(dual_spec, eta, xs, Vector(), zs, Vector());
    Vector g = flatten_grads(dual, tape.gradients(gap.id(), eta.node_ids()));

    Vector delta = opt != nullptr && opt->kind == OptimizerKind::kAdam
                       ? adam_update(*opt, Vector(-g), lr)  // ascent
                       : Vector(lr * g);
    ++done;
    if (delta.cwiseAbs().maxCoeff() == 0.0) continue;  // nothing moved; stay put
    dual.unflatten(dual.flatten() + delta);
    spectral_normalize(dual, 1);
  }
  return done;
}

ObjectiveParts empirical_objective(ad::Tape& tape, const TrajectoryBatch& traj,
                                   const CostSpec& cost, double gamma, Matcher matcher,
                                   const MLPSpec& dual_spec, const NetworkParams& dual,
                                   const Matrix& z_targets) {
  ObjectiveParts parts;
  parts.running = accumulate_running_cost(tape, traj, cost);
  ad::Var x_terminal = ad::wrap(tape, traj.terminal());
  if (matcher == Matcher::kWasserstein) {
    ParamVars eta = load_params(tape, dual, /*trainable=*/false);
    ad::Var zs = ad::wrap(tape, tape.constant(z_targets));
    parts.match = dual_gap(dual_spec, eta, x_terminal, Vector(), zs, Vector());
  } else {
    parts.match = chamfer(x_terminal, z_targets);
  }
  parts.total = parts.running + gamma * parts.match;
  return parts;
}

void TrainProblem::validate() const {
  require(initial_states.rows() >= 1, "TrainProblem: no initial samples");
  require(target_samples.rows() >= 1, "TrainProblem: no target samples");
  require(initial_states.cols() == target_samples.cols(), "TrainProblem: dimension mismatch");
  require(h > 0.0 && h <= T, "TrainProblem: need 0 < h <= T");
  control_spec.validate();
  dual_spec.validate();
  cost.validate();
  require(control_spec.input_dim == static_cast<int>(initial_states.cols()),
          "TrainProblem: control input_dim mismatch");
  require(dual_spec.input_dim == static_cast<int>(initial_states.cols()),
          "TrainProblem: dual input_dim mismatch");
  require(dual_spec.output_dim == 1, "TrainProblem: dual network must be scalar-valued");
  if (control_kind == ControlKind::kPotentialGradient)
    require(control_spec.output_dim == 1, "TrainProblem: potential must be scalar-valued");
  else
    require(control_spec.output_dim == control_spec.input_dim,
            "TrainProblem: direct control must map to the state dimension");
  train.validate();
}

TrainResult odc_train(const TrainProblem& problem, const TrainState* resume,
                      const MetricsCallback& on_metrics) {
  problem.validate();
  const TrainConfig& tc = problem.train;
  const int n_train = static_cast<int>(problem.initial_states.rows());
  const int n_targets = static_cast<int>(problem.target_samples.rows());
  const int batch = std::min(tc.batch_size, n_train);
  const int zbatch = std::min(tc.batch_size, n_targets);

  TrainResult result;
  TrainState& st = result.state;
  if (resume != nullptr) {
    st = *resume;
  } else {
    st.control = xavier_initialize(problem.control_spec, rng::mix(problem.seed, 0xc0));
    st.dual = xavier_initialize(problem.dual_spec, rng::mix(problem.seed, 0xd1));
    spectral_normalize(st.dual, 1);
    st.opt_control = tc.optimizer == OptimizerKind::kAdam ? OptimizerState::adam(tc.adam)
                                                          : OptimizerState::sgd();
    st.opt_dual = tc.inner_optimizer == OptimizerKind::kAdam ? OptimizerState::adam(tc.adam)
                                                             : OptimizerState::sgd();
    st.next_iter = 0;
  }

  const rng::Stream batch_stream(problem.seed, "minibatch");
  const rng::Stream zbatch_stream(problem.seed, "target-batch");
  const rng::Stream noise_stream(problem.seed, "noise");

  int calm_iters = 0;
  for (int k = st.next_iter; k < tc.outer_iters; ++k) {
    const auto tick = std::chrono::steady_clock::now();
    try {
      const std::vector<int> rows =
          rng::sample_indices(batch_stream, static_cast<std::uint64_t>(k), n_train, batch);
      const std::vector<int> zrows =
          rng::sample_indices(zbatch_stream, static_cast<std::uint64_t>(k), n_targets, zbatch);
      Matrix x0(batch, problem.initial_states.cols());
      for (int i = 0; i < batch; ++i) x0.row(i) = problem.initial_states.row(rows[static_cast<std::size_t>(i)]);
      Matrix zb(zbatch, problem.target_samples.cols());
      for (int i = 0; i < zbatch; ++i) zb.row(i) = problem.target_samples.row(zrows[static_cast<std::size_t>(i)]);

      // Line 4: regenerate trajectories under the current control; the noise
      // is frozen for the rest of this outer iteration.
      ad::Tape tape;
      ParamVars theta_vars = load_params(tape, st.control, /*trainable=*/true);
      ControlFn control = make_control_fn(problem.control_spec, problem.control_kind, theta_vars);
      NoiseFn noise = counter_noise(noise_stream.at(static_cast<std::uint64_t>(k)), rows);
      TrajectoryBatch traj =
          rollout(tape, x0, control, problem.diffusion, problem.h, problem.T, noise);

      // Lines 6-8: dual ascent on the frozen terminal cloud (wasserstein only).
      if (tc.matcher == Matcher::kWasserstein) {
        const Matrix x_terminal = tape.value(traj.terminal());
        result.metrics.total_inner_steps +=
            inner_dual_ascent(st.dual, problem.dual_spec, x_terminal, zb, tc.effective_inner_lr(),
                              tc.inner_iters, &st.opt_dual);
      }

      // Line 9: theta step on E with the (updated) eta held fixed.
      ObjectiveParts obj = empirical_objective(tape, traj, problem.cost, tc.gamma, tc.matcher,
                                               problem.dual_spec, st.dual, zb);
      Vector grad =
          flatten_grads(st.control, tape.gradients(obj.total.id(), theta_vars.node_ids()));
      Vector theta = st.control.flatten();
      const Vector gmap = gradient_mapping(theta, grad, tc.lr, tc.param_radius);
      theta = outer_control_step(theta, grad, st.opt_control, tc.lr, tc.param_radius);
      st.control.unflatten(theta);

      TrainMetricsRow row;
      row.iter = k;
      row.objective = obj.total.value()(0, 0);
      row.running_cost = obj.running.value()(0, 0);
      row.match_value = obj.match.value()(0, 0);
      row.grad_map_norm = gmap.norm();
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tick).count();
      result.metrics.rows.push_back(row);
      if (on_metrics && (k % tc.metrics_every == 0 || k + 1 == tc.outer_iters)) on_metrics(row);

      st.next_iter = k + 1;
      if (tc.early_stop_tol > 0.0) {
        calm_iters = gmap.squaredNorm() < tc.early_stop_tol ? calm_iters + 1 : 0;
        if (calm_iters >= tc.early_stop_patience) break;
      }
    } catch (const NumericError& e) {
      throw NumericError("outer iteration " + std::to_string(k) + ": " + e.what());
    }
  }
  return result;
}

}  // namespace odc
