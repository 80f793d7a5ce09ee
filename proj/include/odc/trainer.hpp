#pragma once

#include "odc/common.hpp"
#include "odc/costs.hpp"
#include "odc/dynamics.hpp"
#include "odc/matching.hpp"
#include "odc/network.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace odc {

enum class Matcher { kWasserstein, kChamfer };
enum class ControlKind { kPotentialGradient, kDirect };
enum class OptimizerKind { kSgd, kAdam };

Matcher matcher_from_string(const std::string& s);
std::string to_string(Matcher m);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  double gamma = 1.0;                                      // terminal-matching weight
  int outer_iters = 100;                                   // K1
  int inner_iters = 6;                                     // K2
  double lr = 1e-4;                                        // tau (outer)
  double inner_lr = 0.0;                                   // 0 -> reuse lr
  OptimizerKind optimizer = OptimizerKind::kAdam;          // theta updates
  OptimizerKind inner_optimizer = OptimizerKind::kAdam;    // eta updates
  AdamParams adam;
  int batch_size = 256;
  double param_radius = std::numeric_limits<double>::infinity();  // R; inf = no projection
  Matcher matcher = Matcher::kWasserstein;
  int metrics_every = 1;
  double early_stop_tol = 0.0;  // stop when |G|^2 < tol for `patience` iters; 0 disables
  int early_stop_patience = 50;

  double effective_inner_lr() const { return inner_lr > 0.0 ? inner_lr : lr; }
  void validate() const;
};

/// First/second moment accumulators for Adam; empty state means SGD.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  AdamParams hp;
  long step_count = 0;
  Vector m, v;

  static OptimizerState sgd() { return {}; }
  static OptimizerState adam(AdamParams hp);
};

/// Bias-corrected Adam step for a descent on `grad`; returns the increment to
/// add to the parameters and advances the state.
Vector adam_update(OptimizerState& state, const Vector& grad, double lr);

/// Euclidean projection onto the ball |theta| <= radius.
Vector project_ball(const Vector& theta, double radius);

/// Optimizer update (SGD or Adam per state) followed by projection. `grad`
/// is d E / d theta with the dual parameters held fixed.
Vector outer_control_step(const Vector& theta, const Vector& grad, OptimizerState& state,
                          double lr, double radius);

/// Gradient mapping G(theta) = (theta - proj(theta - tau*grad)) / tau. Equals
/// `grad` exactly (bitwise) when the step stays inside the ball.
Vector gradient_mapping(const Vector& theta, const Vector& grad, double tau, double radius);

/// K2 plain/Adam ascent steps on the empirical dual gap with the terminal
/// cloud frozen; spectral normalization is re-applied after every step.
/// Returns the number of steps taken.
int inner_dual_ascent(NetworkParams& dual, const MLPSpec& dual_spec, const Matrix& x_terminal,
                      const Matrix& z_targets, double lr, int steps,
                      OptimizerState* opt = nullptr);

struct ObjectiveParts {
  ad::Var total;    // E(theta, eta)
  ad::Var running;  // time-discretized running cost
  ad::Var match;    // dual gap or Chamfer value
};

/// E(theta, eta) = running cost + gamma * match, assembled on the trajectory's
/// tape so its theta-gradient flows through the rollout. The dual parameters
/// enter as constants (the envelope rule: eta is held fixed).
ObjectiveParts empirical_objective(ad::Tape& tape, const TrajectoryBatch& traj,
                                   const CostSpec& cost, double gamma, Matcher matcher,
                                   const MLPSpec& dual_spec, const NetworkParams& dual,
                                   const Matrix& z_targets);

struct TrainMetricsRow {
  int iter = 0;
  double objective = 0.0;
  double running_cost = 0.0;
  double match_value = 0.0;
  double grad_map_norm = 0.0;
  double wall_ms = 0.0;
};

struct TrainMetrics {
  std::vector<TrainMetricsRow> rows;
  long total_inner_steps = 0;
};

/// Everything the training loop needs, independent of config-file concerns.
struct TrainProblem {
  Matrix initial_states;  // training-split initial samples
  Matrix target_samples;
  CostSpec cost;
  DiffusionSpec diffusion;
  double h = 0.1;
  double T = 1.0;
  MLPSpec control_spec;
  ControlKind control_kind = ControlKind::kPotentialGradient;
  MLPSpec dual_spec;
  TrainConfig train;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mid-run snapshot sufficient to resume bit-exactly.
struct TrainState {
  NetworkParams control;
  NetworkParams dual;
  OptimizerState opt_control;
  OptimizerState opt_dual;
  int next_iter = 0;
};

struct TrainResult {
  TrainState state;
  TrainMetrics metrics;
};

using MetricsCallback = std::function<void(const TrainMetricsRow&)>;

/// The outer-descent / inner-ascent saddle-point loop over simulated
/// trajectories. Deterministic under the problem seed; resuming from a
/// previous state at iteration k reproduces the uninterrupted run.
TrainResult odc_train(const TrainProblem& problem, const TrainState* resume = nullptr,
                      const MetricsCallback& on_metrics = {});

/// Control emission helper shared by the trainer and evaluation paths.
ControlFn make_control_fn(const MLPSpec& spec, ControlKind kind, const ParamVars& params);

}  // namespace odc
