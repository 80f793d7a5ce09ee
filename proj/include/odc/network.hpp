#pragma once

#include "odc/common.hpp"
#include "odc/tape.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace odc {

enum class Activation { kTanh, kRepu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// Architecture of a small fully connected network. `hidden_layers` counts
/// hidden layers for the plain MLP and residual blocks for the ResNet
/// variant. Residual blocks run at `hidden_width`; when that differs from
/// `input_dim` a linear projection layer is inserted in front, and a linear
/// output layer is appended unless `output_dim == hidden_width`.
struct MLPSpec {
  int input_dim = 1;
  int hidden_layers = 1;
  int hidden_width = 1;
  int output_dim = 1;
  Activation activation = Activation::kTanh;
  bool residual = false;

  void validate() const;

  /// Shapes (fan_in, fan_out) of every weight matrix, in forward order.
  std::vector<std::pair<int, int>> weight_shapes() const;
  bool has_input_projection() const { return residual && input_dim != hidden_width; }
  bool has_output_layer() const { return !residual || output_dim != hidden_width; }
};

/// Weights and biases, row-vector convention: y = x * W + b. Also carries the
/// per-layer left singular-vector estimate that warm-starts power iteration.
struct NetworkParams {
  std::vector<Matrix> weights;
  std::vector<RowVector> biases;
  std::vector<Vector> spectral_u;

  int parameter_count() const;
  Vector flatten() const;
  void unflatten(const Vector& theta);
};

/// Xavier init: weight variance 2 / (fan_in + fan_out), biases zero.
/// Deterministic under the seed.
NetworkParams xavier_initialize(const MLPSpec& spec, std::uint64_t seed);

/// One power-iteration estimate of the top singular value of W, warm-started
/// from `u` (resized and initialized if empty). The estimate is a lower bound
/// and non-decreasing in the iteration count.
double spectral_norm_estimate(const Matrix& w, Vector& u, int power_iters);

/// Divide each weight matrix by its power-iteration norm estimate so every
/// layer has operator norm ~1; with tanh activations the whole net is then
/// 1-Lipschitz. Zero matrices are left unchanged. Returns the per-layer
/// estimates that were divided out.
std::vector<double> spectral_normalize(NetworkParams& params, int power_iters);

/// Projection-grade normalization for evaluation and metrics: applies the
/// `power_iters`-step pass repeatedly (the state warm-starts each round)
/// until every layer's estimate sits within `tol` of 1, so the true operator
/// norms land within ~1e-3 of 1 even on near-degenerate spectra.
void hard_spectral_normalize(NetworkParams& params, int power_iters = 50, double tol = 2e-4,
                             int max_rounds = 40);

/// Network parameters materialized on a tape, either as trainable inputs or
/// as frozen constants.
struct ParamVars {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;

  std::vector<ad::NodeId> node_ids() const;
};

ParamVars load_params(ad::Tape& tape, const NetworkParams& params, bool trainable);

/// Batched forward pass; x is (n x input_dim), result (n x output_dim).
ad::Var mlp_forward(const MLPSpec& spec, const ParamVars& p, ad::Var x);

/// Gradient-field control u(x) = grad_x psi(x) for a scalar potential psi.
/// The result is (n x input_dim) and remains differentiable w.r.t. the
/// potential parameters.
ad::Var potential_gradient_control(const MLPSpec& spec, const ParamVars& p, ad::Var x);

/// Direct parameterization: the network output itself is the control field.
ad::Var direct_control(const MLPSpec& spec, const ParamVars& p, ad::Var x);

}  // namespace odc
