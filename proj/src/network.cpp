#include "odc/network.hpp"

#include "odc/rng.hpp"

#include <cmath>

namespace odc {

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "repu") return Activation::kRepu;
  throw std::invalid_argument("unknown activation '" + s + "' (expected tanh or repu)");
}

std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "repu"; }

void MLPSpec::validate() const {
  require(input_dim >= 1, "MLPSpec: input_dim must be >= 1");
  // hidden_layers = 0 degenerates to a bare affine map (plain variant only).
  require(hidden_layers >= (residual ? 1 : 0), "MLPSpec: hidden_layers must be >= 1");
  require(hidden_width >= 1, "MLPSpec: hidden_width must be >= 1");
  require(output_dim >= 1, "MLPSpec: output_dim must be >= 1");
}

std::vector<std::pair<int, int>> MLPSpec::weight_shapes() const {
  validate();
  std::vector<std::pair<int, int>> shapes;
  if (residual) {
    if (has_input_projection()) shapes.emplace_back(input_dim, hidden_width);
    for (int k = 0; k < hidden_layers; ++k) shapes.emplace_back(hidden_width, hidden_width);
    if (has_output_layer()) shapes.emplace_back(hidden_width, output_dim);
  } else {
    int fan_in = input_dim;
    for (int k = 0; k < hidden_layers; ++k) {
      shapes.emplace_back(fan_in, hidden_width);
      fan_in = hidden_width;
    }
    shapes.emplace_back(fan_in, output_dim);
  }
  return shapes;
}

int NetworkParams::parameter_count() const {
  int n = 0;
  for (const Matrix& w : weights) n += static_cast<int>(w.size());
  for (const RowVector& b : biases) n += static_cast<int>(b.size());
  return n;
}

Vector NetworkParams::flatten() const {
  Vector theta(parameter_count());
  Eigen::Index at = 0;
  for (const Matrix& w : weights) {
    theta.segment(at, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
    at += w.size();
  }
  for (const RowVector& b : biases) {
    theta.segment(at, b.size()) = b.transpose();
    at += b.size();
  }
  return theta;
}

void NetworkParams::unflatten(const Vector& theta) {
  require(theta.size() == parameter_count(), "unflatten: size mismatch");
  Eigen::Index at = 0;
  for (Matrix& w : weights) {
    Eigen::Map<Vector>(w.data(), w.size()) = theta.segment(at, w.size());
    at += w.size();
  }
  for (RowVector& b : biases) {
    b = theta.segment(at, b.size()).transpose();
    at += b.size();
  }
}

NetworkParams xavier_initialize(const MLPSpec& spec, std::uint64_t seed) {
  const rng::Stream stream(seed, "xavier");
  NetworkParams params;
  int layer = 0;
  for (auto [fan_in, fan_out] : spec.weight_shapes()) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    const rng::Stream ls = stream.at(static_cast<std::uint64_t>(layer));
    for (int i = 0; i < fan_in; ++i)
      for (int j = 0; j < fan_out; ++j)
        w(i, j) = stddev * ls.at(static_cast<std::uint64_t>(i)).normal(static_cast<std::uint64_t>(j));
    params.weights.push_back(std::move(w));
    params.biases.push_back(RowVector::Zero(fan_out));
    params.spectral_u.emplace_back();
    ++layer;
  }
  return params;
}

double spectral_norm_estimate(const Matrix& w, Vector& u, int power_iters) {
  require(power_iters >= 1, "spectral_norm_estimate: power_iters must be >= 1");
  if (w.norm() == 0.0) return 0.0;
  if (u.size() != w.rows() || u.norm() == 0.0) {
    // Deterministic start ensures reproducibility without an extra seed.
    const rng::Stream s(0x5eed5eed, "spectral-u");
    u.resize(w.rows());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = s.normal(static_cast<std::uint64_t>(i));
    u.normalize();
  }
  double est = 0.0;
  for (int k = 0; k < power_iters; ++k) {
    Vector v = w.transpose() * u;
    const double nv = v.norm();
    if (nv == 0.0) return 0.0;
    v /= nv;
    Vector z = w * v;
    const double nz = z.norm();
    if (nz == 0.0) return 0.0;
    u = z / nz;
    est = (w.transpose() * u).norm();
  }
  return est;
}

std::vector<double> spectral_normalize(NetworkParams& params, int power_iters) {
  require(power_iters >= 1, "spectral_normalize: power_iters must be >= 1");
  if (params.spectral_u.size() != params.weights.size())
    params.spectral_u.resize(params.weights.size());
  std::vector<double> estimates(params.weights.size(), 0.0);
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    Matrix& w = params.weights[i];
    if (w.norm() == 0.0) continue;  // skip; nothing to divide by
    const double est = spectral_norm_estimate(w, params.spectral_u[i], power_iters);
    if (est > 0.0) {
      w /= est;
      estimates[i] = est;
    }
  }
  return estimates;
}

void hard_spectral_normalize(NetworkParams& params, int power_iters, double tol, int max_rounds) {
  for (int round = 0; round < max_rounds; ++round) {
    const std::vector<double> ests = spectral_normalize(params, power_iters);
    bool settled = true;
    for (double e : ests)
      if (e != 0.0 && std::abs(e - 1.0) > tol) settled = false;
    if (settled) return;
  }
}

std::vector<ad::NodeId> ParamVars::node_ids() const {
  std::vector<ad::NodeId> ids;
  ids.reserve(weights.size() + biases.size());
  for (const ad::Var& v : weights) ids.push_back(v.id());
  for (const ad::Var& v : biases) ids.push_back(v.id());
  return ids;
}

ParamVars load_params(ad::Tape& tape, const NetworkParams& params, bool trainable) {
  ParamVars p;
  for (const Matrix& w : params.weights) {
    const ad::NodeId id = trainable ? tape.input(w) : tape.constant(w);
    p.weights.push_back(ad::wrap(tape, id));
  }
  for (const RowVector& b : params.biases) {
    const ad::NodeId id = trainable ? tape.input(Matrix(b)) : tape.constant(Matrix(b));
    p.biases.push_back(ad::wrap(tape, id));
  }
  return p;
}

namespace {

ad::Var activate(Activation a, ad::Var z) {
  return a == Activation::kTanh ? ad::tanh(z) : ad::repu(z);
}

ad::Var affine(ad::Var x, ad::Var w, ad::Var b) { return ad::add_row_vector(ad::matmul(x, w), b); }

}  // namespace

ad::Var mlp_forward(const MLPSpec& spec, const ParamVars& p, ad::Var x) {
  spec.validate();
  if (x.cols() != spec.input_dim)
    throw std::invalid_argument("mlp_forward: input width " + std::to_string(x.cols()) +
                                " does not match input_dim " + std::to_string(spec.input_dim));
  if (p.weights.size() != spec.weight_shapes().size())
    throw std::invalid_argument("mlp_forward: parameter count does not match spec");

  std::size_t li = 0;
  ad::Var h = x;
  if (spec.residual) {
    if (spec.has_input_projection()) h = affine(h, p.weights[li], p.biases[li]), ++li;
    for (int k = 0; k < spec.hidden_layers; ++k, ++li)
      h = h + activate(spec.activation, affine(h, p.weights[li], p.biases[li]));
    if (spec.has_output_layer()) h = affine(h, p.weights[li], p.biases[li]), ++li;
    return h;
  }
  for (int k = 0; k < spec.hidden_layers; ++k, ++li)
    h = activate(spec.activation, affine(h, p.weights[li], p.biases[li]));
  return affine(h, p.weights[li], p.biases[li]);
}

ad::Var potential_gradient_control(const MLPSpec& spec, const ParamVars& p, ad::Var x) {
  if (spec.output_dim != 1)
    throw std::invalid_argument("potential_gradient_control: potential must have output_dim 1");
  ad::Var psi = mlp_forward(spec, p, x);
  // Rows of x are independent, so the gradient of the summed potential is the
  // per-row gradient, stacked. Recording it keeps it differentiable in p.
  ad::Tape& t = x.tape();
  return ad::wrap(t, t.input_gradient(t.sum_all(psi.id()), x.id()));
}

ad::Var direct_control(const MLPSpec& spec, const ParamVars& p, ad::Var x) {
  if (spec.output_dim != spec.input_dim)
    throw std::invalid_argument("direct_control: output_dim must equal input_dim");
  return mlp_forward(spec, p, x);
}

}  // namespace odc
