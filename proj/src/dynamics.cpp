#include "odc/dynamics.hpp"

#include <cmath>

namespace odc {

DiffusionSpec DiffusionSpec::isotropic(double sigma) {
  require(sigma >= 0.0, "DiffusionSpec: sigma must be >= 0");
  DiffusionSpec d;
  d.kind = Kind::kIsotropic;
  d.sigma = sigma;
  return d;
}

DiffusionSpec DiffusionSpec::state_dependent(const ad::ExternalField* field) {
  require(field != nullptr, "DiffusionSpec: null field");
  require(field->output_dim() == 1, "DiffusionSpec: state-dependent sigma must be scalar-valued");
  DiffusionSpec d;
  d.kind = Kind::kStateDependent;
  d.field = field;
  return d;
}

NoiseFn counter_noise(rng::Stream stream, std::vector<int> agent_ids) {
  return [stream, ids = std::move(agent_ids)](int step, int n, int d) {
    Matrix z(n, d);
    for (int i = 0; i < n; ++i) {
      const int agent = ids.empty() ? i : ids[static_cast<std::size_t>(i)];
      const rng::Stream s =
          stream.at(static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(agent));
      for (int j = 0; j < d; ++j) z(i, j) = s.normal(static_cast<std::uint64_t>(j));
    }
    return z;
  };
}

int step_count(double h, double T) {
  require(h > 0.0 && T >= h, "step_count: need 0 < h <= T");
  return static_cast<int>(std::floor(T / h + 1e-9));
}

EmStep em_step(ad::Var x, const ControlFn& control, const DiffusionSpec& diffusion, double h,
               const Matrix& noise) {
  require(h > 0.0, "em_step: h must be positive");
  ad::Tape& tape = x.tape();
  ad::Var u = control(x);
  if (u.rows() != x.rows() || u.cols() != x.cols())
    throw std::invalid_argument("em_step: control output shape does not match state batch");
  ad::Var next = x + h * u;
  if (!diffusion.is_zero()) {
    if (noise.rows() != x.rows() || noise.cols() != x.cols())
      throw std::invalid_argument("em_step: noise shape does not match state batch");
    const double sqrt_h = std::sqrt(h);
    if (diffusion.kind == DiffusionSpec::Kind::kIsotropic) {
      next = next + ad::wrap(tape, tape.constant(sqrt_h * diffusion.sigma * noise));
    } else {
      ad::Var sigma_x = ad::wrap(tape, tape.field_eval(x.id(), diffusion.field));
      ad::Var spread = ad::broadcast_cols(sigma_x, x.cols());
      next = next + sqrt_h * (spread * ad::wrap(tape, tape.constant(noise)));
    }
  }
  return {next, u};
}

TrajectoryBatch rollout(ad::Tape& tape, const Matrix& x0, const ControlFn& control,
                        const DiffusionSpec& diffusion, double h, double T, const NoiseFn& noise,
                        double t0) {
  require(x0.rows() >= 1, "rollout: empty initial batch");
  const int steps = step_count(h, T);
  const int n = static_cast<int>(x0.rows());
  const int d = static_cast<int>(x0.cols());

  TrajectoryBatch traj;
  traj.h = h;
  traj.t0 = t0;
  traj.state_nodes.reserve(static_cast<std::size_t>(steps) + 1);
  traj.control_nodes.reserve(static_cast<std::size_t>(steps));
  traj.noise.reserve(static_cast<std::size_t>(steps));

  ad::Var x = ad::wrap(tape, tape.constant(x0));
  traj.state_nodes.push_back(x.id());
  for (int k = 0; k < steps; ++k) {
    Matrix z;
    if (!diffusion.is_zero()) z = noise(k, n, d);
    EmStep s = em_step(x, control, diffusion, h, z);
    traj.control_nodes.push_back(s.control.id());
    traj.noise.push_back(std::move(z));
    x = s.next;
    traj.state_nodes.push_back(x.id());
  }
  return traj;
}

}  // namespace odc
