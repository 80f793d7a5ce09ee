#pragma once

#include "odc/common.hpp"
#include "odc/rng.hpp"
#include "odc/tape.hpp"

#include <functional>
#include <vector>

namespace odc {

/// N agent states at one time; row i is agent i throughout a trajectory.
struct ParticleBatch {
  Matrix states;  // N x d
  double time = 0.0;
};

struct DiffusionSpec {
  enum class Kind { kZero, kIsotropic, kStateDependent };
  Kind kind = Kind::kZero;
  double sigma = 0.0;
  const ad::ExternalField* field = nullptr;  // scalar field, output_dim 1

  static DiffusionSpec zero() { return {}; }
  static DiffusionSpec isotropic(double sigma);
  static DiffusionSpec state_dependent(const ad::ExternalField* field);
  bool is_zero() const { return kind == Kind::kZero || (kind == Kind::kIsotropic && sigma == 0.0); }
};

/// Emits the control u(x) for a batch of states already on a tape.
using ControlFn = std::function<ad::Var(ad::Var)>;

/// Supplies the N x d standard-normal draws for one step.
using NoiseFn = std::function<Matrix(int step, int n, int d)>;

/// Standard normals keyed by (step, agent, coordinate); `agent_ids` maps batch
/// rows to stable agent identities so a minibatch draws its own stream slices.
NoiseFn counter_noise(rng::Stream stream, std::vector<int> agent_ids = {});

/// States and controls along an Euler-Maruyama rollout, all recorded on one
/// tape so costs of the trajectory stay differentiable in the control
/// parameters. Noise draws are kept for replay.
struct TrajectoryBatch {
  std::vector<ad::NodeId> state_nodes;    // steps + 1 entries
  std::vector<ad::NodeId> control_nodes;  // steps entries, u(x_k)
  std::vector<Matrix> noise;              // steps entries; empty matrix when no diffusion
  double h = 0.0;
  double t0 = 0.0;

  int steps() const { return static_cast<int>(control_nodes.size()); }
  ad::NodeId terminal() const { return state_nodes.back(); }
  double time_at(int k) const { return t0 + h * k; }
};

/// Number of full steps on the grid t_k = k*h; a trailing partial step is
/// dropped.
int step_count(double h, double T);

struct EmStep {
  ad::Var next;
  ad::Var control;
};

/// One Euler-Maruyama update x' = x + h*u(x) + sqrt(h)*sigma(x)*delta. With
/// zero diffusion no noise term is appended at all, so the scheme reduces to
/// the plain Euler method exactly.
EmStep em_step(ad::Var x, const ControlFn& control, const DiffusionSpec& diffusion, double h,
               const Matrix& noise);

TrajectoryBatch rollout(ad::Tape& tape, const Matrix& x0, const ControlFn& control,
                        const DiffusionSpec& diffusion, double h, double T, const NoiseFn& noise,
                        double t0 = 0.0);

}  // namespace odc
