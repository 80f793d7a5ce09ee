#pragma once

#include "odc/common.hpp"
#include "odc/dynamics.hpp"
#include "odc/tape.hpp"

#include <optional>

namespace odc {

enum class BaseCost { kQuadraticEnergy, kFlowDeviation };
enum class InteractionKernel { kLog, kInversePower };

/// Pairwise penalty V(x,y) = c*ln|x-y| or c*|x-y|^(-alpha), averaged over the
/// other agents and weighted against the base cost.
struct InteractionSpec {
  InteractionKernel kernel = InteractionKernel::kInversePower;
  double coeff = 1.0;   // c > 0
  double alpha = 2.0;   // exponent, inverse-power only
  double weight = 1.0;  // relative weight vs the base cost

  void validate() const;
};

struct CostSpec {
  BaseCost base = BaseCost::kQuadraticEnergy;
  const ad::ExternalField* flow = nullptr;  // required for kFlowDeviation
  std::optional<InteractionSpec> interaction;

  void validate() const;
};

/// Minimum allowed inter-agent distance before the interaction kernel is
/// considered singular.
inline constexpr double kMinAgentDistance = 1e-9;

// Pointwise cost functionals.
double quadratic_energy(const Vector& u);
double flow_deviation(const Vector& u, const Vector& v);

/// Mean interaction penalty of a state x against the rows of `others` (which
/// must exclude x itself): (1/rows) * sum_j V(x, others_j).
double interaction_penalty(const Vector& x, const Matrix& others, const InteractionSpec& spec);

/// Per-agent interaction penalties for a whole batch on the tape, (n x 1):
/// row i holds weight/(n-1) * sum_{j != i} V(x_i, x_j).
ad::Var batch_interaction(ad::Var x, const InteractionSpec& spec);

/// Left-endpoint Riemann sum of the running cost along a trajectory:
/// (1/N) sum_i sum_k h * [ c(x_k_i, u(x_k_i)) + interaction ]. Differentiable
/// w.r.t. the control parameters through the recorded rollout.
ad::Var accumulate_running_cost(ad::Tape& tape, const TrajectoryBatch& traj, const CostSpec& spec);

}  // namespace odc
