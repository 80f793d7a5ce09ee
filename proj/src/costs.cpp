#include "odc/costs.hpp"

#include <cmath>
#include <string>

namespace odc {

void InteractionSpec::validate() const {
  require(coeff > 0.0, "InteractionSpec: c must be > 0");
  require(kernel != InteractionKernel::kInversePower || alpha > 0.0,
          "InteractionSpec: alpha must be > 0");
  require(weight >= 0.0, "InteractionSpec: weight must be >= 0");
}

void CostSpec::validate() const {
  if (base == BaseCost::kFlowDeviation)
    require(flow != nullptr, "CostSpec: flow deviation cost needs a flow field");
  if (interaction) interaction->validate();
}

double quadratic_energy(const Vector& u) { return 0.5 * u.squaredNorm(); }

double flow_deviation(const Vector& u, const Vector& v) {
  require(u.size() == v.size(), "flow_deviation: dimension mismatch");
  return 0.5 * (u - v).squaredNorm();
}

double interaction_penalty(const Vector& x, const Matrix& others, const InteractionSpec& spec) {
  spec.validate();
  require(others.rows() >= 1, "interaction_penalty: no other agents");
  require(others.cols() == x.size(), "interaction_penalty: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < others.rows(); ++j) {
    const double dist = (x - others.row(j).transpose()).norm();
    if (dist < kMinAgentDistance)
      throw NumericError("interaction_penalty: agent coincides with agent " + std::to_string(j) +
                         " (distance < 1e-9)");
    total += spec.kernel == InteractionKernel::kLog ? spec.coeff * std::log(dist)
                                                    : spec.coeff * std::pow(dist, -spec.alpha);
  }
  return total / static_cast<double>(others.rows());
}

ad::Var batch_interaction(ad::Var x, const InteractionSpec& spec) {
  spec.validate();
  const int n = x.rows();
  require(n >= 2, "batch_interaction: need at least two agents");
  ad::Tape& tape = x.tape();

  // Squared distance matrix D_ij = r_i + r_j - 2 x_i.x_j via one Gram product.
  ad::Var r = ad::squared_norm_rows(x);
  ad::Var spread = ad::broadcast_cols(r, n);
  ad::Var gram = ad::matmul(x, ad::transpose(x));
  ad::Var d2 = spread + ad::transpose(spread) - 2.0 * gram;

  {  // Coincident agents make the kernel singular; identify the pair.
    const Matrix& d2v = d2.value();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (d2v(i, j) < kMinAgentDistance * kMinAgentDistance)
          throw NumericError("batch_interaction: agents " + std::to_string(i) + " and " +
                             std::to_string(j) + " coincide (distance < 1e-9)");
  }

  // Clamp the tiny cancellation noise around zero, then lift the diagonal to
  // exactly 1 so the kernel stays finite there; the off-diagonal mask removes
  // the self terms afterwards.
  const double tiny = kMinAgentDistance * kMinAgentDistance;
  ad::Var d2safe = ad::relu(d2 - tiny) + tiny;
  ad::Var lifted = d2safe + ad::wrap(tape, tape.constant(Matrix::Identity(n, n)));

  ad::Var v = spec.kernel == InteractionKernel::kLog
                  ? 0.5 * spec.coeff * ad::log(lifted)
                  : spec.coeff * ad::pow(lifted, -0.5 * spec.alpha);
  Matrix mask = Matrix::Ones(n, n) - Matrix::Identity(n, n);
  ad::Var off_diag = v * ad::wrap(tape, tape.constant(std::move(mask)));
  return (spec.weight / static_cast<double>(n - 1)) * ad::row_sum(off_diag);
}

ad::Var accumulate_running_cost(ad::Tape& tape, const TrajectoryBatch& traj, const CostSpec& spec) {
  spec.validate();
  require(traj.steps() >= 1, "accumulate_running_cost: empty trajectory");
  const int n = tape.rows(traj.state_nodes[0]);

  ad::Var total;
  for (int k = 0; k < traj.steps(); ++k) {
    ad::Var xk = ad::wrap(tape, traj.state_nodes[static_cast<std::size_t>(k)]);
    ad::Var uk = ad::wrap(tape, traj.control_nodes[static_cast<std::size_t>(k)]);
    ad::Var per_agent;  // (n x 1)
    if (spec.base == BaseCost::kQuadraticEnergy) {
      per_agent = 0.5 * ad::squared_norm_rows(uk);
    } else {
      ad::Var v = ad::wrap(tape, tape.field_eval(xk.id(), spec.flow));
      per_agent = 0.5 * ad::squared_norm_rows(uk - v);
    }
    if (spec.interaction && n >= 2) per_agent = per_agent + batch_interaction(xk, *spec.interaction);
    ad::Var step_sum = ad::sum(per_agent);
    total = total.valid() ? total + step_sum : step_sum;
  }
  return (traj.h / static_cast<double>(n)) * total;
}

}  // namespace odc
