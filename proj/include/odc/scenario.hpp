#pragma once

#include "odc/config.hpp"
#include "odc/costs.hpp"
#include "odc/dynamics.hpp"
#include "odc/flow.hpp"
#include "odc/matching.hpp"
#include "odc/mixture.hpp"
#include "odc/network.hpp"
#include "odc/trainer.hpp"

#include <memory>
#include <optional>
#include <string>

namespace odc {

/// Initial/target distribution: a Gaussian mixture, a point-cloud file, or a
/// deterministic 2D lattice (used by the collision scenarios).
struct SourceSpec {
  enum class Kind { kMixture, kFile, kGrid };
  Kind kind = Kind::kMixture;
  GaussianMixtureSpec mixture;
  std::string path;
  int grid_nx = 0, grid_ny = 0;
  double grid_x0 = 0, grid_y0 = 0, grid_dx = 1, grid_dy = 1;
};

struct NetSpec {
  int hidden_layers = 3;
  int hidden_width = 36;
  Activation activation = Activation::kTanh;
  bool residual = false;
};

/// The full problem statement, parsed from a key-value config file.
struct ScenarioConfig {
  int dim = 2;
  std::uint64_t seed = 0;
  double h = 0.1;
  double T = 1.0;
  int agents = 2000;          // N simulated agents (initial samples)
  int target_samples = 2000;  // M samples of nu
  double train_frac = 0.75;
  double test_frac = 0.25;

  SourceSpec initial;
  SourceSpec target;

  BaseCost base_cost = BaseCost::kQuadraticEnergy;
  std::string flow_descriptor;  // set when base_cost is flow deviation
  std::optional<InteractionSpec> interaction;

  DiffusionSpec::Kind diffusion_kind = DiffusionSpec::Kind::kZero;
  double sigma = 0.0;

  ControlKind control_kind = ControlKind::kPotentialGradient;
  NetSpec control_net;
  NetSpec dual_net;

  TrainConfig train;
  int eval_emd_points = 500;  // subsample cap for the exact-EMD report

  void validate() const;
};

ScenarioConfig parse_scenario(const config::Tree& tree);
config::Tree scenario_to_tree(const ScenarioConfig& cfg);

/// Canonical serialized form; its FNV-1a hash identifies the scenario in
/// checkpoints.
std::string canonical_config_text(const ScenarioConfig& cfg);

/// Config materialized into runtime data: sampled (or loaded) clouds, the
/// train/test split of the initial samples, owned flow field, and ready
/// MLPSpecs.
class Scenario {
 public:
  explicit Scenario(ScenarioConfig cfg);

  const ScenarioConfig& cfg() const { return cfg_; }
  const Matrix& initial_samples() const { return initial_; }
  const Matrix& target_samples() const { return target_; }
  Matrix train_states() const;
  Matrix test_states() const;
  const MLPSpec& control_spec() const { return control_spec_; }
  const MLPSpec& dual_spec() const { return dual_spec_; }
  const CostSpec& cost() const { return cost_; }
  const DiffusionSpec& diffusion() const { return diffusion_; }

  TrainProblem problem() const;

 private:
  ScenarioConfig cfg_;
  Matrix initial_;  // N x d
  Matrix target_;   // M x d
  std::vector<int> train_idx_, test_idx_;
  std::unique_ptr<ad::ExternalField> flow_;
  CostSpec cost_;
  DiffusionSpec diffusion_;
  MLPSpec control_spec_, dual_spec_;
};

struct EvalReport {
  int test_points = 0;
  double emd_terminal = 0.0;
  double emd_uncontrolled = 0.0;  // same rollout with u = 0
  double chamfer_terminal = 0.0;
  double running_cost_total = 0.0;
  double min_pairwise_distance = 0.0;  // over all time steps
};

/// Evaluate a frozen control on the held-out initial samples: terminal exact
/// EMD to target samples, terminal Chamfer, total running cost, and the
/// minimum pairwise agent distance over time. A hard spectral pass is not
/// needed here since the dual net plays no role in evaluation.
EvalReport evaluate(const Scenario& scenario, const NetworkParams& control,
                    std::uint64_t eval_seed);

/// Rollout of given initial states under a frozen control (fresh tape).
struct SimulationResult {
  ad::Tape tape;
  TrajectoryBatch traj;
};
std::unique_ptr<SimulationResult> simulate(const Scenario& scenario,
                                           const NetworkParams& control, const Matrix& x0,
                                           std::uint64_t noise_seed);

// Scenario presets echoing the paper-scale experiments.
std::vector<std::string> preset_names();
std::string preset_config_text(const std::string& name);

}  // namespace odc
