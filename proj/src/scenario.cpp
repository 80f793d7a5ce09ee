#include "odc/scenario.hpp"

#include "odc/io.hpp"
#include "odc/rng.hpp"

#include <cmath>
#include <sstream>

namespace odc {

namespace {

Matrix parse_cov(const config::Tree& t, const std::string& key, int dim) {
  const std::string& s = t.get(key);
  const std::size_t colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  if (colon == std::string::npos)
    throw UsageError("config line " + std::to_string(t.line_of(key)) + ": covariance '" + s +
                     "' must be diag:... or full:...");
  const std::string args = s.substr(colon + 1);
  if (kind == "spherical") {
    config::Tree tmp;
    tmp.insert(key, args, t.line_of(key));
    return Matrix(tmp.get_double(key) * Matrix::Identity(dim, dim));
  }
  if (kind == "diag") {
    config::Tree tmp;
    tmp.insert(key, args, t.line_of(key));
    Vector d = tmp.get_vector(key);
    if (d.size() != dim)
      throw UsageError("config line " + std::to_string(t.line_of(key)) + ": diag covariance needs " +
                       std::to_string(dim) + " entries");
    return Matrix(d.asDiagonal());
  }
  if (kind == "full") {
    Matrix m(dim, dim);
    std::stringstream ss(args);
    std::string row;
    int r = 0;
    while (std::getline(ss, row, ';')) {
      if (r >= dim) break;
      config::Tree tmp;
      tmp.insert(key, row, t.line_of(key));
      Vector v = tmp.get_vector(key);
      if (v.size() != dim)
        throw UsageError("config line " + std::to_string(t.line_of(key)) +
                         ": full covariance rows need " + std::to_string(dim) + " entries");
      m.row(r++) = v.transpose();
    }
    if (r != dim)
      throw UsageError("config line " + std::to_string(t.line_of(key)) + ": full covariance needs " +
                       std::to_string(dim) + " rows");
    return m;
  }
  throw UsageError("config line " + std::to_string(t.line_of(key)) + ": unknown covariance kind '" +
                   kind + "' (expected spherical, diag or full)");
}

SourceSpec parse_source(const config::Tree& t, const std::string& prefix, int dim) {
  SourceSpec src;
  const std::string kind = t.get_or(prefix + ".kind", "mixture");
  if (kind == "file") {
    src.kind = SourceSpec::Kind::kFile;
    src.path = t.get(prefix + ".path");
    return src;
  }
  if (kind == "grid") {
    if (dim != 2) throw UsageError("config: " + prefix + ".kind = grid requires dim = 2");
    src.kind = SourceSpec::Kind::kGrid;
    const Vector g = t.get_vector(prefix + ".grid");  // nx,ny,x0,y0,dx,dy
    if (g.size() != 6)
      throw UsageError("config line " + std::to_string(t.line_of(prefix + ".grid")) + ": " +
                       prefix + ".grid wants nx,ny,x0,y0,dx,dy");
    src.grid_nx = static_cast<int>(g(0));
    src.grid_ny = static_cast<int>(g(1));
    src.grid_x0 = g(2);
    src.grid_y0 = g(3);
    src.grid_dx = g(4);
    src.grid_dy = g(5);
    require(src.grid_nx >= 1 && src.grid_ny >= 1, "config: grid extents must be >= 1");
    return src;
  }
  if (kind != "mixture")
    throw UsageError("config: " + prefix + ".kind must be mixture, file or grid, got '" + kind +
                     "'");
  src.kind = SourceSpec::Kind::kMixture;
  const int count = t.get_int(prefix + ".components");
  for (int c = 0; c < count; ++c) {
    const std::string ck = prefix + ".c" + std::to_string(c);
    GaussianComponent comp;
    comp.weight = t.get_double(ck + ".weight");
    comp.mean = t.get_vector(ck + ".mean");
    if (comp.mean.size() != dim)
      throw UsageError("config line " + std::to_string(t.line_of(ck + ".mean")) + ": mean needs " +
                       std::to_string(dim) + " entries");
    comp.cov = parse_cov(t, ck + ".cov", dim);
    src.mixture.components.push_back(std::move(comp));
  }
  src.mixture.validate();
  return src;
}

void emit_source(config::Tree& t, const std::string& prefix, const SourceSpec& src, int line) {
  if (src.kind == SourceSpec::Kind::kFile) {
    t.insert(prefix + ".kind", "file", line);
    t.insert(prefix + ".path", src.path, line);
    return;
  }
  if (src.kind == SourceSpec::Kind::kGrid) {
    t.insert(prefix + ".kind", "grid", line);
    t.insert(prefix + ".grid",
             std::to_string(src.grid_nx) + "," + std::to_string(src.grid_ny) + "," +
                 config::format_double(src.grid_x0) + "," + config::format_double(src.grid_y0) +
                 "," + config::format_double(src.grid_dx) + "," + config::format_double(src.grid_dy),
             line);
    return;
  }
  t.insert(prefix + ".kind", "mixture", line);
  t.insert(prefix + ".components", std::to_string(src.mixture.components.size()), line);
  for (std::size_t c = 0; c < src.mixture.components.size(); ++c) {
    const GaussianComponent& comp = src.mixture.components[c];
    const std::string ck = prefix + ".c" + std::to_string(c);
    t.insert(ck + ".weight", config::format_double(comp.weight), line);
    t.insert(ck + ".mean", config::format_vector(comp.mean), line);
    const Matrix diag = Matrix(comp.cov.diagonal().asDiagonal());
    if ((comp.cov - diag).norm() == 0.0) {
      t.insert(ck + ".cov", "diag:" + config::format_vector(comp.cov.diagonal()), line);
    } else {
      std::string rows;
      for (Eigen::Index r = 0; r < comp.cov.rows(); ++r) {
        if (r) rows += ';';
        rows += config::format_vector(comp.cov.row(r).transpose());
      }
      t.insert(ck + ".cov", "full:" + rows, line);
    }
  }
}

OptimizerKind optimizer_from_string(const std::string& s, const std::string& key) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw UsageError("config: " + key + " must be sgd or adam, got '" + s + "'");
}

NetSpec parse_net(const config::Tree& t, const std::string& prefix) {
  NetSpec n;
  n.hidden_layers = t.get_int_or(prefix + ".hidden_layers", n.hidden_layers);
  n.hidden_width = t.get_int_or(prefix + ".hidden_width", n.hidden_width);
  n.activation = activation_from_string(t.get_or(prefix + ".activation", "tanh"));
  n.residual = t.get_bool_or(prefix + ".residual", false);
  return n;
}

}  // namespace

void ScenarioConfig::validate() const {
  require(dim >= 1, "scenario: dim must be >= 1");
  require(h > 0.0 && h <= T, "scenario: need 0 < h <= T");
  require(agents >= 2, "scenario: need at least 2 agents");
  require(target_samples >= 1, "scenario: need at least 1 target sample");
  require(train_frac >= 0.0 && test_frac >= 0.0 &&
              std::abs(train_frac + test_frac - 1.0) <= 1e-9,
          "scenario: split fractions must be nonnegative and sum to 1");
  require(sigma >= 0.0, "scenario: sigma must be >= 0");
  if (base_cost == BaseCost::kFlowDeviation)
    require(!flow_descriptor.empty(), "scenario: flow deviation cost needs cost.flow");
  if (interaction) interaction->validate();
  if (train.matcher == Matcher::kWasserstein)
    require(dual_net.activation == Activation::kTanh,
            "scenario: the dual potential requires tanh (1-Lipschitz activation)");
  train.validate();
}

ScenarioConfig parse_scenario(const config::Tree& t) {
  ScenarioConfig cfg;
  cfg.dim = t.get_int("dim");
  cfg.seed = t.get_u64_or("seed", 0);
  cfg.h = t.get_double("step");
  cfg.T = t.get_double("horizon");
  cfg.agents = t.get_int("agents");
  cfg.target_samples = t.get_int_or("target_samples", cfg.agents);
  cfg.train_frac = t.get_double_or("split.train", 0.75);
  cfg.test_frac = t.get_double_or("split.test", 1.0 - cfg.train_frac);

  cfg.initial = parse_source(t, "initial", cfg.dim);
  cfg.target = parse_source(t, "target", cfg.dim);

  const std::string base = t.get_or("cost.base", "energy");
  if (base == "energy") {
    cfg.base_cost = BaseCost::kQuadraticEnergy;
  } else if (base == "flow") {
    cfg.base_cost = BaseCost::kFlowDeviation;
    cfg.flow_descriptor = t.get("cost.flow");
  } else {
    throw UsageError("config: cost.base must be energy or flow, got '" + base + "'");
  }
  const std::string ik = t.get_or("cost.interaction", "none");
  if (ik != "none") {
    InteractionSpec inter;
    if (ik == "inverse_power")
      inter.kernel = InteractionKernel::kInversePower;
    else if (ik == "log")
      inter.kernel = InteractionKernel::kLog;
    else
      throw UsageError("config: cost.interaction must be none, inverse_power or log");
    inter.coeff = t.get_double_or("cost.interaction.c", 1.0);
    inter.alpha = t.get_double_or("cost.interaction.alpha", 2.0);
    inter.weight = t.get_double_or("cost.interaction.weight", 1.0);
    cfg.interaction = inter;
  }

  const std::string diff = t.get_or("diffusion", "zero");
  if (diff == "zero") {
    cfg.diffusion_kind = DiffusionSpec::Kind::kZero;
  } else if (diff == "isotropic") {
    cfg.diffusion_kind = DiffusionSpec::Kind::kIsotropic;
    cfg.sigma = t.get_double("diffusion.sigma");
  } else {
    throw UsageError("config: diffusion must be zero or isotropic, got '" + diff + "'");
  }

  const std::string ck = t.get_or("control.kind", "potential_gradient");
  if (ck == "potential_gradient")
    cfg.control_kind = ControlKind::kPotentialGradient;
  else if (ck == "direct")
    cfg.control_kind = ControlKind::kDirect;
  else
    throw UsageError("config: control.kind must be potential_gradient or direct");
  cfg.control_net = parse_net(t, "control");
  cfg.dual_net = parse_net(t, "dual");

  cfg.train.gamma = t.get_double_or("train.gamma", 1.0);
  cfg.train.outer_iters = t.get_int_or("train.outer_iters", 100);
  cfg.train.inner_iters = t.get_int_or("train.inner_iters", 6);
  cfg.train.lr = t.get_double_or("train.lr", 1e-4);
  cfg.train.inner_lr = t.get_double_or("train.inner_lr", 0.0);
  cfg.train.optimizer = optimizer_from_string(t.get_or("train.optimizer", "adam"), "train.optimizer");
  cfg.train.inner_optimizer =
      optimizer_from_string(t.get_or("train.inner_optimizer", "adam"), "train.inner_optimizer");
  cfg.train.adam.beta1 = t.get_double_or("train.adam.beta1", 0.9);
  cfg.train.adam.beta2 = t.get_double_or("train.adam.beta2", 0.999);
  cfg.train.adam.eps = t.get_double_or("train.adam.eps", 1e-8);
  cfg.train.batch_size = t.get_int_or("train.batch", 256);
  cfg.train.param_radius = t.get_double_or("train.radius", std::numeric_limits<double>::infinity());
  cfg.train.matcher = matcher_from_string(t.get_or("train.matcher", "wasserstein"));
  cfg.train.metrics_every = t.get_int_or("train.metrics_every", 1);
  cfg.train.early_stop_tol = t.get_double_or("train.early_stop_tol", 0.0);
  cfg.train.early_stop_patience = t.get_int_or("train.early_stop_patience", 50);
  cfg.eval_emd_points = t.get_int_or("eval.emd_points", 500);

  const std::set<std::string> stray = t.unused_keys();
  if (!stray.empty()) {
    const std::string& k = *stray.begin();
    throw UsageError("config line " + std::to_string(t.line_of(k)) + ": unknown key '" + k + "'");
  }
  cfg.validate();
  return cfg;
}

config::Tree scenario_to_tree(const ScenarioConfig& cfg) {
  config::Tree t;
  int ln = 0;
  t.insert("dim", std::to_string(cfg.dim), ++ln);
  t.insert("seed", std::to_string(cfg.seed), ++ln);
  t.insert("step", config::format_double(cfg.h), ++ln);
  t.insert("horizon", config::format_double(cfg.T), ++ln);
  t.insert("agents", std::to_string(cfg.agents), ++ln);
  t.insert("target_samples", std::to_string(cfg.target_samples), ++ln);
  t.insert("split.train", config::format_double(cfg.train_frac), ++ln);
  t.insert("split.test", config::format_double(cfg.test_frac), ++ln);
  emit_source(t, "initial", cfg.initial, ++ln);
  emit_source(t, "target", cfg.target, ++ln);
  t.insert("cost.base", cfg.base_cost == BaseCost::kQuadraticEnergy ? "energy" : "flow", ++ln);
  if (cfg.base_cost == BaseCost::kFlowDeviation) t.insert("cost.flow", cfg.flow_descriptor, ++ln);
  if (cfg.interaction) {
    t.insert("cost.interaction",
             cfg.interaction->kernel == InteractionKernel::kInversePower ? "inverse_power" : "log",
             ++ln);
    t.insert("cost.interaction.c", config::format_double(cfg.interaction->coeff), ++ln);
    t.insert("cost.interaction.alpha", config::format_double(cfg.interaction->alpha), ++ln);
    t.insert("cost.interaction.weight", config::format_double(cfg.interaction->weight), ++ln);
  } else {
    t.insert("cost.interaction", "none", ++ln);
  }
  if (cfg.diffusion_kind == DiffusionSpec::Kind::kZero) {
    t.insert("diffusion", "zero", ++ln);
  } else {
    t.insert("diffusion", "isotropic", ++ln);
    t.insert("diffusion.sigma", config::format_double(cfg.sigma), ++ln);
  }
  t.insert("control.kind",
           cfg.control_kind == ControlKind::kPotentialGradient ? "potential_gradient" : "direct",
           ++ln);
  const auto emit_net = [&](const std::string& prefix, const NetSpec& n) {
    t.insert(prefix + ".hidden_layers", std::to_string(n.hidden_layers), ++ln);
    t.insert(prefix + ".hidden_width", std::to_string(n.hidden_width), ++ln);
    t.insert(prefix + ".activation", to_string(n.activation), ++ln);
    t.insert(prefix + ".residual", n.residual ? "true" : "false", ++ln);
  };
  emit_net("control", cfg.control_net);
  emit_net("dual", cfg.dual_net);
  t.insert("train.gamma", config::format_double(cfg.train.gamma), ++ln);
  t.insert("train.outer_iters", std::to_string(cfg.train.outer_iters), ++ln);
  t.insert("train.inner_iters", std::to_string(cfg.train.inner_iters), ++ln);
  t.insert("train.lr", config::format_double(cfg.train.lr), ++ln);
  t.insert("train.inner_lr", config::format_double(cfg.train.inner_lr), ++ln);
  t.insert("train.optimizer", cfg.train.optimizer == OptimizerKind::kAdam ? "adam" : "sgd", ++ln);
  t.insert("train.inner_optimizer",
           cfg.train.inner_optimizer == OptimizerKind::kAdam ? "adam" : "sgd", ++ln);
  t.insert("train.adam.beta1", config::format_double(cfg.train.adam.beta1), ++ln);
  t.insert("train.adam.beta2", config::format_double(cfg.train.adam.beta2), ++ln);
  t.insert("train.adam.eps", config::format_double(cfg.train.adam.eps), ++ln);
  t.insert("train.batch", std::to_string(cfg.train.batch_size), ++ln);
  t.insert("train.radius", config::format_double(cfg.train.param_radius), ++ln);
  t.insert("train.matcher", to_string(cfg.train.matcher), ++ln);
  t.insert("train.metrics_every", std::to_string(cfg.train.metrics_every), ++ln);
  t.insert("train.early_stop_tol", config::format_double(cfg.train.early_stop_tol), ++ln);
  t.insert("train.early_stop_patience", std::to_string(cfg.train.early_stop_patience), ++ln);
  t.insert("eval.emd_points", std::to_string(cfg.eval_emd_points), ++ln);
  return t;
}

std::string canonical_config_text(const ScenarioConfig& cfg) {
  return config::serialize(scenario_to_tree(cfg));
}

Scenario::Scenario(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const rng::Stream init_stream(cfg_.seed, "initial-samples");
  const rng::Stream target_stream(cfg_.seed, "target-samples");

  const auto materialize = [&](const SourceSpec& src, int count, const rng::Stream& s) {
    if (src.kind == SourceSpec::Kind::kMixture) {
      require(src.mixture.dim() == cfg_.dim, "scenario: mixture dimension mismatch");
      return sample_mixture(src.mixture, count, s);
    }
    if (src.kind == SourceSpec::Kind::kGrid) {
      Matrix pts(src.grid_nx * src.grid_ny, 2);
      int r = 0;
      for (int j = 0; j < src.grid_ny; ++j)
        for (int i = 0; i < src.grid_nx; ++i) {
          pts(r, 0) = src.grid_x0 + i * src.grid_dx;
          pts(r, 1) = src.grid_y0 + j * src.grid_dy;
          ++r;
        }
      return pts;
    }
    PointCloud cloud = load_point_cloud(src.path);
    require(cloud.dim() == cfg_.dim, "scenario: point-cloud file dimension mismatch");
    return Matrix(cloud.points);
  };
  initial_ = materialize(cfg_.initial, cfg_.agents, init_stream);
  target_ = materialize(cfg_.target, cfg_.target_samples, target_stream);
  require(initial_.rows() >= 2, "scenario: need at least 2 initial samples");

  const int n = static_cast<int>(initial_.rows());
  const std::vector<int> perm = rng::permutation(rng::Stream(cfg_.seed, "split"), n);
  int n_train = static_cast<int>(std::lround(cfg_.train_frac * n));
  n_train = std::max(1, std::min(n_train, n));
  train_idx_.assign(perm.begin(), perm.begin() + n_train);
  test_idx_.assign(perm.begin() + n_train, perm.end());

  if (cfg_.base_cost == BaseCost::kFlowDeviation)
    flow_ = make_flow(cfg_.flow_descriptor, cfg_.dim);
  cost_.base = cfg_.base_cost;
  cost_.flow = flow_.get();
  cost_.interaction = cfg_.interaction;

  diffusion_ = cfg_.diffusion_kind == DiffusionSpec::Kind::kZero
                   ? DiffusionSpec::zero()
                   : DiffusionSpec::isotropic(cfg_.sigma);

  control_spec_.input_dim = cfg_.dim;
  control_spec_.hidden_layers = cfg_.control_net.hidden_layers;
  control_spec_.hidden_width = cfg_.control_net.hidden_width;
  control_spec_.activation = cfg_.control_net.activation;
  control_spec_.residual = cfg_.control_net.residual;
  control_spec_.output_dim = cfg_.control_kind == ControlKind::kPotentialGradient ? 1 : cfg_.dim;

  dual_spec_.input_dim = cfg_.dim;
  dual_spec_.hidden_layers = cfg_.dual_net.hidden_layers;
  dual_spec_.hidden_width = cfg_.dual_net.hidden_width;
  dual_spec_.activation = cfg_.dual_net.activation;
  dual_spec_.residual = cfg_.dual_net.residual;
  dual_spec_.output_dim = 1;
}

Matrix Scenario::train_states() const {
  Matrix out(static_cast<Eigen::Index>(train_idx_.size()), cfg_.dim);
  for (std::size_t i = 0; i < train_idx_.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = initial_.row(train_idx_[i]);
  return out;
}

Matrix Scenario::test_states() const {
  Matrix out(static_cast<Eigen::Index>(test_idx_.size()), cfg_.dim);
  for (std::size_t i = 0; i < test_idx_.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = initial_.row(test_idx_[i]);
  return out;
}

TrainProblem Scenario::problem() const {
  TrainProblem p;
  p.initial_states = train_states();
  p.target_samples = target_;
  p.cost = cost_;
  p.diffusion = diffusion_;
  p.h = cfg_.h;
  p.T = cfg_.T;
  p.control_spec = control_spec_;
  p.control_kind = cfg_.control_kind;
  p.dual_spec = dual_spec_;
  p.train = cfg_.train;
  p.seed = cfg_.seed;
  return p;
}

std::unique_ptr<SimulationResult> simulate(const Scenario& scenario,
                                           const NetworkParams& control, const Matrix& x0,
                                           std::uint64_t noise_seed) {
  auto result = std::make_unique<SimulationResult>();
  // ParamVars must outlive the control closure only within this call; the
  // rollout finishes before we return.
  ParamVars params = load_params(result->tape, control, /*trainable=*/false);
  ControlFn fn = make_control_fn(scenario.control_spec(), scenario.cfg().control_kind, params);
  NoiseFn noise = counter_noise(rng::Stream(noise_seed, "sim-noise"));
  result->traj = rollout(result->tape, x0, fn, scenario.diffusion(), scenario.cfg().h,
                         scenario.cfg().T, noise);
  return result;
}

namespace {

double min_pairwise(const Matrix& states) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < states.rows(); ++i)
    for (Eigen::Index j = i + 1; j < states.rows(); ++j)
      best = std::min(best, (states.row(i) - states.row(j)).norm());
  return best;
}

Matrix subsample_rows(const Matrix& m, int count, const rng::Stream& s) {
  if (count >= m.rows()) return m;
  const std::vector<int> idx = rng::sample_indices(s, 0, static_cast<int>(m.rows()), count);
  Matrix out(count, m.cols());
  for (int i = 0; i < count; ++i) out.row(i) = m.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

EvalReport evaluate(const Scenario& scenario, const NetworkParams& control,
                    std::uint64_t eval_seed) {
  const Matrix x0 = scenario.test_states();
  if (x0.rows() == 0)
    throw UsageError("evaluate: no held-out test samples (split.test is 0)");

  EvalReport report;
  report.test_points = static_cast<int>(x0.rows());

  ad::Tape tape;
  ParamVars params = load_params(tape, control, /*trainable=*/false);
  ControlFn fn = make_control_fn(scenario.control_spec(), scenario.cfg().control_kind, params);
  const rng::Stream noise_stream(eval_seed, "eval-noise");
  TrajectoryBatch traj = rollout(tape, x0, fn, scenario.diffusion(), scenario.cfg().h,
                                 scenario.cfg().T, counter_noise(noise_stream));
  report.running_cost_total = accumulate_running_cost(tape, traj, scenario.cost()).value()(0, 0);

  report.min_pairwise_distance = std::numeric_limits<double>::infinity();
  for (const ad::NodeId id : traj.state_nodes)
    report.min_pairwise_distance = std::min(report.min_pairwise_distance, min_pairwise(tape.value(id)));

  const Matrix x_terminal = tape.value(traj.terminal());
  report.chamfer_terminal =
      chamfer(PointCloud::uniform(x_terminal), PointCloud::uniform(scenario.target_samples()));

  // Exact EMD on equal-size subsamples (Hungarian route).
  const int m = std::min({scenario.cfg().eval_emd_points, static_cast<int>(x_terminal.rows()),
                          static_cast<int>(scenario.target_samples().rows())});
  const rng::Stream sub_x(eval_seed, "eval-sub-x");
  const rng::Stream sub_z(eval_seed, "eval-sub-z");
  const Matrix zs = subsample_rows(scenario.target_samples(), m, sub_z);
  report.emd_terminal = emd_exact(PointCloud::uniform(subsample_rows(x_terminal, m, sub_x)),
                                  PointCloud::uniform(zs));

  // Uncontrolled baseline: same noise, u = 0.
  ad::Tape tape0;
  ControlFn zero = [](ad::Var x) { return 0.0 * x; };
  TrajectoryBatch traj0 = rollout(tape0, x0, zero, scenario.diffusion(), scenario.cfg().h,
                                  scenario.cfg().T, counter_noise(noise_stream));
  const Matrix x_uncontrolled = tape0.value(traj0.terminal());
  report.emd_uncontrolled = emd_exact(PointCloud::uniform(subsample_rows(x_uncontrolled, m, sub_x)),
                                      PointCloud::uniform(zs));
  return report;
}

// ---------------------------------------------------------------------------
// Presets.

namespace {

constexpr const char* kSyn1 = R"(# Synthetic-1 analog: 3D SDE transport between Gaussian mixtures.
dim = 3
seed = 1
step = 0.1
horizon = 1
agents = 2000
target_samples = 2000
split.train = 0.75
split.test = 0.25
initial.kind = mixture
initial.components = 2
initial.c0.weight = 0.5
initial.c0.mean = -2,-2,0
initial.c0.cov = diag:0.04,0.04,0.04
initial.c1.weight = 0.5
initial.c1.mean = -2,2,0
initial.c1.cov = diag:0.04,0.04,0.04
target.kind = mixture
target.components = 2
target.c0.weight = 0.5
target.c0.mean = 2,0,-1
target.c0.cov = diag:0.04,0.04,0.04
target.c1.weight = 0.5
target.c1.mean = 2,0,1
target.c1.cov = diag:0.04,0.04,0.04
cost.base = energy
cost.interaction = none
diffusion = isotropic
diffusion.sigma = 0.01
control.kind = potential_gradient
control.hidden_layers = 3
control.hidden_width = 36
dual.hidden_layers = 6
dual.hidden_width = 256
train.gamma = 5
train.outer_iters = 10000
train.inner_iters = 6
train.lr = 0.0001
train.batch = 256
train.matcher = wasserstein
)";

constexpr const char* kSyn2 = R"(# Synthetic-2 analog: dimension 100, projections carry the visual story.
dim = 100
seed = 2
step = 0.1
horizon = 1
agents = 2000
target_samples = 2000
split.train = 0.75
split.test = 0.25
initial.kind = mixture
initial.components = 1
initial.c0.weight = 1
initial.c0.mean = -4,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0
initial.c0.cov = spherical:0.0025
target.kind = mixture
target.components = 1
target.c0.weight = 1
target.c0.mean = 4,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0
target.c0.cov = spherical:0.0025
cost.base = energy
cost.interaction = none
diffusion = isotropic
diffusion.sigma = 0.01
control.kind = potential_gradient
control.hidden_layers = 3
control.hidden_width = 36
dual.hidden_layers = 6
dual.hidden_width = 256
train.gamma = 5
train.outer_iters = 10000
train.inner_iters = 6
train.lr = 0.0001
train.batch = 256
train.matcher = wasserstein
eval.emd_points = 256
)";

constexpr const char* kSyn3 = R"(# Synthetic-3 analog: 2D collision avoidance with |x-y|^-2 interaction, T = 20.
dim = 2
seed = 3
step = 0.2
horizon = 20
agents = 36
target_samples = 36
split.train = 0.75
split.test = 0.25
initial.kind = grid
initial.grid = 6,6,-9,-2.5,1,1
target.kind = grid
target.grid = 6,6,4,-2.5,1,1
cost.base = energy
cost.interaction = inverse_power
cost.interaction.c = 1
cost.interaction.alpha = 2
cost.interaction.weight = 1
diffusion = zero
control.kind = potential_gradient
control.hidden_layers = 3
control.hidden_width = 36
dual.hidden_layers = 6
dual.hidden_width = 256
train.gamma = 1
train.outer_iters = 2000
train.inner_iters = 6
train.lr = 0.001
train.batch = 36
train.matcher = chamfer
)";

constexpr const char* kFlowAuv = R"(# Flow-field analog of the AUV experiment: steer against a synthetic gyre.
dim = 2
seed = 4
step = 0.05
horizon = 1
agents = 400
target_samples = 400
split.train = 0.75
split.test = 0.25
initial.kind = mixture
initial.components = 2
initial.c0.weight = 0.5
initial.c0.mean = 0.3,0.3
initial.c0.cov = diag:0.01,0.01
initial.c1.weight = 0.5
initial.c1.mean = 0.3,0.7
initial.c1.cov = diag:0.01,0.01
target.kind = mixture
target.components = 2
target.c0.weight = 0.5
target.c0.mean = 1.6,0.4
target.c0.cov = diag:0.01,0.01
target.c1.weight = 0.5
target.c1.mean = 1.6,0.6
target.c1.cov = diag:0.01,0.01
cost.base = flow
cost.flow = double-gyre:0.2,1
cost.interaction = none
diffusion = isotropic
diffusion.sigma = 0.01
control.kind = direct
control.hidden_layers = 3
control.hidden_width = 36
control.residual = true
dual.hidden_layers = 6
dual.hidden_width = 256
train.gamma = 5
train.outer_iters = 5000
train.inner_iters = 6
train.lr = 0.0001
train.batch = 256
train.matcher = wasserstein
)";

}  // namespace

std::vector<std::string> preset_names() {
  return {"syn1-lowdim-sde", "syn2-highdim", "syn3-collision", "flowfield-auv"};
}

std::string preset_config_text(const std::string& name) {
  if (name == "syn1-lowdim-sde") return kSyn1;
  if (name == "syn2-highdim") return kSyn2;
  if (name == "syn3-collision") return kSyn3;
  if (name == "flowfield-auv") return kFlowAuv;
  throw UsageError("unknown preset '" + name + "'; try `presets list`");
}

}  // namespace odc
