#include "odc/cli.hpp"

#include "odc/io.hpp"
#include "odc/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace odc {

namespace {

namespace fs = std::filesystem;

std::uint64_t apply_seed_overrides(std::uint64_t from_config, bool flag_set, std::uint64_t flag) {
  // Priority: --seed flag, then ODC_SEED, then the config value.
  if (flag_set) return flag;
  if (const char* env = std::getenv("ODC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("ODC_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return from_config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw UsageError("write failed for '" + path.string() + "'");
}

struct LoadedCheckpoint {
  Checkpoint ckpt;
  ScenarioConfig cfg;
};

LoadedCheckpoint open_checkpoint(const std::string& path) {
  LoadedCheckpoint lc;
  lc.ckpt = load_checkpoint(path);
  lc.cfg = parse_scenario(config::parse_text(lc.ckpt.config_text));
  const std::uint64_t expect = fnv1a64(canonical_config_text(lc.cfg));
  if (expect != lc.ckpt.scenario_hash)
    throw UsageError(path + ": scenario hash does not match the embedded config");
  // Shape check against the config-derived architecture.
  Scenario scenario(lc.cfg);
  const auto check_net = [&](const MLPSpec& spec, const NetworkParams& net, const char* name) {
    const auto shapes = spec.weight_shapes();
    if (net.weights.size() != shapes.size())
      throw UsageError(path + ": checkpoint " + name + " layer count mismatch");
    for (std::size_t i = 0; i < shapes.size(); ++i)
      if (net.weights[i].rows() != shapes[i].first || net.weights[i].cols() != shapes[i].second)
        throw UsageError(path + ": checkpoint " + name + " shape mismatch at layer " +
                         std::to_string(i));
  };
  check_net(scenario.control_spec(), lc.ckpt.state.control, "control");
  check_net(scenario.dual_spec(), lc.ckpt.state.dual, "dual");
  return lc;
}

void print_report(const EvalReport& r) {
  std::cout << "test_points          " << r.test_points << "\n"
            << "emd_terminal         " << r.emd_terminal << "\n"
            << "emd_uncontrolled     " << r.emd_uncontrolled << "\n"
            << "chamfer_terminal     " << r.chamfer_terminal << "\n"
            << "running_cost_total   " << r.running_cost_total << "\n"
            << "min_pairwise_dist    " << r.min_pairwise_distance << "\n";
}

int run_train(const std::string& config_path, bool seed_set, std::uint64_t seed_flag,
              const std::string& outdir, int metrics_every, const std::string& matcher,
              const std::string& resume_path) {
  ScenarioConfig cfg = parse_scenario(config::parse_file(config_path));
  cfg.seed = apply_seed_overrides(cfg.seed, seed_set, seed_flag);
  if (metrics_every > 0) cfg.train.metrics_every = metrics_every;
  if (!matcher.empty()) cfg.train.matcher = matcher_from_string(matcher);
  cfg.validate();

  const std::string canonical = canonical_config_text(cfg);
  const std::uint64_t hash = fnv1a64(canonical);

  fs::create_directories(outdir);
  write_text(fs::path(outdir) / "config.odc", canonical);
  write_text(fs::path(outdir) / "seed.txt", std::to_string(cfg.seed) + "\n");

  Scenario scenario(cfg);
  TrainProblem problem = scenario.problem();

  TrainState resume;
  const TrainState* resume_ptr = nullptr;
  if (!resume_path.empty()) {
    LoadedCheckpoint lc = open_checkpoint(resume_path);
    if (lc.ckpt.scenario_hash != hash)
      throw UsageError("resume checkpoint was trained on a different scenario");
    resume = lc.ckpt.state;
    resume_ptr = &resume;
  }

  MetricsWriter metrics((fs::path(outdir) / "metrics.csv").string());
  TrainResult result =
      odc_train(problem, resume_ptr, [&](const TrainMetricsRow& row) { metrics.write(row); });

  Checkpoint ckpt;
  ckpt.scenario_hash = hash;
  ckpt.seed = cfg.seed;
  ckpt.config_text = canonical;
  ckpt.state = result.state;
  save_checkpoint((fs::path(outdir) / "final.ckpt").string(), ckpt);

  const TrainMetricsRow& last = result.metrics.rows.back();
  std::cout << "trained " << result.state.next_iter << " iterations; objective " << last.objective
            << ", match " << last.match_value << ", |G| " << last.grad_map_norm << "\n"
            << "checkpoint: " << (fs::path(outdir) / "final.ckpt").string() << "\n";
  return 0;
}

int run_simulate(const std::string& ckpt_path, bool seed_set, std::uint64_t seed_flag,
                 const std::string& outdir) {
  LoadedCheckpoint lc = open_checkpoint(ckpt_path);
  const std::uint64_t seed = apply_seed_overrides(lc.cfg.seed + 1, seed_set, seed_flag);
  Scenario scenario(lc.cfg);
  const Matrix x0 = scenario.test_states().rows() > 0 ? scenario.test_states()
                                                      : scenario.initial_samples();
  auto sim = simulate(scenario, lc.ckpt.state.control, x0, seed);
  fs::create_directories(outdir);
  const fs::path out = fs::path(outdir) / "trajectories.csv";
  export_trajectories(out.string(), sim->tape, sim->traj);
  std::cout << "simulated " << x0.rows() << " agents for " << sim->traj.steps()
            << " steps -> " << out.string() << "\n";
  return 0;
}

int run_evaluate(const std::string& ckpt_path, bool seed_set, std::uint64_t seed_flag) {
  LoadedCheckpoint lc = open_checkpoint(ckpt_path);
  const std::uint64_t seed = apply_seed_overrides(lc.cfg.seed + 1, seed_set, seed_flag);
  Scenario scenario(lc.cfg);
  print_report(evaluate(scenario, lc.ckpt.state.control, seed));
  return 0;
}

int run_export(const std::string& ckpt_path, const std::string& outdir, bool seed_set,
               std::uint64_t seed_flag) {
  LoadedCheckpoint lc = open_checkpoint(ckpt_path);
  const std::uint64_t seed = apply_seed_overrides(lc.cfg.seed + 1, seed_set, seed_flag);
  Scenario scenario(lc.cfg);
  fs::create_directories(outdir);

  write_text(fs::path(outdir) / "config.odc", lc.ckpt.config_text);
  save_point_cloud((fs::path(outdir) / "initial.csv").string(),
                   PointCloud::uniform(scenario.initial_samples()));
  save_point_cloud((fs::path(outdir) / "target.csv").string(),
                   PointCloud::uniform(scenario.target_samples()));

  const Matrix x0 = scenario.test_states().rows() > 0 ? scenario.test_states()
                                                      : scenario.initial_samples();
  auto sim = simulate(scenario, lc.ckpt.state.control, x0, seed);
  export_trajectories((fs::path(outdir) / "trajectories.csv").string(), sim->tape, sim->traj);
  save_point_cloud((fs::path(outdir) / "terminal.csv").string(),
                   PointCloud::uniform(sim->tape.value(sim->traj.terminal())));
  std::cout << "exported scenario artifacts to " << outdir << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Optimal density control: learn a feedback control steering a particle swarm "
               "to a target distribution under a Wasserstein terminal penalty."};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, outdir = "odc-run", matcher, resume_path, preset_name,
              emit_path;
  std::uint64_t seed_flag = 0;
  int metrics_every = 0;

  CLI::App* train = app.add_subcommand("train", "train a control from a scenario config");
  train->add_option("config", config_path, "scenario config file")->required();
  CLI::Option* train_seed = train->add_option("--seed", seed_flag, "override the scenario seed");
  train->add_option("--outdir", outdir, "run directory (config copy, metrics, checkpoint)");
  train->add_option("--metrics-every", metrics_every, "emit every k-th metrics row");
  train->add_option("--matcher", matcher, "wasserstein|chamfer")
      ->check(CLI::IsMember({"wasserstein", "chamfer"}));
  train->add_option("--resume", resume_path, "resume from a checkpoint of the same scenario");

  CLI::App* sim = app.add_subcommand("simulate", "roll out a trained control");
  sim->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  CLI::Option* sim_seed = sim->add_option("--seed", seed_flag, "noise seed");
  sim->add_option("--outdir", outdir, "output directory");

  CLI::App* eval = app.add_subcommand("evaluate", "report terminal EMD/Chamfer/cost on held-out samples");
  eval->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  CLI::Option* eval_seed = eval->add_option("--seed", seed_flag, "evaluation noise seed");

  CLI::App* exp = app.add_subcommand("export", "write clouds and trajectories for plotting");
  exp->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  exp->add_option("--out", outdir, "output directory")->required();
  CLI::Option* exp_seed = exp->add_option("--seed", seed_flag, "noise seed");

  CLI::App* presets = app.add_subcommand("presets", "list or emit scenario presets");
  CLI::App* plist = presets->add_subcommand("list", "list preset names");
  CLI::App* pemit = presets->add_subcommand("emit", "write a preset config");
  pemit->add_option("name", preset_name, "preset name")->required();
  pemit->add_option("--out", emit_path, "output file (default <name>.odc)");
  presets->require_subcommand(1);

  try {
    app.parse(argc, argv);
    if (train->parsed())
      return run_train(config_path, !train_seed->empty(), seed_flag, outdir, metrics_every,
                       matcher, resume_path);
    if (sim->parsed()) return run_simulate(ckpt_path, !sim_seed->empty(), seed_flag, outdir);
    if (eval->parsed()) return run_evaluate(ckpt_path, !eval_seed->empty(), seed_flag);
    if (exp->parsed()) return run_export(ckpt_path, outdir, !exp_seed->empty(), seed_flag);
    if (plist->parsed()) {
      for (const std::string& name : preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (pemit->parsed()) {
      const std::string text = preset_config_text(preset_name);
      const std::string out = emit_path.empty() ? preset_name + ".odc" : emit_path;
      write_text(out, text);
      std::cout << "wrote " << out << "\n";
      return 0;
    }
    std::cerr << app.help() << "\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help and friends
      app.exit(e);
      return 0;
    }
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace odc
