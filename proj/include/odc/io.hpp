#pragma once

#include "odc/common.hpp"
#include "odc/dynamics.hpp"
#include "odc/matching.hpp"
#include "odc/network.hpp"
#include "odc/trainer.hpp"

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace odc {

/// CSV with header `x0,...,x{d-1}[,weight]`; doubles printed with 17
/// significant digits so finite values round-trip exactly. On load, a weight
/// column summing to s in [0.99, 1.01] is renormalized; anything further off
/// is rejected.
void save_point_cloud(const std::string& path, const PointCloud& cloud);
PointCloud load_point_cloud(const std::string& path);

/// CSV with columns `t,agent_id,x0,...,x{d-1}`, rows ordered by (t, agent).
void export_trajectories(const std::string& path, const ad::Tape& tape,
                         const TrajectoryBatch& traj);

struct TrajectoryFrame {
  double t;
  Matrix states;
};
std::vector<TrajectoryFrame> load_trajectories(const std::string& path);

/// Streaming writer for the training metrics CSV with the fixed header
/// `iter,objective,running_cost,match_value,grad_map_norm,wall_ms`.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const TrainMetricsRow& row);

 private:
  std::ofstream out_;
};

std::vector<TrainMetricsRow> load_metrics(const std::string& path);

/// One self-describing file: a plain-text header (format version, scenario
/// hash, embedded config, tensor table) followed by flat little-endian
/// float64 payload. Resuming from a checkpoint reproduces the uninterrupted
/// run bit for bit.
struct Checkpoint {
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  std::string config_text;
  TrainState state;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace odc
