#include "odc/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace odc {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> parts;
  std::stringstream ss(line);
  std::string part;
  while (std::getline(ss, part, ',')) parts.push_back(part);
  if (!line.empty() && line.back() == ',') parts.emplace_back();
  return parts;
}

double parse_field(const std::string& s, const std::string& path, int line) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw UsageError(path + " line " + std::to_string(line) + ": non-numeric field '" + s + "'");
  }
  if (pos != s.size())
    throw UsageError(path + " line " + std::to_string(line) + ": bad field '" + s + "'");
  return v;
}

}  // namespace

void save_point_cloud(const std::string& path, const PointCloud& cloud) {
  cloud.validate();
  std::ofstream out = open_out(path);
  const int d = cloud.dim();
  const bool write_weights = !cloud.is_uniform();
  for (int j = 0; j < d; ++j) out << (j ? "," : "") << "x" << j;
  if (write_weights) out << ",weight";
  out << "\n";
  for (int i = 0; i < cloud.size(); ++i) {
    for (int j = 0; j < d; ++j) out << (j ? "," : "") << fmt17(cloud.points(i, j));
    if (write_weights) out << "," << fmt17(cloud.weights(i));
    out << "\n";
  }
  if (!out) throw UsageError("write failed for '" + path + "'");
}

PointCloud load_point_cloud(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw UsageError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_csv(line);
  bool has_weight = !header.empty() && header.back() == "weight";
  const int d = static_cast<int>(header.size()) - (has_weight ? 1 : 0);
  if (d < 1) throw UsageError(path + ": header must list coordinate columns x0,x1,...");
  for (int j = 0; j < d; ++j)
    if (header[static_cast<std::size_t>(j)] != "x" + std::to_string(j))
      throw UsageError(path + ": unexpected header column '" + header[static_cast<std::size_t>(j)] +
                       "' (want x" + std::to_string(j) + ")");

  std::vector<Vector> rows;
  std::vector<double> weights;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> parts = split_csv(line);
    if (static_cast<int>(parts.size()) != d + (has_weight ? 1 : 0))
      throw UsageError(path + " line " + std::to_string(lineno) + ": expected " +
                       std::to_string(d + (has_weight ? 1 : 0)) + " fields, got " +
                       std::to_string(parts.size()));
    Vector x(d);
    for (int j = 0; j < d; ++j) x(j) = parse_field(parts[static_cast<std::size_t>(j)], path, lineno);
    rows.push_back(std::move(x));
    if (has_weight) {
      const double w = parse_field(parts.back(), path, lineno);
      if (w < 0.0)
        throw UsageError(path + " line " + std::to_string(lineno) + ": negative weight");
      weights.push_back(w);
    }
  }
  if (rows.empty()) throw UsageError(path + ": no data rows");

  Matrix pts(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  if (!has_weight) return PointCloud::uniform(std::move(pts));

  Vector w = Eigen::Map<Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  const double s = w.sum();
  if (s < 0.99 || s > 1.01)
    throw UsageError(path + ": weights sum to " + fmt17(s) + ", outside [0.99, 1.01]");
  return PointCloud::weighted(std::move(pts), w / s);
}

void export_trajectories(const std::string& path, const ad::Tape& tape,
                         const TrajectoryBatch& traj) {
  std::ofstream out = open_out(path);
  const Matrix& first = tape.value(traj.state_nodes.front());
  const int d = static_cast<int>(first.cols());
  out << "t,agent_id";
  for (int j = 0; j < d; ++j) out << ",x" << j;
  out << "\n";
  for (std::size_t k = 0; k < traj.state_nodes.size(); ++k) {
    const Matrix& states = tape.value(traj.state_nodes[k]);
    const std::string t = fmt17(traj.time_at(static_cast<int>(k)));
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
      out << t << "," << i;
      for (int j = 0; j < d; ++j) out << "," << fmt17(states(i, j));
      out << "\n";
    }
  }
  if (!out) throw UsageError("write failed for '" + path + "'");
}

std::vector<TrajectoryFrame> load_trajectories(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw UsageError(path + ": empty file");
  const int d = static_cast<int>(split_csv(line).size()) - 2;
  if (d < 1) throw UsageError(path + ": bad trajectory header");

  std::vector<TrajectoryFrame> frames;
  std::vector<Vector> pending;
  double current_t = 0.0;
  bool have_t = false;
  int lineno = 1;
  const auto flush = [&]() {
    if (pending.empty()) return;
    Matrix states(static_cast<Eigen::Index>(pending.size()), d);
    for (std::size_t i = 0; i < pending.size(); ++i)
      states.row(static_cast<Eigen::Index>(i)) = pending[i].transpose();
    frames.push_back({current_t, std::move(states)});
    pending.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> parts = split_csv(line);
    if (static_cast<int>(parts.size()) != d + 2)
      throw UsageError(path + " line " + std::to_string(lineno) + ": bad row");
    const double t = parse_field(parts[0], path, lineno);
    if (!have_t || t != current_t) {
      flush();
      current_t = t;
      have_t = true;
    }
    Vector x(d);
    for (int j = 0; j < d; ++j) x(j) = parse_field(parts[static_cast<std::size_t>(j + 2)], path, lineno);
    pending.push_back(std::move(x));
  }
  flush();
  return frames;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(open_out(path)) {
  out_ << "iter,objective,running_cost,match_value,grad_map_norm,wall_ms\n";
  out_.flush();
}

void MetricsWriter::write(const TrainMetricsRow& row) {
  out_ << row.iter << "," << fmt17(row.objective) << "," << fmt17(row.running_cost) << ","
       << fmt17(row.match_value) << "," << fmt17(row.grad_map_norm) << "," << fmt17(row.wall_ms)
       << "\n";
  out_.flush();
}

std::vector<TrainMetricsRow> load_metrics(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw UsageError(path + ": empty metrics file");
  std::vector<TrainMetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> parts = split_csv(line);
    if (parts.size() != 6) throw UsageError(path + " line " + std::to_string(lineno) + ": bad row");
    TrainMetricsRow r;
    r.iter = static_cast<int>(parse_field(parts[0], path, lineno));
    r.objective = parse_field(parts[1], path, lineno);
    r.running_cost = parse_field(parts[2], path, lineno);
    r.match_value = parse_field(parts[3], path, lineno);
    r.grad_map_norm = parse_field(parts[4], path, lineno);
    r.wall_ms = parse_field(parts[5], path, lineno);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

constexpr const char* kMagic = "odc-checkpoint 1";

struct TensorRef {
  std::string name;
  const double* data;
  Eigen::Index rows, cols;
};

void collect_net(const std::string& prefix, const NetworkParams& net, std::vector<TensorRef>& out) {
  for (std::size_t i = 0; i < net.weights.size(); ++i)
    out.push_back({prefix + ".w" + std::to_string(i), net.weights[i].data(),
                   net.weights[i].rows(), net.weights[i].cols()});
  for (std::size_t i = 0; i < net.biases.size(); ++i)
    out.push_back({prefix + ".b" + std::to_string(i), net.biases[i].data(), 1,
                   net.biases[i].size()});
  for (std::size_t i = 0; i < net.spectral_u.size(); ++i)
    out.push_back({prefix + ".u" + std::to_string(i), net.spectral_u[i].data(),
                   net.spectral_u[i].size(), static_cast<Eigen::Index>(net.spectral_u[i].size() > 0 ? 1 : 0)});
  }

void collect_opt(const std::string& prefix, const OptimizerState& opt, std::vector<TensorRef>& out) {
  out.push_back({prefix + ".m", opt.m.data(), opt.m.size(), opt.m.size() > 0 ? 1 : 0});
  out.push_back({prefix + ".v", opt.v.data(), opt.v.size(), opt.v.size() > 0 ? 1 : 0});
}

std::string opt_header(const OptimizerState& opt) {
  std::string s = opt.kind == OptimizerKind::kAdam ? "adam" : "sgd";
  s += " " + std::to_string(opt.step_count);
  s += " " + fmt17(opt.hp.beta1) + " " + fmt17(opt.hp.beta2) + " " + fmt17(opt.hp.eps);
  return s;
}

OptimizerState parse_opt_header(std::istream& in, const std::string& path) {
  OptimizerState opt;
  std::string kind;
  if (!(in >> kind >> opt.step_count >> opt.hp.beta1 >> opt.hp.beta2 >> opt.hp.eps))
    throw UsageError(path + ": bad optimizer header");
  if (kind == "adam")
    opt.kind = OptimizerKind::kAdam;
  else if (kind == "sgd")
    opt.kind = OptimizerKind::kSgd;
  else
    throw UsageError(path + ": unknown optimizer kind '" + kind + "'");
  return opt;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out = open_out(path);
  out << kMagic << "\n";
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(ckpt.scenario_hash));
  out << "scenario " << hex << "\n";
  out << "seed " << ckpt.seed << "\n";
  out << "iteration " << ckpt.state.next_iter << "\n";
  out << "opt_control " << opt_header(ckpt.state.opt_control) << "\n";
  out << "opt_dual " << opt_header(ckpt.state.opt_dual) << "\n";
  out << "config " << ckpt.config_text.size() << "\n";
  out << ckpt.config_text;

  std::vector<TensorRef> tensors;
  collect_net("control", ckpt.state.control, tensors);
  collect_net("dual", ckpt.state.dual, tensors);
  collect_opt("opt_control", ckpt.state.opt_control, tensors);
  collect_opt("opt_dual", ckpt.state.opt_dual, tensors);

  out << "tensors " << tensors.size() << "\n";
  for (const TensorRef& t : tensors) out << t.name << " " << t.rows << " " << t.cols << "\n";
  out << "binary\n";
  for (const TensorRef& t : tensors)
    out.write(reinterpret_cast<const char*>(t.data),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.rows * t.cols)));
  if (!out) throw UsageError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw UsageError(path + ": not an odc checkpoint (or unsupported version)");

  Checkpoint ckpt;
  std::string word;
  in >> word;
  if (word != "scenario") throw UsageError(path + ": corrupt header (want 'scenario')");
  in >> word;
  ckpt.scenario_hash = std::stoull(word, nullptr, 16);
  in >> word >> ckpt.seed;
  if (word != "seed") throw UsageError(path + ": corrupt header (want 'seed')");
  in >> word >> ckpt.state.next_iter;
  if (word != "iteration") throw UsageError(path + ": corrupt header (want 'iteration')");
  in >> word;
  if (word != "opt_control") throw UsageError(path + ": corrupt header (want 'opt_control')");
  ckpt.state.opt_control = parse_opt_header(in, path);
  in >> word;
  if (word != "opt_dual") throw UsageError(path + ": corrupt header (want 'opt_dual')");
  ckpt.state.opt_dual = parse_opt_header(in, path);
  std::size_t config_bytes = 0;
  in >> word >> config_bytes;
  if (word != "config") throw UsageError(path + ": corrupt header (want 'config')");
  in.get();  // newline after the byte count
  ckpt.config_text.resize(config_bytes);
  in.read(ckpt.config_text.data(), static_cast<std::streamsize>(config_bytes));
  if (!in) throw UsageError(path + ": truncated config block");

  std::size_t count = 0;
  in >> word >> count;
  if (word != "tensors") throw UsageError(path + ": corrupt header (want 'tensors')");
  std::vector<std::string> names(count);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> names[i] >> shapes[i].first >> shapes[i].second))
      throw UsageError(path + ": corrupt tensor table");
  }
  in >> word;
  if (word != "binary") throw UsageError(path + ": corrupt header (want 'binary')");
  in.get();

  const auto read_tensor = [&](std::size_t i) {
    Matrix m(shapes[i].first, shapes[i].second);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw UsageError(path + ": truncated payload at tensor '" + names[i] + "'");
    return m;
  };

  for (std::size_t i = 0; i < count; ++i) {
    const std::string& name = names[i];
    Matrix m = read_tensor(i);
    const auto assign_net = [&](const std::string& prefix, NetworkParams& net) {
      const std::string rest = name.substr(prefix.size() + 1);
      const char tag = rest[0];
      const std::size_t idx = static_cast<std::size_t>(std::stoi(rest.substr(1)));
      if (tag == 'w') {
        if (net.weights.size() <= idx) net.weights.resize(idx + 1);
        net.weights[idx] = std::move(m);
      } else if (tag == 'b') {
        if (net.biases.size() <= idx) net.biases.resize(idx + 1);
        net.biases[idx] = RowVector(m.row(0));
      } else if (tag == 'u') {
        if (net.spectral_u.size() <= idx) net.spectral_u.resize(idx + 1);
        net.spectral_u[idx] = m.size() > 0 ? Vector(m.col(0)) : Vector();
      } else {
        throw UsageError(path + ": unknown tensor '" + name + "'");
      }
    };
    if (name.rfind("control.", 0) == 0) {
      assign_net("control", ckpt.state.control);
    } else if (name.rfind("dual.", 0) == 0) {
      assign_net("dual", ckpt.state.dual);
    } else if (name == "opt_control.m") {
      ckpt.state.opt_control.m = m.size() > 0 ? Vector(m.col(0)) : Vector();
    } else if (name == "opt_control.v") {
      ckpt.state.opt_control.v = m.size() > 0 ? Vector(m.col(0)) : Vector();
    } else if (name == "opt_dual.m") {
      ckpt.state.opt_dual.m = m.size() > 0 ? Vector(m.col(0)) : Vector();
    } else if (name == "opt_dual.v") {
      ckpt.state.opt_dual.v = m.size() > 0 ? Vector(m.col(0)) : Vector();
    } else {
      throw UsageError(path + ": unknown tensor '" + name + "'");
    }
  }
  return ckpt;
}

}  // namespace odc
