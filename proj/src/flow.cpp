#include "odc/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace odc {

UniformFlow::UniformFlow(Vector velocity) : velocity_(std::move(velocity)) {
  require(velocity_.size() >= 1, "UniformFlow: empty velocity");
}

Vector UniformFlow::value(const Vector&) const { return velocity_; }

Matrix UniformFlow::jacobian(const Vector&) const {
  return Matrix::Zero(velocity_.size(), velocity_.size());
}

Vector RigidRotationFlow::value(const Vector& x) const {
  Vector v(2);
  v << -omega_ * x(1), omega_ * x(0);
  return v;
}

Matrix RigidRotationFlow::jacobian(const Vector&) const {
  Matrix j(2, 2);
  j << 0.0, -omega_, omega_, 0.0;
  return j;
}

DoubleGyreFlow::DoubleGyreFlow(double amplitude, double cell_size)
    : amplitude_(amplitude), cell_(cell_size) {
  require(cell_size > 0.0, "DoubleGyreFlow: cell size must be positive");
}

Vector DoubleGyreFlow::value(const Vector& x) const {
  const double k = std::numbers::pi / cell_;
  Vector v(2);
  v(0) = -std::numbers::pi * amplitude_ * std::sin(k * x(0)) * std::cos(k * x(1));
  v(1) = std::numbers::pi * amplitude_ * std::cos(k * x(0)) * std::sin(k * x(1));
  return v;
}

Matrix DoubleGyreFlow::jacobian(const Vector& x) const {
  const double k = std::numbers::pi / cell_;
  const double a = std::numbers::pi * amplitude_;
  Matrix j(2, 2);
  j(0, 0) = -a * k * std::cos(k * x(0)) * std::cos(k * x(1));
  j(0, 1) = a * k * std::sin(k * x(0)) * std::sin(k * x(1));
  j(1, 0) = -a * k * std::sin(k * x(0)) * std::sin(k * x(1));
  j(1, 1) = a * k * std::cos(k * x(0)) * std::cos(k * x(1));
  return j;
}

GridFlow GridFlow::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open flow grid file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw UsageError("flow grid '" + path + "': empty file");

  GridFlow g;
  {
    std::stringstream ss(line);
    char comma;
    if (!(ss >> g.nx_ >> comma >> g.ny_ >> comma >> g.x0_ >> comma >> g.y0_ >> comma >> g.dx_ >>
          comma >> g.dy_))
      throw UsageError("flow grid '" + path + "': bad header (want nx,ny,x0,y0,dx,dy)");
  }
  require(g.nx_ >= 2 && g.ny_ >= 2, "flow grid: need at least a 2x2 grid");
  require(g.dx_ > 0 && g.dy_ > 0, "flow grid: spacings must be positive");
  g.vx_.resize(g.ny_, g.nx_);
  g.vy_.resize(g.ny_, g.nx_);
  for (int j = 0; j < g.ny_; ++j)
    for (int i = 0; i < g.nx_; ++i) {
      if (!std::getline(in, line))
        throw UsageError("flow grid '" + path + "': truncated (expected " +
                         std::to_string(g.nx_ * g.ny_) + " rows)");
      std::stringstream ss(line);
      char comma;
      if (!(ss >> g.vx_(j, i) >> comma >> g.vy_(j, i)))
        throw UsageError("flow grid '" + path + "': bad row '" + line + "'");
    }
  return g;
}

GridFlow::Cell GridFlow::locate(const Vector& x) const {
  Cell c{};
  double gx = (x(0) - x0_) / dx_;
  double gy = (x(1) - y0_) / dy_;
  c.clamped_x = gx <= 0.0 || gx >= nx_ - 1.0;
  c.clamped_y = gy <= 0.0 || gy >= ny_ - 1.0;
  gx = std::clamp(gx, 0.0, static_cast<double>(nx_ - 1));
  gy = std::clamp(gy, 0.0, static_cast<double>(ny_ - 1));
  c.i = std::min(static_cast<int>(gx), nx_ - 2);
  c.j = std::min(static_cast<int>(gy), ny_ - 2);
  c.fx = gx - c.i;
  c.fy = gy - c.j;
  return c;
}

Vector GridFlow::value(const Vector& x) const {
  const Cell c = locate(x);
  const double w00 = (1 - c.fx) * (1 - c.fy), w10 = c.fx * (1 - c.fy);
  const double w01 = (1 - c.fx) * c.fy, w11 = c.fx * c.fy;
  Vector v(2);
  v(0) = w00 * vx(c.i, c.j) + w10 * vx(c.i + 1, c.j) + w01 * vx(c.i, c.j + 1) + w11 * vx(c.i + 1, c.j + 1);
  v(1) = w00 * vy(c.i, c.j) + w10 * vy(c.i + 1, c.j) + w01 * vy(c.i, c.j + 1) + w11 * vy(c.i + 1, c.j + 1);
  return v;
}

Matrix GridFlow::jacobian(const Vector& x) const {
  const Cell c = locate(x);
  Matrix j = Matrix::Zero(2, 2);
  if (!c.clamped_x) {
    j(0, 0) = ((1 - c.fy) * (vx(c.i + 1, c.j) - vx(c.i, c.j)) +
               c.fy * (vx(c.i + 1, c.j + 1) - vx(c.i, c.j + 1))) / dx_;
    j(1, 0) = ((1 - c.fy) * (vy(c.i + 1, c.j) - vy(c.i, c.j)) +
               c.fy * (vy(c.i + 1, c.j + 1) - vy(c.i, c.j + 1))) / dx_;
  }
  if (!c.clamped_y) {
    j(0, 1) = ((1 - c.fx) * (vx(c.i, c.j + 1) - vx(c.i, c.j)) +
               c.fx * (vx(c.i + 1, c.j + 1) - vx(c.i + 1, c.j))) / dy_;
    j(1, 1) = ((1 - c.fx) * (vy(c.i, c.j + 1) - vy(c.i, c.j)) +
               c.fx * (vy(c.i + 1, c.j + 1) - vy(c.i + 1, c.j))) / dy_;
  }
  return j;
}

std::unique_ptr<ad::ExternalField> make_flow(const std::string& descriptor, int dim) {
  const std::size_t colon = descriptor.find(':');
  const std::string kind = descriptor.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : descriptor.substr(colon + 1);

  const auto parse_nums = [&](int expect) {
    std::vector<double> vals;
    std::stringstream ss(args);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        vals.push_back(std::stod(part));
      } catch (const std::exception&) {
        throw UsageError("flow '" + descriptor + "': bad number '" + part + "'");
      }
    }
    if (expect > 0 && static_cast<int>(vals.size()) != expect)
      throw UsageError("flow '" + descriptor + "': expected " + std::to_string(expect) +
                       " arguments");
    return vals;
  };

  if (kind == "uniform") {
    const std::vector<double> v = parse_nums(dim);
    return std::make_unique<UniformFlow>(
        Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  if (kind == "rotation") {
    require(dim == 2, "flow 'rotation' is two-dimensional");
    return std::make_unique<RigidRotationFlow>(parse_nums(1)[0]);
  }
  if (kind == "double-gyre") {
    require(dim == 2, "flow 'double-gyre' is two-dimensional");
    const std::vector<double> v = parse_nums(2);
    return std::make_unique<DoubleGyreFlow>(v[0], v[1]);
  }
  if (kind == "file") {
    require(dim == 2, "gridded flows are two-dimensional");
    return std::make_unique<GridFlow>(GridFlow::load(args));
  }
  throw UsageError("unknown flow preset '" + kind +
                   "' (expected uniform, rotation, double-gyre or file)");
}

}  // namespace odc
