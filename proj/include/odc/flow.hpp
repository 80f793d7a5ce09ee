#pragma once

#include "odc/common.hpp"
#include "odc/tape.hpp"

#include <memory>
#include <string>

namespace odc {

/// Constant drift field, any dimension.
class UniformFlow : public ad::ExternalField {
 public:
  explicit UniformFlow(Vector velocity);
  int input_dim() const override { return static_cast<int>(velocity_.size()); }
  int output_dim() const override { return static_cast<int>(velocity_.size()); }
  Vector value(const Vector& x) const override;
  Matrix jacobian(const Vector& x) const override;

 private:
  Vector velocity_;
};

/// Single gyre: rigid rotation v(x, y) = omega * (-y, x). Divergence free.
class RigidRotationFlow : public ad::ExternalField {
 public:
  explicit RigidRotationFlow(double omega) : omega_(omega) {}
  int input_dim() const override { return 2; }
  int output_dim() const override { return 2; }
  Vector value(const Vector& x) const override;
  Matrix jacobian(const Vector& x) const override;

 private:
  double omega_;
};

/// Classic double-gyre stream-function field on the plane:
///   v_x = -pi A sin(pi x / s) cos(pi y / s)
///   v_y =  pi A cos(pi x / s) sin(pi y / s)
/// Divergence free for every amplitude A and cell size s.
class DoubleGyreFlow : public ad::ExternalField {
 public:
  DoubleGyreFlow(double amplitude, double cell_size);
  int input_dim() const override { return 2; }
  int output_dim() const override { return 2; }
  Vector value(const Vector& x) const override;
  Matrix jacobian(const Vector& x) const override;

 private:
  double amplitude_;
  double cell_;
};

/// Bilinear interpolation of a regular-grid 2D velocity field loaded from a
/// file. Points outside the grid are clamped to the boundary. The first line
/// holds `nx,ny,x0,y0,dx,dy`, followed by nx*ny lines `vx,vy` with the x
/// index varying fastest.
class GridFlow : public ad::ExternalField {
 public:
  static GridFlow load(const std::string& path);
  int input_dim() const override { return 2; }
  int output_dim() const override { return 2; }
  Vector value(const Vector& x) const override;
  Matrix jacobian(const Vector& x) const override;

 private:
  GridFlow() = default;
  struct Cell {
    int i, j;
    double fx, fy;  // fractions within the cell
    bool clamped_x, clamped_y;
  };
  Cell locate(const Vector& x) const;
  double vx(int i, int j) const { return vx_(j, i); }
  double vy(int i, int j) const { return vy_(j, i); }

  int nx_ = 0, ny_ = 0;
  double x0_ = 0, y0_ = 0, dx_ = 1, dy_ = 1;
  Matrix vx_, vy_;  // (ny x nx)
};

/// Parses a flow descriptor: `uniform:vx,vy,...`, `rotation:omega`,
/// `double-gyre:A,s`, or `file:path`. Unknown presets raise UsageError.
std::unique_ptr<ad::ExternalField> make_flow(const std::string& descriptor, int dim);

}  // namespace odc
