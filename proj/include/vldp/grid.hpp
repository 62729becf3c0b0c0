#pragma once

#include <Eigen/Dense>

namespace vldp {

/// Uniform partition 0 = t_0 < ... < t_N = T. Every path and Cameron-Martin
/// element in the library lives on one of these.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  double dt() const noexcept { return horizon_ / steps_; }

  /// t_i; node(steps()) is exactly horizon().
  double node(int i) const;
  Eigen::VectorXd nodes() const;

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  int steps_;
};

/// dim-vector valued path sampled at every grid node; values is (N+1) x dim.
struct PathSample {
  TimeGrid grid;
  Eigen::MatrixXd values;

  PathSample(const TimeGrid& g, int dim)
      : grid(g), values(Eigen::MatrixXd::Zero(g.steps() + 1, dim)) {}
  PathSample(const TimeGrid& g, Eigen::MatrixXd v);

  int dim() const { return static_cast<int>(values.cols()); }
  Eigen::VectorXd at(int node) const { return values.row(node).transpose(); }
  Eigen::VectorXd terminal() const { return at(grid.steps()); }
};

double sup_distance(const PathSample& a, const PathSample& b);

}  // namespace vldp
