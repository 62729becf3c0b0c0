#include "vldp/grid.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "vldp/error.hpp"
#include "vldp/util.hpp"

namespace vldp {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    fail(ErrorCategory::Domain, "time grid horizon must be positive, got " + std::to_string(horizon));
  if (steps < 1)
    fail(ErrorCategory::Domain, "time grid needs at least one step, got " + std::to_string(steps));
}

double TimeGrid::node(int i) const {
  if (i == steps_) return horizon_;
  return i * dt();
}

Eigen::VectorXd TimeGrid::nodes() const {
  Eigen::VectorXd t(steps_ + 1);
  for (int i = 0; i <= steps_; ++i) t[i] = node(i);
  return t;
}

PathSample::PathSample(const TimeGrid& g, Eigen::MatrixXd v) : grid(g), values(std::move(v)) {
  if (values.rows() != g.steps() + 1)
    fail(ErrorCategory::Domain, "path has " + std::to_string(values.rows()) + " rows, grid has " +
                                    std::to_string(g.steps() + 1) + " nodes");
}

double sup_distance(const PathSample& a, const PathSample& b) {
  if (!(a.grid == b.grid) || a.dim() != b.dim())
    fail(ErrorCategory::Domain, "sup_distance: mismatched paths");
  return (a.values - b.values).rowwise().norm().maxCoeff();
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace vldp
