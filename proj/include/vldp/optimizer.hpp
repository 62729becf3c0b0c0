#pragma once

#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace vldp {

struct LbfgsConfig {
  double tol = 1e-8;
  int max_iter = 500;
  int memory = 10;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;  // projected gradient norm at x
  int iterations = 0;
  bool converged = false;
};

/// Returns f(x) and writes the gradient into g.
using ValueGrad = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;

/// Projected L-BFGS over the ball |x|^2 <= radius_sq with Armijo backtracking.
/// Stops when |x - P(x - g)| < tol (1 + |f|).
LbfgsResult minimize_lbfgs(const ValueGrad& fg, Eigen::VectorXd x0, const LbfgsConfig& cfg,
                           double radius_sq = std::numeric_limits<double>::infinity());

/// Central differences of f with step h, the reference for gradient checks.
Eigen::VectorXd finite_difference_gradient(const ValueGrad& fg, const Eigen::VectorXd& x,
                                           double h = 1e-5);

}  // namespace vldp
