#pragma once

#include <Eigen/Dense>

#include "vldp/gaussian.hpp"
#include "vldp/model.hpp"
#include "vldp/util.hpp"

namespace vldp::detail {

/// One Euler path of
///   dZ = (mu(y) - c_corr/2 (|sigma(y)|^2 + |sigma~(y)|^2)) dt
///        + noise (sigma~(y) dB + sigma(y) dW),   y = vol_scale B_hat,
/// where the row norms are taken per coordinate. Optional drifts shift the
/// drivers, dB = dB' + theta_b dt and dW = dW' + theta_w dt, and the path
/// carries the log likelihood ratio of the original law against the shifted one.
struct SimSpec {
  const ModelCoefficients* coeffs = nullptr;
  const VolterraDiscretization* disc = nullptr;
  double vol_scale = 1.0;
  double noise = 1.0;
  double c_corr = 1.0;
  bool correlated = true;
  const Eigen::MatrixXd* tilt_b = nullptr;  // N x p
  const Eigen::MatrixXd* tilt_w = nullptr;  // N x d
};

struct SimPath {
  Eigen::MatrixXd z;     // (N+1) x d
  Eigen::MatrixXd inc;   // N x p
  Eigen::MatrixXd sing;  // N x p
  Eigen::MatrixXd dw;    // N x d
  Eigen::MatrixXd bhat;  // (N+1) x p, empty when not needed
  double log_weight = 0.0;
};

void simulate_path(const SimSpec& spec, PathRng& rng, bool keep_bhat, SimPath& out);

}  // namespace vldp::detail
