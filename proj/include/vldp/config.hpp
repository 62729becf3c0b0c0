#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vldp/kernels.hpp"
#include "vldp/model.hpp"
#include "vldp/ratefn.hpp"

namespace vldp {

struct EventSpec {
  std::string kind = "half_space";  // half_space | box | tube
  Eigen::VectorXd direction;
  double threshold = 0.0;
  Eigen::VectorXd lower, upper;
  double radius = 0.0;
  std::optional<Eigen::VectorXd> tilt_point;
};

struct RateSpec {
  std::string functional = "i_z";  // i_z | i_z_m | i_uncorrelated
  std::optional<Eigen::VectorXd> target_end;  // straight line from 0 to this point
  std::string target_csv;
  std::optional<Eigen::VectorXd> z;
  std::vector<int> m;
  OptimizerConfig optimizer;
};

struct SimulateSpec {
  long paths = 1000;
  double epsilon = 1.0;
  std::vector<double> epsilons{0.4, 0.3, 0.25, 0.2};
  int threads = 1;
  bool tilted = true;
  bool dump_drivers = false;
  int refine = 4;
  int n_quad = 32;
};

/// One experiment, fully validated.
struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  double horizon = 1.0;
  int steps = 64;
  std::vector<VolterraKernel> kernels;
  std::optional<ModelCoefficients> model;
  std::vector<double> eta;
  SpeedRule speed_rule = SpeedRule::Power;
  std::optional<double> speed_log_exponent;
  std::optional<EventSpec> event;
  RateSpec rate;
  SimulateSpec simulate;
  int selftest_cases = 1000;
  std::string base_dir = ".";

  TimeGrid grid() const { return TimeGrid(horizon, steps); }
  KernelBank bank() const;
  const ModelCoefficients& require_model() const;
  /// Schedule from [schedule]; the log-fBm rule defaults its log exponent to
  /// 2a with a from the first kernel.
  ScalingSchedule schedule() const;
};

/// Parses the INI-style experiment text. Errors carry "line L, field 'f'".
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Matrix literal "[1 0; 0 2]"; a bare number is a 1 x 1 matrix.
Eigen::MatrixXd parse_matrix(const std::string& text);
std::vector<double> parse_list(const std::string& text);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace vldp
