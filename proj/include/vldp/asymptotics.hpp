#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vldp/grid.hpp"
#include "vldp/kernels.hpp"
#include "vldp/model.hpp"
#include "vldp/ratefn.hpp"

namespace vldp {

struct TailEvent {
  enum class Kind { TerminalHalfSpace, TerminalBox, PathSupNorm };

  Kind kind = Kind::TerminalHalfSpace;
  Eigen::VectorXd direction;  // half-space: v^T Z(T) >= threshold
  double threshold = 0.0;
  Eigen::VectorXd lower, upper;  // box: lower <= Z(T) <= upper
  Eigen::MatrixXd target;        // tube: max_i |Z(t_i) - x(t_i)| <= radius
  double radius = 0.0;

  static TailEvent half_space(const Eigen::VectorXd& v, double b);
  static TailEvent box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);
  static TailEvent tube(const PathSample& target, double radius);

  /// z is (N+1) x d.
  bool contains(const Eigen::MatrixXd& z) const;
};

struct TailEstimate {
  double p_hat = 0.0;
  double std_error = 0.0;
  long hits = 0;
  long n = 0;
  bool degenerate = false;  // p_hat in {0, 1}
  /// sqrt(p_hat (1 - p_hat) / n): what crude sampling would give at this p_hat.
  double crude_equivalent_stderr = 0.0;
  double max_log_weight = 0.0;
  bool weight_overflow = false;  // max log-weight above 700
};

/// Crude frequency of event for the correlated scaled log-price; n >= 1000.
TailEstimate estimate_tail_prob(const ModelCoefficients& coeffs, const KernelBank& bank,
                                const TimeGrid& grid, double epsilon, const TailEvent& event,
                                long n_paths, std::uint64_t seed, int threads = 1);

/// Importance sampling with B shifted by f'/eps and W by the control's noise
/// drift / eps, reweighted by the likelihood ratio.
TailEstimate tilted_estimate(const ModelCoefficients& coeffs, const KernelBank& bank,
                             const TimeGrid& grid, double epsilon, const TailEvent& event,
                             const RateSolution& control, long n_paths, std::uint64_t seed,
                             int threads = 1);

/// Converged solution with f = 0 and no noise drift (unit weights).
RateSolution zero_control(const TimeGrid& grid, int p, int d);

struct SlopeEstimate {
  std::vector<double> epsilons;
  std::vector<std::array<double, 2>> probs;  // (p_hat, std_error)
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool weighted = true;
};

/// Regression of -log p_hat on eps^{-2}, weights (p_hat / std_error)^2
/// (unweighted if any std_error is 0). Needs >= 3 estimates in (0, 1).
SlopeEstimate ldp_slope(const std::vector<double>& epsilons,
                        const std::vector<TailEstimate>& estimates);

/// eps_n delta_n^{-1/2} Z(delta_n t) on grid through the rescaled kernels.
std::vector<PathSample> short_time_sample(const ModelCoefficients& coeffs, const KernelBank& bank,
                                          const TimeGrid& grid, int n_index,
                                          const ScalingSchedule& schedule, long n_paths,
                                          std::uint64_t seed, int threads = 1);

/// Same quantity from a direct simulation of Z on [0, delta_n T] with
/// N refine steps, subsampled back onto grid.
std::vector<PathSample> short_time_direct(const ModelCoefficients& coeffs, const KernelBank& bank,
                                          const TimeGrid& grid, int n_index,
                                          const ScalingSchedule& schedule, long n_paths,
                                          std::uint64_t seed, int refine = 4, int threads = 1);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct EquivalenceReport {
  std::array<double, 3> radii{0.05, 0.1, 0.2};
  std::array<double, 3> exceedance{0.0, 0.0, 0.0};
  KsResult terminal_ks;
};

/// Pairwise sup-distance exceedance frequencies and KS at T of coordinate 0.
EquivalenceReport equivalence_diagnostic(const std::vector<PathSample>& a,
                                         const std::vector<PathSample>& b);

}  // namespace vldp
