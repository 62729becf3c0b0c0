#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vldp/grid.hpp"
#include "vldp/kernels.hpp"

namespace vldp {

/// Discrete Volterra operator of a kernel bank on a grid.
///
/// For node t_i and cell j < i-1 the weight is the cell average
/// W_l(i, j) = (1/dt) int_{t_j}^{t_{j+1}} K_l(t_i, u) du. The last cell
/// [t_{i-1}, t_i] is handled by the leading power law: its contribution to a
/// piecewise-constant integrand is singular_mean() times the value, and the
/// sampler draws it as a separate Gaussian with variance singular_energy().
class VolterraDiscretization {
 public:
  VolterraDiscretization(const KernelBank& bank, const TimeGrid& grid);

  const TimeGrid& grid() const noexcept { return grid_; }
  int factors() const noexcept { return static_cast<int>(weights_.size()); }

  /// N x N strictly lower-triangular W_l; row i-1 belongs to node t_i.
  const Eigen::MatrixXd& weights(int l) const { return weights_.at(l); }
  /// W_l dt plus singular_mean on the diagonal: f_hat(t_i) = (H f')_{i-1}.
  Eigen::MatrixXd hat_matrix(int l) const;

  double singular_mean(int l) const { return mean_.at(l); }
  double singular_energy(int l) const { return energy_.at(l); }

  /// (N+1) x p values B_hat(t_i) = sum_{j<i-1} W(i,j) dB_j + dB~_{i-1}.
  Eigen::MatrixXd convolve(const Eigen::MatrixXd& increments,
                           const Eigen::MatrixXd& singular) const;
  /// (N+1) x p values f_hat(t_i) for piecewise-constant derivative (N x p).
  Eigen::MatrixXd hat(const Eigen::MatrixXd& derivative) const;

 private:
  TimeGrid grid_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<double> mean_;
  std::vector<double> energy_;
};

/// Draws one step of the joint driver: dB_j (p entries) and dB~_j (p entries)
/// from two standard normals per factor, with Cov(dB, dB~) = singular_mean
/// and Var(dB~) = singular_energy.
struct SingularCellLaw {
  double dt = 0.0;
  double cov = 0.0;
  double resid_sd = 0.0;

  SingularCellLaw() = default;
  SingularCellLaw(double dt, double mean, double energy);
};

struct JointSample {
  PathSample brownian;
  PathSample volterra;
  Eigen::MatrixXd increments;           // N x p, dB_j
  Eigen::MatrixXd singular_increments;  // N x p, dB~_j
};

std::vector<JointSample> sample_joint_paths(const KernelBank& bank, const TimeGrid& grid,
                                            long n_paths, std::uint64_t seed, int threads = 1);

/// pN x pN block-diagonal covariance of (B_hat_l(t_i)), i = 1..N, ordered
/// factor-major. Throws Quadrature on a non-finite entry or a negative
/// eigenvalue below -1e-10 trace.
Eigen::MatrixXd covariance_matrix(const KernelBank& bank, const TimeGrid& grid, int n_quad);

/// One N x N block of covariance_matrix.
Eigen::MatrixXd covariance_block(const VolterraKernel& k, const TimeGrid& grid, int n_quad);

/// Cross-check sampler: B_hat values drawn from a symmetric square root of
/// covariance_matrix. Returns (N+1) x p paths.
std::vector<PathSample> sample_cholesky(const KernelBank& bank, const TimeGrid& grid, int n_quad,
                                        long n_paths, std::uint64_t seed);

enum class Component { Brownian, Volterra };

/// Unbiased N x N sample covariance over nodes t_1..t_N of one factor.
Eigen::MatrixXd empirical_covariance(const std::vector<JointSample>& samples,
                                     Component component, int factor = 0);
Eigen::MatrixXd empirical_covariance(const std::vector<PathSample>& paths, int factor = 0);

}  // namespace vldp
