#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vldp/gaussian.hpp"
#include "vldp/grid.hpp"
#include "vldp/kernels.hpp"
#include "vldp/model.hpp"
#include "vldp/optimizer.hpp"

namespace vldp {

/// Absolutely continuous path from 0 with piecewise-constant derivative:
/// derivative row j is the slope on [t_j, t_{j+1}].
struct CameronMartinPath {
  TimeGrid grid;
  Eigen::MatrixXd derivative;  // N x dim

  CameronMartinPath(const TimeGrid& g, int dim)
      : grid(g), derivative(Eigen::MatrixXd::Zero(g.steps(), dim)) {}
  CameronMartinPath(const TimeGrid& g, Eigen::MatrixXd derivative);

  int dim() const { return static_cast<int>(derivative.cols()); }
  /// sum_j |f'_j|^2 dt
  double h1_norm_sq() const;
  PathSample path() const;

  static CameronMartinPath zero(const TimeGrid& g, int dim) { return {g, dim}; }
  static CameronMartinPath straight_line(const TimeGrid& g, const Eigen::VectorXd& z);
  static CameronMartinPath from_path(const PathSample& x);
};

struct OptimizerConfig {
  double tol = 1e-8;
  int max_iter = 500;
  int memory = 10;
  int starts = 5;
  std::uint64_t seed = 7;
  double start_scale = 0.5;
  double spread_threshold = 0.01;
};

struct RateSolution {
  double value = 0.0;
  CameronMartinPath control;
  PathSample hat_path;
  PathSample phi_path;
  Eigen::MatrixXd noise_drift;  // N x d, the minimizing W-drift
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  double upper_bound_used = 0.0;
  double spread = 0.0;
  bool spread_flag = false;
  std::vector<double> start_values;
};

/// 1/2 sum_j x'_j^T A(t_j) x'_j dt with left-node A.
double gamma_functional(const CameronMartinPath& x, const std::vector<Eigen::MatrixXd>& a_path);

/// Gamma(x - int mu(phi) | a^{-1}(phi)).
double j_rate(const CameronMartinPath& x, const PathSample& phi, const ModelCoefficients& coeffs);

PathSample hat_map(const CameronMartinPath& f, const KernelBank& bank);
PathSample hat_map(const CameronMartinPath& f, const VolterraDiscretization& disc);

/// sigma_tilde frozen at g(kT/m) on block k; Divisibility error unless m | N.
PathSample phi_m(const CameronMartinPath& f, const PathSample& g, int m,
                 const ModelCoefficients& coeffs);
/// Left-Riemann int_0^t sigma_tilde(f_hat) f' ds.
PathSample phi(const CameronMartinPath& f, const KernelBank& bank, const ModelCoefficients& coeffs);

double j_m_correlated(const CameronMartinPath& x, const CameronMartinPath& f, const PathSample& g,
                      int m, const KernelBank& bank, const ModelCoefficients& coeffs);

RateSolution i_uncorrelated(const CameronMartinPath& x, const KernelBank& bank,
                            const ModelCoefficients& coeffs, const OptimizerConfig& opt = {});
RateSolution i_z_m(const CameronMartinPath& x, int m, const KernelBank& bank,
                   const ModelCoefficients& coeffs, const OptimizerConfig& opt = {});
RateSolution i_z(const CameronMartinPath& x, const KernelBank& bank,
                 const ModelCoefficients& coeffs, const OptimizerConfig& opt = {});

/// Outer minimization over f of 1/2|f|^2 + 1/2 q^T A^{-1} q with
/// q = z - Phi(T) - int mu(f_hat), A = int a(f_hat). Singular if
/// lambda_min(A) < 1e-12.
RateSolution terminal_rate(const Eigen::VectorXd& z, const KernelBank& bank,
                           const ModelCoefficients& coeffs, const TimeGrid& grid,
                           const OptimizerConfig& opt = {});

/// How the sigma_tilde term enters a pathwise objective.
enum class PhiMode { None, Exact, Frozen };

/// F(u) = 1/2 |u|^2 + J(x - Phi | f_hat) in the variables u = f' sqrt(dt),
/// laid out u[j p + l]. The gradient is accumulated backwards through
/// f -> f_hat -> (mu, a^{-1}, Phi).
class PathRateObjective {
 public:
  PathRateObjective(const CameronMartinPath& x, const KernelBank& bank,
                    const ModelCoefficients& coeffs, PhiMode mode, int m = 0);

  int size() const { return n_ * p_; }
  double operator()(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const;
  double value(const Eigen::VectorXd& u) const;
  /// 2 F(0): the minimizer lies in |u|^2 <= radius_sq().
  double radius_sq() const { return 2.0 * f0_; }
  double upper_bound() const { return f0_; }

  Eigen::MatrixXd derivative(const Eigen::VectorXd& u) const;
  RateSolution solution(const Eigen::VectorXd& u) const;
  const VolterraDiscretization& discretization() const { return disc_; }

 private:
  Eigen::MatrixXd phi_rate(const Eigen::MatrixXd& fdot, const Eigen::MatrixXd& y) const;
  int sigma_node(int k) const;

  CameronMartinPath x_;
  ModelCoefficients coeffs_;
  VolterraDiscretization disc_;
  PhiMode mode_;
  int m_;
  int n_, p_, d_;
  double dt_;
  std::vector<Eigen::MatrixXd> hat_;
  double f0_ = 0.0;
};

class TerminalRateObjective {
 public:
  TerminalRateObjective(const Eigen::VectorXd& z, const KernelBank& bank,
                        const ModelCoefficients& coeffs, const TimeGrid& grid);

  int size() const { return n_ * p_; }
  double operator()(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const;
  double value(const Eigen::VectorXd& u) const;
  double radius_sq() const { return 2.0 * f0_; }
  double upper_bound() const { return f0_; }

  Eigen::MatrixXd derivative(const Eigen::VectorXd& u) const;
  RateSolution solution(const Eigen::VectorXd& u) const;

 private:
  struct Pieces {
    Eigen::MatrixXd fdot, y;
    Eigen::MatrixXd a_total;
    Eigen::VectorXd q, lambda;
  };
  Pieces evaluate(const Eigen::VectorXd& u) const;

  Eigen::VectorXd z_;
  ModelCoefficients coeffs_;
  VolterraDiscretization disc_;
  int n_, p_, d_;
  double dt_;
  std::vector<Eigen::MatrixXd> hat_;
  double f0_ = 0.0;
};

/// Multi-start projected L-BFGS: start 0 plus opt.starts - 1 Gaussian starts.
template <typename Objective>
RateSolution minimize_rate(const Objective& obj, const OptimizerConfig& opt);

}  // namespace vldp
