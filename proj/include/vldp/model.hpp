#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vldp/gaussian.hpp"
#include "vldp/grid.hpp"
#include "vldp/kernels.hpp"

namespace vldp {

/// Matrix-valued map y in R^p -> R^{rows x cols} from a built-in family:
///   Constant   C
///   Affine     A_0 + sum_l y_l A_l
///   ExpLinear  S exp(w . y)
class CoefficientMap {
 public:
  enum class Kind { Constant, Affine, ExpLinear };

  static CoefficientMap constant(Eigen::MatrixXd value, int p);
  static CoefficientMap affine(Eigen::MatrixXd base, std::vector<Eigen::MatrixXd> slopes);
  static CoefficientMap exp_linear(Eigen::MatrixXd scale, Eigen::VectorXd weights);

  Kind kind() const noexcept { return kind_; }
  int rows() const { return static_cast<int>(base_.rows()); }
  int cols() const { return static_cast<int>(base_.cols()); }
  int inputs() const noexcept { return p_; }
  bool is_constant() const noexcept { return kind_ == Kind::Constant; }
  bool is_zero() const { return is_constant() && base_.isZero(0.0); }

  Eigen::MatrixXd value(const Eigen::VectorXd& y) const;
  /// d value / d y_l.
  Eigen::MatrixXd partial(const Eigen::VectorXd& y, int l) const;

  CoefficientMap scaled(double factor) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  int p_ = 1;
  Eigen::MatrixXd base_;
  std::vector<Eigen::MatrixXd> slopes_;
  Eigen::VectorXd weights_;
};

/// mu: R^p -> R^d (a d x 1 map), sigma: R^p -> R^{d x d},
/// sigma_tilde: R^p -> R^{d x p}; a = sigma sigma^T.
struct ModelCoefficients {
  int d = 1;
  int p = 1;
  CoefficientMap mu;
  CoefficientMap sigma;
  CoefficientMap sigma_tilde;
  double growth_alpha = 1.0;
  double growth_m1 = 10.0;
  double growth_m2 = 10.0;

  ModelCoefficients(CoefficientMap mu, CoefficientMap sigma, CoefficientMap sigma_tilde);

  static ModelCoefficients constant(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                    const Eigen::MatrixXd& sigma_tilde);
  /// d = p = 1: sigma = sqrt(1 - rho^2) s(y), sigma_tilde = rho s(y).
  static ModelCoefficients rho_template(const CoefficientMap& vol, double rho);

  Eigen::VectorXd mu_at(const Eigen::VectorXd& y) const { return mu.value(y).col(0); }
  Eigen::MatrixXd a_at(const Eigen::VectorXd& y) const;
  bool all_constant() const {
    return mu.is_constant() && sigma.is_constant() && sigma_tilde.is_constant();
  }
};

struct DiffusionMatrixPath {
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> a_values;
  std::vector<Eigen::MatrixXd> a_inv_values;
  Eigen::VectorXd lambda_min;
  Eigen::VectorXd lambda_max;
};

/// a(phi(t_i)) and its inverse at every node; Singular if |det a| < 1e-12.
DiffusionMatrixPath diffusion_path(const ModelCoefficients& coeffs, const PathSample& phi);

/// Euler scheme for the uncorrelated scaled log-price, coefficients frozen at
/// eps B_hat(t_j). Per step the stream draws dB (p), the singular-cell
/// residual (p) and dW (d), so a run with sigma_tilde = 0 through
/// simulate_correlated gives the same paths.
std::vector<PathSample> simulate_uncorrelated(const ModelCoefficients& coeffs,
                                              const KernelBank& bank, const TimeGrid& grid,
                                              double epsilon, long n_paths, std::uint64_t seed,
                                              int threads = 1);

struct CorrelatedPath {
  PathSample log_price;
  JointSample drivers;
};

std::vector<CorrelatedPath> simulate_correlated(const ModelCoefficients& coeffs,
                                                const KernelBank& bank, const TimeGrid& grid,
                                                double epsilon, long n_paths, std::uint64_t seed,
                                                int threads = 1);

struct ProbeLattice {
  double radius = 10.0;
  int points_per_axis = 21;
  int random_probes = 200;
  std::uint64_t seed = 1;

  /// Symmetric lattice (contains 0 for odd points_per_axis) plus uniform
  /// random probes in the same box.
  std::vector<Eigen::VectorXd> points(int p) const;
};

struct AssumptionCheck {
  std::string name;
  bool passed = true;
  Eigen::VectorXd worst_point;
  double worst_value = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const;
  const AssumptionCheck& check(const std::string& name) const;
  std::string to_text() const;
};

/// Probe-based checks: "det" (|det a| > 1e-12), "growth" (entrywise bound
/// M1 + M2 |y|^alpha) and "sigma_tilde_local_holder" (a local Holder probe
/// standing in for the local omega-continuity requirement).
ValidationReport validate_coefficients(const ModelCoefficients& coeffs,
                                       const ProbeLattice& probe = {});

/// min over paths and nodes of lambda_min(a^{-1}(phi(t))).
double uniform_inverse_lower_bound(const ModelCoefficients& coeffs,
                                   const std::vector<PathSample>& paths);

/// Smallest M in {2, 4, 8, ...} (up to 2^max_doublings) with
/// M a^{-1}(phi_n(t)) - a^{-1}(phi(t)) positive definite at every node.
std::optional<double> domination_multiplier(const ModelCoefficients& coeffs,
                                            const PathSample& phi_n, const PathSample& phi,
                                            int max_doublings = 40);

/// max over probes of lambda_max(a(y)) / (d^2 (M1 + M2 |y|^alpha)^2); at most
/// 1 whenever the growth check passes.
double eigenvalue_bound_ratio(const ModelCoefficients& coeffs, const ProbeLattice& probe = {});

}  // namespace vldp
