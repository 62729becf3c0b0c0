#pragma once

#include <map>
#include <string>
#include <vector>

#include "vldp/grid.hpp"

namespace vldp {

enum class KernelFamily { RiemannLiouville, FbmMolchanGolosov, LogFbm, FractionalOU };

std::string family_name(KernelFamily family);
KernelFamily parse_family(const std::string& name);

/// Parameters of a Volterra kernel K(t, s) on [0, T]^2.
///
/// Families:
///   RiemannLiouville   C (t-s)^{H-1/2}
///   LogFbm             C (t-s)^{H-1/2} (-log(t-s))^{-a}, requires T <= 0.9
///   FbmMolchanGolosov  the Molchan-Golosov representation kernel of fBm
///   FractionalOU       K_H(t,s) - a int_s^t e^{-a(t-u)} K_H(u,s) du
///
/// holder_c / holder_alpha describe the claimed bound M(delta) <= c delta^alpha
/// on the kernel modulus of continuity. holder_c = 0 means "not calibrated";
/// holder_alpha = 0 defaults to 2H.
struct KernelParams {
  KernelFamily family = KernelFamily::RiemannLiouville;
  double hurst = 0.5;
  double log_exponent = 2.0;
  double scale = 1.0;
  double mean_reversion = 1.0;
  double holder_c = 0.0;
  double holder_alpha = 0.0;
  double horizon = 1.0;
};

/// Immutable, evaluable Volterra kernel. A rescaled kernel evaluates
/// sqrt(eta) K(eta t, eta s) and lives on [0, T/eta].
class VolterraKernel {
 public:
  explicit VolterraKernel(const KernelParams& params);

  static VolterraKernel riemann_liouville(double hurst, double scale = 1.0, double horizon = 1.0);
  static VolterraKernel log_fbm(double hurst, double log_exponent, double scale, double horizon);
  static VolterraKernel molchan_golosov(double hurst, double horizon = 1.0);
  static VolterraKernel fractional_ou(double hurst, double mean_reversion, double horizon = 1.0);

  /// K(t, s); zero whenever s >= t. Throws Domain outside [0, T].
  double operator()(double t, double s) const;

  KernelFamily family() const noexcept { return params_.family; }
  const KernelParams& params() const noexcept { return params_; }
  double hurst() const noexcept { return params_.hurst; }
  double horizon() const noexcept { return params_.horizon / time_scale_; }
  double time_scale() const noexcept { return time_scale_; }
  bool rescaled() const noexcept { return rescaled_; }
  double holder_c() const noexcept { return params_.holder_c; }
  double holder_alpha() const noexcept { return params_.holder_alpha; }
  std::string name() const;

  VolterraKernel with_holder(double c, double alpha) const;

  /// Near the diagonal K(t, t-u) ~ g(u) = c u^{H-1/2} L(u). These integrate
  /// the leading term over [0, h] with the log factor L frozen at h:
  /// int_0^h g(u) du and int_0^h g(u)^2 du.
  double singular_mean(double h) const;
  double singular_energy(double h) const;

  friend VolterraKernel rescale_kernel(const VolterraKernel& k, double eta);

 private:
  double base_eval(double t, double s) const;
  double base_singular_mean(double h) const;
  double base_singular_energy(double h) const;
  double leading_constant() const;
  double log_factor(double h) const;

  KernelParams params_;
  double time_scale_ = 1.0;
  bool rescaled_ = false;
};

double eval_kernel(const VolterraKernel& k, double t, double s);

/// Quadrature of int_0^t K(t,s)^2 ds: composite midpoint on [0, t-h] and the
/// exact leading power law on [t-h, t], with h = t / n_quad.
double kernel_l2_slice(const VolterraKernel& k, double t, int n_quad);

/// Max over n_probe pairs t2 - t1 = delta of int_0^T |K(t1,s) - K(t2,s)|^2 ds.
double modulus_of_continuity(const VolterraKernel& k, double delta, int n_probe, int n_quad);

/// holder_c * delta^holder_alpha.
double holder_bound(const VolterraKernel& k, double delta);

VolterraKernel rescale_kernel(const VolterraKernel& k, double eta);

/// max over grid node pairs s < t of |rescale(k, eta)(t,s) / epsilon - limit(t,s)|.
double limit_kernel_error(const VolterraKernel& k, double eta, double epsilon,
                          const VolterraKernel& limit, const TimeGrid& grid);

/// One kernel per Brownian factor; all share the same horizon.
class KernelBank {
 public:
  explicit KernelBank(std::vector<VolterraKernel> kernels);
  static KernelBank uniform(const VolterraKernel& k, int p);

  int size() const noexcept { return static_cast<int>(kernels_.size()); }
  const VolterraKernel& operator[](int l) const { return kernels_.at(l); }
  double horizon() const { return kernels_.front().horizon(); }
  const std::vector<VolterraKernel>& kernels() const noexcept { return kernels_; }

  KernelBank rescaled(double eta) const;

 private:
  std::vector<VolterraKernel> kernels_;
};

enum class SpeedRule { Power, LogFbm };

/// eta_n -> 0 together with the matching noise level epsilon_n:
///   Power:  epsilon = eta^H
///   LogFbm: epsilon = eta^H (-log eta)^{-speed_log_exponent / 2}
/// so that epsilon^{-2} = eta^{-2H} (-log eta)^{speed_log_exponent}.
/// delta_n (short-time horizon scale) equals eta_n.
struct ScalingSchedule {
  std::vector<double> eta;
  std::vector<double> epsilon;
  std::vector<double> delta;
  double speed_exponent_hurst = 0.5;
  double speed_log_exponent = 0.0;
  SpeedRule rule = SpeedRule::Power;

  static ScalingSchedule make(std::vector<double> eta, double hurst, SpeedRule rule,
                              double speed_log_exponent = 0.0);
  int size() const { return static_cast<int>(eta.size()); }
};

/// Plain-text "key = value" table (one kernel).
std::string kernel_to_table(const VolterraKernel& k);
VolterraKernel kernel_from_table(const std::map<std::string, std::string>& table);

}  // namespace vldp
