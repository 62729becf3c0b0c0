#include "vldp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "quadrature.hpp"
#include "vldp/error.hpp"
#include "vldp/util.hpp"

namespace vldp {

namespace {

constexpr double kLogFbmMaxHorizon = 0.9;

double molchan_golosov_constant(double hurst) {
  return std::sqrt(2.0 * hurst * std::tgamma(1.5 - hurst) /
                   (std::tgamma(hurst + 0.5) * std::tgamma(2.0 - 2.0 * hurst)));
}

// int_s^t v^{H-3/2} (v-s)^{H-1/2} dv after v = s + (t-s) w^{1/(H+1/2)}, which
// removes the endpoint singularity. The remaining integrand varies on the
// scale w* = (s/(t-s))^{H+1/2}, so [0,1] is split geometrically down to w*.
double molchan_golosov_tail(double t, double s, double hurst) {
  const double u = t - s;
  const double kappa = 1.0 / (hurst + 0.5);
  const double expo = hurst - 1.5;
  auto integrand = [&](double w) { return std::pow(s + u * std::pow(w, kappa), expo); };
  const double w_star = std::pow(s / u, hurst + 0.5);
  double acc = 0.0;
  double hi = 1.0;
  for (int piece = 0; piece < 40 && hi > 0.25 * w_star; ++piece) {
    const double lo = 0.25 * hi;
    acc += detail::integrate_gl<16>(integrand, lo, hi);
    hi = lo;
  }
  acc += detail::integrate_gl<16>(integrand, 0.0, hi);
  return std::pow(u, hurst + 0.5) * kappa * acc;
}

double mg_kernel(double t, double s, double hurst) {
  if (s >= t) return 0.0;
  if (s <= 0.0) return std::numeric_limits<double>::infinity();
  const double c = molchan_golosov_constant(hurst);
  if (hurst == 0.5) return c;
  const double u = t - s;
  const double first = std::pow(t / s, hurst - 0.5) * std::pow(u, hurst - 0.5);
  const double second = (hurst - 0.5) * std::pow(s, 0.5 - hurst) * molchan_golosov_tail(t, s, hurst);
  return c * (first - second);
}

void check_range(bool ok, const std::string& field, double value, const std::string& range) {
  if (!ok)
    fail(ErrorCategory::Config,
         "kernel " + field + " = " + format_real(value) + " outside " + range);
}

}  // namespace

std::string family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::RiemannLiouville: return "riemann_liouville";
    case KernelFamily::FbmMolchanGolosov: return "molchan_golosov";
    case KernelFamily::LogFbm: return "log_fbm";
    case KernelFamily::FractionalOU: return "fractional_ou";
  }
  return "unknown";
}

KernelFamily parse_family(const std::string& name) {
  for (auto f : {KernelFamily::RiemannLiouville, KernelFamily::FbmMolchanGolosov,
                 KernelFamily::LogFbm, KernelFamily::FractionalOU})
    if (family_name(f) == name) return f;
  fail(ErrorCategory::Config, "unknown kernel family '" + name + "'");
}

VolterraKernel::VolterraKernel(const KernelParams& params) : params_(params) {
  const double h = params_.hurst;
  if (params_.family == KernelFamily::LogFbm)
    check_range(h > 0.0 && h <= 0.5, "hurst", h, "(0, 1/2]");
  else
    check_range(h > 0.0 && h < 1.0, "hurst", h, "(0, 1)");
  check_range(params_.scale > 0.0, "scale", params_.scale, "(0, inf)");
  check_range(params_.horizon > 0.0, "horizon", params_.horizon, "(0, inf)");
  check_range(params_.holder_c >= 0.0, "holder_c", params_.holder_c, "[0, inf)");
  if (params_.holder_alpha == 0.0) params_.holder_alpha = 2.0 * h;
  check_range(params_.holder_alpha > 0.0 && params_.holder_alpha <= 2.0, "holder_alpha",
              params_.holder_alpha, "(0, 2]");
  if (params_.family == KernelFamily::LogFbm) {
    check_range(params_.log_exponent > 1.0, "log_exponent", params_.log_exponent, "(1, inf)");
    check_range(params_.horizon <= kLogFbmMaxHorizon, "horizon", params_.horizon,
                "(0, 0.9] for log_fbm");
  }
  if (params_.family == KernelFamily::FractionalOU)
    check_range(params_.mean_reversion > 0.0, "mean_reversion", params_.mean_reversion,
                "(0, inf)");
}

VolterraKernel VolterraKernel::riemann_liouville(double hurst, double scale, double horizon) {
  KernelParams p;
  p.family = KernelFamily::RiemannLiouville;
  p.hurst = hurst;
  p.scale = scale;
  p.horizon = horizon;
  return VolterraKernel(p);
}

VolterraKernel VolterraKernel::log_fbm(double hurst, double log_exponent, double scale,
                                       double horizon) {
  KernelParams p;
  p.family = KernelFamily::LogFbm;
  p.hurst = hurst;
  p.log_exponent = log_exponent;
  p.scale = scale;
  p.horizon = horizon;
  return VolterraKernel(p);
}

VolterraKernel VolterraKernel::molchan_golosov(double hurst, double horizon) {
  KernelParams p;
  p.family = KernelFamily::FbmMolchanGolosov;
  p.hurst = hurst;
  p.horizon = horizon;
  return VolterraKernel(p);
}

VolterraKernel VolterraKernel::fractional_ou(double hurst, double mean_reversion, double horizon) {
  KernelParams p;
  p.family = KernelFamily::FractionalOU;
  p.hurst = hurst;
  p.mean_reversion = mean_reversion;
  p.horizon = horizon;
  return VolterraKernel(p);
}

std::string VolterraKernel::name() const {
  const std::string base = family_name(params_.family);
  return rescaled_ ? "rescaled(" + base + ")" : base;
}

VolterraKernel VolterraKernel::with_holder(double c, double alpha) const {
  VolterraKernel k = *this;
  check_range(c >= 0.0, "holder_c", c, "[0, inf)");
  check_range(alpha > 0.0 && alpha <= 2.0, "holder_alpha", alpha, "(0, 2]");
  k.params_.holder_c = c;
  k.params_.holder_alpha = alpha;
  return k;
}

double VolterraKernel::operator()(double t, double s) const {
  const double horizon_now = horizon();
  const double slack = 1e-12 * horizon_now;
  if (!(t >= -slack && t <= horizon_now + slack) || !(s >= -slack && s <= horizon_now + slack))
    fail(ErrorCategory::Domain, "kernel " + name() + " evaluated at (t, s) = (" + format_real(t) +
                                    ", " + format_real(s) + ") outside [0, " +
                                    format_real(horizon_now) + "]");
  if (s >= t) return 0.0;
  if (time_scale_ == 1.0) return base_eval(t, s);
  return std::sqrt(time_scale_) * base_eval(time_scale_ * t, time_scale_ * s);
}

double VolterraKernel::base_eval(double t, double s) const {
  const double hurst = params_.hurst;
  const double lag = t - s;
  switch (params_.family) {
    case KernelFamily::RiemannLiouville:
      return params_.scale * std::pow(lag, hurst - 0.5);
    case KernelFamily::LogFbm:
      if (lag >= 1.0)
        fail(ErrorCategory::Config,
             "log_fbm kernel needs t - s < 1, got " + format_real(lag));
      return params_.scale * std::pow(lag, hurst - 0.5) *
             std::pow(-std::log(lag), -params_.log_exponent);
    case KernelFamily::FbmMolchanGolosov:
      return mg_kernel(t, s, hurst);
    case KernelFamily::FractionalOU: {
      // int_s^t e^{-a(t-u)} K_H(u, s) du with u = s + lag w^{1/(H+1/2)}.
      if (s <= 0.0) return std::numeric_limits<double>::infinity();
      const double a = params_.mean_reversion;
      const double kappa = 1.0 / (hurst + 0.5);
      auto integrand = [&](double w) {
        const double wk = std::pow(w, kappa);
        const double u = s + lag * wk;
        const double dv = kappa * wk / w;
        return std::exp(-a * (t - u)) * mg_kernel(u, s, hurst) * dv;
      };
      const double inner = lag * detail::integrate_gl<32>(integrand, 0.0, 1.0);
      return mg_kernel(t, s, hurst) - a * inner;
    }
  }
  return 0.0;
}

double VolterraKernel::leading_constant() const {
  switch (params_.family) {
    case KernelFamily::RiemannLiouville:
    case KernelFamily::LogFbm:
      return params_.scale;
    case KernelFamily::FbmMolchanGolosov:
    case KernelFamily::FractionalOU:
      return molchan_golosov_constant(params_.hurst);
  }
  return 0.0;
}

double VolterraKernel::log_factor(double h) const {
  if (params_.family != KernelFamily::LogFbm) return 1.0;
  if (h >= 1.0) fail(ErrorCategory::Config, "log_fbm singular cell needs h < 1");
  return std::pow(-std::log(h), -params_.log_exponent);
}

double VolterraKernel::base_singular_mean(double h) const {
  const double e = params_.hurst + 0.5;
  return leading_constant() * std::pow(h, e) / e * log_factor(h);
}

double VolterraKernel::base_singular_energy(double h) const {
  const double e = 2.0 * params_.hurst;
  const double c = leading_constant() * log_factor(h);
  return c * c * std::pow(h, e) / e;
}

double VolterraKernel::singular_mean(double h) const {
  if (h <= 0.0) return 0.0;
  if (time_scale_ == 1.0) return base_singular_mean(h);
  return base_singular_mean(time_scale_ * h) / std::sqrt(time_scale_);
}

double VolterraKernel::singular_energy(double h) const {
  if (h <= 0.0) return 0.0;
  return base_singular_energy(time_scale_ * h);
}

double eval_kernel(const VolterraKernel& k, double t, double s) { return k(t, s); }

double kernel_l2_slice(const VolterraKernel& k, double t, int n_quad) {
  if (n_quad < 2) fail(ErrorCategory::Domain, "kernel_l2_slice needs n_quad >= 2");
  if (t < 0.0 || t > k.horizon() * (1.0 + 1e-12))
    fail(ErrorCategory::Domain, "kernel_l2_slice: t outside [0, T]");
  if (t == 0.0) return 0.0;
  const double h = t / n_quad;
  double acc = 0.0;
  for (int j = 0; j + 1 < n_quad; ++j) {
    const double v = k(t, (j + 0.5) * h);
    acc += v * v;
  }
  return acc * h + k.singular_energy(h);
}

double modulus_of_continuity(const VolterraKernel& k, double delta, int n_probe, int n_quad) {
  if (delta < 0.0) fail(ErrorCategory::Domain, "modulus_of_continuity: delta < 0");
  if (delta == 0.0) return 0.0;
  const double horizon = k.horizon();
  delta = std::min(delta, horizon);
  n_probe = std::max(1, n_probe);
  n_quad = std::max(4, n_quad);
  double worst = 0.0;
  for (int j = 0; j < n_probe; ++j) {
    const double t1 = n_probe == 1 ? 0.0 : j * (horizon - delta) / (n_probe - 1);
    const double t2 = std::min(horizon, t1 + delta);
    const int n1 = t1 > 0.0 ? std::max(2, static_cast<int>(std::lround(n_quad * t1 / t2))) : 0;
    const int n2 = std::max(2, n_quad - n1);
    // [t1, t2]: only K(t2, .) is nonzero.
    const double h2 = (t2 - t1) / n2;
    double acc = 0.0;
    for (int i = 0; i + 1 < n2; ++i) {
      const double v = k(t2, t1 + (i + 0.5) * h2);
      acc += v * v * h2;
    }
    acc += k.singular_energy(h2);
    if (n1 > 0) {
      const double h1 = t1 / n1;
      for (int i = 0; i + 1 < n1; ++i) {
        const double s = (i + 0.5) * h1;
        const double v = k(t2, s) - k(t1, s);
        acc += v * v * h1;
      }
      // last cell of [0, t1]: K(t1, .) singular at t1, K(t2, .) smooth there.
      const double smooth = k(t2, t1 - 0.5 * h1);
      acc += smooth * smooth * h1 - 2.0 * smooth * k.singular_mean(h1) + k.singular_energy(h1);
    }
    worst = std::max(worst, acc);
  }
  return worst;
}

double holder_bound(const VolterraKernel& k, double delta) {
  return k.holder_c() * std::pow(delta, k.holder_alpha());
}

VolterraKernel rescale_kernel(const VolterraKernel& k, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    fail(ErrorCategory::Domain, "rescale_kernel: eta must be positive, got " + format_real(eta));
  VolterraKernel out = k;
  out.time_scale_ *= eta;
  out.rescaled_ = true;
  return out;
}

double limit_kernel_error(const VolterraKernel& k, double eta, double epsilon,
                          const VolterraKernel& limit, const TimeGrid& grid) {
  if (!(eta > 0.0) || !(epsilon > 0.0))
    fail(ErrorCategory::Domain, "limit_kernel_error: eta and epsilon must be positive");
  const VolterraKernel scaled = rescale_kernel(k, eta);
  double worst = 0.0;
  for (int i = 1; i <= grid.steps(); ++i) {
    const double t = grid.node(i);
    for (int j = 0; j < i; ++j) {
      const double s = grid.node(j);
      worst = std::max(worst, std::abs(scaled(t, s) / epsilon - limit(t, s)));
    }
  }
  return worst;
}

KernelBank::KernelBank(std::vector<VolterraKernel> kernels) : kernels_(std::move(kernels)) {
  if (kernels_.empty()) fail(ErrorCategory::Config, "kernel bank needs at least one kernel");
  const double t = kernels_.front().horizon();
  for (const auto& k : kernels_)
    if (std::abs(k.horizon() - t) > 1e-12 * t)
      fail(ErrorCategory::Config, "kernel bank horizons differ: " + format_real(t) + " vs " +
                                      format_real(k.horizon()));
}

KernelBank KernelBank::uniform(const VolterraKernel& k, int p) {
  if (p < 1) fail(ErrorCategory::Config, "kernel bank needs p >= 1");
  return KernelBank(std::vector<VolterraKernel>(p, k));
}

KernelBank KernelBank::rescaled(double eta) const {
  std::vector<VolterraKernel> out;
  out.reserve(kernels_.size());
  for (const auto& k : kernels_) out.push_back(rescale_kernel(k, eta));
  return KernelBank(std::move(out));
}

ScalingSchedule ScalingSchedule::make(std::vector<double> eta, double hurst, SpeedRule rule,
                                      double speed_log_exponent) {
  ScalingSchedule s;
  s.rule = rule;
  s.speed_exponent_hurst = hurst;
  s.speed_log_exponent = rule == SpeedRule::LogFbm ? speed_log_exponent : 0.0;
  for (std::size_t n = 0; n < eta.size(); ++n) {
    const double e = eta[n];
    if (!(e > 0.0 && e < 1.0))
      fail(ErrorCategory::Config, "schedule eta must lie in (0, 1), got " + format_real(e));
    if (n > 0 && !(e < eta[n - 1]))
      fail(ErrorCategory::Config, "schedule eta must be strictly decreasing");
    double eps = std::pow(e, hurst);
    if (rule == SpeedRule::LogFbm) eps *= std::pow(-std::log(e), -0.5 * speed_log_exponent);
    s.epsilon.push_back(eps);
  }
  s.eta = eta;
  s.delta = std::move(eta);
  for (std::size_t n = 1; n < s.epsilon.size(); ++n)
    if (!(s.epsilon[n] < s.epsilon[n - 1]))
      fail(ErrorCategory::Config, "schedule epsilon is not strictly decreasing");
  return s;
}

std::string kernel_to_table(const VolterraKernel& k) {
  const auto& p = k.params();
  std::ostringstream os;
  os << "family = " << family_name(p.family) << "\n"
     << "hurst = " << format_real(p.hurst) << "\n"
     << "scale = " << format_real(p.scale) << "\n"
     << "log_exponent = " << format_real(p.log_exponent) << "\n"
     << "mean_reversion = " << format_real(p.mean_reversion) << "\n"
     << "holder_c = " << format_real(p.holder_c) << "\n"
     << "holder_alpha = " << format_real(p.holder_alpha) << "\n"
     << "horizon = " << format_real(p.horizon) << "\n";
  if (k.rescaled()) os << "time_scale = " << format_real(k.time_scale()) << "\n";
  return os.str();
}

VolterraKernel kernel_from_table(const std::map<std::string, std::string>& table) {
  auto number = [&](const std::string& key, double fallback) {
    auto it = table.find(key);
    if (it == table.end()) return fallback;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != it->second.size())
      fail(ErrorCategory::Config, "kernel field '" + key + "' is not a number: '" + it->second + "'");
    return v;
  };
  auto fam = table.find("family");
  if (fam == table.end()) fail(ErrorCategory::Config, "kernel table is missing 'family'");
  KernelParams p;
  p.family = parse_family(fam->second);
  p.hurst = number("hurst", p.hurst);
  p.scale = number("scale", p.scale);
  p.log_exponent = number("log_exponent", p.log_exponent);
  p.mean_reversion = number("mean_reversion", p.mean_reversion);
  p.holder_c = number("holder_c", p.holder_c);
  p.holder_alpha = number("holder_alpha", p.holder_alpha);
  p.horizon = number("horizon", p.horizon);
  VolterraKernel k(p);
  const double scale = number("time_scale", 1.0);
  if (table.count("time_scale")) return rescale_kernel(k, scale);
  return k;
}

}  // namespace vldp
