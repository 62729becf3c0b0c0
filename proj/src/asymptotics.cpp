#include "vldp/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "simcore.hpp"
#include "vldp/error.hpp"
#include "vldp/util.hpp"

namespace vldp {

TailEvent TailEvent::half_space(const Eigen::VectorXd& v, double b) {
  if (v.size() == 0 || v.isZero(0.0))
    fail(ErrorCategory::Domain, "half-space direction must be nonzero");
  TailEvent e;
  e.kind = Kind::TerminalHalfSpace;
  e.direction = v;
  e.threshold = b;
  return e;
}

TailEvent TailEvent::box(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  if (lower.size() != upper.size() || lower.size() == 0 || (lower.array() > upper.array()).any())
    fail(ErrorCategory::Domain, "box bounds must be ordered vectors of equal length");
  TailEvent e;
  e.kind = Kind::TerminalBox;
  e.lower = lower;
  e.upper = upper;
  return e;
}

TailEvent TailEvent::tube(const PathSample& target, double radius) {
  if (!(radius > 0.0)) fail(ErrorCategory::Domain, "tube radius must be positive");
  TailEvent e;
  e.kind = Kind::PathSupNorm;
  e.target = target.values;
  e.radius = radius;
  return e;
}

bool TailEvent::contains(const Eigen::MatrixXd& z) const {
  const Eigen::VectorXd zt = z.row(z.rows() - 1).transpose();
  switch (kind) {
    case Kind::TerminalHalfSpace:
      return direction.dot(zt) >= threshold;
    case Kind::TerminalBox:
      return (zt.array() >= lower.array()).all() && (zt.array() <= upper.array()).all();
    case Kind::PathSupNorm:
      if (target.rows() != z.rows() || target.cols() != z.cols())
        fail(ErrorCategory::Domain, "tube target does not match the simulated path shape");
      return (z - target).rowwise().norm().maxCoeff() <= radius;
  }
  return false;
}

namespace {

TailEstimate run_estimate(const ModelCoefficients& coeffs, const KernelBank& bank,
                          const TimeGrid& grid, double epsilon, const TailEvent& event,
                          const Eigen::MatrixXd* tilt_b, const Eigen::MatrixXd* tilt_w,
                          long n_paths, std::uint64_t seed, int threads) {
  if (n_paths < 1000)
    fail(ErrorCategory::InsufficientData, "tail estimation needs n_paths >= 1000, got " +
                                              std::to_string(n_paths));
  if (!(epsilon > 0.0)) fail(ErrorCategory::Domain, "epsilon must be positive");
  if (bank.size() != coeffs.p) fail(ErrorCategory::Config, "kernel bank size differs from p");
  const VolterraDiscretization disc(bank, grid);
  detail::SimSpec spec;
  spec.coeffs = &coeffs;
  spec.disc = &disc;
  spec.vol_scale = epsilon;
  spec.noise = epsilon;
  spec.c_corr = epsilon * epsilon;
  spec.correlated = true;
  spec.tilt_b = tilt_b;
  spec.tilt_w = tilt_w;

  std::vector<double> contrib(n_paths, 0.0);
  std::vector<double> logw(n_paths, 0.0);
  std::vector<char> hit(n_paths, 0);
  parallel_for(n_paths, threads, [&](long begin, long end, int) {
    detail::SimPath path;
    for (long k = begin; k < end; ++k) {
      PathRng rng(seed, static_cast<std::uint64_t>(k));
      detail::simulate_path(spec, rng, false, path);
      logw[k] = path.log_weight;
      if (event.contains(path.z)) {
        hit[k] = 1;
        contrib[k] = std::exp(path.log_weight);
      }
    }
  });

  TailEstimate est;
  est.n = n_paths;
  double sum = 0.0, sumsq = 0.0;
  est.max_log_weight = -std::numeric_limits<double>::infinity();
  for (long k = 0; k < n_paths; ++k) {
    sum += contrib[k];
    sumsq += contrib[k] * contrib[k];
    est.hits += hit[k];
    if (hit[k]) est.max_log_weight = std::max(est.max_log_weight, logw[k]);
  }
  if (est.hits == 0) est.max_log_weight = 0.0;
  const double n = static_cast<double>(n_paths);
  est.p_hat = sum / n;
  const double var = std::max(0.0, (sumsq - n * est.p_hat * est.p_hat) / (n - 1.0));
  est.std_error = std::sqrt(var / n);
  est.degenerate = est.p_hat <= 0.0 || est.p_hat >= 1.0;
  const double pc = std::clamp(est.p_hat, 0.0, 1.0);
  est.crude_equivalent_stderr = std::sqrt(pc * (1.0 - pc) / n);
  est.weight_overflow = est.max_log_weight > 700.0;
  return est;
}

}  // namespace

TailEstimate estimate_tail_prob(const ModelCoefficients& coeffs, const KernelBank& bank,
                                const TimeGrid& grid, double epsilon, const TailEvent& event,
                                long n_paths, std::uint64_t seed, int threads) {
  return run_estimate(coeffs, bank, grid, epsilon, event, nullptr, nullptr, n_paths, seed,
                      threads);
}

TailEstimate tilted_estimate(const ModelCoefficients& coeffs, const KernelBank& bank,
                             const TimeGrid& grid, double epsilon, const TailEvent& event,
                             const RateSolution& control, long n_paths, std::uint64_t seed,
                             int threads) {
  if (!control.converged)
    fail(ErrorCategory::Validation, "tilted_estimate needs a converged control");
  if (!(control.control.grid == grid))
    fail(ErrorCategory::Domain, "control lives on a different grid");
  if (control.control.dim() != coeffs.p || control.noise_drift.cols() != coeffs.d ||
      control.noise_drift.rows() != grid.steps())
    fail(ErrorCategory::Domain, "control dimensions do not match the model");
  if (!(epsilon > 0.0)) fail(ErrorCategory::Domain, "epsilon must be positive");
  const Eigen::MatrixXd theta_b = control.control.derivative / epsilon;
  const Eigen::MatrixXd theta_w = control.noise_drift / epsilon;
  return run_estimate(coeffs, bank, grid, epsilon, event, &theta_b, &theta_w, n_paths, seed,
                      threads);
}

RateSolution zero_control(const TimeGrid& grid, int p, int d) {
  return RateSolution{0.0,
                      CameronMartinPath(grid, p),
                      PathSample(grid, p),
                      PathSample(grid, d),
                      Eigen::MatrixXd::Zero(grid.steps(), d),
                      0,
                      0.0,
                      true,
                      0.0,
                      0.0,
                      false,
                      {}};
}

SlopeEstimate ldp_slope(const std::vector<double>& epsilons,
                        const std::vector<TailEstimate>& estimates) {
  if (epsilons.size() != estimates.size())
    fail(ErrorCategory::Domain, "ldp_slope: epsilons and estimates differ in length");
  if (epsilons.size() < 3)
    fail(ErrorCategory::InsufficientData, "ldp_slope needs at least 3 epsilons, got " +
                                              std::to_string(epsilons.size()));
  SlopeEstimate out;
  out.epsilons = epsilons;
  const std::size_t n = epsilons.size();
  std::vector<double> x(n), y(n), w(n);
  out.weighted = true;
  for (std::size_t i = 0; i < n; ++i) {
    const TailEstimate& e = estimates[i];
    if (!(e.p_hat > 0.0 && e.p_hat < 1.0))
      fail(ErrorCategory::InsufficientData,
           "ldp_slope needs p_hat in (0, 1), got " + format_real(e.p_hat) + " at epsilon " +
               format_real(epsilons[i]));
    out.probs.push_back({e.p_hat, e.std_error});
    x[i] = 1.0 / (epsilons[i] * epsilons[i]);
    y[i] = -std::log(e.p_hat);
    if (!(e.std_error > 0.0)) out.weighted = false;
    w[i] = e.std_error > 0.0 ? std::pow(e.p_hat / e.std_error, 2) : 1.0;
  }
  if (!out.weighted) std::fill(w.begin(), w.end(), 1.0);
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorCategory::InsufficientData, "ldp_slope: epsilons must differ");
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = y[i] - out.intercept - out.slope * x[i];
    ssr += w[i] * res * res;
  }
  out.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  return out;
}

namespace {

void require_zero_drift(const ModelCoefficients& coeffs) {
  if (!coeffs.mu.is_zero())
    fail(ErrorCategory::Validation, "short-time scaling is only valid with mu = 0");
}

std::vector<PathSample> run_scaled(const ModelCoefficients& coeffs, const KernelBank& bank,
                                   const TimeGrid& sim_grid, const TimeGrid& out_grid, int stride,
                                   double vol_scale, double noise, double c_corr, double factor,
                                   long n_paths, std::uint64_t seed, int threads) {
  if (n_paths < 1) fail(ErrorCategory::Domain, "n_paths must be >= 1");
  if (bank.size() != coeffs.p) fail(ErrorCategory::Config, "kernel bank size differs from p");
  const VolterraDiscretization disc(bank, sim_grid);
  detail::SimSpec spec;
  spec.coeffs = &coeffs;
  spec.disc = &disc;
  spec.vol_scale = vol_scale;
  spec.noise = noise;
  spec.c_corr = c_corr;
  spec.correlated = true;
  std::vector<PathSample> out(n_paths, PathSample(out_grid, coeffs.d));
  parallel_for(n_paths, threads, [&](long begin, long end, int) {
    detail::SimPath path;
    for (long k = begin; k < end; ++k) {
      PathRng rng(seed, static_cast<std::uint64_t>(k));
      detail::simulate_path(spec, rng, false, path);
      for (int i = 0; i <= out_grid.steps(); ++i)
        out[k].values.row(i) = factor * path.z.row(i * stride);
    }
  });
  return out;
}

void check_index(const ScalingSchedule& schedule, int n_index) {
  if (n_index < 0 || n_index >= schedule.size())
    fail(ErrorCategory::Domain, "schedule index " + std::to_string(n_index) + " out of range");
}

}  // namespace

std::vector<PathSample> short_time_sample(const ModelCoefficients& coeffs, const KernelBank& bank,
                                          const TimeGrid& grid, int n_index,
                                          const ScalingSchedule& schedule, long n_paths,
                                          std::uint64_t seed, int threads) {
  require_zero_drift(coeffs);
  check_index(schedule, n_index);
  const double delta = schedule.delta[n_index];
  const double eps = schedule.epsilon[n_index];
  return run_scaled(coeffs, bank.rescaled(delta), grid, grid, 1, 1.0, eps, eps * std::sqrt(delta),
                    1.0, n_paths, seed, threads);
}

std::vector<PathSample> short_time_direct(const ModelCoefficients& coeffs, const KernelBank& bank,
                                          const TimeGrid& grid, int n_index,
                                          const ScalingSchedule& schedule, long n_paths,
                                          std::uint64_t seed, int refine, int threads) {
  require_zero_drift(coeffs);
  check_index(schedule, n_index);
  if (refine < 1) fail(ErrorCategory::Domain, "refine must be >= 1");
  const double delta = schedule.delta[n_index];
  const double eps = schedule.epsilon[n_index];
  const TimeGrid fine(delta * grid.horizon(), grid.steps() * refine);
  return run_scaled(coeffs, bank, fine, grid, refine, 1.0, 1.0, 1.0, eps / std::sqrt(delta),
                    n_paths, seed, threads);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) fail(ErrorCategory::InsufficientData, "KS needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  KsResult r;
  r.statistic = d;
  if (lambda < 0.2) {
    r.p_value = 1.0;
    return r;
  }
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  r.p_value = std::clamp(q, 0.0, 1.0);
  return r;
}

EquivalenceReport equivalence_diagnostic(const std::vector<PathSample>& a,
                                         const std::vector<PathSample>& b) {
  if (a.size() != b.size() || a.empty())
    fail(ErrorCategory::Domain, "equivalence_diagnostic needs equally sized nonempty path sets");
  EquivalenceReport rep;
  std::vector<double> ta, tb;
  std::array<long, 3> count{0, 0, 0};
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double dist = sup_distance(a[k], b[k]);
    for (int r = 0; r < 3; ++r)
      if (dist > rep.radii[r]) ++count[r];
    ta.push_back(a[k].terminal()[0]);
    tb.push_back(b[k].terminal()[0]);
  }
  for (int r = 0; r < 3; ++r) rep.exceedance[r] = static_cast<double>(count[r]) / a.size();
  rep.terminal_ks = ks_two_sample(std::move(ta), std::move(tb));
  return rep;
}

}  // namespace vldp
