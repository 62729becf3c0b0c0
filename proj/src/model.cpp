#include "vldp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "simcore.hpp"
#include "vldp/error.hpp"
#include "vldp/util.hpp"

namespace vldp {

CoefficientMap CoefficientMap::constant(Eigen::MatrixXd value, int p) {
  if (p < 1) fail(ErrorCategory::Config, "coefficient map needs p >= 1");
  CoefficientMap m;
  m.kind_ = Kind::Constant;
  m.p_ = p;
  m.base_ = std::move(value);
  return m;
}

CoefficientMap CoefficientMap::affine(Eigen::MatrixXd base, std::vector<Eigen::MatrixXd> slopes) {
  if (slopes.empty()) fail(ErrorCategory::Config, "affine map needs one slope matrix per factor");
  for (const auto& s : slopes)
    if (s.rows() != base.rows() || s.cols() != base.cols())
      fail(ErrorCategory::Config, "affine map: slope shape differs from base shape");
  CoefficientMap m;
  m.kind_ = Kind::Affine;
  m.p_ = static_cast<int>(slopes.size());
  m.base_ = std::move(base);
  m.slopes_ = std::move(slopes);
  return m;
}

CoefficientMap CoefficientMap::exp_linear(Eigen::MatrixXd scale, Eigen::VectorXd weights) {
  if (weights.size() < 1) fail(ErrorCategory::Config, "exp_linear map needs a weight vector");
  CoefficientMap m;
  m.kind_ = Kind::ExpLinear;
  m.p_ = static_cast<int>(weights.size());
  m.base_ = std::move(scale);
  m.weights_ = std::move(weights);
  return m;
}

Eigen::MatrixXd CoefficientMap::value(const Eigen::VectorXd& y) const {
  switch (kind_) {
    case Kind::Constant:
      return base_;
    case Kind::Affine: {
      Eigen::MatrixXd v = base_;
      for (int l = 0; l < p_; ++l) v += y[l] * slopes_[l];
      return v;
    }
    case Kind::ExpLinear:
      return base_ * std::exp(weights_.dot(y));
  }
  return base_;
}

Eigen::MatrixXd CoefficientMap::partial(const Eigen::VectorXd& y, int l) const {
  switch (kind_) {
    case Kind::Constant:
      return Eigen::MatrixXd::Zero(base_.rows(), base_.cols());
    case Kind::Affine:
      return slopes_.at(l);
    case Kind::ExpLinear:
      return base_ * (weights_[l] * std::exp(weights_.dot(y)));
  }
  return base_;
}

CoefficientMap CoefficientMap::scaled(double factor) const {
  CoefficientMap m = *this;
  m.base_ *= factor;
  for (auto& s : m.slopes_) s *= factor;
  return m;
}

std::string CoefficientMap::describe() const {
  std::ostringstream os;
  Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", "; ", "", "", "[", "]");
  switch (kind_) {
    case Kind::Constant:
      os << "constant " << base_.format(fmt);
      break;
    case Kind::Affine:
      os << "affine " << base_.format(fmt);
      for (const auto& s : slopes_) os << " " << s.format(fmt);
      break;
    case Kind::ExpLinear:
      os << "exp_linear " << base_.format(fmt) << " " << weights_.transpose().format(fmt);
      break;
  }
  return os.str();
}

ModelCoefficients::ModelCoefficients(CoefficientMap mu_, CoefficientMap sigma_,
                                     CoefficientMap sigma_tilde_)
    : mu(std::move(mu_)), sigma(std::move(sigma_)), sigma_tilde(std::move(sigma_tilde_)) {
  d = sigma.rows();
  p = sigma_tilde.cols();
  if (sigma.cols() != d) fail(ErrorCategory::Config, "sigma must be d x d");
  if (mu.rows() != d || mu.cols() != 1) fail(ErrorCategory::Config, "mu must be a d-vector");
  if (sigma_tilde.rows() != d) fail(ErrorCategory::Config, "sigma_tilde must be d x p");
  for (const CoefficientMap* m : {&mu, &sigma, &sigma_tilde})
    if (m->inputs() != p)
      fail(ErrorCategory::Config, "coefficient map takes " + std::to_string(m->inputs()) +
                                      " inputs, model has p = " + std::to_string(p));
}

ModelCoefficients ModelCoefficients::constant(const Eigen::VectorXd& mu,
                                              const Eigen::MatrixXd& sigma,
                                              const Eigen::MatrixXd& sigma_tilde) {
  const int p = static_cast<int>(sigma_tilde.cols());
  return ModelCoefficients(CoefficientMap::constant(mu, p), CoefficientMap::constant(sigma, p),
                           CoefficientMap::constant(sigma_tilde, p));
}

ModelCoefficients ModelCoefficients::rho_template(const CoefficientMap& vol, double rho) {
  if (!(rho > -1.0 && rho < 1.0)) fail(ErrorCategory::Config, "rho must lie in (-1, 1)");
  if (vol.rows() != 1 || vol.cols() != 1 || vol.inputs() != 1)
    fail(ErrorCategory::Config, "rho template needs a scalar volatility map of one factor");
  return ModelCoefficients(CoefficientMap::constant(Eigen::MatrixXd::Zero(1, 1), 1),
                           vol.scaled(std::sqrt(1.0 - rho * rho)), vol.scaled(rho));
}

Eigen::MatrixXd ModelCoefficients::a_at(const Eigen::VectorXd& y) const {
  const Eigen::MatrixXd s = sigma.value(y);
  return s * s.transpose();
}

DiffusionMatrixPath diffusion_path(const ModelCoefficients& coeffs, const PathSample& phi) {
  if (phi.dim() != coeffs.p)
    fail(ErrorCategory::Domain, "diffusion_path: path dimension differs from p");
  const int n = phi.grid.steps();
  DiffusionMatrixPath out{phi.grid, {}, {}, Eigen::VectorXd(n + 1), Eigen::VectorXd(n + 1)};
  for (int i = 0; i <= n; ++i) {
    const Eigen::MatrixXd a = coeffs.a_at(phi.at(i));
    const double det = a.determinant();
    if (!(std::abs(det) >= 1e-12))
      fail(ErrorCategory::Singular, "det a = " + format_real(det) + " at node " +
                                        std::to_string(i) + " (t = " +
                                        format_real(phi.grid.node(i)) + ")");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    out.lambda_min[i] = es.eigenvalues().minCoeff();
    out.lambda_max[i] = es.eigenvalues().maxCoeff();
    out.a_inv_values.push_back(a.inverse());
    out.a_values.push_back(a);
  }
  return out;
}

namespace detail {

void simulate_path(const SimSpec& spec, PathRng& rng, bool keep_bhat, SimPath& out) {
  const ModelCoefficients& c = *spec.coeffs;
  const VolterraDiscretization& disc = *spec.disc;
  const TimeGrid& grid = disc.grid();
  const int n = grid.steps();
  const int p = c.p;
  const int d = c.d;
  const double dt = grid.dt();
  const double sd = std::sqrt(dt);

  std::vector<SingularCellLaw> law;
  for (int l = 0; l < p; ++l)
    law.emplace_back(dt, disc.singular_mean(l), disc.singular_energy(l));

  out.inc.resize(n, p);
  out.sing.resize(n, p);
  out.dw.resize(n, d);
  out.log_weight = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < p; ++l) {
      const double e = sd * rng.normal();
      double shift = 0.0;
      if (spec.tilt_b) {
        const double th = (*spec.tilt_b)(j, l);
        shift = th * dt;
        out.log_weight -= th * e + 0.5 * th * th * dt;
      }
      out.inc(j, l) = e + shift;
    }
    for (int l = 0; l < p; ++l)
      out.sing(j, l) = law[l].cov * out.inc(j, l) + law[l].resid_sd * rng.normal();
    for (int i = 0; i < d; ++i) {
      const double e = sd * rng.normal();
      double shift = 0.0;
      if (spec.tilt_w) {
        const double th = (*spec.tilt_w)(j, i);
        shift = th * dt;
        out.log_weight -= th * e + 0.5 * th * th * dt;
      }
      out.dw(j, i) = e + shift;
    }
  }

  const bool constant = c.all_constant();
  if (keep_bhat || !constant)
    out.bhat = disc.convolve(out.inc, out.sing);
  else
    out.bhat.resize(0, 0);

  out.z = Eigen::MatrixXd::Zero(n + 1, d);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd sig, sigt;
  Eigen::VectorXd mu, corr;
  auto evaluate = [&](const Eigen::VectorXd& y) {
    sig = c.sigma.value(y);
    mu = c.mu_at(y);
    corr = sig.rowwise().squaredNorm();
    if (spec.correlated) {
      sigt = c.sigma_tilde.value(y);
      corr += sigt.rowwise().squaredNorm();
    }
  };
  if (constant) evaluate(origin);
  for (int j = 0; j < n; ++j) {
    if (!constant) evaluate(spec.vol_scale * out.bhat.row(j).transpose());
    Eigen::VectorXd dz = (mu - 0.5 * spec.c_corr * corr) * dt +
                         spec.noise * (sig * out.dw.row(j).transpose());
    if (spec.correlated) dz += spec.noise * (sigt * out.inc.row(j).transpose());
    out.z.row(j + 1) = out.z.row(j) + dz.transpose();
  }
}

}  // namespace detail

namespace {

template <typename Emit>
void run_paths(const ModelCoefficients& coeffs, const KernelBank& bank, const TimeGrid& grid,
               double epsilon, bool correlated, long n_paths, std::uint64_t seed, int threads,
               Emit&& emit) {
  if (!(epsilon > 0.0)) fail(ErrorCategory::Domain, "epsilon must be positive");
  if (n_paths < 1) fail(ErrorCategory::Domain, "n_paths must be >= 1");
  if (bank.size() != coeffs.p)
    fail(ErrorCategory::Config, "kernel bank has " + std::to_string(bank.size()) +
                                    " kernels, model has p = " + std::to_string(coeffs.p));
  const VolterraDiscretization disc(bank, grid);
  detail::SimSpec spec;
  spec.coeffs = &coeffs;
  spec.disc = &disc;
  spec.vol_scale = epsilon;
  spec.noise = epsilon;
  spec.c_corr = epsilon * epsilon;
  spec.correlated = correlated;
  parallel_for(n_paths, threads, [&](long begin, long end, int) {
    detail::SimPath path;
    for (long k = begin; k < end; ++k) {
      PathRng rng(seed, static_cast<std::uint64_t>(k));
      detail::simulate_path(spec, rng, correlated, path);
      emit(k, path, disc);
    }
  });
}

}  // namespace

std::vector<PathSample> simulate_uncorrelated(const ModelCoefficients& coeffs,
                                              const KernelBank& bank, const TimeGrid& grid,
                                              double epsilon, long n_paths, std::uint64_t seed,
                                              int threads) {
  std::vector<PathSample> out(std::max(0L, n_paths), PathSample(grid, coeffs.d));
  run_paths(coeffs, bank, grid, epsilon, false, n_paths, seed, threads,
            [&](long k, const detail::SimPath& path, const VolterraDiscretization&) {
              out[k].values = path.z;
            });
  return out;
}

std::vector<CorrelatedPath> simulate_correlated(const ModelCoefficients& coeffs,
                                                const KernelBank& bank, const TimeGrid& grid,
                                                double epsilon, long n_paths, std::uint64_t seed,
                                                int threads) {
  const int p = coeffs.p;
  std::vector<CorrelatedPath> out(
      std::max(0L, n_paths),
      CorrelatedPath{PathSample(grid, coeffs.d),
                     JointSample{PathSample(grid, p), PathSample(grid, p), {}, {}}});
  run_paths(coeffs, bank, grid, epsilon, true, n_paths, seed, threads,
            [&](long k, const detail::SimPath& path, const VolterraDiscretization&) {
              CorrelatedPath& o = out[k];
              o.log_price.values = path.z;
              for (int j = 0; j < grid.steps(); ++j)
                o.drivers.brownian.values.row(j + 1) =
                    o.drivers.brownian.values.row(j) + path.inc.row(j);
              o.drivers.volterra.values = path.bhat;
              o.drivers.increments = path.inc;
              o.drivers.singular_increments = path.sing;
            });
  return out;
}

std::vector<Eigen::VectorXd> ProbeLattice::points(int p) const {
  if (p < 1 || points_per_axis < 1) fail(ErrorCategory::Domain, "probe lattice is empty");
  int per_axis = points_per_axis;
  while (per_axis > 3 && std::pow(per_axis, p) > 20000.0) per_axis -= 2;
  std::vector<Eigen::VectorXd> pts;
  long total = 1;
  for (int l = 0; l < p; ++l) total *= per_axis;
  for (long idx = 0; idx < total; ++idx) {
    Eigen::VectorXd y(p);
    long rest = idx;
    for (int l = 0; l < p; ++l) {
      const int c = static_cast<int>(rest % per_axis);
      rest /= per_axis;
      y[l] = per_axis == 1 ? 0.0 : -radius + 2.0 * radius * c / (per_axis - 1);
    }
    pts.push_back(y);
  }
  PathRng rng(seed, 0);
  for (int r = 0; r < random_probes; ++r) {
    Eigen::VectorXd y(p);
    for (int l = 0; l < p; ++l) y[l] = radius * (2.0 * rng.uniform() - 1.0);
    pts.push_back(y);
  }
  return pts;
}

bool ValidationReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const AssumptionCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  fail(ErrorCategory::Domain, "no validation check named '" + name + "'");
}

std::string ValidationReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << c.name << ": " << (c.passed ? "pass" : "FAIL") << " (checked on probes)";
    if (c.worst_point.size() > 0) {
      os << " worst at y = [";
      for (Eigen::Index l = 0; l < c.worst_point.size(); ++l)
        os << (l ? " " : "") << format_real(c.worst_point[l]);
      os << "]";
    }
    os << " value " << format_real(c.worst_value);
    if (!c.detail.empty()) os << "; " << c.detail;
    os << "\n";
  }
  return os.str();
}

ValidationReport validate_coefficients(const ModelCoefficients& coeffs, const ProbeLattice& probe) {
  const auto pts = probe.points(coeffs.p);
  ValidationReport report;

  AssumptionCheck det{"det", true, {}, std::numeric_limits<double>::infinity(),
                      "min |det a(y)| over probes, threshold 1e-12"};
  AssumptionCheck growth{"growth", true, {}, 0.0,
                         "max (|sigma~_il| + |sigma_ij| + |mu_i|) / (M1 + M2 |y|^alpha)"};
  AssumptionCheck holder{"sigma_tilde_local_holder", true, {}, 1.0,
                         "min fitted local exponent of sigma~ from steps 1e-2 and 1e-4; "
                         "substitute for local omega-continuity"};
  for (const auto& y : pts) {
    const Eigen::MatrixXd a = coeffs.a_at(y);
    const double dv = std::abs(a.determinant());
    if (det.worst_point.size() == 0 || !(dv >= det.worst_value)) {
      det.worst_value = dv;
      det.worst_point = y;
    }

    const Eigen::VectorXd mu = coeffs.mu_at(y);
    const Eigen::MatrixXd sig = coeffs.sigma.value(y);
    const Eigen::MatrixXd sigt = coeffs.sigma_tilde.value(y);
    const double bound = coeffs.growth_m1 + coeffs.growth_m2 * std::pow(y.norm(), coeffs.growth_alpha);
    double lhs = 0.0;
    for (int i = 0; i < coeffs.d; ++i)
      lhs = std::max(lhs, sig.row(i).cwiseAbs().maxCoeff() + sigt.row(i).cwiseAbs().maxCoeff() +
                              std::abs(mu[i]));
    const double ratio = bound > 0.0 ? lhs / bound : std::numeric_limits<double>::infinity();
    if (!(ratio <= growth.worst_value)) {
      growth.worst_value = ratio;
      growth.worst_point = y;
    }

    for (int l = 0; l < coeffs.p; ++l) {
      Eigen::VectorXd y1 = y, y2 = y;
      y1[l] += 1e-2;
      y2[l] += 1e-4;
      const double d1 = (coeffs.sigma_tilde.value(y1) - sigt).cwiseAbs().maxCoeff();
      const double d2 = (coeffs.sigma_tilde.value(y2) - sigt).cwiseAbs().maxCoeff();
      double expo = 1.0;
      if (!std::isfinite(d1) || !std::isfinite(d2))
        expo = -std::numeric_limits<double>::infinity();
      else if (d1 > 0.0)
        expo = d2 > 0.0 ? std::log10(d1 / d2) / 2.0 : 1.0;
      if (expo < holder.worst_value) {
        holder.worst_value = expo;
        holder.worst_point = y;
      }
    }
  }
  det.passed = det.worst_value > 1e-12;
  growth.passed = growth.worst_value <= 1.0;
  holder.passed = holder.worst_value > 0.0;
  report.checks = {det, growth, holder};
  return report;
}

double uniform_inverse_lower_bound(const ModelCoefficients& coeffs,
                                   const std::vector<PathSample>& paths) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& phi : paths) {
    const DiffusionMatrixPath dp = diffusion_path(coeffs, phi);
    // lambda_min(a^{-1}) = 1 / lambda_max(a)
    lo = std::min(lo, 1.0 / dp.lambda_max.maxCoeff());
  }
  return lo;
}

std::optional<double> domination_multiplier(const ModelCoefficients& coeffs,
                                            const PathSample& phi_n, const PathSample& phi,
                                            int max_doublings) {
  if (!(phi_n.grid == phi.grid)) fail(ErrorCategory::Domain, "domination_multiplier: grids differ");
  const DiffusionMatrixPath an = diffusion_path(coeffs, phi_n);
  const DiffusionMatrixPath a = diffusion_path(coeffs, phi);
  double m = 2.0;
  for (int k = 0; k < max_doublings; ++k, m *= 2.0) {
    bool ok = true;
    for (std::size_t i = 0; ok && i < a.a_inv_values.size(); ++i) {
      const Eigen::MatrixXd diff = m * an.a_inv_values[i] - a.a_inv_values[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
      ok = es.eigenvalues().minCoeff() > 0.0;
    }
    if (ok) return m;
  }
  return std::nullopt;
}

double eigenvalue_bound_ratio(const ModelCoefficients& coeffs, const ProbeLattice& probe) {
  double worst = 0.0;
  const double d2 = static_cast<double>(coeffs.d) * coeffs.d;
  for (const auto& y : probe.points(coeffs.p)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(coeffs.a_at(y), Eigen::EigenvaluesOnly);
    const double b = coeffs.growth_m1 + coeffs.growth_m2 * std::pow(y.norm(), coeffs.growth_alpha);
    worst = std::max(worst, es.eigenvalues().maxCoeff() / (d2 * b * b));
  }
  return worst;
}

}  // namespace vldp
