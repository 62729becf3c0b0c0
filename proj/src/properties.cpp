#include "vldp/properties.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "vldp/error.hpp"
#include "vldp/gaussian.hpp"
#include "vldp/kernels.hpp"
#include "vldp/model.hpp"
#include "vldp/optimizer.hpp"
#include "vldp/ratefn.hpp"
#include "vldp/util.hpp"

namespace vldp {

namespace {

int uniform_int(PathRng& rng, int lo, int hi) {
  return lo + std::min(hi - lo, static_cast<int>(rng.uniform() * (hi - lo + 1)));
}

double uniform_real(PathRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Eigen::MatrixXd normal_matrix(PathRng& rng, int r, int c, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = scale * rng.normal();
  return m;
}

Eigen::MatrixXd uniform_matrix(PathRng& rng, int r, int c, double half_width) {
  Eigen::MatrixXd m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = uniform_real(rng, -half_width, half_width);
  return m;
}

Eigen::MatrixXd random_spd(PathRng& rng, int d) {
  const Eigen::MatrixXd m = normal_matrix(rng, d, d);
  return m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

VolterraKernel random_kernel(PathRng& rng, double horizon) {
  switch (uniform_int(rng, 0, 2)) {
    case 0:
      return VolterraKernel::riemann_liouville(uniform_real(rng, 0.1, 0.9),
                                               uniform_real(rng, 0.5, 2.0), horizon);
    case 1:
      return VolterraKernel::log_fbm(uniform_real(rng, 0.1, 0.5), uniform_real(rng, 1.5, 3.0),
                                     uniform_real(rng, 0.5, 2.0), std::min(horizon, 0.9));
    default:
      return VolterraKernel::molchan_golosov(uniform_real(rng, 0.2, 0.8), horizon);
  }
}

// sigma = S exp(w.y) with S diagonally dominant, mu and sigma_tilde affine.
ModelCoefficients random_model(PathRng& rng, int d, int p) {
  Eigen::MatrixXd s = 2.0 * Eigen::MatrixXd::Identity(d, d) + uniform_matrix(rng, d, d, 0.5);
  Eigen::VectorXd w = uniform_matrix(rng, p, 1, 0.3).col(0);
  std::vector<Eigen::MatrixXd> mu_slopes, st_slopes;
  for (int l = 0; l < p; ++l) {
    mu_slopes.push_back(uniform_matrix(rng, d, 1, 0.2));
    st_slopes.push_back(uniform_matrix(rng, d, p, 0.3));
  }
  return ModelCoefficients(CoefficientMap::affine(uniform_matrix(rng, d, 1, 0.3), mu_slopes),
                           CoefficientMap::exp_linear(s, w),
                           CoefficientMap::affine(uniform_matrix(rng, d, p, 0.8), st_slopes));
}

PathSample random_walk(PathRng& rng, const TimeGrid& grid, int dim, double scale) {
  PathSample s(grid, dim);
  const double sd = scale * std::sqrt(grid.dt());
  for (int i = 1; i <= grid.steps(); ++i)
    for (int l = 0; l < dim; ++l) s.values(i, l) = s.values(i - 1, l) + sd * rng.normal();
  return s;
}

std::vector<Eigen::MatrixXd> random_spd_path(PathRng& rng, int n, int d) {
  std::vector<Eigen::MatrixXd> a;
  for (int i = 0; i < n; ++i) a.push_back(random_spd(rng, d));
  return a;
}

// Runs body(rng) once per case; body returns an empty string on success.
PropertyResult run_cases(const std::string& name, int cases, std::uint64_t seed,
                         const std::function<std::string(PathRng&)>& body) {
  PropertyResult r{name, 0, 0, ""};
  for (int c = 0; c < cases; ++c) {
    PathRng rng(seed, static_cast<std::uint64_t>(c));
    std::string msg;
    try {
      msg = body(rng);
    } catch (const std::exception& e) {
      msg = std::string("exception: ") + e.what();
    }
    ++r.cases;
    if (!msg.empty()) {
      ++r.failures;
      if (r.first_failure.empty()) r.first_failure = "case " + std::to_string(c) + ": " + msg;
    }
  }
  return r;
}

std::string compare(double lhs, double rhs, const char* relation) {
  std::ostringstream os;
  os << format_real(lhs) << " " << relation << " " << format_real(rhs) << " violated";
  return os.str();
}

}  // namespace

PropertyResult check_gamma_monotone(int cases, std::uint64_t seed) {
  return run_cases("gamma_monotone", cases, seed, [](PathRng& rng) -> std::string {
    const int n = uniform_int(rng, 2, 12), d = uniform_int(rng, 1, 3);
    const TimeGrid grid(uniform_real(rng, 0.5, 2.0), n);
    const CameronMartinPath x(grid, normal_matrix(rng, n, d));
    const auto a = random_spd_path(rng, n, d);
    std::vector<Eigen::MatrixXd> b;
    for (const auto& m : a) {
      const Eigen::MatrixXd q = normal_matrix(rng, d, d);
      b.push_back(m + q * q.transpose());
    }
    const double ga = gamma_functional(x, a), gb = gamma_functional(x, b);
    return gb >= ga - 1e-12 * (1.0 + ga) ? "" : compare(gb, ga, ">=");
  });
}

PropertyResult check_gamma_two_term(int cases, std::uint64_t seed) {
  return run_cases("gamma_two_term", cases, seed, [](PathRng& rng) -> std::string {
    const int n = uniform_int(rng, 2, 12), d = uniform_int(rng, 1, 3);
    const TimeGrid grid(uniform_real(rng, 0.5, 2.0), n);
    const CameronMartinPath x(grid, normal_matrix(rng, n, d));
    const CameronMartinPath y(grid, normal_matrix(rng, n, d, uniform_real(rng, 0.1, 3.0)));
    const auto a = random_spd_path(rng, n, d);
    const CameronMartinPath xy(grid, x.derivative + y.derivative);
    const double lhs = gamma_functional(xy, a);
    const double rhs = 2.0 * gamma_functional(x, a) + 2.0 * gamma_functional(y, a);
    return lhs <= rhs + 1e-12 * (1.0 + rhs) ? "" : compare(lhs, rhs, "<=");
  });
}

PropertyResult check_gamma_three_term(int cases, std::uint64_t seed) {
  return run_cases("gamma_three_term", cases, seed, [](PathRng& rng) -> std::string {
    const int n = uniform_int(rng, 2, 12), d = uniform_int(rng, 1, 3);
    const TimeGrid grid(uniform_real(rng, 0.5, 2.0), n);
    const CameronMartinPath x(grid, normal_matrix(rng, n, d));
    const CameronMartinPath y(grid, normal_matrix(rng, n, d, uniform_real(rng, 0.1, 3.0)));
    const CameronMartinPath z(grid, normal_matrix(rng, n, d, uniform_real(rng, 0.1, 3.0)));
    const auto a = random_spd_path(rng, n, d);
    const CameronMartinPath sum(grid, x.derivative + y.derivative + z.derivative);
    const double lhs = gamma_functional(sum, a);
    const double rhs = 3.0 * (gamma_functional(x, a) + gamma_functional(y, a) +
                              gamma_functional(z, a));
    return lhs <= rhs + 1e-12 * (1.0 + rhs) ? "" : compare(lhs, rhs, "<=");
  });
}

PropertyResult check_hat_map_bound(int cases, std::uint64_t seed) {
  return run_cases("hat_map_bound", cases, seed, [](PathRng& rng) -> std::string {
    const int n = uniform_int(rng, 2, 10), p = uniform_int(rng, 1, 2);
    const VolterraKernel k0 = random_kernel(rng, 1.0);
    std::vector<VolterraKernel> ks{k0};
    if (p == 2) ks.push_back(random_kernel(rng, k0.horizon()));
    if (p == 2 && std::abs(ks[1].horizon() - k0.horizon()) > 0.0)
      ks[1] = VolterraKernel::riemann_liouville(uniform_real(rng, 0.1, 0.9), 1.0, k0.horizon());
    const KernelBank bank(ks);
    const TimeGrid grid(bank.horizon(), n);
    const CameronMartinPath f(grid, normal_matrix(rng, n, p, uniform_real(rng, 0.1, 3.0)));
    const PathSample fh = hat_map(f, bank);
    double sup_slice = 0.0;
    for (int i = 1; i <= n; ++i) {
      double s = 0.0;
      for (int l = 0; l < p; ++l) s += kernel_l2_slice(bank[l], grid.node(i), 16 * i);
      sup_slice = std::max(sup_slice, s);
    }
    const double lhs = fh.values.rowwise().squaredNorm().maxCoeff();
    const double rhs = sup_slice * f.h1_norm_sq();
    return lhs <= rhs * (1.0 + 1e-12) ? "" : compare(lhs, rhs, "<=");
  });
}

PropertyResult check_phi_m_bound(int cases, std::uint64_t seed) {
  return run_cases("phi_m_bound", cases, seed, [](PathRng& rng) -> std::string {
    const int d = uniform_int(rng, 1, 2), p = uniform_int(rng, 1, 2);
    const int m = uniform_int(rng, 1, 4);
    const int n = m * uniform_int(rng, 1, 4);
    const TimeGrid grid(1.0, n);
    std::vector<Eigen::MatrixXd> slopes;
    for (int l = 0; l < p; ++l) slopes.push_back(uniform_matrix(rng, d, p, 1.0));
    ModelCoefficients c(CoefficientMap::constant(Eigen::MatrixXd::Zero(d, 1), p),
                        CoefficientMap::constant(Eigen::MatrixXd::Identity(d, d), p),
                        CoefficientMap::affine(uniform_matrix(rng, d, p, 1.0), slopes));
    // |sigma~_il(y)| <= 1 + sum_l |y_l| <= M1 + M2 |y|
    c.growth_m1 = 1.0;
    c.growth_m2 = std::sqrt(static_cast<double>(p));
    c.growth_alpha = 1.0;
    const KernelBank bank =
        KernelBank::uniform(VolterraKernel::riemann_liouville(uniform_real(rng, 0.1, 0.9)), p);
    const CameronMartinPath f(grid, normal_matrix(rng, n, p, uniform_real(rng, 0.1, 2.0)));
    const PathSample g = hat_map(f, bank);
    const CameronMartinPath rate = CameronMartinPath::from_path(phi_m(f, g, m, c));
    const double sup_g = g.values.rowwise().norm().maxCoeff();
    const double bound = c.growth_m1 + c.growth_m2 * std::pow(sup_g, c.growth_alpha);
    const double lhs = rate.h1_norm_sq();
    const double rhs = d * p * bound * bound * f.h1_norm_sq();
    return lhs <= rhs * (1.0 + 1e-9) ? "" : compare(lhs, rhs, "<=");
  });
}

PropertyResult check_inverse_lower_bound(int cases, std::uint64_t seed) {
  return run_cases("inverse_lower_bound", cases, seed, [](PathRng& rng) -> std::string {
    const int d = uniform_int(rng, 1, 3), p = uniform_int(rng, 1, 2);
    const TimeGrid grid(1.0, uniform_int(rng, 4, 16));
    const ModelCoefficients c = random_model(rng, d, p);
    const PathSample phi = random_walk(rng, grid, p, 1.0);
    const PathSample psi = random_walk(rng, grid, p, 1.0);
    std::vector<PathSample> family{phi};
    for (int k = 1; k <= 8; ++k) {
      PathSample pk = phi;
      pk.values += psi.values / k;
      family.push_back(pk);
    }
    const double lo = uniform_inverse_lower_bound(c, family);
    if (!(lo > 0.0) || !std::isfinite(lo)) return "bound " + format_real(lo) + " not positive";
    for (const auto& path : family)
      for (int i = 0; i <= grid.steps(); ++i) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.a_at(path.at(i)).inverse(),
                                                          Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < lo * (1.0 - 1e-10))
          return "node eigenvalue below the reported bound";
      }
    return "";
  });
}

PropertyResult check_domination_multiplier(int cases, std::uint64_t seed) {
  return run_cases("domination_multiplier", cases, seed, [](PathRng& rng) -> std::string {
    const int d = uniform_int(rng, 1, 3), p = uniform_int(rng, 1, 2);
    const TimeGrid grid(1.0, uniform_int(rng, 4, 16));
    const ModelCoefficients c = random_model(rng, d, p);
    const PathSample phi = random_walk(rng, grid, p, 1.0);
    PathSample phi_n = phi;
    phi_n.values += random_walk(rng, grid, p, uniform_real(rng, 0.01, 1.0)).values;
    const auto m = domination_multiplier(c, phi_n, phi);
    if (!m) return "no multiplier found";
    for (int i = 0; i <= grid.steps(); ++i) {
      const Eigen::MatrixXd diff =
          *m * c.a_at(phi_n.at(i)).inverse() - c.a_at(phi.at(i)).inverse();
      if (diff.llt().info() != Eigen::Success) return "M = " + format_real(*m) + " fails at node";
    }
    return "";
  });
}

PropertyResult check_eigenvalue_bound(int cases, std::uint64_t seed) {
  return run_cases("eigenvalue_bound", cases, seed, [](PathRng& rng) -> std::string {
    const int d = uniform_int(rng, 1, 3), p = uniform_int(rng, 1, 2);
    std::vector<Eigen::MatrixXd> slopes;
    for (int l = 0; l < p; ++l) slopes.push_back(uniform_matrix(rng, d, d, 1.0));
    ModelCoefficients c(CoefficientMap::constant(Eigen::MatrixXd::Zero(d, 1), p),
                        CoefficientMap::affine(uniform_matrix(rng, d, d, 2.0), slopes),
                        CoefficientMap::constant(Eigen::MatrixXd::Zero(d, p), p));
    c.growth_m1 = 2.0;
    c.growth_m2 = std::sqrt(static_cast<double>(p));
    c.growth_alpha = 1.0;
    ProbeLattice probe;
    probe.radius = uniform_real(rng, 0.5, 5.0);
    probe.points_per_axis = 7;
    probe.random_probes = 20;
    probe.seed = static_cast<std::uint64_t>(uniform_int(rng, 0, 1 << 20));
    if (!validate_coefficients(c, probe).check("growth").passed) return "growth check failed";
    const double ratio = eigenvalue_bound_ratio(c, probe);
    return ratio <= 1.0 + 1e-12 ? "" : compare(ratio, 1.0, "<=");
  });
}

PropertyResult check_gradients(int cases, std::uint64_t seed) {
  return run_cases("gradient_vs_finite_difference", cases, seed, [](PathRng& rng) -> std::string {
    const int d = uniform_int(rng, 1, 2), p = uniform_int(rng, 1, 2);
    const int n = 4 * uniform_int(rng, 1, 2);
    const TimeGrid grid(uniform_real(rng, 0.5, 1.5), n);
    const ModelCoefficients c = random_model(rng, d, p);
    const KernelBank bank = KernelBank::uniform(
        VolterraKernel::riemann_liouville(uniform_real(rng, 0.2, 0.9), 1.0, grid.horizon()), p);
    const int which = uniform_int(rng, 0, 3);
    const Eigen::VectorXd u = normal_matrix(rng, n * p, 1, 0.3).col(0);
    Eigen::VectorXd g, fd;
    auto compare_grads = [&](const auto& obj) {
      obj(u, g);
      const ValueGrad value_only = [&obj](const Eigen::VectorXd& v, Eigen::VectorXd&) {
        return obj.value(v);
      };
      fd = finite_difference_gradient(value_only, u, 1e-5);
    };
    const char* label = "";
    if (which == 3) {
      label = "terminal";
      compare_grads(TerminalRateObjective(normal_matrix(rng, d, 1).col(0), bank, c, grid));
    } else {
      const CameronMartinPath x(grid, normal_matrix(rng, n, d));
      const PhiMode mode = which == 0 ? PhiMode::None : which == 1 ? PhiMode::Exact : PhiMode::Frozen;
      label = which == 0 ? "uncorrelated" : which == 1 ? "exact" : "frozen";
      compare_grads(PathRateObjective(x, bank, c, mode, which == 2 ? 2 : 0));
    }
    const double scale = fd.cwiseAbs().maxCoeff();
    const double err = (g - fd).cwiseAbs().maxCoeff();
    if (err <= 1e-4 * scale + 1e-9) return "";
    return std::string(label) + ": |grad - fd| = " + format_real(err) + ", |fd| = " +
           format_real(scale);
  });
}

PropertyResult check_kernel_invariants(int cases, std::uint64_t seed) {
  return run_cases("kernel_invariants", cases, seed, [](PathRng& rng) -> std::string {
    const VolterraKernel k = random_kernel(rng, uniform_real(rng, 0.5, 2.0));
    const double t_max = k.horizon();
    const double t = uniform_real(rng, 0.0, t_max);
    const double s = uniform_real(rng, t, t_max);
    if (k(t, s) != 0.0) return "K(t, s) != 0 for s >= t";
    if (k(0.0, 0.0) != 0.0) return "K(0, 0) != 0";
    const double e1 = uniform_real(rng, 0.05, 1.0), e2 = uniform_real(rng, 0.05, 1.0);
    const VolterraKernel twice = rescale_kernel(rescale_kernel(k, e1), e2);
    const VolterraKernel once = rescale_kernel(k, e1 * e2);
    const double h = once.horizon();
    for (int q = 0; q < 100; ++q) {
      const double tt = uniform_real(rng, 0.0, h);
      const double ss = uniform_real(rng, 0.0, tt);
      if (ss <= 0.0 && k.family() == KernelFamily::FbmMolchanGolosov) continue;
      const double a = twice(tt, ss), b = once(tt, ss);
      if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(b))) return compare(a, b, "==");
    }
    return "";
  });
}

std::vector<PropertyResult> run_property_suites(int cases, std::uint64_t seed) {
  return {check_gamma_monotone(cases, seed),       check_gamma_two_term(cases, seed),
          check_gamma_three_term(cases, seed),     check_hat_map_bound(cases, seed),
          check_phi_m_bound(cases, seed),          check_inverse_lower_bound(cases, seed),
          check_domination_multiplier(cases, seed), check_eigenvalue_bound(cases, seed),
          check_gradients(cases, seed),            check_kernel_invariants(cases, seed)};
}

}  // namespace vldp
