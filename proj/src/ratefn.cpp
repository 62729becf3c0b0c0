#include "vldp/ratefn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vldp/error.hpp"
#include "vldp/util.hpp"

namespace vldp {

CameronMartinPath::CameronMartinPath(const TimeGrid& g, Eigen::MatrixXd d)
    : grid(g), derivative(std::move(d)) {
  if (derivative.rows() != g.steps())
    fail(ErrorCategory::Domain, "Cameron-Martin derivative has " +
                                    std::to_string(derivative.rows()) + " rows, grid has " +
                                    std::to_string(g.steps()) + " steps");
}

double CameronMartinPath::h1_norm_sq() const { return derivative.squaredNorm() * grid.dt(); }

PathSample CameronMartinPath::path() const {
  PathSample out(grid, dim());
  const double dt = grid.dt();
  for (int j = 0; j < grid.steps(); ++j)
    out.values.row(j + 1) = out.values.row(j) + derivative.row(j) * dt;
  return out;
}

CameronMartinPath CameronMartinPath::straight_line(const TimeGrid& g, const Eigen::VectorXd& z) {
  CameronMartinPath f(g, static_cast<int>(z.size()));
  f.derivative.rowwise() = (z / g.horizon()).transpose();
  return f;
}

CameronMartinPath CameronMartinPath::from_path(const PathSample& x) {
  if (!x.values.row(0).isZero(0.0))
    fail(ErrorCategory::Domain, "Cameron-Martin paths start at 0");
  const int n = x.grid.steps();
  Eigen::MatrixXd d = (x.values.bottomRows(n) - x.values.topRows(n)) / x.grid.dt();
  return CameronMartinPath(x.grid, std::move(d));
}

double gamma_functional(const CameronMartinPath& x, const std::vector<Eigen::MatrixXd>& a_path) {
  const int n = x.grid.steps();
  if (static_cast<int>(a_path.size()) < n)
    fail(ErrorCategory::Domain, "gamma_functional: matrix path shorter than the grid");
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXd& a = a_path[j];
    if (a.rows() != x.dim() || a.cols() != x.dim())
      fail(ErrorCategory::Domain, "gamma_functional: matrix is " + std::to_string(a.rows()) + "x" +
                                      std::to_string(a.cols()) + ", path dimension " +
                                      std::to_string(x.dim()));
    const Eigen::VectorXd v = x.derivative.row(j).transpose();
    acc += v.dot(a * v);
  }
  return 0.5 * acc * x.grid.dt();
}

double j_rate(const CameronMartinPath& x, const PathSample& phi, const ModelCoefficients& coeffs) {
  if (!(x.grid == phi.grid)) fail(ErrorCategory::Domain, "j_rate: grids differ");
  if (x.dim() != coeffs.d) fail(ErrorCategory::Domain, "j_rate: path dimension differs from d");
  const DiffusionMatrixPath dp = diffusion_path(coeffs, phi);
  CameronMartinPath shifted = x;
  for (int j = 0; j < x.grid.steps(); ++j)
    shifted.derivative.row(j) -= coeffs.mu_at(phi.at(j)).transpose();
  return gamma_functional(shifted, dp.a_inv_values);
}

PathSample hat_map(const CameronMartinPath& f, const VolterraDiscretization& disc) {
  if (!(f.grid == disc.grid())) fail(ErrorCategory::Domain, "hat_map: grids differ");
  return PathSample(f.grid, disc.hat(f.derivative));
}

PathSample hat_map(const CameronMartinPath& f, const KernelBank& bank) {
  if (f.dim() != bank.size()) fail(ErrorCategory::Domain, "hat_map: dimension differs from p");
  return hat_map(f, VolterraDiscretization(bank, f.grid));
}

namespace {

int block_size(int n, int m) {
  if (m < 1) fail(ErrorCategory::Domain, "m must be >= 1");
  if (n % m != 0)
    fail(ErrorCategory::Divisibility, "grid N = " + std::to_string(n) +
                                          " is not divisible by m = " + std::to_string(m));
  return n / m;
}

// Phi'^m_j = sigma_tilde(g(t_b(j))) f'_j, b(j) the left node of j's block.
Eigen::MatrixXd phi_m_rate(const CameronMartinPath& f, const PathSample& g, int m,
                           const ModelCoefficients& coeffs) {
  if (!(f.grid == g.grid)) fail(ErrorCategory::Domain, "phi_m: grids differ");
  if (f.dim() != coeffs.p || g.dim() != coeffs.p)
    fail(ErrorCategory::Domain, "phi_m: f and g must have dimension p");
  const int n = f.grid.steps();
  const int block = block_size(n, m);
  Eigen::MatrixXd rate(n, coeffs.d);
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXd st = coeffs.sigma_tilde.value(g.at((j / block) * block));
    rate.row(j) = (st * f.derivative.row(j).transpose()).transpose();
  }
  return rate;
}

PathSample integrate_rate(const TimeGrid& grid, const Eigen::MatrixXd& rate) {
  return CameronMartinPath(grid, rate).path();
}

Eigen::MatrixXd derivative_from(const Eigen::VectorXd& u, int n, int p, double dt) {
  Eigen::MatrixXd fdot(n, p);
  const double s = 1.0 / std::sqrt(dt);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < p; ++l) fdot(j, l) = u[j * p + l] * s;
  return fdot;
}

Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& a, int node) {
  const double det = a.determinant();
  if (!(std::abs(det) >= 1e-12))
    fail(ErrorCategory::Singular, "det a = " + format_real(det) + " at node " + std::to_string(node));
  return a.inverse();
}

// grad_u from the derivative-space gradient: direct part plus the hat-map
// adjoint of the node gradient G (row k is d/dy(t_k); y(t_0) = 0 is fixed).
void assemble_gradient(const Eigen::VectorXd& u, const Eigen::MatrixXd& direct,
                       const Eigen::MatrixXd& node_grad, const std::vector<Eigen::MatrixXd>& hat,
                       double dt, Eigen::VectorXd& grad) {
  const int n = static_cast<int>(direct.rows());
  const int p = static_cast<int>(direct.cols());
  grad.resize(n * p);
  const double s = 1.0 / std::sqrt(dt);
  Eigen::VectorXd gv(n);
  for (int l = 0; l < p; ++l) {
    gv.head(n - 1) = node_grad.col(l).segment(1, n - 1);
    gv[n - 1] = 0.0;
    const Eigen::VectorXd back = direct.col(l) + hat[l].transpose() * gv;
    for (int j = 0; j < n; ++j) grad[j * p + l] = u[j * p + l] + back[j] * s;
  }
}

}  // namespace

PathSample phi_m(const CameronMartinPath& f, const PathSample& g, int m,
                 const ModelCoefficients& coeffs) {
  return integrate_rate(f.grid, phi_m_rate(f, g, m, coeffs));
}

PathSample phi(const CameronMartinPath& f, const KernelBank& bank, const ModelCoefficients& coeffs) {
  const PathSample g = hat_map(f, bank);
  return phi_m(f, g, f.grid.steps(), coeffs);
}

double j_m_correlated(const CameronMartinPath& x, const CameronMartinPath& f, const PathSample& g,
                      int m, const KernelBank& bank, const ModelCoefficients& coeffs) {
  if (bank.size() != coeffs.p) fail(ErrorCategory::Domain, "kernel bank size differs from p");
  CameronMartinPath shifted = x;
  shifted.derivative -= phi_m_rate(f, g, m, coeffs);
  return j_rate(shifted, g, coeffs);
}

PathRateObjective::PathRateObjective(const CameronMartinPath& x, const KernelBank& bank,
                                     const ModelCoefficients& coeffs, PhiMode mode, int m)
    : x_(x), coeffs_(coeffs), disc_(bank, x.grid), mode_(mode), m_(m) {
  n_ = x.grid.steps();
  p_ = coeffs.p;
  d_ = coeffs.d;
  dt_ = x.grid.dt();
  if (x.dim() != d_) fail(ErrorCategory::Domain, "target path dimension differs from d");
  if (bank.size() != p_) fail(ErrorCategory::Domain, "kernel bank size differs from p");
  if (mode_ == PhiMode::Frozen) block_size(n_, m_);
  for (int l = 0; l < p_; ++l) hat_.push_back(disc_.hat_matrix(l));
  f0_ = value(Eigen::VectorXd::Zero(size()));
}

int PathRateObjective::sigma_node(int k) const {
  if (mode_ != PhiMode::Frozen) return k;
  const int block = n_ / m_;
  return (k / block) * block;
}

Eigen::MatrixXd PathRateObjective::derivative(const Eigen::VectorXd& u) const {
  return derivative_from(u, n_, p_, dt_);
}

Eigen::MatrixXd PathRateObjective::phi_rate(const Eigen::MatrixXd& fdot,
                                            const Eigen::MatrixXd& y) const {
  Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(n_, d_);
  if (mode_ == PhiMode::None) return rate;
  for (int k = 0; k < n_; ++k) {
    const Eigen::MatrixXd st = coeffs_.sigma_tilde.value(y.row(sigma_node(k)).transpose());
    rate.row(k) = (st * fdot.row(k).transpose()).transpose();
  }
  return rate;
}

double PathRateObjective::value(const Eigen::VectorXd& u) const {
  const Eigen::MatrixXd fdot = derivative(u);
  const Eigen::MatrixXd y = disc_.hat(fdot);
  const Eigen::MatrixXd phid = phi_rate(fdot, y);
  double j = 0.0;
  for (int k = 0; k < n_; ++k) {
    const Eigen::VectorXd yk = y.row(k).transpose();
    const Eigen::VectorXd r = x_.derivative.row(k).transpose() - coeffs_.mu_at(yk) -
                              phid.row(k).transpose();
    j += r.dot(checked_inverse(coeffs_.a_at(yk), k) * r);
  }
  return 0.5 * u.squaredNorm() + 0.5 * j * dt_;
}

double PathRateObjective::operator()(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const {
  const Eigen::MatrixXd fdot = derivative(u);
  const Eigen::MatrixXd y = disc_.hat(fdot);
  Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(n_, p_);
  Eigen::MatrixXd node_grad = Eigen::MatrixXd::Zero(n_, p_);
  const bool sigma_varies = !coeffs_.sigma.is_constant();
  const bool mu_varies = !coeffs_.mu.is_constant();
  const bool st_varies = mode_ != PhiMode::None && !coeffs_.sigma_tilde.is_constant();
  double j = 0.0;
  for (int k = 0; k < n_; ++k) {
    const Eigen::VectorXd yk = y.row(k).transpose();
    const Eigen::MatrixXd sig = coeffs_.sigma.value(yk);
    const Eigen::MatrixXd a_inv = checked_inverse(sig * sig.transpose(), k);
    const Eigen::VectorXd fk = fdot.row(k).transpose();
    Eigen::VectorXd r = x_.derivative.row(k).transpose() - coeffs_.mu_at(yk);
    Eigen::MatrixXd st;
    Eigen::VectorXd ys;
    if (mode_ != PhiMode::None) {
      ys = y.row(sigma_node(k)).transpose();
      st = coeffs_.sigma_tilde.value(ys);
      r -= st * fk;
    }
    const Eigen::VectorXd w = a_inv * r;
    j += r.dot(w);
    if (mode_ != PhiMode::None) direct.row(k) -= (st.transpose() * w).transpose() * dt_;
    const Eigen::VectorXd sw = sig.transpose() * w;
    for (int l = 0; l < p_; ++l) {
      double gk = 0.0;
      if (sigma_varies) gk -= (coeffs_.sigma.partial(yk, l).transpose() * w).dot(sw);
      if (mu_varies) gk -= coeffs_.mu.partial(yk, l).col(0).dot(w);
      node_grad(k, l) += gk * dt_;
      if (st_varies)
        node_grad(sigma_node(k), l) -= (coeffs_.sigma_tilde.partial(ys, l) * fk).dot(w) * dt_;
    }
  }
  assemble_gradient(u, direct, node_grad, hat_, dt_, grad);
  return 0.5 * u.squaredNorm() + 0.5 * j * dt_;
}

RateSolution PathRateObjective::solution(const Eigen::VectorXd& u) const {
  const Eigen::MatrixXd fdot = derivative(u);
  const Eigen::MatrixXd y = disc_.hat(fdot);
  const Eigen::MatrixXd phid = phi_rate(fdot, y);
  Eigen::MatrixXd drift(n_, d_);
  for (int k = 0; k < n_; ++k) {
    const Eigen::VectorXd yk = y.row(k).transpose();
    const Eigen::VectorXd r = x_.derivative.row(k).transpose() - coeffs_.mu_at(yk) -
                              phid.row(k).transpose();
    drift.row(k) = coeffs_.sigma.value(yk).partialPivLu().solve(r).transpose();
  }
  return RateSolution{value(u),
                      CameronMartinPath(x_.grid, fdot),
                      PathSample(x_.grid, y),
                      integrate_rate(x_.grid, phid),
                      drift,
                      0,
                      0.0,
                      false,
                      f0_,
                      0.0,
                      false,
                      {}};
}

TerminalRateObjective::TerminalRateObjective(const Eigen::VectorXd& z, const KernelBank& bank,
                                             const ModelCoefficients& coeffs, const TimeGrid& grid)
    : z_(z), coeffs_(coeffs), disc_(bank, grid) {
  n_ = grid.steps();
  p_ = coeffs.p;
  d_ = coeffs.d;
  dt_ = grid.dt();
  if (z.size() != d_) fail(ErrorCategory::Domain, "terminal point dimension differs from d");
  if (bank.size() != p_) fail(ErrorCategory::Domain, "kernel bank size differs from p");
  for (int l = 0; l < p_; ++l) hat_.push_back(disc_.hat_matrix(l));
  f0_ = value(Eigen::VectorXd::Zero(size()));
}

Eigen::MatrixXd TerminalRateObjective::derivative(const Eigen::VectorXd& u) const {
  return derivative_from(u, n_, p_, dt_);
}

TerminalRateObjective::Pieces TerminalRateObjective::evaluate(const Eigen::VectorXd& u) const {
  Pieces pc;
  pc.fdot = derivative(u);
  pc.y = disc_.hat(pc.fdot);
  pc.a_total = Eigen::MatrixXd::Zero(d_, d_);
  Eigen::VectorXd drift_total = Eigen::VectorXd::Zero(d_);
  Eigen::VectorXd phi_t = Eigen::VectorXd::Zero(d_);
  for (int k = 0; k < n_; ++k) {
    const Eigen::VectorXd yk = pc.y.row(k).transpose();
    pc.a_total += coeffs_.a_at(yk) * dt_;
    drift_total += coeffs_.mu_at(yk) * dt_;
    phi_t += coeffs_.sigma_tilde.value(yk) * pc.fdot.row(k).transpose() * dt_;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pc.a_total, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin >= 1e-12))
    fail(ErrorCategory::Singular, "integrated diffusion matrix has lambda_min = " + format_real(lmin));
  pc.q = z_ - phi_t - drift_total;
  pc.lambda = pc.a_total.ldlt().solve(pc.q);
  return pc;
}

double TerminalRateObjective::value(const Eigen::VectorXd& u) const {
  const Pieces pc = evaluate(u);
  return 0.5 * u.squaredNorm() + 0.5 * pc.q.dot(pc.lambda);
}

double TerminalRateObjective::operator()(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const {
  const Pieces pc = evaluate(u);
  const Eigen::VectorXd& lam = pc.lambda;
  Eigen::MatrixXd direct(n_, p_);
  Eigen::MatrixXd node_grad = Eigen::MatrixXd::Zero(n_, p_);
  const bool sigma_varies = !coeffs_.sigma.is_constant();
  const bool mu_varies = !coeffs_.mu.is_constant();
  const bool st_varies = !coeffs_.sigma_tilde.is_constant();
  for (int k = 0; k < n_; ++k) {
    const Eigen::VectorXd yk = pc.y.row(k).transpose();
    const Eigen::VectorXd fk = pc.fdot.row(k).transpose();
    direct.row(k) = -(coeffs_.sigma_tilde.value(yk).transpose() * lam).transpose() * dt_;
    if (!(sigma_varies || mu_varies || st_varies)) continue;
    const Eigen::VectorXd sl = coeffs_.sigma.value(yk).transpose() * lam;
    for (int l = 0; l < p_; ++l) {
      double gk = 0.0;
      if (st_varies) gk -= lam.dot(coeffs_.sigma_tilde.partial(yk, l) * fk);
      if (mu_varies) gk -= lam.dot(coeffs_.mu.partial(yk, l).col(0));
      if (sigma_varies) gk -= (coeffs_.sigma.partial(yk, l).transpose() * lam).dot(sl);
      node_grad(k, l) = gk * dt_;
    }
  }
  assemble_gradient(u, direct, node_grad, hat_, dt_, grad);
  return 0.5 * u.squaredNorm() + 0.5 * pc.q.dot(lam);
}

RateSolution TerminalRateObjective::solution(const Eigen::VectorXd& u) const {
  const Pieces pc = evaluate(u);
  Eigen::MatrixXd drift(n_, d_), phid(n_, d_);
  for (int k = 0; k < n_; ++k) {
    const Eigen::VectorXd yk = pc.y.row(k).transpose();
    drift.row(k) = (coeffs_.sigma.value(yk).transpose() * pc.lambda).transpose();
    phid.row(k) = (coeffs_.sigma_tilde.value(yk) * pc.fdot.row(k).transpose()).transpose();
  }
  const TimeGrid& grid = disc_.grid();
  return RateSolution{0.5 * u.squaredNorm() + 0.5 * pc.q.dot(pc.lambda),
                      CameronMartinPath(grid, pc.fdot),
                      PathSample(grid, pc.y),
                      integrate_rate(grid, phid),
                      drift,
                      0,
                      0.0,
                      false,
                      f0_,
                      0.0,
                      false,
                      {}};
}

template <typename Objective>
RateSolution minimize_rate(const Objective& obj, const OptimizerConfig& opt) {
  const LbfgsConfig cfg{opt.tol, opt.max_iter, opt.memory};
  const ValueGrad fg = [&obj](const Eigen::VectorXd& u, Eigen::VectorXd& g) { return obj(u, g); };
  const double radius = obj.radius_sq();
  PathRng rng(opt.seed, 0);
  std::vector<double> values;
  LbfgsResult best;
  bool have = false;
  for (int s = 0; s < std::max(1, opt.starts); ++s) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(obj.size());
    if (s > 0)
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = opt.start_scale * rng.normal();
    LbfgsResult r = minimize_lbfgs(fg, x0, cfg, radius);
    values.push_back(r.value);
    if (!have || r.value < best.value) {
      best = std::move(r);
      have = true;
    }
  }
  RateSolution sol = obj.solution(best.x);
  sol.value = best.value;
  sol.iterations = best.iterations;
  sol.grad_norm = best.grad_norm;
  sol.converged = best.converged;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  sol.spread = (*hi - *lo) / std::max(std::abs(*lo), 1e-9);
  sol.spread_flag = sol.spread > opt.spread_threshold;
  sol.start_values = std::move(values);
  return sol;
}

template RateSolution minimize_rate(const PathRateObjective&, const OptimizerConfig&);
template RateSolution minimize_rate(const TerminalRateObjective&, const OptimizerConfig&);

RateSolution i_uncorrelated(const CameronMartinPath& x, const KernelBank& bank,
                            const ModelCoefficients& coeffs, const OptimizerConfig& opt) {
  return minimize_rate(PathRateObjective(x, bank, coeffs, PhiMode::None), opt);
}

RateSolution i_z_m(const CameronMartinPath& x, int m, const KernelBank& bank,
                   const ModelCoefficients& coeffs, const OptimizerConfig& opt) {
  return minimize_rate(PathRateObjective(x, bank, coeffs, PhiMode::Frozen, m), opt);
}

RateSolution i_z(const CameronMartinPath& x, const KernelBank& bank,
                 const ModelCoefficients& coeffs, const OptimizerConfig& opt) {
  return minimize_rate(PathRateObjective(x, bank, coeffs, PhiMode::Exact), opt);
}

RateSolution terminal_rate(const Eigen::VectorXd& z, const KernelBank& bank,
                           const ModelCoefficients& coeffs, const TimeGrid& grid,
                           const OptimizerConfig& opt) {
  return minimize_rate(TerminalRateObjective(z, bank, coeffs, grid), opt);
}

}  // namespace vldp
