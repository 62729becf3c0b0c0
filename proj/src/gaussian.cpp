#include "vldp/gaussian.hpp"

#include <cmath>
#include <string>

#include "quadrature.hpp"
#include "vldp/error.hpp"
#include "vldp/util.hpp"

namespace vldp {

namespace {

bool stationary(const VolterraKernel& k) {
  return k.family() == KernelFamily::RiemannLiouville || k.family() == KernelFamily::LogFbm;
}

// (1/dt) int_{t_j}^{t_{j+1}} K(t, u) du with the 6-node rule, normalized so a
// constant kernel is reproduced exactly.
double cell_average(const VolterraKernel& k, double t, double a, double b) {
  const auto& rule = detail::gauss_legendre<6>();
  double num = 0.0, den = 0.0;
  for (int q = 0; q < 6; ++q) {
    num += rule.w[q] * k(t, a + (b - a) * rule.x[q]);
    den += rule.w[q];
  }
  return num / den;
}

}  // namespace

VolterraDiscretization::VolterraDiscretization(const KernelBank& bank, const TimeGrid& grid)
    : grid_(grid) {
  if (grid.horizon() > bank.horizon() * (1.0 + 1e-12))
    fail(ErrorCategory::Domain, "grid horizon " + format_real(grid.horizon()) +
                                    " exceeds kernel horizon " + format_real(bank.horizon()));
  const int n = grid.steps();
  const double dt = grid.dt();
  for (int l = 0; l < bank.size(); ++l) {
    const VolterraKernel& k = bank[l];
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    if (stationary(k)) {
      Eigen::VectorXd by_lag = Eigen::VectorXd::Zero(n);
      for (int lag = 1; lag < n; ++lag)
        by_lag[lag] = cell_average(k, grid.node(lag + 1), 0.0, grid.node(1));
      for (int i = 2; i <= n; ++i)
        for (int j = 0; j < i - 1; ++j) w(i - 1, j) = by_lag[i - 1 - j];
    } else {
      for (int i = 2; i <= n; ++i)
        for (int j = 0; j < i - 1; ++j)
          w(i - 1, j) = cell_average(k, grid.node(i), grid.node(j), grid.node(j + 1));
    }
    if (!w.allFinite())
      fail(ErrorCategory::Quadrature, "non-finite convolution weight for kernel " + k.name());
    weights_.push_back(std::move(w));
    mean_.push_back(k.singular_mean(dt));
    energy_.push_back(k.singular_energy(dt));
  }
}

Eigen::MatrixXd VolterraDiscretization::hat_matrix(int l) const {
  Eigen::MatrixXd h = weights_.at(l) * grid_.dt();
  h.diagonal().setConstant(mean_.at(l));
  return h;
}

Eigen::MatrixXd VolterraDiscretization::convolve(const Eigen::MatrixXd& increments,
                                                 const Eigen::MatrixXd& singular) const {
  const int n = grid_.steps();
  const int p = factors();
  if (increments.rows() != n || increments.cols() != p || singular.rows() != n ||
      singular.cols() != p)
    fail(ErrorCategory::Domain, "convolve: increments must be N x p");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + 1, p);
  for (int l = 0; l < p; ++l) {
    const Eigen::MatrixXd& w = weights_[l];
    for (int i = 1; i <= n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < i - 1; ++j) acc += w(i - 1, j) * increments(j, l);
      out(i, l) = acc + singular(i - 1, l);
    }
  }
  return out;
}

Eigen::MatrixXd VolterraDiscretization::hat(const Eigen::MatrixXd& derivative) const {
  const int n = grid_.steps();
  const int p = factors();
  if (derivative.rows() != n || derivative.cols() != p)
    fail(ErrorCategory::Domain, "hat: derivative must be N x p");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + 1, p);
  for (int l = 0; l < p; ++l) out.col(l).tail(n) = hat_matrix(l) * derivative.col(l);
  return out;
}

SingularCellLaw::SingularCellLaw(double dt_, double mean, double energy)
    : dt(dt_), cov(mean / dt_) {
  const double resid = energy - mean * mean / dt_;
  resid_sd = resid > 1e-14 * energy ? std::sqrt(resid) : 0.0;
}

std::vector<JointSample> sample_joint_paths(const KernelBank& bank, const TimeGrid& grid,
                                            long n_paths, std::uint64_t seed, int threads) {
  if (n_paths < 1) fail(ErrorCategory::Domain, "sample_joint_paths needs n_paths >= 1");
  const VolterraDiscretization disc(bank, grid);
  const int n = grid.steps();
  const int p = bank.size();
  const double sd = std::sqrt(grid.dt());
  std::vector<SingularCellLaw> law;
  for (int l = 0; l < p; ++l)
    law.emplace_back(grid.dt(), disc.singular_mean(l), disc.singular_energy(l));

  std::vector<JointSample> out(n_paths, JointSample{PathSample(grid, p), PathSample(grid, p),
                                                    Eigen::MatrixXd(), Eigen::MatrixXd()});
  parallel_for(n_paths, threads, [&](long begin, long end, int) {
    for (long k = begin; k < end; ++k) {
      PathRng rng(seed, static_cast<std::uint64_t>(k));
      Eigen::MatrixXd inc(n, p), sing(n, p);
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < p; ++l) inc(j, l) = sd * rng.normal();
        for (int l = 0; l < p; ++l)
          sing(j, l) = law[l].cov * inc(j, l) + law[l].resid_sd * rng.normal();
      }
      JointSample& s = out[k];
      for (int j = 0; j < n; ++j) s.brownian.values.row(j + 1) = s.brownian.values.row(j) + inc.row(j);
      s.volterra.values = disc.convolve(inc, sing);
      s.increments = std::move(inc);
      s.singular_increments = std::move(sing);
    }
  });
  return out;
}

Eigen::MatrixXd covariance_block(const VolterraKernel& k, const TimeGrid& grid, int n_quad) {
  if (n_quad < 1) fail(ErrorCategory::Domain, "covariance needs n_quad >= 1");
  if (grid.horizon() > k.horizon() * (1.0 + 1e-12))
    fail(ErrorCategory::Domain, "grid horizon exceeds kernel horizon");
  const int n = grid.steps();
  const double h = grid.dt() / n_quad;
  const double i1 = k.singular_mean(h);
  const double i2 = k.singular_energy(h);
  // mid(i-1, c) = K(t_i, (c + 1/2) h) for every sub-cell left of t_i.
  const int cells = n * n_quad;
  Eigen::MatrixXd mid = Eigen::MatrixXd::Zero(n, cells);
  for (int i = 1; i <= n; ++i) {
    const double t = grid.node(i);
    for (int c = 0; c < i * n_quad; ++c) mid(i - 1, c) = k(t, (c + 0.5) * h);
  }
  Eigen::MatrixXd cov(n, n);
  for (int i = 1; i <= n; ++i) {
    const int last = i * n_quad - 1;
    for (int m = i; m <= n; ++m) {
      double acc = mid.row(i - 1).head(last).dot(mid.row(m - 1).head(last)) * h;
      acc += m == i ? i2 : mid(m - 1, last) * i1;
      cov(i - 1, m - 1) = acc;
      cov(m - 1, i - 1) = acc;
    }
  }
  if (!cov.allFinite())
    fail(ErrorCategory::Quadrature, "non-finite covariance entry for kernel " + k.name());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double floor = -1e-10 * cov.trace();
  if (es.eigenvalues().minCoeff() < floor)
    fail(ErrorCategory::Quadrature, "covariance of kernel " + k.name() +
                                        " is not positive semidefinite, min eigenvalue " +
                                        format_real(es.eigenvalues().minCoeff()));
  return cov;
}

Eigen::MatrixXd covariance_matrix(const KernelBank& bank, const TimeGrid& grid, int n_quad) {
  const int n = grid.steps();
  const int p = bank.size();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p * n, p * n);
  for (int l = 0; l < p; ++l) cov.block(l * n, l * n, n, n) = covariance_block(bank[l], grid, n_quad);
  return cov;
}

std::vector<PathSample> sample_cholesky(const KernelBank& bank, const TimeGrid& grid, int n_quad,
                                        long n_paths, std::uint64_t seed) {
  if (n_paths < 1) fail(ErrorCategory::Domain, "sample_cholesky needs n_paths >= 1");
  const int n = grid.steps();
  const int p = bank.size();
  std::vector<Eigen::MatrixXd> roots;
  for (int l = 0; l < p; ++l) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance_block(bank[l], grid, n_quad));
    const Eigen::VectorXd sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    roots.push_back(es.eigenvectors() * sq.asDiagonal());
  }
  std::vector<PathSample> out;
  out.reserve(n_paths);
  Eigen::VectorXd z(n);
  for (long k = 0; k < n_paths; ++k) {
    PathRng rng(seed, static_cast<std::uint64_t>(k));
    PathSample s(grid, p);
    for (int l = 0; l < p; ++l) {
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      s.values.col(l).tail(n) = roots[l] * z;
    }
    out.push_back(std::move(s));
  }
  return out;
}

Eigen::MatrixXd empirical_covariance(const std::vector<PathSample>& paths, int factor) {
  if (paths.size() < 2)
    fail(ErrorCategory::InsufficientData, "empirical covariance needs at least 2 paths");
  const TimeGrid& grid = paths.front().grid;
  const int n = grid.steps();
  for (const auto& s : paths)
    if (!(s.grid == grid) || factor >= s.dim())
      fail(ErrorCategory::Domain, "empirical covariance: mismatched grids or dimensions");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(paths.size()), n);
  for (std::size_t k = 0; k < paths.size(); ++k)
    x.row(static_cast<Eigen::Index>(k)) = paths[k].values.col(factor).tail(n).transpose();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  return (x.transpose() * x) / static_cast<double>(paths.size() - 1);
}

Eigen::MatrixXd empirical_covariance(const std::vector<JointSample>& samples, Component component,
                                     int factor) {
  std::vector<PathSample> paths;
  paths.reserve(samples.size());
  for (const auto& s : samples)
    paths.push_back(component == Component::Brownian ? s.brownian : s.volterra);
  return empirical_covariance(paths, factor);
}

}  // namespace vldp
