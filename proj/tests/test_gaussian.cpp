#include <cmath>

#include <gtest/gtest.h>

#include "vldp/error.hpp"
#include "vldp/gaussian.hpp"

using namespace vldp;

TEST(Gaussian, BrownianCovariance) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5, 1.5)});
  const Eigen::MatrixXd c = covariance_matrix(bank, g, 16);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      EXPECT_NEAR(c(i, j), 2.25 * std::min(g.node(i + 1), g.node(j + 1)), 1e-12);
}

TEST(Gaussian, DiagonalMatchesL2Slice) {
  const TimeGrid g(1.0, 8);
  for (const auto& k : {VolterraKernel::riemann_liouville(0.3), VolterraKernel::riemann_liouville(0.75)}) {
    const Eigen::MatrixXd c = covariance_block(k, g, 32);
    for (int i = 1; i <= 8; ++i)
      EXPECT_NEAR(c(i - 1, i - 1), kernel_l2_slice(k, g.node(i), 32 * i), 1e-12) << i;
  }
}

TEST(Gaussian, OffBlocksZero) {
  const TimeGrid g(1.0, 6);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3), VolterraKernel::riemann_liouville(0.75)});
  const Eigen::MatrixXd c = covariance_matrix(bank, g, 16);
  ASSERT_EQ(c.rows(), 12);
  EXPECT_EQ(c.block(0, 6, 6, 6).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(c.block(6, 0, 6, 6).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(c.isApprox(c.transpose(), 0.0));
}

TEST(Gaussian, FlatKernelReproducesBrownian) {
  const TimeGrid g(1.0, 32);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  for (const auto& s : sample_joint_paths(bank, g, 20, 3)) {
    EXPECT_EQ(s.volterra.values, s.brownian.values);
  }
}

TEST(Gaussian, ConvolutionReplay) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3), VolterraKernel::molchan_golosov(0.7)});
  const VolterraDiscretization disc(bank, g);
  for (const auto& s : sample_joint_paths(bank, g, 5, 9)) {
    EXPECT_EQ(disc.convolve(s.increments, s.singular_increments), s.volterra.values);
    Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(17, 2);
    for (int i = 1; i <= 16; ++i) cum.row(i) = cum.row(i - 1) + s.increments.row(i - 1);
    EXPECT_EQ(cum, s.brownian.values);
  }
}

TEST(Gaussian, Determinism) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const auto a = sample_joint_paths(bank, g, 50, 42, 1);
  const auto b = sample_joint_paths(bank, g, 50, 42, 3);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].volterra.values, b[k].volterra.values);
}

TEST(Gaussian, TerminalVarianceWithinThreeStderr) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const long n = 100000;
  const auto s = sample_joint_paths(bank, g, n, 17);
  double m2 = 0.0, m4 = 0.0;
  for (const auto& p : s) {
    const double v = p.volterra.values(16, 0);
    m2 += v * v;
    m4 += v * v * v * v;
  }
  m2 /= n;
  m4 /= n;
  const double se = std::sqrt((m4 - m2 * m2) / n);
  const double target = covariance_block(bank[0], g, 64)(15, 15);
  EXPECT_LT(std::abs(m2 - target), 3 * se);
}

TEST(Gaussian, MomentsLookGaussian) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.75)});
  const long n = 20000;
  const auto s = sample_joint_paths(bank, g, n, 5);
  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  for (const auto& p : s) m1 += p.volterra.values(16, 0);
  m1 /= n;
  for (const auto& p : s) {
    const double x = p.volterra.values(16, 0) - m1;
    m2 += x * x;
    m3 += x * x * x;
    m4 += x * x * x * x;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  EXPECT_LT(std::abs(m3 / std::pow(m2, 1.5)), 0.05);
  EXPECT_LT(std::abs(m4 / (m2 * m2) - 3.0), 0.1);
}

TEST(Gaussian, EmpiricalCovariance) {
  const TimeGrid g(1.0, 4);
  PathSample p(g, 1);
  p.values << 0, 1, 2, 3, 4;
  EXPECT_EQ(empirical_covariance(std::vector<PathSample>{p, p}).cwiseAbs().maxCoeff(), 0.0);
  try {
    empirical_covariance(std::vector<PathSample>{p});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::InsufficientData);
  }
  PathSample q(TimeGrid(1.0, 5), 1);
  EXPECT_THROW(empirical_covariance(std::vector<PathSample>{p, q}), Error);
}

TEST(Gaussian, CholeskyMatchesQuadrature) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const auto paths = sample_cholesky(bank, g, 32, 20000, 4);
  const Eigen::MatrixXd emp = empirical_covariance(paths);
  const Eigen::MatrixXd c = covariance_matrix(bank, g, 32);
  // Var of a sample covariance entry is (c_ii c_jj + c_ij^2)/n for Gaussians
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      EXPECT_LT(std::abs(emp(i, j) - c(i, j)), 4.5 * std::sqrt((c(i, i) * c(j, j) + c(i, j) * c(i, j)) / 20000));
}

TEST(Gaussian, HolderExponentProxy) {
  // median max-increment over paths scales like dt^H for RL
  const double hurst = 0.75;
  const KernelBank bank({VolterraKernel::riemann_liouville(hurst)});
  std::vector<double> lx, ly;
  for (int n : {32, 64, 128, 256}) {
    const TimeGrid g(1.0, n);
    const auto s = sample_joint_paths(bank, g, 400, 77);
    std::vector<double> mx;
    for (const auto& p : s) {
      double m = 0.0;
      for (int i = 0; i < n; ++i) m = std::max(m, std::abs(p.volterra.values(i + 1, 0) - p.volterra.values(i, 0)));
      mx.push_back(m);
    }
    std::nth_element(mx.begin(), mx.begin() + mx.size() / 2, mx.end());
    lx.push_back(std::log(g.dt()));
    ly.push_back(std::log(mx[mx.size() / 2]));
  }
  const double xb = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, yb = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (lx[i] - xb) * (ly[i] - yb);
    sxx += (lx[i] - xb) * (lx[i] - xb);
  }
  EXPECT_NEAR(sxy / sxx, hurst, 0.15);
}
