#include <cmath>

#include <gtest/gtest.h>

#include "vldp/asymptotics.hpp"
#include "vldp/error.hpp"
#include "vldp/util.hpp"

using namespace vldp;

namespace {

Eigen::MatrixXd m1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

ModelCoefficients schilder() { return ModelCoefficients::constant(Eigen::VectorXd::Zero(1), m1(1.0), m1(0.0)); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(Asymptotics, SureEvent) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  const auto e = estimate_tail_prob(schilder(), bank, g, 0.3, TailEvent::half_space(Eigen::VectorXd::Ones(1), -1e9),
                                    2000, 1);
  EXPECT_EQ(e.p_hat, 1.0);
  EXPECT_TRUE(e.degenerate);
}

TEST(Asymptotics, MedianOfDriftedGaussian) {
  // Z(T) ~ N(-eps^2 T / 2, eps^2 T): P(Z(T) >= 0) = Phi(-eps sqrt(T) / 2)
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  const double eps = 0.2;
  const auto e = estimate_tail_prob(schilder(), bank, g, eps, TailEvent::half_space(Eigen::VectorXd::Ones(1), 0.0),
                                    100000, 4);
  EXPECT_LT(std::abs(e.p_hat - normal_cdf(-0.5 * eps)), 3 * e.std_error);
  const auto again = estimate_tail_prob(schilder(), bank, g, eps,
                                        TailEvent::half_space(Eigen::VectorXd::Ones(1), 0.0), 100000, 4, 3);
  EXPECT_EQ(e.p_hat, again.p_hat);
  EXPECT_EQ(e.hits, again.hits);
}

TEST(Asymptotics, TooFewPaths) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  try {
    estimate_tail_prob(schilder(), bank, g, 0.3, TailEvent::half_space(Eigen::VectorXd::Ones(1), 1.0), 999, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::InsufficientData);
  }
}

TEST(Asymptotics, SlopeSynthetic) {
  const double c = 0.7;
  const std::vector<double> eps{0.4, 0.3, 0.25, 0.2};
  std::vector<TailEstimate> exact, noisy;
  PathRng rng(3, 0);
  for (double e : eps) {
    TailEstimate t;
    t.p_hat = std::exp(-c / (e * e));
    t.std_error = 0.01 * t.p_hat;
    t.n = 1000000;
    exact.push_back(t);
    t.p_hat *= 1.0 + 0.01 * rng.normal();
    noisy.push_back(t);
  }
  const auto s = ldp_slope(eps, exact);
  EXPECT_NEAR(s.slope, c, 1e-10);
  EXPECT_NEAR(s.r_squared, 1.0, 1e-10);
  EXPECT_NEAR(ldp_slope(eps, noisy).slope, c, 0.05 * c);
  try {
    ldp_slope({0.4, 0.3}, {exact[0], exact[1]});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::InsufficientData);
  }
}

TEST(Asymptotics, ZeroControlMatchesCrude) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const auto c = ModelCoefficients::rho_template(CoefficientMap::exp_linear(m1(0.5), Eigen::VectorXd::Ones(1)), -0.5);
  const auto ev = TailEvent::half_space(Eigen::VectorXd::Ones(1), 0.3);
  const auto a = estimate_tail_prob(c, bank, g, 0.5, ev, 5000, 6);
  const auto b = tilted_estimate(c, bank, g, 0.5, ev, zero_control(g, 1, 1), 5000, 6);
  EXPECT_EQ(a.p_hat, b.p_hat);
  EXPECT_EQ(a.hits, b.hits);
}

TEST(Asymptotics, TiltingReducesVariance) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  const auto ev = TailEvent::half_space(Eigen::VectorXd::Ones(1), 1.0);
  const RateSolution control = terminal_rate(Eigen::VectorXd::Ones(1), bank, schilder(), g);
  const auto t = tilted_estimate(schilder(), bank, g, 0.2, ev, control, 100000, 8);
  EXPECT_LT(t.std_error / t.crude_equivalent_stderr, 0.3);
  const auto t2 = tilted_estimate(schilder(), bank, g, 0.2, ev, control, 100000, 8);
  EXPECT_EQ(t.p_hat, t2.p_hat);

  // where crude sees enough hits both estimators agree
  const auto tc = tilted_estimate(schilder(), bank, g, 0.4, ev, control, 100000, 9);
  const auto cc = estimate_tail_prob(schilder(), bank, g, 0.4, ev, 100000, 10);
  ASSERT_GE(cc.hits, 50);
  EXPECT_LT(std::abs(tc.p_hat - cc.p_hat), 3 * std::hypot(tc.std_error, cc.std_error));
}

TEST(Asymptotics, UnconvergedControlRejected) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  RateSolution bad = zero_control(g, 1, 1);
  bad.converged = false;
  try {
    tilted_estimate(schilder(), bank, g, 0.3, TailEvent::half_space(Eigen::VectorXd::Ones(1), 1.0), bad, 2000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Validation);
  }
}

TEST(Asymptotics, ShortTimeConstantVolVariance) {
  const double sigma = 0.8, T = 0.5;
  const TimeGrid g(T, 8);
  const KernelBank bank({VolterraKernel::log_fbm(0.4, 2.0, 1.0, T)});
  const auto c = ModelCoefficients::constant(Eigen::VectorXd::Zero(1), m1(sigma), m1(0.0));
  const auto sched = ScalingSchedule::make({0.1, 0.01}, 0.4, SpeedRule::LogFbm, 4.0);
  const long n = 100000;
  const auto s = short_time_sample(c, bank, g, 1, sched, n, 2);
  double m = 0.0, v = 0.0;
  for (const auto& p : s) m += p.terminal()(0);
  m /= n;
  for (const auto& p : s) v += std::pow(p.terminal()(0) - m, 2);
  v /= n - 1;
  const double var = std::pow(sched.epsilon[1] * sigma, 2) * T;
  EXPECT_LT(std::abs(v - var), 3 * var * std::sqrt(2.0 / (n - 1)));
}

TEST(Asymptotics, ShortTimeRequiresZeroDrift) {
  const TimeGrid g(0.5, 8);
  const KernelBank bank({VolterraKernel::log_fbm(0.4, 2.0, 1.0, 0.5)});
  const auto c = ModelCoefficients::constant(Eigen::VectorXd::Constant(1, 0.1), m1(1.0), m1(0.0));
  const auto sched = ScalingSchedule::make({0.1}, 0.4, SpeedRule::LogFbm, 4.0);
  try {
    short_time_sample(c, bank, g, 0, sched, 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Validation);
  }
}

TEST(Asymptotics, KsSameLawRarelyRejects) {
  const int ne = 500;
  // 99th percentile of the Kolmogorov distribution is 1.628
  const double crit = 1.628 / std::sqrt(ne / 2.0);
  int below = 0;
  for (int r = 0; r < 100; ++r) {
    PathRng ra(100 + r, 0), rb(100 + r, 1);
    std::vector<double> a(ne), b(ne);
    for (auto& x : a) x = ra.normal();
    for (auto& x : b) x = rb.normal();
    if (ks_two_sample(a, b).statistic < crit) ++below;
  }
  EXPECT_GE(below, 95);
}

TEST(Asymptotics, KsDisjointLawsReject) {
  PathRng ra(1, 0), rb(1, 1);
  std::vector<double> a(2000), b(2000);
  for (auto& x : a) x = ra.normal();
  for (auto& x : b) x = 2.0 * rb.normal();
  EXPECT_LT(ks_two_sample(a, b).p_value, 1e-3);
}

TEST(Asymptotics, EquivalenceOfIdenticalSamples) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const auto a = simulate_uncorrelated(schilder(), bank, g, 0.5, 200, 3);
  const auto r = equivalence_diagnostic(a, a);
  for (double e : r.exceedance) EXPECT_EQ(e, 0.0);
  EXPECT_EQ(r.terminal_ks.statistic, 0.0);
}
