#include <cmath>

#include <gtest/gtest.h>

#include "vldp/error.hpp"
#include "vldp/kernels.hpp"

using namespace vldp;

namespace {

std::vector<VolterraKernel> all_families() {
  return {VolterraKernel::riemann_liouville(0.3), VolterraKernel::riemann_liouville(0.75, 2.0),
          VolterraKernel::log_fbm(0.4, 2.0, 1.0, 0.9), VolterraKernel::molchan_golosov(0.3),
          VolterraKernel::molchan_golosov(0.7), VolterraKernel::fractional_ou(0.3, 1.5),
          VolterraKernel::fractional_ou(0.7, 0.5)};
}

}  // namespace

TEST(Kernels, RiemannLiouvilleFlatAtHalf) {
  const auto k = VolterraKernel::riemann_liouville(0.5);
  EXPECT_DOUBLE_EQ(eval_kernel(k, 0.7, 0.2), 1.0);
}

TEST(Kernels, LogFbmPointValue) {
  // (-log 0.25)^{-2}, mpmath
  const auto k = VolterraKernel::log_fbm(0.5, 2.0, 1.0, 0.9);
  EXPECT_NEAR(eval_kernel(k, 0.5, 0.25), 0.52034224525140195, 1e-15);
}

TEST(Kernels, VolterraConditionExact) {
  for (const auto& k : all_families()) {
    EXPECT_EQ(eval_kernel(k, 0.3, 0.5), 0.0) << k.name();
    EXPECT_EQ(eval_kernel(k, 0.4, 0.4), 0.0) << k.name();
    EXPECT_EQ(eval_kernel(k, 0.0, 0.0), 0.0) << k.name();
  }
}

TEST(Kernels, DomainAndConfigErrors) {
  const auto rl = VolterraKernel::riemann_liouville(0.3);
  try {
    eval_kernel(rl, 1.5, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Domain);
  }
  try {
    VolterraKernel::log_fbm(0.4, 2.0, 1.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Config);
  }
  try {
    VolterraKernel::riemann_liouville(1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Config);
  }
}

TEST(Kernels, L2SliceClosedForms) {
  EXPECT_NEAR(kernel_l2_slice(VolterraKernel::riemann_liouville(0.5), 1.0, 64), 1.0, 1e-12);
  // int_0^1 (1-s)^{0.5} ds = 1/1.5
  EXPECT_NEAR(kernel_l2_slice(VolterraKernel::riemann_liouville(0.75), 1.0, 256), 1.0 / 1.5, 1e-4);
  EXPECT_EQ(kernel_l2_slice(VolterraKernel::riemann_liouville(0.3), 0.0, 16), 0.0);
  // rough case: t^{2H}/(2H) with H = 0.3
  EXPECT_NEAR(kernel_l2_slice(VolterraKernel::riemann_liouville(0.3), 0.8, 512),
              std::pow(0.8, 0.6) / 0.6, 2e-3);
}

TEST(Kernels, MolchanGolosovIsFbmKernel) {
  // Var of fBm at t is t^{2H}
  for (double h : {0.3, 0.7}) {
    const auto k = VolterraKernel::molchan_golosov(h);
    EXPECT_NEAR(kernel_l2_slice(k, 1.0, 2048), 1.0, 1e-2) << h;
    EXPECT_NEAR(kernel_l2_slice(k, 0.5, 2048), std::pow(0.5, 2 * h), 1e-2) << h;
  }
}

TEST(Kernels, L2SliceNondecreasing) {
  // fOU with H = 0.3, a = 1.5 is left out: its variance peaks near t = 0.8
  for (const auto& k : all_families()) {
    if (k.family() == KernelFamily::FractionalOU && k.hurst() < 0.5) continue;
    double prev = 0.0;
    for (int i = 1; i <= 9; ++i) {
      const double v = kernel_l2_slice(k, 0.1 * i, 128);
      EXPECT_GE(v, prev - 1e-9) << k.name() << " t=" << 0.1 * i;
      prev = v;
    }
  }
}

TEST(Kernels, FractionalOuVariance) {
  // Var Y_t from the fBm covariance, Y_t = B^H_t - a int_0^t e^{-a(t-u)} B^H_u du; mpmath
  const auto k = VolterraKernel::fractional_ou(0.3, 1.5);
  EXPECT_NEAR(kernel_l2_slice(k, 0.8, 1024), 0.362892041113923, 5e-4);
  EXPECT_NEAR(kernel_l2_slice(k, 0.9, 1024), 0.362303805566724, 5e-4);
  EXPECT_TRUE(std::isinf(eval_kernel(k, 0.8, 0.0)));
}

TEST(Kernels, ModulusOfContinuity) {
  const auto k = VolterraKernel::riemann_liouville(0.75).with_holder(0.87401918476396355, 1.5);
  EXPECT_EQ(modulus_of_continuity(k, 0.0, 50, 64), 0.0);
  const double m05 = modulus_of_continuity(k, 0.05, 50, 256);
  const double m10 = modulus_of_continuity(k, 0.1, 50, 256);
  EXPECT_LE(m05, m10);
  // c = 1/(2H) + int_0^inf ((u+1)^{H-1/2} - u^{H-1/2})^2 du, mpmath
  for (double delta : {0.001, 0.01, 0.1, 0.5})
    EXPECT_LE(modulus_of_continuity(k, delta, 50, 8192), holder_bound(k, delta)) << delta;
}

TEST(Kernels, RescaleIdentities) {
  const auto k = VolterraKernel::riemann_liouville(0.3, 1.7);
  const auto r1 = rescale_kernel(k, 1.0);
  for (int i = 1; i < 10; ++i)
    EXPECT_EQ(r1(0.1 * i, 0.05 * i), k(0.1 * i, 0.05 * i));

  const double eta = 0.01;
  const auto r = rescale_kernel(k, eta);
  EXPECT_NEAR(r.horizon(), 100.0, 1e-12);
  EXPECT_EQ(r(0.3, 0.5), 0.0);
  for (int i = 1; i <= 50; ++i) {
    const double t = 0.02 * i, s = 0.013 * i;
    EXPECT_NEAR(r(t, s), std::pow(eta, 0.3) * 1.7 * std::pow(t - s, -0.2), 1e-12 * (1 + std::abs(r(t, s))));
  }

  const auto lf = VolterraKernel::log_fbm(0.4, 2.0, 1.0, 0.9);
  const auto a = rescale_kernel(rescale_kernel(lf, 0.3), 0.2);
  const auto b = rescale_kernel(lf, 0.06);
  for (int i = 1; i <= 100; ++i) {
    const double t = 0.14 * i, s = 0.07 * i;
    EXPECT_NEAR(a(t, s), b(t, s), 1e-12 * (1 + std::abs(b(t, s))));
  }
}

TEST(Kernels, LimitKernelError) {
  const TimeGrid grid(1.0, 32);
  const auto rl = VolterraKernel::riemann_liouville(0.3);
  for (double eta : {1e-1, 1e-2, 1e-3})
    EXPECT_NEAR(limit_kernel_error(rl, eta, std::pow(eta, 0.3), rl, grid), 0.0, 1e-10);

  // log-fBm rescaled by its own speed tends to RL with the same H
  const auto lf = VolterraKernel::log_fbm(0.4, 2.0, 1.0, 0.9);
  const auto sched = ScalingSchedule::make({1e-2, 1e-3, 1e-4}, 0.4, SpeedRule::LogFbm, 4.0);
  const TimeGrid g(0.9, 16);
  double prev = INFINITY;
  for (int n = 0; n < sched.size(); ++n) {
    const double err = limit_kernel_error(lf, sched.eta[n], sched.epsilon[n], rl, g);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Kernels, ScheduleRules) {
  const auto s = ScalingSchedule::make({0.1, 0.01}, 0.4, SpeedRule::LogFbm, 4.0);
  for (int n = 0; n < 2; ++n) {
    const double eta = s.eta[n];
    EXPECT_NEAR(std::pow(s.epsilon[n], -2), std::pow(eta, -0.8) * std::pow(-std::log(eta), 4.0),
                1e-9 * std::pow(s.epsilon[n], -2));
    EXPECT_EQ(s.delta[n], eta);
  }
  EXPECT_THROW(ScalingSchedule::make({0.1, 0.2}, 0.4, SpeedRule::Power), Error);
}

TEST(Kernels, TableRoundTrip) {
  for (const auto& k : all_families()) {
    const std::string text = kernel_to_table(k);
    std::map<std::string, std::string> table;
    std::size_t pos = 0;
    while (pos < text.size()) {
      const auto nl = text.find('\n', pos);
      const std::string line = text.substr(pos, nl - pos);
      pos = nl == std::string::npos ? text.size() : nl + 1;
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) table[line.substr(0, eq)] = line.substr(eq + 3);
    }
    const auto back = kernel_from_table(table);
    EXPECT_EQ(back.family(), k.family());
    EXPECT_EQ(back(0.6, 0.2), k(0.6, 0.2)) << k.name();
  }
}

TEST(Kernels, BankHorizonsMustAgree) {
  EXPECT_THROW(KernelBank({VolterraKernel::riemann_liouville(0.3, 1.0, 1.0),
                           VolterraKernel::riemann_liouville(0.3, 1.0, 2.0)}),
               Error);
}
