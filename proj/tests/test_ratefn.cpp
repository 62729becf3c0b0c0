#include <cmath>

#include <gtest/gtest.h>

#include "vldp/error.hpp"
#include "vldp/ratefn.hpp"

using namespace vldp;

namespace {

Eigen::MatrixXd m1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

CameronMartinPath constant_speed(const TimeGrid& g, const Eigen::VectorXd& v) {
  CameronMartinPath f(g, static_cast<int>(v.size()));
  f.derivative.rowwise() = v.transpose();
  return f;
}

ModelCoefficients lipschitz_tilde_model() {
  // sigma = 1, sigma_tilde(y) = 0.5 + 0.25 y
  return ModelCoefficients(CoefficientMap::constant(m1(0.0), 1), CoefficientMap::constant(m1(1.0), 1),
                           CoefficientMap::affine(m1(0.5), {m1(0.25)}));
}

}  // namespace

TEST(Ratefn, GammaClosedForms) {
  const TimeGrid g(1.0, 10);
  const std::vector<Eigen::MatrixXd> ones(10, m1(1.0));
  EXPECT_EQ(gamma_functional(CameronMartinPath::zero(g, 1), ones), 0.0);
  EXPECT_NEAR(gamma_functional(constant_speed(g, Eigen::VectorXd::Ones(1)), ones), 0.5, 1e-15);
  EXPECT_THROW(gamma_functional(CameronMartinPath::zero(g, 2), ones), Error);
}

TEST(Ratefn, JRateClosedForms) {
  const TimeGrid g(1.0, 8);
  Eigen::MatrixXd s(2, 2);
  s << 2, 0, 0, 1;
  const auto c = ModelCoefficients::constant(Eigen::VectorXd::Zero(2), s, Eigen::MatrixXd::Zero(2, 1));
  // 1/2 (1/4 + 1)
  EXPECT_NEAR(j_rate(constant_speed(g, Eigen::VectorXd::Ones(2)), PathSample(g, 1), c), 0.625, 1e-14);

  Eigen::VectorXd mu(2);
  mu << 0.3, -0.2;
  const auto cm = ModelCoefficients::constant(mu, s, Eigen::MatrixXd::Zero(2, 1));
  EXPECT_NEAR(j_rate(constant_speed(g, mu), PathSample(g, 1), cm), 0.0, 1e-15);

  const TimeGrid g2(2.0, 8);
  const auto c1 = ModelCoefficients::constant(Eigen::VectorXd::Zero(1), m1(1.0), m1(0.0));
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 1.5);
  EXPECT_NEAR(j_rate(CameronMartinPath::straight_line(g2, z), PathSample(g2, 1), c1), 1.5 * 1.5 / 4.0, 1e-14);
}

TEST(Ratefn, HatMap) {
  const TimeGrid g(1.0, 64);
  const KernelBank flat({VolterraKernel::riemann_liouville(0.5)});
  CameronMartinPath f(g, 1);
  for (int j = 0; j < 64; ++j) f.derivative(j, 0) = std::cos(0.3 * j);
  EXPECT_EQ(hat_map(CameronMartinPath::zero(g, 1), flat).values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((hat_map(f, flat).values - f.path().values).cwiseAbs().maxCoeff(), 1e-13);

  const KernelBank rl({VolterraKernel::riemann_liouville(0.75)});
  const PathSample h = hat_map(constant_speed(g, Eigen::VectorXd::Ones(1)), rl);
  for (int i = 6; i <= 64; i += 6)
    EXPECT_NEAR(h.values(i, 0), std::pow(g.node(i), 1.25) / 1.25, 1e-4) << i;
}

TEST(Ratefn, PhiMConstantTelescopes) {
  const TimeGrid g(1.0, 12);
  Eigen::MatrixXd st(2, 1);
  st << 0.7, -1.1;
  const auto c = ModelCoefficients::constant(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), st);
  CameronMartinPath f(g, 1);
  for (int j = 0; j < 12; ++j) f.derivative(j, 0) = 1.0 + 0.1 * j;
  PathSample gp(g, 1);
  gp.values.setRandom();
  const PathSample fp = f.path();
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  for (int m : {1, 3, 12}) {
    const PathSample v = phi_m(f, gp, m, c);
    for (int i = 0; i <= 12; ++i)
      for (int r = 0; r < 2; ++r) EXPECT_NEAR(v.values(i, r), st(r, 0) * fp.values(i, 0), 1e-13);
  }
  const PathSample full = phi(f, bank, c);
  for (int i = 0; i <= 12; ++i) EXPECT_NEAR(full.values(i, 1), st(1, 0) * fp.values(i, 0), 1e-13);
  EXPECT_EQ(phi_m(CameronMartinPath::zero(g, 1), gp, 3, c).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Ratefn, PhiMHandCase) {
  // sigma_tilde(y) = y, g(t) = t, f(t) = t, m = 2: 0 (f(1/2) - f(0)) + 1/2 (f(1) - f(1/2))
  const TimeGrid g(1.0, 8);
  const ModelCoefficients c(CoefficientMap::constant(m1(0.0), 1), CoefficientMap::constant(m1(1.0), 1),
                            CoefficientMap::affine(m1(0.0), {m1(1.0)}));
  PathSample gp(g, 1);
  for (int i = 0; i <= 8; ++i) gp.values(i, 0) = g.node(i);
  const auto f = constant_speed(g, Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(phi_m(f, gp, 2, c).values(8, 0), 0.25, 1e-15);

  // J^m with x(t) = t, a = 1: 1/2 [(1 - 0)^2 / 2 + (1 - 1/2)^2 / 2]
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  EXPECT_NEAR(j_m_correlated(f, f, gp, 2, bank, c), 0.3125, 1e-15);
}

TEST(Ratefn, DivisibilityErrorNamesBoth) {
  const TimeGrid g(1.0, 100);
  const auto c = lipschitz_tilde_model();
  try {
    phi_m(CameronMartinPath::zero(g, 1), PathSample(g, 1), 16, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Divisibility);
    EXPECT_NE(std::string(e.what()).find("100"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
  }
}

TEST(Ratefn, JmReductions) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const auto c = lipschitz_tilde_model();
  CameronMartinPath f(g, 1);
  for (int j = 0; j < 8; ++j) f.derivative(j, 0) = std::sin(j + 0.5);
  PathSample gp = hat_map(f, bank);
  const CameronMartinPath x = CameronMartinPath::from_path(phi_m(f, gp, 4, c));
  EXPECT_NEAR(j_m_correlated(x, f, gp, 4, bank, c), 0.0, 1e-14);

  const ModelCoefficients c0(CoefficientMap::constant(m1(0.1), 1),
                             CoefficientMap::exp_linear(m1(1.0), Eigen::VectorXd::Ones(1)),
                             CoefficientMap::constant(m1(0.0), 1));
  EXPECT_NEAR(j_m_correlated(x, f, gp, 4, bank, c0), j_rate(x, gp, c0), 1e-14);
}

TEST(Ratefn, UncorrelatedDecouples) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const double s = 1.7;
  const auto c = ModelCoefficients::constant(Eigen::VectorXd::Zero(1), m1(s), m1(0.0));
  CameronMartinPath x(g, 1);
  for (int j = 0; j < 16; ++j) x.derivative(j, 0) = 1.0 + std::sin(0.4 * j);
  const RateSolution r = i_uncorrelated(x, bank, c);
  EXPECT_NEAR(r.value, x.derivative.squaredNorm() * g.dt() / (2 * s * s), 1e-6);
  EXPECT_LE(r.value, r.upper_bound_used + 1e-9);

  const ModelCoefficients ce(CoefficientMap::constant(m1(0.4), 1),
                             CoefficientMap::exp_linear(m1(1.0), Eigen::VectorXd::Ones(1)),
                             CoefficientMap::constant(m1(0.0), 1));
  const RateSolution z = i_uncorrelated(constant_speed(g, Eigen::VectorXd::Constant(1, 0.4)), bank, ce);
  EXPECT_NEAR(z.value, 0.0, 1e-12);
  EXPECT_LT(z.control.derivative.norm(), 1e-6);
}

TEST(Ratefn, IzmMatchesUncorrelatedWithoutTilde) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const ModelCoefficients c(CoefficientMap::constant(m1(0.0), 1),
                            CoefficientMap::exp_linear(m1(1.0), Eigen::VectorXd::Constant(1, 0.5)),
                            CoefficientMap::constant(m1(0.0), 1));
  const auto x = CameronMartinPath::straight_line(g, Eigen::VectorXd::Ones(1));
  const double u = i_uncorrelated(x, bank, c).value;
  for (int m : {2, 8}) EXPECT_NEAR(i_z_m(x, m, bank, c).value, u, 1e-7);
  EXPECT_NEAR(i_z(x, bank, c).value, u, 1e-7);
}

TEST(Ratefn, IzConstantClosedForm) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  Eigen::MatrixXd s(2, 2);
  s << 1, 0.3, 0, 2;
  Eigen::VectorXd mu(2);
  mu << 0.1, -0.2;
  const auto c = ModelCoefficients::constant(mu, s, Eigen::MatrixXd::Zero(2, 1));
  Eigen::VectorXd z(2);
  z << 1.0, 0.5;
  const auto x = CameronMartinPath::straight_line(g, z);
  const RateSolution r = i_z(x, bank, c);
  const Eigen::VectorXd q = z - mu;
  EXPECT_NEAR(r.value, 0.5 * q.dot((s * s.transpose()).ldlt().solve(q)), 1e-8);
  EXPECT_LT(std::sqrt(r.control.h1_norm_sq()), 1e-4);
}

TEST(Ratefn, TerminalRateClosedForms) {
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  const auto id = ModelCoefficients::constant(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2),
                                              Eigen::MatrixXd::Zero(2, 1));
  const RateSolution r = terminal_rate(Eigen::VectorXd::Ones(2), bank, id, TimeGrid(1.0, 16));
  EXPECT_NEAR(r.value, 1.0, 1e-12);
  EXPECT_LT(std::sqrt(r.control.h1_norm_sq()), 1e-8);

  const double s = 1.3, T = 0.8;
  Eigen::VectorXd m0(2);
  m0 << 0.2, -0.4;
  const KernelBank b08({VolterraKernel::riemann_liouville(0.3, 1.0, T)});
  const auto cs = ModelCoefficients::constant(m0, s * Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 1));
  Eigen::VectorXd z(2);
  z << 0.7, 0.9;
  const RateSolution rs = terminal_rate(z, b08, cs, TimeGrid(T, 16));
  EXPECT_NEAR(rs.value, (z - m0 * T).squaredNorm() / (2 * s * s * T), 1e-6);

  // refinement never moves the constant case away from the closed form
  double prev = INFINITY;
  for (int n : {16, 64, 256}) {
    const double err = std::abs(terminal_rate(z, b08, cs, TimeGrid(T, n)).value -
                                (z - m0 * T).squaredNorm() / (2 * s * s * T));
    EXPECT_LE(err, prev + 1e-12);
    prev = err;
  }
}

TEST(Ratefn, TerminalRateSingular) {
  const KernelBank bank({VolterraKernel::riemann_liouville(0.5)});
  const auto c = ModelCoefficients::constant(Eigen::VectorXd::Zero(1), m1(0.0), m1(0.0));
  try {
    terminal_rate(Eigen::VectorXd::Ones(1), bank, c, TimeGrid(1.0, 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Singular);
  }
}

TEST(Ratefn, TerminalBelowPathwise) {
  const TimeGrid g(1.0, 16);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const auto c = ModelCoefficients::rho_template(CoefficientMap::exp_linear(m1(0.8), Eigen::VectorXd::Ones(1)), -0.5);
  const Eigen::VectorXd z = Eigen::VectorXd::Constant(1, 0.6);
  const RateSolution t = terminal_rate(z, bank, c, g);
  const RateSolution p = i_z(CameronMartinPath::straight_line(g, z), bank, c);
  EXPECT_TRUE(t.converged);
  EXPECT_LE(t.value, p.value + 1e-6);
  EXPECT_GE(t.value, 0.0);
  EXPECT_LE(t.value, t.upper_bound_used + 1e-9);
}

TEST(Ratefn, IzBelowIzmAtFineBlocks) {
  const TimeGrid g(1.0, 256);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.75)});
  const auto c = lipschitz_tilde_model();
  const auto x = CameronMartinPath::straight_line(g, Eigen::VectorXd::Ones(1));
  OptimizerConfig opt;
  opt.starts = 2;
  const double iz = i_z(x, bank, c, opt).value;
  EXPECT_LE(iz, i_z_m(x, 256, bank, c, opt).value + 5e-3);
}

TEST(Ratefn, AdjointGradientMatchesFiniteDifference) {
  const TimeGrid g(1.0, 8);
  const KernelBank bank({VolterraKernel::riemann_liouville(0.3)});
  const auto c = ModelCoefficients::rho_template(CoefficientMap::exp_linear(m1(0.8), Eigen::VectorXd::Ones(1)), -0.5);
  CameronMartinPath x(g, 1);
  for (int j = 0; j < 8; ++j) x.derivative(j, 0) = std::cos(j);
  Eigen::VectorXd u(8);
  for (int j = 0; j < 8; ++j) u(j) = 0.3 * std::sin(2.0 * j + 1);
  for (PhiMode mode : {PhiMode::None, PhiMode::Exact, PhiMode::Frozen}) {
    const PathRateObjective obj(x, bank, c, mode, mode == PhiMode::Frozen ? 4 : 0);
    const ValueGrad fg = [&](const Eigen::VectorXd& v, Eigen::VectorXd& gr) { return obj(v, gr); };
    Eigen::VectorXd grad(8);
    obj(u, grad);
    const Eigen::VectorXd fd = finite_difference_gradient(fg, u);
    EXPECT_LT((grad - fd).lpNorm<Eigen::Infinity>(), 1e-4 * fd.lpNorm<Eigen::Infinity>() + 1e-9);
  }
  const TerminalRateObjective tobj(Eigen::VectorXd::Constant(1, 0.7), bank, c, g);
  const ValueGrad tg = [&](const Eigen::VectorXd& v, Eigen::VectorXd& gr) { return tobj(v, gr); };
  Eigen::VectorXd grad(8);
  tobj(u, grad);
  const Eigen::VectorXd fd = finite_difference_gradient(tg, u);
  EXPECT_LT((grad - fd).lpNorm<Eigen::Infinity>(), 1e-4 * fd.lpNorm<Eigen::Infinity>() + 1e-9);
}
