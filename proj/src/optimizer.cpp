#include "vldp/optimizer.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace vldp {

namespace {

Eigen::VectorXd project(Eigen::VectorXd x, double radius_sq) {
  const double n2 = x.squaredNorm();
  if (std::isfinite(radius_sq) && n2 > radius_sq) x *= std::sqrt(radius_sq / n2);
  return x;
}

double projected_grad_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double radius_sq) {
  return (x - project(x - g, radius_sq)).norm();
}

}  // namespace

LbfgsResult minimize_lbfgs(const ValueGrad& fg, Eigen::VectorXd x0, const LbfgsConfig& cfg,
                           double radius_sq) {
  LbfgsResult r;
  r.x = project(std::move(x0), radius_sq);
  Eigen::VectorXd g(r.x.size());
  r.value = fg(r.x, g);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (r.iterations = 0; r.iterations < cfg.max_iter; ++r.iterations) {
    r.grad_norm = projected_grad_norm(r.x, g, radius_sq);
    if (r.grad_norm < cfg.tol * (1.0 + std::abs(r.value))) {
      r.converged = true;
      return r;
    }

    // two-loop recursion
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    if (!(dir.dot(g) < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
    }

    double step = 1.0;
    Eigen::VectorXd x_new, g_new(g.size());
    double f_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt, step *= 0.5) {
      x_new = project(r.x + step * dir, radius_sq);
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= r.value + 1e-4 * g.dot(x_new - r.x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!s_hist.empty()) {
        // stale curvature pairs: retry from steepest descent
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      break;
    }

    const Eigen::VectorXd s = x_new - r.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const bool stalled = std::abs(r.value - f_new) <= 1e-16 * (1.0 + std::abs(r.value)) &&
                         s.norm() <= 1e-16 * (1.0 + r.x.norm());
    r.x = x_new;
    r.value = f_new;
    g = g_new;
    if (stalled) break;
  }
  r.grad_norm = projected_grad_norm(r.x, g, radius_sq);
  r.converged = r.grad_norm < cfg.tol * (1.0 + std::abs(r.value));
  return r;
}

Eigen::VectorXd finite_difference_gradient(const ValueGrad& fg, const Eigen::VectorXd& x,
                                           double h) {
  Eigen::VectorXd g(x.size()), scratch(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = fg(xp, scratch);
    xp[i] = x[i] - h;
    const double fm = fg(xp, scratch);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace vldp
