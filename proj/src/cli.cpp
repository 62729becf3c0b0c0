#include "vldp/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "vldp/asymptotics.hpp"
#include "vldp/config.hpp"
#include "vldp/gaussian.hpp"
#include "vldp/model.hpp"
#include "vldp/properties.hpp"
#include "vldp/ratefn.hpp"
#include "vldp/util.hpp"

namespace fs = std::filesystem;

namespace vldp {

namespace {

constexpr std::uint64_t kSelftestSeed = 20240601;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Distinct, reproducible sub-seeds for the runs inside one experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(0x5eed0000ULL + tag));
}

std::string short_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string join_header(const std::string& prefix, int n) {
  std::string s;
  for (int i = 1; i <= n; ++i) s += "," + prefix + std::to_string(i);
  return s;
}

struct Run {
  const CliOptions& opts;
  ExperimentConfig cfg;
  std::string config_text;
  std::uint64_t seed = 0;
  int threads = 1;
  std::ostream& out;
  std::ostream& err;

  std::string path(const std::string& name) const { return (fs::path(opts.out_dir) / name).string(); }
  void write(const std::string& name, const std::string& content) const {
    write_atomic(path(name), content);
  }

  void manifest(const std::vector<std::string>& artifacts) const {
    std::ostringstream m;
    m << "version = " << kVersion << "\n"
      << "subcommand = " << opts.subcommand << "\n"
      << "seed = " << seed << "\n"
      << "config_hash = fnv1a64:" << hex64(fnv1a64(config_text)) << "\n"
      << "config_copy = config.ini\n"
      << "threads = " << threads << "\n"
      << "rerun = vldp " << opts.subcommand << " --config config.ini --seed " << seed;
    if (!opts.z.empty()) m << " --z " << opts.z;
    m << "\n";
    for (const auto& a : artifacts) m << "artifact = " << a << "\n";
    write("config.ini", config_text);
    write("manifest.txt", m.str());
  }

  void surface_validation(const ModelCoefficients& coeffs) const {
    const ValidationReport report = validate_coefficients(coeffs);
    write("validation.txt", report.to_text());
    if (!report.all_passed())
      err << "warning: coefficient assumption checks failed; see validation.txt\n";
  }
};

Eigen::VectorXd parse_vector_flag(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == ',') c = ' ';
  const auto v = parse_list(s);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string solution_control_csv(const RateSolution& sol) {
  std::ostringstream o;
  const TimeGrid& g = sol.control.grid;
  o << "t" << join_header("fdot_", sol.control.dim()) << "\n";
  for (int j = 0; j < g.steps(); ++j) {
    o << format_real(g.node(j));
    for (int l = 0; l < sol.control.dim(); ++l) o << "," << format_real(sol.control.derivative(j, l));
    o << "\n";
  }
  return o.str();
}

std::string solution_diagnostics(const RateSolution& sol) {
  std::ostringstream o;
  o << "value = " << format_real(sol.value) << "\n"
    << "control_norm_sq = " << format_real(sol.control.h1_norm_sq()) << "\n"
    << "iterations = " << sol.iterations << "\n"
    << "grad_norm = " << format_real(sol.grad_norm) << "\n"
    << "converged = " << (sol.converged ? "true" : "false") << "\n"
    << "upper_bound_used = " << format_real(sol.upper_bound_used) << "\n"
    << "multistart_spread = " << format_real(sol.spread) << "\n"
    << "multistart_spread_flag = " << (sol.spread_flag ? "true" : "false") << "\n"
    << "start_values =";
  for (double v : sol.start_values) o << " " << format_real(v);
  o << "\n";
  return o.str();
}

PathSample read_target_csv(const std::string& file, const TimeGrid& grid, int d) {
  std::ifstream in(file);
  if (!in) fail(ErrorCategory::Io, "cannot read target '" + file + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCategory::Config, "target '" + file + "' is empty");
  PathSample x(grid, d);
  int row = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> vals;
    try {
      std::string s = line;
      for (char& c : s)
        if (c == ',') c = ' ';
      vals = parse_list(s);
    } catch (const Error& e) {
      fail(ErrorCategory::Config, file + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (static_cast<int>(vals.size()) != d + 1)
      fail(ErrorCategory::Config, file + " line " + std::to_string(line_no) + ": expected t and " +
                                      std::to_string(d) + " values");
    if (row > grid.steps())
      fail(ErrorCategory::Config, file + ": more rows than grid nodes");
    if (std::abs(vals[0] - grid.node(row)) > 1e-9 * std::max(1.0, grid.horizon()))
      fail(ErrorCategory::Config, file + " line " + std::to_string(line_no) + ": t = " +
                                      format_real(vals[0]) + " is not grid node " +
                                      format_real(grid.node(row)));
    for (int i = 0; i < d; ++i) x.values(row, i) = vals[static_cast<std::size_t>(i) + 1];
    ++row;
  }
  if (row != grid.steps() + 1)
    fail(ErrorCategory::Config, file + ": needs one row per grid node (" +
                                    std::to_string(grid.steps() + 1) + "), got " +
                                    std::to_string(row));
  if (!x.values.row(0).isZero(0.0))
    fail(ErrorCategory::Config, file + ": target must start at 0");
  return x;
}

CameronMartinPath rate_target(const Run& r, int d) {
  const RateSpec& rs = r.cfg.rate;
  if (!rs.target_csv.empty())
    return CameronMartinPath::from_path(read_target_csv(rs.target_csv, r.cfg.grid(), d));
  if (rs.target_end) {
    if (rs.target_end->size() != d)
      fail(ErrorCategory::Config, "[rate] target has " + std::to_string(rs.target_end->size()) +
                                      " entries, model has d = " + std::to_string(d));
    return CameronMartinPath::straight_line(r.cfg.grid(), *rs.target_end);
  }
  fail(ErrorCategory::Config, "[rate] needs 'target' or 'target_csv'");
}

int cmd_kernel_table(Run& r) {
  const KernelBank bank = r.cfg.bank();
  const TimeGrid g = r.cfg.grid();
  std::ostringstream csv;
  csv << "factor,t,s,K\n";
  for (int l = 0; l < bank.size(); ++l)
    for (int i = 1; i <= g.steps(); ++i)
      for (int j = 0; j < i; ++j)
        csv << l + 1 << "," << format_real(g.node(i)) << "," << format_real(g.node(j)) << ","
            << format_real(bank[l](g.node(i), g.node(j))) << "\n";
  std::ostringstream tables;
  for (int l = 0; l < bank.size(); ++l) tables << "[kernel]\n" << kernel_to_table(bank[l]) << "\n";
  r.write("kernel_table.csv", csv.str());
  r.write("kernels.txt", tables.str());
  r.manifest({"kernel_table.csv", "kernels.txt"});
  r.out << "wrote " << r.path("kernel_table.csv") << "\n";
  return 0;
}

int cmd_simulate(Run& r) {
  const ModelCoefficients& coeffs = r.cfg.require_model();
  const KernelBank bank = r.cfg.bank();
  const TimeGrid g = r.cfg.grid();
  const SimulateSpec& sim = r.cfg.simulate;
  r.surface_validation(coeffs);
  const std::vector<CorrelatedPath> paths =
      simulate_correlated(coeffs, bank, g, sim.epsilon, sim.paths, r.seed, r.threads);
  std::ostringstream csv;
  csv << "path_id,t" << join_header("Z_", coeffs.d) << "\n";
  for (std::size_t k = 0; k < paths.size(); ++k)
    for (int i = 0; i <= g.steps(); ++i) {
      csv << k << "," << format_real(g.node(i));
      for (int c = 0; c < coeffs.d; ++c) csv << "," << format_real(paths[k].log_price.values(i, c));
      csv << "\n";
    }
  std::vector<std::string> artifacts{"paths.csv", "validation.txt"};
  r.write("paths.csv", csv.str());
  if (sim.dump_drivers) {
    std::ostringstream dr;
    dr << "path_id,t" << join_header("B_", coeffs.p) << join_header("Bhat_", coeffs.p) << "\n";
    for (std::size_t k = 0; k < paths.size(); ++k) {
      const JointSample& js = paths[k].drivers;
      for (int i = 0; i <= g.steps(); ++i) {
        dr << k << "," << format_real(g.node(i));
        for (int l = 0; l < coeffs.p; ++l) dr << "," << format_real(js.brownian.values(i, l));
        for (int l = 0; l < coeffs.p; ++l) dr << "," << format_real(js.volterra.values(i, l));
        dr << "\n";
      }
    }
    r.write("drivers.csv", dr.str());
    artifacts.push_back("drivers.csv");
  }
  r.manifest(artifacts);
  r.out << "wrote " << paths.size() << " paths to " << r.path("paths.csv") << "\n";
  return 0;
}

int cmd_rate(Run& r) {
  const ModelCoefficients& coeffs = r.cfg.require_model();
  const KernelBank bank = r.cfg.bank();
  const RateSpec& rs = r.cfg.rate;
  OptimizerConfig opt = rs.optimizer;
  const CameronMartinPath x = rate_target(r, coeffs.d);
  std::vector<std::string> artifacts;
  std::ostringstream results;
  results << "functional,m,value,control_norm_sq,iterations,converged,spread_flag\n";
  auto record = [&](const std::string& name, int m, const RateSolution& sol, const std::string& tag) {
    results << name << "," << m << "," << format_real(sol.value) << ","
            << format_real(sol.control.h1_norm_sq()) << "," << sol.iterations << ","
            << (sol.converged ? 1 : 0) << "," << (sol.spread_flag ? 1 : 0) << "\n";
    r.write("control" + tag + ".csv", solution_control_csv(sol));
    r.write("diagnostics" + tag + ".txt", solution_diagnostics(sol));
    artifacts.push_back("control" + tag + ".csv");
    artifacts.push_back("diagnostics" + tag + ".txt");
    if (sol.spread_flag) r.err << "warning: multi-start spread above threshold for " << name << "\n";
  };
  if (rs.functional == "i_z_m") {
    if (rs.m.empty()) fail(ErrorCategory::Config, "[rate] i_z_m needs 'm'");
    for (int m : rs.m) record("i_z_m", m, i_z_m(x, m, bank, coeffs, opt), "_m" + std::to_string(m));
  } else {
    const RateSolution sol = rs.functional == "i_z" ? i_z(x, bank, coeffs, opt)
                                                    : i_uncorrelated(x, bank, coeffs, opt);
    record(rs.functional, 0, sol, "");
    r.write("value.txt", format_real(sol.value) + "\n");
    artifacts.push_back("value.txt");
    r.out << rs.functional << " = " << format_real(sol.value) << "\n";
  }
  r.write("results.csv", results.str());
  artifacts.push_back("results.csv");
  r.manifest(artifacts);
  return 0;
}

int cmd_terminal_rate(Run& r) {
  const ModelCoefficients& coeffs = r.cfg.require_model();
  const KernelBank bank = r.cfg.bank();
  Eigen::VectorXd z;
  if (!r.opts.z.empty()) z = parse_vector_flag(r.opts.z);
  else if (r.cfg.rate.z) z = *r.cfg.rate.z;
  else fail(ErrorCategory::Config, "terminal-rate needs --z or [rate] z");
  if (z.size() != coeffs.d)
    fail(ErrorCategory::Config, "z has " + std::to_string(z.size()) + " entries, model has d = " +
                                    std::to_string(coeffs.d));
  const RateSolution sol = terminal_rate(z, bank, coeffs, r.cfg.grid(), r.cfg.rate.optimizer);
  r.write("value.txt", format_real(sol.value) + "\n");
  r.write("control.csv", solution_control_csv(sol));
  r.write("diagnostics.txt", solution_diagnostics(sol));
  r.manifest({"value.txt", "control.csv", "diagnostics.txt"});
  r.out << "terminal_rate = " << format_real(sol.value) << "\n";
  return 0;
}

int cmd_verify_ldp(Run& r) {
  const ModelCoefficients& coeffs = r.cfg.require_model();
  const KernelBank bank = r.cfg.bank();
  const TimeGrid g = r.cfg.grid();
  if (!r.cfg.event) fail(ErrorCategory::Config, "verify-ldp needs an [event] section");
  const EventSpec& ev = *r.cfg.event;
  const SimulateSpec& sim = r.cfg.simulate;
  r.surface_validation(coeffs);

  TailEvent event;
  RateSolution control = zero_control(g, coeffs.p, coeffs.d);
  double target_rate = 0.0;
  auto check_dim = [&](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != coeffs.d)
      fail(ErrorCategory::Config, std::string("[event] ") + what + " needs d = " +
                                      std::to_string(coeffs.d) + " entries");
  };
  if (ev.kind == "tube") {
    const CameronMartinPath x = rate_target(r, coeffs.d);
    event = TailEvent::tube(x.path(), ev.radius);
    control = i_z(x, bank, coeffs, r.cfg.rate.optimizer);
    target_rate = control.value;
  } else {
    Eigen::VectorXd point;
    if (ev.kind == "half_space") {
      check_dim(ev.direction, "direction");
      event = TailEvent::half_space(ev.direction, ev.threshold);
      point = ev.tilt_point ? *ev.tilt_point
                            : Eigen::VectorXd(ev.direction * (ev.threshold / ev.direction.squaredNorm()));
    } else {
      check_dim(ev.lower, "lower");
      check_dim(ev.upper, "upper");
      event = TailEvent::box(ev.lower, ev.upper);
      point = ev.tilt_point ? *ev.tilt_point
                            : Eigen::VectorXd(Eigen::VectorXd::Zero(coeffs.d).cwiseMax(ev.lower).cwiseMin(ev.upper));
    }
    check_dim(point, "tilt_point");
    control = terminal_rate(point, bank, coeffs, g, r.cfg.rate.optimizer);
    target_rate = control.value;
  }
  if (!sim.tilted) control = zero_control(g, coeffs.p, coeffs.d);

  std::vector<TailEstimate> estimates;
  std::ostringstream csv;
  csv << "epsilon,p_hat,stderr,minus_log_p,eps_inv_sq,hits,n\n";
  for (std::size_t k = 0; k < sim.epsilons.size(); ++k) {
    const double eps = sim.epsilons[k];
    const std::uint64_t s = derive_seed(r.seed, k);
    const TailEstimate e = sim.tilted
                               ? tilted_estimate(coeffs, bank, g, eps, event, control, sim.paths, s, r.threads)
                               : estimate_tail_prob(coeffs, bank, g, eps, event, sim.paths, s, r.threads);
    estimates.push_back(e);
    csv << format_real(eps) << "," << format_real(e.p_hat) << "," << format_real(e.std_error) << ","
        << format_real(e.p_hat > 0.0 ? -std::log(e.p_hat) : INFINITY) << ","
        << format_real(1.0 / (eps * eps)) << "," << e.hits << "," << e.n << "\n";
    if (e.weight_overflow) r.err << "warning: log-weight overflow at epsilon " << format_real(eps) << "\n";
  }
  r.write("ldp.csv", csv.str());
  const SlopeEstimate fit = ldp_slope(sim.epsilons, estimates);
  const double gap = std::abs(fit.slope - target_rate) / std::max(std::abs(target_rate), 1e-300);
  std::ostringstream sum;
  sum << "slope = " << format_real(fit.slope) << "\n"
      << "intercept = " << format_real(fit.intercept) << "\n"
      << "r_squared = " << format_real(fit.r_squared) << "\n"
      << "weighted = " << (fit.weighted ? "true" : "false") << "\n"
      << "target_rate = " << format_real(target_rate) << "\n"
      << "relative_gap = " << format_real(gap) << "\n"
      << "estimator = " << (sim.tilted ? "tilted" : "crude") << "\n"
      << "paths_per_epsilon = " << sim.paths << "\n"
      << "note = the slope is a finite-epsilon regression proxy for the limit, not a proof of it\n";
  r.write("summary.txt", sum.str());
  r.manifest({"ldp.csv", "summary.txt", "validation.txt"});
  r.out << sum.str();
  return 0;
}

int cmd_short_time(Run& r) {
  const ModelCoefficients& coeffs = r.cfg.require_model();
  const KernelBank bank = r.cfg.bank();
  const TimeGrid g = r.cfg.grid();
  const ScalingSchedule sched = r.cfg.schedule();
  const SimulateSpec& sim = r.cfg.simulate;
  std::ostringstream samples, report;
  samples << "eta,route,path_id" << join_header("Z_", coeffs.d) << "\n";
  report << "# rescaled-kernel route vs direct fine-grid route, terminal samples\n"
         << "# exponential equivalence is an asymptotic statement; this report only\n"
         << "# checks distributional closeness at finite eta\n";
  for (int n = 0; n < sched.size(); ++n) {
    const auto a = short_time_sample(coeffs, bank, g, n, sched, sim.paths, derive_seed(r.seed, 2 * n), r.threads);
    const auto b = short_time_direct(coeffs, bank, g, n, sched, sim.paths, derive_seed(r.seed, 2 * n + 1),
                                     sim.refine, r.threads);
    const std::string eta = format_real(sched.eta[static_cast<std::size_t>(n)]);
    for (const auto* set : {&a, &b}) {
      const char* route = set == &a ? "rescaled" : "direct";
      for (std::size_t k = 0; k < set->size(); ++k) {
        samples << eta << "," << route << "," << k;
        const Eigen::VectorXd z = (*set)[k].terminal();
        for (int c = 0; c < coeffs.d; ++c) samples << "," << format_real(z(c));
        samples << "\n";
      }
    }
    report << "[eta = " << short_real(sched.eta[static_cast<std::size_t>(n)]) << "]\n"
           << "epsilon = " << format_real(sched.epsilon[static_cast<std::size_t>(n)]) << "\n";
    for (int c = 0; c < coeffs.d; ++c) {
      std::vector<double> xa, xb;
      for (const auto& p : a) xa.push_back(p.terminal()(c));
      for (const auto& p : b) xb.push_back(p.terminal()(c));
      const KsResult ks = ks_two_sample(xa, xb);
      report << "ks_statistic_" << c + 1 << " = " << format_real(ks.statistic) << "\n"
             << "ks_p_value_" << c + 1 << " = " << format_real(ks.p_value) << "\n";
    }
    const EquivalenceReport eq = equivalence_diagnostic(a, b);
    for (std::size_t i = 0; i < eq.radii.size(); ++i)
      report << "sup_exceedance_" << short_real(eq.radii[i]) << " = " << format_real(eq.exceedance[i]) << "\n";
  }
  r.write("terminal_samples.csv", samples.str());
  r.write("report.txt", report.str());
  r.manifest({"terminal_samples.csv", "report.txt"});
  r.out << report.str();
  return 0;
}

int cmd_selftest(Run& r) {
  const auto results = run_property_suites(r.cfg.selftest_cases, r.seed);
  std::ostringstream csv;
  csv << "suite,cases,failures,first_failure\n";
  bool ok = true;
  for (const auto& p : results) {
    std::string first = p.first_failure;
    for (char& c : first)
      if (c == ',' || c == '\n') c = ' ';
    csv << p.name << "," << p.cases << "," << p.failures << "," << first << "\n";
    r.out << (p.passed() ? "PASS " : "FAIL ") << p.name << " (" << p.cases << " cases, "
          << p.failures << " failures)\n";
    ok = ok && p.passed();
  }
  r.write("selftest.csv", csv.str());
  r.manifest({"selftest.csv"});
  if (!ok) fail(ErrorCategory::Validation, "property suites reported failures");
  return 0;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"kernel-table", "simulate",  "rate",    "terminal-rate",
                                              "verify-ldp",   "short-time", "selftest"};
  return names;
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Domain: return 3;
    case ErrorCategory::Singular: return 4;
    case ErrorCategory::Quadrature: return 5;
    case ErrorCategory::Divisibility: return 6;
    case ErrorCategory::InsufficientData: return 7;
    case ErrorCategory::Validation: return 8;
    case ErrorCategory::Io: return 9;
  }
  return 1;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) fail(ErrorCategory::Io, "cannot write '" + tmp + "'");
    o << content;
    o.flush();
    if (!o) fail(ErrorCategory::Io, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCategory::Io, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

int run_subcommand(const CliOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), opts.subcommand) == names.end())
      fail(ErrorCategory::Config, "unknown subcommand '" + opts.subcommand + "'");
    std::string text;
    std::string base = ".";
    if (!opts.config_path.empty()) {
      std::ifstream in(opts.config_path);
      if (!in) fail(ErrorCategory::Io, "cannot read config '" + opts.config_path + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      text = buf.str();
      const auto dir = fs::path(opts.config_path).parent_path();
      if (!dir.empty()) base = dir.string();
    } else if (opts.subcommand != "selftest") {
      fail(ErrorCategory::Config, "--config is required for " + opts.subcommand);
    } else {
      text = "[kernel]\nfamily = riemann_liouville\nhurst = 0.5\n";
    }
    Run r{opts, parse_config(text, base), text, 0, 1, out, err};
    if (opts.seed) r.seed = *opts.seed;
    else if (r.cfg.seed) r.seed = *r.cfg.seed;
    else if (opts.subcommand == "selftest") r.seed = kSelftestSeed;
    else fail(ErrorCategory::Config, "no seed given; set 'seed' in the config or pass --seed");
    r.threads = opts.threads.value_or(r.cfg.simulate.threads);
    if (r.threads < 1) fail(ErrorCategory::Config, "--threads must be >= 1");

    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) fail(ErrorCategory::Io, "cannot create '" + opts.out_dir + "': " + ec.message());

    if (opts.subcommand == "kernel-table") return cmd_kernel_table(r);
    if (opts.subcommand == "simulate") return cmd_simulate(r);
    if (opts.subcommand == "rate") return cmd_rate(r);
    if (opts.subcommand == "terminal-rate") return cmd_terminal_rate(r);
    if (opts.subcommand == "verify-ldp") return cmd_verify_ldp(r);
    if (opts.subcommand == "short-time") return cmd_short_time(r);
    return cmd_selftest(r);
  } catch (const Error& e) {
    err << "error[" << category_name(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vldp
