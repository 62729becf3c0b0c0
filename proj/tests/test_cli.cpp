#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "vldp/cli.hpp"
#include "vldp/config.hpp"
#include "vldp/error.hpp"

using namespace vldp;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(seed = 3
[grid]
horizon = 1
steps = 16

[kernel]
family = riemann_liouville
hurst = 0.5

[model]
sigma = constant [1]
)";

const char* kSchilder2d = R"(seed = 9
[grid]
horizon = 1
steps = 16
[kernel]
family = riemann_liouville
hurst = 0.5
[model]
sigma = constant [1 0; 0 1]
sigma_tilde = constant [0; 0]
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("vldp_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ErrorCategory parse_category(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCategory::Io;
}

std::string parse_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

int run(const std::string& sub, const fs::path& cfg, const fs::path& out, std::string* err_text = nullptr,
        int threads = 1, const std::string& z = "") {
  CliOptions o;
  o.subcommand = sub;
  o.config_path = cfg.string();
  o.out_dir = out.string();
  o.threads = threads;
  o.z = z;
  std::ostringstream so, se;
  const int rc = run_subcommand(o, so, se);
  if (err_text) *err_text = se.str();
  return rc;
}

}  // namespace

TEST(Config, MinimalParses) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.steps, 16);
  ASSERT_EQ(c.kernels.size(), 1u);
  ASSERT_TRUE(c.model.has_value());
  EXPECT_EQ(c.model->d, 1);
  EXPECT_EQ(*c.seed, 3u);
}

TEST(Config, DivisibilityNamesBoth) {
  const std::string text = std::string(kMinimal) + "[rate]\nm = [4 16]\n";
  std::string t = text;
  t.replace(t.find("steps = 16"), 10, "steps = 100");
  EXPECT_EQ(parse_category(t), ErrorCategory::Divisibility);
  const std::string msg = parse_message(t);
  EXPECT_NE(msg.find("100"), std::string::npos);
  EXPECT_NE(msg.find("16"), std::string::npos);
}

TEST(Config, HurstRangeError) {
  std::string t = kMinimal;
  t.replace(t.find("hurst = 0.5"), 11, "hurst = 1.5");
  EXPECT_EQ(parse_category(t), ErrorCategory::Config);
  const std::string msg = parse_message(t);
  EXPECT_NE(msg.find("line 8"), std::string::npos) << msg;
  EXPECT_NE(msg.find("1.5"), std::string::npos) << msg;
}

TEST(Config, LineAndFieldOnBadValue) {
  std::string t = kMinimal;
  t.replace(t.find("steps = 16"), 10, "steps = many");
  const std::string msg = parse_message(t);
  EXPECT_NE(msg.find("line 4, field 'steps'"), std::string::npos) << msg;
  EXPECT_EQ(parse_category(std::string(kMinimal) + "[grid2]\n"), ErrorCategory::Config);
  EXPECT_EQ(parse_category(std::string(kMinimal) + "bogus = 1\n"), ErrorCategory::Config);
}

TEST(Config, CoefficientFamilies) {
  const auto c = parse_config(R"(
[kernel]
family = riemann_liouville
hurst = 0.3
count = 2
[model]
mu = constant [0.1 0]
sigma = exp_linear [1 0; 0 2] [0.5 -0.5]
sigma_tilde = affine [0.1 0; 0 0.1] [1 0; 0 0] [0 0; 0 1]
)");
  EXPECT_EQ(c.model->d, 2);
  EXPECT_EQ(c.model->p, 2);
  EXPECT_EQ(c.model->mu.rows(), 2);
  const auto r = parse_config("[kernel]\nfamily = riemann_liouville\n[model]\ntemplate = rho\nvol = exp_linear [0.4] [1]\nrho = -0.5\n");
  EXPECT_EQ(r.model->sigma_tilde.kind(), CoefficientMap::Kind::ExpLinear);
}

TEST(Config, RejectsNonAbsolutelyContinuousTargets) {
  EXPECT_EQ(parse_category(std::string(kMinimal) + "[rate]\ntarget = step [1]\n"), ErrorCategory::Config);
  EXPECT_EQ(parse_category(std::string(kMinimal) + "[rate]\ntarget_csv = no_such_file.csv\n"),
            ErrorCategory::Config);
}

TEST(Config, MatrixLiteral) {
  const Eigen::MatrixXd m = parse_matrix("[1 2; 3 4]");
  EXPECT_EQ(m(1, 0), 3.0);
  EXPECT_EQ(parse_matrix("2.5")(0, 0), 2.5);
  EXPECT_THROW(parse_matrix("[1 2; 3]"), Error);
}

TEST(Cli, TerminalRateSchilder) {
  const fs::path d = scratch("terminal");
  std::ofstream(d / "c.ini") << kSchilder2d;
  ASSERT_EQ(run("terminal-rate", d / "c.ini", d / "out", nullptr, 1, "1,1"), 0);
  EXPECT_NEAR(std::stod(slurp(d / "out" / "value.txt")), 1.0, 1e-12);
  const std::string man = slurp(d / "out" / "manifest.txt");
  EXPECT_NE(man.find("config_hash = fnv1a64:"), std::string::npos);
  EXPECT_NE(man.find("seed = 9"), std::string::npos);
  EXPECT_NE(man.find(std::string("version = ") + kVersion), std::string::npos);
  EXPECT_EQ(slurp(d / "out" / "config.ini"), kSchilder2d);
  for (const auto& e : fs::directory_iterator(d / "out")) EXPECT_NE(e.path().extension(), ".tmp");
}

TEST(Cli, MissingKernelIsConfigError) {
  const fs::path d = scratch("nokernel");
  std::ofstream(d / "c.ini") << "seed = 1\n[grid]\nsteps = 8\n";
  std::string err;
  EXPECT_EQ(run("simulate", d / "c.ini", d / "out", &err), 2);
  EXPECT_NE(err.find("error[CONFIG]"), std::string::npos);
}

TEST(Cli, SeedIsRequired) {
  const fs::path d = scratch("noseed");
  std::string t = kMinimal;
  t.replace(0, t.find('\n') + 1, "");
  std::ofstream(d / "c.ini") << t;
  EXPECT_EQ(run("simulate", d / "c.ini", d / "out"), 2);
}

TEST(Cli, RerunIsByteIdentical) {
  const fs::path d = scratch("rerun");
  std::ofstream(d / "c.ini") << std::string(kMinimal) +
                                    "sigma_tilde = constant [0.5]\n[simulate]\npaths = 50\nepsilon = 0.5\n"
                                    "dump_drivers = true\n";
  ASSERT_EQ(run("simulate", d / "c.ini", d / "a", nullptr, 1), 0);
  ASSERT_EQ(run("simulate", d / "c.ini", d / "b", nullptr, 3), 0);
  EXPECT_EQ(slurp(d / "a" / "paths.csv"), slurp(d / "b" / "paths.csv"));
  EXPECT_EQ(slurp(d / "a" / "drivers.csv"), slurp(d / "b" / "drivers.csv"));
  const std::string csv = slurp(d / "a" / "paths.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "path_id,t,Z_1");
}

TEST(Cli, KernelTableAndRate) {
  const fs::path d = scratch("rate");
  std::ofstream(d / "x.csv") << "t,x_1\n0,0\n0.5,0.25\n1,1\n";
  std::ofstream(d / "c.ini") << "seed = 2\n[grid]\nhorizon = 1\nsteps = 2\n[kernel]\nfamily = riemann_liouville\n"
                                "hurst = 0.5\n[model]\nsigma = constant [1]\n[rate]\nfunctional = i_z\n"
                                "target_csv = x.csv\n";
  ASSERT_EQ(run("rate", d / "c.ini", d / "out"), 0);
  // 1/2 (0.5^2 + 1.5^2) / 2
  EXPECT_NEAR(std::stod(slurp(d / "out" / "value.txt")), 0.625, 1e-9);
  ASSERT_EQ(run("kernel-table", d / "c.ini", d / "kt"), 0);
  EXPECT_EQ(slurp(d / "kt" / "kernel_table.csv"), "factor,t,s,K\n1,0.5,0,1\n1,1,0,1\n1,1,0.5,1\n");
}
