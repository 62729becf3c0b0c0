#include "vldp/config.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vldp/error.hpp"
#include "vldp/util.hpp"

namespace vldp {

namespace {

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void field_error(const Entry& e, const std::string& msg) {
  fail(ErrorCategory::Config, "line " + std::to_string(e.line) + ", field '" + e.key + "': " + msg);
}

double to_real(const std::string& s, bool* ok) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  *ok = used > 0 && used == s.size();
  return v;
}

double real_of(const Entry& e) {
  bool ok = false;
  const double v = to_real(trim(e.value), &ok);
  if (!ok) field_error(e, "expected a number, got '" + e.value + "'");
  return v;
}

long integer_of(const Entry& e) {
  const std::string s = trim(e.value);
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) field_error(e, "expected an integer, got '" + e.value + "'");
  return v;
}

bool bool_of(const Entry& e) {
  const std::string s = trim(e.value);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  field_error(e, "expected true or false, got '" + e.value + "'");
}

// Splits "word [a] [b; c]" into the leading word and the bracket groups.
std::pair<std::string, std::vector<std::string>> split_map_spec(const std::string& text) {
  const std::string s = trim(text);
  const auto first = s.find('[');
  std::string word = trim(s.substr(0, first));
  std::vector<std::string> groups;
  std::size_t pos = first;
  while (pos != std::string::npos && pos < s.size()) {
    const auto close = s.find(']', pos);
    if (close == std::string::npos) fail(ErrorCategory::Config, "unbalanced '[' in '" + text + "'");
    groups.push_back(s.substr(pos, close - pos + 1));
    pos = s.find('[', close);
    if (pos != std::string::npos && !trim(s.substr(close + 1, pos - close - 1)).empty())
      fail(ErrorCategory::Config, "unexpected text between matrices in '" + text + "'");
    if (pos == std::string::npos && !trim(s.substr(close + 1)).empty())
      fail(ErrorCategory::Config, "unexpected trailing text in '" + text + "'");
  }
  return {word, groups};
}

Eigen::VectorXd vector_of(const Entry& e) {
  try {
    const Eigen::MatrixXd m = parse_matrix(e.value);
    if (m.rows() != 1 && m.cols() != 1) field_error(e, "expected a vector");
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  } catch (const Error& err) {
    if (err.category() != ErrorCategory::Config) throw;
    field_error(e, err.what());
  }
}

CoefficientMap map_of(const Entry& e, int p, bool column_vector) {
  try {
    const auto [word, groups] = split_map_spec(e.value);
    std::vector<Eigen::MatrixXd> mats;
    for (const auto& g : groups) {
      Eigen::MatrixXd m = parse_matrix(g);
      mats.push_back(std::move(m));
    }
    auto shape = [&](Eigen::MatrixXd m) {
      if (column_vector && m.rows() == 1) m.transposeInPlace();
      return m;
    };
    if (word == "constant") {
      if (mats.size() != 1) field_error(e, "constant takes one matrix");
      return CoefficientMap::constant(shape(mats[0]), p);
    }
    if (word == "affine") {
      if (static_cast<int>(mats.size()) != p + 1)
        field_error(e, "affine takes a base matrix and p = " + std::to_string(p) + " slopes");
      std::vector<Eigen::MatrixXd> slopes;
      for (std::size_t l = 1; l < mats.size(); ++l) slopes.push_back(shape(mats[l]));
      return CoefficientMap::affine(shape(mats[0]), slopes);
    }
    if (word == "exp_linear") {
      if (mats.size() != 2) field_error(e, "exp_linear takes a scale matrix and a weight vector");
      const Eigen::MatrixXd w = mats[1];
      if (w.size() != p) field_error(e, "exp_linear weight vector needs p entries");
      return CoefficientMap::exp_linear(shape(mats[0]),
                                        Eigen::Map<const Eigen::VectorXd>(w.data(), w.size()));
    }
    field_error(e, "unknown coefficient family '" + word + "'");
  } catch (const Error& err) {
    if (err.category() != ErrorCategory::Config || std::string(err.what()).rfind("line ", 0) == 0)
      throw;
    field_error(e, err.what());
  }
}

void reject_unknown(const Section& s, const std::set<std::string>& known) {
  for (const auto& e : s.entries)
    if (!known.count(e.key)) field_error(e, "unknown key in [" + s.name + "]");
}

}  // namespace

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::string s = trim(text);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') fail(ErrorCategory::Config, "matrix literal '" + text + "' lacks ']'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::vector<double>> rows;
  std::stringstream rs(s);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<double> vals;
    for (char& c : row)
      if (c == ',') c = ' ';
    std::stringstream cs(row);
    std::string tok;
    while (cs >> tok) {
      bool ok = false;
      const double v = to_real(tok, &ok);
      if (!ok) fail(ErrorCategory::Config, "bad number '" + tok + "' in matrix '" + text + "'");
      vals.push_back(v);
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty() || rows.front().empty())
    fail(ErrorCategory::Config, "empty matrix literal '" + text + "'");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      fail(ErrorCategory::Config, "ragged matrix literal '" + text + "'");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::vector<double> parse_list(const std::string& text) {
  const Eigen::MatrixXd m = parse_matrix(text);
  return std::vector<double>(m.data(), m.data() + m.size());
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

KernelBank ExperimentConfig::bank() const {
  if (kernels.empty()) fail(ErrorCategory::Config, "missing [kernel] section");
  return KernelBank(kernels);
}

const ModelCoefficients& ExperimentConfig::require_model() const {
  if (!model) fail(ErrorCategory::Config, "missing [model] section");
  return *model;
}

ScalingSchedule ExperimentConfig::schedule() const {
  if (eta.empty()) fail(ErrorCategory::Config, "missing [schedule] eta");
  if (kernels.empty()) fail(ErrorCategory::Config, "missing [kernel] section");
  const auto& k = kernels.front().params();
  const double log_exp = speed_log_exponent.value_or(2.0 * k.log_exponent);
  return ScalingSchedule::make(eta, k.hurst, speed_rule, log_exp);
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  std::vector<Section> sections{{"", 0, {}}};
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  const std::set<std::string> section_names{"grid",     "kernel", "model",    "schedule",
                                            "event",    "rate",   "simulate", "selftest"};
  while (std::getline(in, raw)) {
    ++line_no;
    // ';' separates matrix rows inside brackets, so it only starts a comment outside them
    std::string line;
    int depth = 0;
    for (char c : raw) {
      if (c == '#' || (c == ';' && depth == 0)) break;
      if (c == '[') ++depth;
      if (c == ']') --depth;
      line += c;
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!section_names.count(name))
        fail(ErrorCategory::Config, "line " + std::to_string(line_no) + ": unknown section [" + name + "]");
      sections.push_back({name, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCategory::Config, "line " + std::to_string(line_no) + ": expected 'key = value'");
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (e.key.empty())
      fail(ErrorCategory::Config, "line " + std::to_string(line_no) + ": empty key");
    if (sections.back().find(e.key))
      field_error(e, "duplicate key in [" + sections.back().name + "]");
    sections.back().entries.push_back(std::move(e));
  }

  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  std::map<std::string, int> seen;
  for (const auto& s : sections) {
    if (s.name != "kernel" && !s.name.empty() && seen[s.name]++)
      fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": repeated section [" + s.name + "]");
  }

  for (const auto& s : sections)
    if (s.name.empty()) {
      reject_unknown(s, {"seed"});
      if (const Entry* e = s.find("seed")) {
        const long v = integer_of(*e);
        if (v < 0) field_error(*e, "seed must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(v);
      }
    } else if (s.name == "grid") {
      reject_unknown(s, {"horizon", "steps"});
      if (const Entry* e = s.find("horizon")) {
        cfg.horizon = real_of(*e);
        if (!(cfg.horizon > 0.0)) field_error(*e, "horizon must be positive");
      }
      if (const Entry* e = s.find("steps")) {
        const long v = integer_of(*e);
        if (v < 1 || v > 1000000) field_error(*e, "steps must lie in [1, 1000000]");
        cfg.steps = static_cast<int>(v);
      }
    }

  // kernels need the grid horizon as their default
  for (const auto& s : sections) {
    if (s.name != "kernel") continue;
    reject_unknown(s, {"family", "hurst", "log_exponent", "scale", "mean_reversion", "holder_c",
                       "holder_alpha", "horizon", "count"});
    std::map<std::string, std::string> table;
    table["horizon"] = format_real(cfg.horizon);
    long count = 1;
    for (const auto& e : s.entries) {
      if (e.key == "count") {
        count = integer_of(e);
        if (count < 1) field_error(e, "count must be >= 1");
        continue;
      }
      if (e.key != "family") real_of(e);
      table[e.key] = e.value;
    }
    if (!s.find("family"))
      fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": [kernel] needs 'family'");
    try {
      const VolterraKernel k = kernel_from_table(table);
      for (long c = 0; c < count; ++c) cfg.kernels.push_back(k);
    } catch (const Error& err) {
      const std::string msg = err.what();
      for (const auto& e : s.entries)
        if (msg.find(e.key) != std::string::npos) field_error(e, msg);
      fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": " + msg);
    }
  }

  for (const auto& s : sections) {
    if (s.name == "model") {
      reject_unknown(s, {"d", "p", "mu", "sigma", "sigma_tilde", "template", "vol", "rho",
                         "growth_alpha", "growth_m1", "growth_m2"});
      int p = static_cast<int>(cfg.kernels.size());
      if (const Entry* e = s.find("p")) p = static_cast<int>(integer_of(*e));
      if (p < 1) fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": p must be >= 1");
      std::optional<ModelCoefficients> model;
      if (const Entry* t = s.find("template")) {
        if (trim(t->value) != "rho") field_error(*t, "only the 'rho' template exists");
        const Entry* vol = s.find("vol");
        const Entry* rho = s.find("rho");
        if (!vol || !rho) field_error(*t, "rho template needs 'vol' and 'rho'");
        for (const char* k : {"mu", "sigma", "sigma_tilde"})
          if (const Entry* e = s.find(k)) field_error(*e, "not allowed together with a template");
        try {
          model = ModelCoefficients::rho_template(map_of(*vol, 1, false), real_of(*rho));
        } catch (const Error& err) {
          if (std::string(err.what()).rfind("line ", 0) == 0) throw;
          field_error(*rho, err.what());
        }
      } else {
        const Entry* sig = s.find("sigma");
        if (!sig) fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": [model] needs 'sigma'");
        CoefficientMap sigma = map_of(*sig, p, false);
        const int d = sigma.rows();
        CoefficientMap mu = s.find("mu") ? map_of(*s.find("mu"), p, true)
                                         : CoefficientMap::constant(Eigen::MatrixXd::Zero(d, 1), p);
        CoefficientMap st = s.find("sigma_tilde")
                                ? map_of(*s.find("sigma_tilde"), p, false)
                                : CoefficientMap::constant(Eigen::MatrixXd::Zero(d, p), p);
        try {
          model.emplace(mu, sigma, st);
        } catch (const Error& err) {
          fail(ErrorCategory::Config, "line " + std::to_string(s.line) + " [model]: " + err.what());
        }
      }
      if (const Entry* e = s.find("d"))
        if (integer_of(*e) != model->d) field_error(*e, "d disagrees with the sigma shape");
      if (model->p != p) {
        const Entry* e = s.find("p");
        const std::string msg = "model has p = " + std::to_string(model->p) + " factors but " +
                                std::to_string(p) + " were declared";
        if (e) field_error(*e, msg);
        fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": " + msg);
      }
      if (const Entry* e = s.find("growth_alpha")) {
        model->growth_alpha = real_of(*e);
        if (!(model->growth_alpha > 0.0)) field_error(*e, "growth_alpha must be positive");
      }
      if (const Entry* e = s.find("growth_m1")) model->growth_m1 = real_of(*e);
      if (const Entry* e = s.find("growth_m2")) model->growth_m2 = real_of(*e);
      cfg.model = std::move(model);
    } else if (s.name == "schedule") {
      reject_unknown(s, {"eta", "rule", "speed_log_exponent"});
      if (const Entry* e = s.find("eta")) {
        try {
          cfg.eta = parse_list(e->value);
        } catch (const Error& err) {
          field_error(*e, err.what());
        }
      }
      if (const Entry* e = s.find("rule")) {
        const std::string r = trim(e->value);
        if (r == "power") cfg.speed_rule = SpeedRule::Power;
        else if (r == "log_fbm") cfg.speed_rule = SpeedRule::LogFbm;
        else field_error(*e, "rule must be 'power' or 'log_fbm'");
      }
      if (const Entry* e = s.find("speed_log_exponent")) cfg.speed_log_exponent = real_of(*e);
    } else if (s.name == "event") {
      reject_unknown(s, {"kind", "direction", "threshold", "lower", "upper", "radius", "tilt_point"});
      EventSpec ev;
      if (const Entry* e = s.find("kind")) ev.kind = trim(e->value);
      if (ev.kind != "half_space" && ev.kind != "box" && ev.kind != "tube")
        field_error(*s.find("kind"), "kind must be half_space, box or tube");
      if (const Entry* e = s.find("direction")) ev.direction = vector_of(*e);
      if (const Entry* e = s.find("threshold")) ev.threshold = real_of(*e);
      if (const Entry* e = s.find("lower")) ev.lower = vector_of(*e);
      if (const Entry* e = s.find("upper")) ev.upper = vector_of(*e);
      if (const Entry* e = s.find("radius")) ev.radius = real_of(*e);
      if (const Entry* e = s.find("tilt_point")) ev.tilt_point = vector_of(*e);
      if (ev.kind == "half_space" && ev.direction.size() == 0)
        fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": half_space needs 'direction'");
      if (ev.kind == "box" && (ev.lower.size() == 0 || ev.upper.size() != ev.lower.size()))
        fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": box needs 'lower' and 'upper'");
      if (ev.kind == "tube" && !(ev.radius > 0.0))
        fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": tube needs a positive 'radius'");
      cfg.event = ev;
    } else if (s.name == "rate") {
      reject_unknown(s, {"functional", "target", "target_csv", "z", "m", "tol", "max_iter",
                         "memory", "starts", "start_scale", "spread_threshold", "seed"});
      RateSpec& r = cfg.rate;
      if (const Entry* e = s.find("functional")) {
        r.functional = trim(e->value);
        if (r.functional != "i_z" && r.functional != "i_z_m" && r.functional != "i_uncorrelated")
          field_error(*e, "functional must be i_z, i_z_m or i_uncorrelated");
      }
      if (const Entry* e = s.find("target")) {
        const auto [word, groups] = split_map_spec(e->value);
        if (word != "straight_line" || groups.size() != 1)
          field_error(*e, "target must be 'straight_line [x_T]'; paths that are not absolutely "
                          "continuous are not accepted");
        r.target_end = vector_of(Entry{e->key, groups[0], e->line});
      }
      if (const Entry* e = s.find("target_csv")) {
        r.target_csv = trim(e->value);
        std::filesystem::path fp(r.target_csv);
        if (fp.is_relative()) fp = std::filesystem::path(base_dir) / fp;
        if (!std::filesystem::exists(fp)) field_error(*e, "file '" + fp.string() + "' not found");
        r.target_csv = fp.string();
      }
      if (const Entry* e = s.find("z")) r.z = vector_of(*e);
      if (const Entry* e = s.find("m")) {
        for (double v : parse_list(e->value)) {
          if (v < 1 || v != std::floor(v)) field_error(*e, "m values must be positive integers");
          r.m.push_back(static_cast<int>(v));
        }
      }
      if (const Entry* e = s.find("tol")) r.optimizer.tol = real_of(*e);
      if (const Entry* e = s.find("max_iter")) r.optimizer.max_iter = static_cast<int>(integer_of(*e));
      if (const Entry* e = s.find("memory")) r.optimizer.memory = static_cast<int>(integer_of(*e));
      if (const Entry* e = s.find("starts")) r.optimizer.starts = static_cast<int>(integer_of(*e));
      if (const Entry* e = s.find("start_scale")) r.optimizer.start_scale = real_of(*e);
      if (const Entry* e = s.find("spread_threshold")) r.optimizer.spread_threshold = real_of(*e);
      if (const Entry* e = s.find("seed")) r.optimizer.seed = static_cast<std::uint64_t>(integer_of(*e));
      if (!(r.optimizer.tol > 0.0) || r.optimizer.max_iter < 1 || r.optimizer.memory < 1 ||
          r.optimizer.starts < 1)
        fail(ErrorCategory::Config, "line " + std::to_string(s.line) + ": optimizer settings out of range");
    } else if (s.name == "simulate") {
      reject_unknown(s, {"paths", "epsilon", "epsilons", "threads", "tilted", "dump_drivers",
                         "refine", "n_quad"});
      SimulateSpec& sim = cfg.simulate;
      if (const Entry* e = s.find("paths")) {
        sim.paths = integer_of(*e);
        if (sim.paths < 1) field_error(*e, "paths must be >= 1");
      }
      if (const Entry* e = s.find("epsilon")) {
        sim.epsilon = real_of(*e);
        if (!(sim.epsilon > 0.0)) field_error(*e, "epsilon must be positive");
      }
      if (const Entry* e = s.find("epsilons")) {
        sim.epsilons = parse_list(e->value);
        for (double v : sim.epsilons)
          if (!(v > 0.0)) field_error(*e, "epsilons must be positive");
      }
      if (const Entry* e = s.find("threads")) {
        sim.threads = static_cast<int>(integer_of(*e));
        if (sim.threads < 1) field_error(*e, "threads must be >= 1");
      }
      if (const Entry* e = s.find("tilted")) sim.tilted = bool_of(*e);
      if (const Entry* e = s.find("dump_drivers")) sim.dump_drivers = bool_of(*e);
      if (const Entry* e = s.find("refine")) {
        sim.refine = static_cast<int>(integer_of(*e));
        if (sim.refine < 1) field_error(*e, "refine must be >= 1");
      }
      if (const Entry* e = s.find("n_quad")) {
        sim.n_quad = static_cast<int>(integer_of(*e));
        if (sim.n_quad < 1) field_error(*e, "n_quad must be >= 1");
      }
    } else if (s.name == "selftest") {
      reject_unknown(s, {"cases"});
      if (const Entry* e = s.find("cases")) {
        cfg.selftest_cases = static_cast<int>(integer_of(*e));
        if (cfg.selftest_cases < 1) field_error(*e, "cases must be >= 1");
      }
    }
  }

  if (cfg.kernels.empty()) fail(ErrorCategory::Config, "missing [kernel] section");
  for (const auto& k : cfg.kernels)
    if (k.horizon() < cfg.horizon * (1.0 - 1e-12))
      fail(ErrorCategory::Config, "kernel horizon " + format_real(k.horizon()) +
                                      " is shorter than the grid horizon " + format_real(cfg.horizon));
  KernelBank(cfg.kernels);
  if (cfg.model && cfg.model->p != static_cast<int>(cfg.kernels.size()))
    fail(ErrorCategory::Config, "model has p = " + std::to_string(cfg.model->p) + " but " +
                                    std::to_string(cfg.kernels.size()) + " kernels are configured");
  for (int m : cfg.rate.m)
    if (cfg.steps % m != 0)
      fail(ErrorCategory::Divisibility, "grid N = " + std::to_string(cfg.steps) +
                                            " is not divisible by m = " + std::to_string(m));
  if (!cfg.eta.empty()) cfg.schedule();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Io, "cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(buf.str(), dir.empty() ? "." : dir.string());
}

}  // namespace vldp
