#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vldp/error.hpp"

namespace vldp {

inline constexpr const char* kVersion = "0.1.0";

struct CliOptions {
  std::string subcommand;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::optional<int> threads;
  std::string z;  // terminal-rate target, "1,1" or "[1 1]"
};

const std::vector<std::string>& subcommands();

/// Process exit status for an error category; 0 is success, 1 is reserved
/// for failures outside the library.
int exit_code(ErrorCategory category);

/// Runs one subcommand and writes its artifacts plus manifest.txt into
/// opts.out_dir. Errors are reported on err as "error[CATEGORY]: message".
int run_subcommand(const CliOptions& opts, std::ostream& out, std::ostream& err);

/// Writes content to path via a sibling temp file and rename.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace vldp
