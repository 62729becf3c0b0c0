#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vldp {

enum class ErrorCategory {
  Domain,
  Config,
  Singular,
  Quadrature,
  Divisibility,
  InsufficientData,
  Validation,
  Io,
};

std::string_view category_name(ErrorCategory category);

/// Library error carrying a category; the CLI maps categories to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] void fail(ErrorCategory category, const std::string& what);

}  // namespace vldp
