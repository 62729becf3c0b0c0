#include "vldp/error.hpp"

namespace vldp {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Domain: return "DOMAIN";
    case ErrorCategory::Config: return "CONFIG";
    case ErrorCategory::Singular: return "SINGULAR";
    case ErrorCategory::Quadrature: return "QUADRATURE";
    case ErrorCategory::Divisibility: return "DIVISIBILITY";
    case ErrorCategory::InsufficientData: return "INSUFFICIENT_DATA";
    case ErrorCategory::Validation: return "VALIDATION";
    case ErrorCategory::Io: return "IO";
  }
  return "UNKNOWN";
}

void fail(ErrorCategory category, const std::string& what) {
  throw Error(category, what);
}

}  // namespace vldp
