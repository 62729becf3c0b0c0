#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vldp {

struct PropertyResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  std::string first_failure;

  bool passed() const { return cases > 0 && failures == 0; }
};

// Randomized property suites. Each case draws its own inputs from
// PathRng(seed, case), so a failing case can be replayed on its own.
PropertyResult check_gamma_monotone(int cases, std::uint64_t seed);
PropertyResult check_gamma_two_term(int cases, std::uint64_t seed);
PropertyResult check_gamma_three_term(int cases, std::uint64_t seed);
PropertyResult check_hat_map_bound(int cases, std::uint64_t seed);
PropertyResult check_phi_m_bound(int cases, std::uint64_t seed);
PropertyResult check_inverse_lower_bound(int cases, std::uint64_t seed);
PropertyResult check_domination_multiplier(int cases, std::uint64_t seed);
PropertyResult check_eigenvalue_bound(int cases, std::uint64_t seed);
PropertyResult check_gradients(int cases, std::uint64_t seed);
PropertyResult check_kernel_invariants(int cases, std::uint64_t seed);

std::vector<PropertyResult> run_property_suites(int cases, std::uint64_t seed);

}  // namespace vldp
