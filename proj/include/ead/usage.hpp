#pragma once

#include <cstddef>
#include <span>

#include "ead/error.hpp"

namespace ead {

enum class ModelRole : unsigned char { Small, Large };

constexpr const char* to_string(ModelRole role) { return role == ModelRole::Small ? "small" : "large"; }

/// Token counts per model. alpha/beta are the small/large fractions.
struct UsageStats {
  std::size_t tokens_small = 0;
  std::size_t tokens_large = 0;
  std::size_t switches = 0;
  double alpha = 0.0;
  double beta = 0.0;

  std::size_t total() const noexcept { return tokens_small + tokens_large; }

  friend bool operator==(const UsageStats&, const UsageStats&) = default;
};

inline UsageStats make_usage(std::size_t tokens_small, std::size_t tokens_large, std::size_t switches) {
  const std::size_t total = tokens_small + tokens_large;
  if (total == 0) throw Error(ErrorKind::InvalidInput, "usage over zero tokens");
  UsageStats u{tokens_small, tokens_large, switches, 0.0, 0.0};
  u.alpha = static_cast<double>(tokens_small) / static_cast<double>(total);
  // Derived from alpha so that alpha + beta == 1 holds to rounding of one subtraction.
  u.beta = 1.0 - u.alpha;
  return u;
}

inline UsageStats usage_from_roles(std::span<const ModelRole> roles, std::size_t switches) {
  std::size_t large = 0;
  for (ModelRole r : roles) large += (r == ModelRole::Large);
  return make_usage(roles.size() - large, large, switches);
}

}  // namespace ead
