#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace ead::detail {

/// Shortest decimal form that parses back to the identical double.
inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) return std::to_string(v);
  return std::string(buf, res.ptr);
}

}  // namespace ead::detail
