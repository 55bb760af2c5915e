#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace engage {

// Shortest decimal form that round-trips to the same double. All persisted
// floats go through here so artifacts are bit-stable.
inline std::string format_double(double v) {
  char buf[32];
  const std::to_chars_result r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const std::from_chars_result r = std::from_chars(begin, end, out);
  return r.ec == std::errc() && r.ptr == end;
}

}  // namespace engage
