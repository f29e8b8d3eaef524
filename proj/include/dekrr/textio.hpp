#pragma once
// Deterministic text formatting: shortest round-trip double rendering and
// the FNV-1a hash used to fingerprint configurations. Output files must be
// byte-identical across reruns, so all numeric emission goes through here.

#include <charconv>
#include <cstdint>
#include <string>

namespace dekrr {

// Shortest decimal string that parses back to exactly the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace dekrr
