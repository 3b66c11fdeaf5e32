#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace grdr {

// FNV-1a, used for config fingerprints.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t hash_bytes(const void* data, std::size_t len,
                                std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t hash_string(std::string_view s, std::uint64_t h = kFnvOffset) {
  return hash_bytes(s.data(), s.size(), h);
}

inline std::uint64_t hash_u64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
  return hash_bytes(&v, sizeof(v), h);
}

inline std::uint64_t hash_double(double v, std::uint64_t h = kFnvOffset) {
  return hash_bytes(&v, sizeof(v), h);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return hash_u64(b, a ^ kFnvPrime);
}

/// Shortest decimal form that round-trips a double (17 significant digits).
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void log_warning(const std::string& message);

}  // namespace grdr
