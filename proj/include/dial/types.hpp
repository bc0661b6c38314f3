#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dial {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

inline constexpr std::uint64_t kPageSize = 4096;  // Lustre client page granularity

enum class OpType { Read, Write };

inline const char* to_string(OpType op) { return op == OpType::Read ? "read" : "write"; }

inline OpType op_from_string(const std::string& s) {
  if (s == "read") return OpType::Read;
  if (s == "write") return OpType::Write;
  throw std::invalid_argument("unknown op type: " + s);
}

// 64-bit FNV-1a, used for scenario hashes and trace digests.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), seed);
}

}  // namespace dial
