#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace symrec {

/// 64-bit FNV-1a. Used to fingerprint feature specs and model files.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace symrec
