#pragma once

#include <string>
#include <vector>

namespace symrec {

/// Collects non-fatal warnings (queue order, interpolation fallbacks, skipped config entries).
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
  bool empty() const { return warnings.empty(); }
};

inline void warn(Diagnostics* diag, std::string message) {
  if (diag) diag->warn(std::move(message));
}

}  // namespace symrec
