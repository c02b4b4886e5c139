#pragma once

#include <vector>

#include "symrec/recording.hpp"

namespace symrec {

struct Prediction {
  SymbolId symbol = 0;
  double probability = 0.0;
  /// Backend-specific raw score: template distance for GTW, equal to probability for the MLP.
  double score = 0.0;
};

/// Ranked best-first.
using ClassificationResult = std::vector<Prediction>;

}  // namespace symrec
