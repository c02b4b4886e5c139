#pragma once

// Hand-rolled random generators for property tests.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "symrec/recording.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline double real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int integer(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct RecordingShape {
  int min_strokes = 1;
  int max_strokes = 4;
  int min_points = 1;
  int max_points = 30;
  bool integral = true;  // raw-capture style integer coordinates and times
};

/// Random recording with strictly increasing time across all points.
inline symrec::Recording recording(Rng& rng, const RecordingShape& shape = {}) {
  symrec::Recording rec;
  const int strokes = integer(rng, shape.min_strokes, shape.max_strokes);
  double t = shape.integral ? std::floor(real(rng, 1.4e12, 1.5e12)) : real(rng, 0.0, 1000.0);
  double x = real(rng, 0, 800), y = real(rng, 0, 800);
  for (int s = 0; s < strokes; ++s) {
    symrec::Stroke stroke;
    const int n = integer(rng, shape.min_points, shape.max_points);
    for (int i = 0; i < n; ++i) {
      x += real(rng, -15, 15);
      y += real(rng, -15, 15);
      t += shape.integral ? integer(rng, 1, 30) : real(rng, 0.5, 30);
      if (shape.integral)
        stroke.push_back({std::round(x), std::round(y), t, true});
      else
        stroke.push_back({x, y, t, true});
    }
    rec.strokes.push_back(std::move(stroke));
    t += shape.integral ? integer(rng, 50, 400) : real(rng, 50, 400);
  }
  return rec;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string& name) { return read_text(std::string(SYMREC_TEST_DATA) + "/" + name); }

}  // namespace gen
