#pragma once

// Small generated datasets for smoke tests and demos: five geometric symbols
// drawn with random size, position, slant, speed and jitter.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "symrec/dataset.hpp"
#include "symrec/mlp.hpp"
#include "symrec/recording.hpp"

namespace symrec {

struct SyntheticOptions {
  std::size_t per_class = 200;
  std::uint64_t seed = 1;
  double jitter = 0.03;         // per-point noise, relative to symbol size
  double max_rotation = 10.0;   // degrees
};

namespace detail {

struct Path {
  double x0, y0, x1, y1;  // segment, or circle when circle == true
  bool circle = false;
};

inline std::vector<std::vector<Path>> synthetic_shapes() {
  return {
      {{0.0, 0.5, 1.0, 0.5}},                             // -
      {{0.5, 0.0, 0.5, 1.0}},                             // |
      {{0.5, 0.5, 0.5, 0.5, true}},                       // o
      {{0.0, 0.5, 1.0, 0.5}, {0.5, 0.0, 0.5, 1.0}},       // +
      {{0.0, 0.35, 1.0, 0.35}, {0.0, 0.65, 1.0, 0.65}},   // =
  };
}

inline double gaussian(Rng& rng) {
  // Box-Muller with the explicit uniform mapping.
  const double u1 = std::max(uniform01(rng), 1e-300);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

inline std::vector<std::string> synthetic_commands() { return {"-", "|", "o", "+", "="}; }

inline LabeledRecordings synthetic_dataset(const SyntheticOptions& opt = {}) {
  LabeledRecordings out;
  const auto commands = synthetic_commands();
  for (std::size_t i = 0; i < commands.size(); ++i) out.symbols.add(static_cast<SymbolId>(i + 1), commands[i]);
  const auto shapes = detail::synthetic_shapes();
  Rng rng(opt.seed);
  std::int64_t next_id = 1;
  double clock = 1.4e12;
  for (std::size_t k = 0; k < opt.per_class; ++k) {
    for (std::size_t s = 0; s < shapes.size(); ++s) {
      Recording rec;
      rec.id = next_id++;
      rec.label = static_cast<SymbolId>(s + 1);
      const double size = uniform(rng, 50.0, 150.0);
      const double ox = uniform(rng, 0.0, 500.0), oy = uniform(rng, 0.0, 500.0);
      const double rot = uniform(rng, -opt.max_rotation, opt.max_rotation) * std::numbers::pi / 180.0;
      const double c = std::cos(rot), sn = std::sin(rot);
      double t = clock;
      for (const auto& path : shapes[s]) {
        const int n = static_cast<int>(uniform(rng, 10.0, 31.0));
        const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        Stroke stroke;
        for (int i = 0; i < n; ++i) {
          const double u = static_cast<double>(i) / (n - 1);
          double x, y;
          if (path.circle) {
            const double a = phase + 2.0 * std::numbers::pi * u;
            x = path.x0 + 0.5 * std::cos(a);
            y = path.y0 + 0.5 * std::sin(a);
          } else {
            x = path.x0 + (path.x1 - path.x0) * u;
            y = path.y0 + (path.y1 - path.y0) * u;
          }
          x += opt.jitter * detail::gaussian(rng);
          y += opt.jitter * detail::gaussian(rng);
          const double dx = (x - 0.5) * size, dy = (y - 0.5) * size;
          stroke.push_back({std::round(ox + c * dx - sn * dy), std::round(oy + sn * dx + c * dy), std::round(t), true});
          t += uniform(rng, 8.0, 20.0);
        }
        rec.strokes.push_back(std::move(stroke));
        t += uniform(rng, 100.0, 300.0);
      }
      clock = t + 1000.0;
      out.recordings.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace symrec
