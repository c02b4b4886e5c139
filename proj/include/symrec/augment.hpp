#pragma once

// Training-set expansion: plain copies and small rotations around the center of mass.

#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "symrec/diagnostics.hpp"
#include "symrec/error.hpp"
#include "symrec/recording.hpp"

namespace symrec {

namespace augmentations {

struct Multiply {
  int nr = 1;
  friend bool operator==(const Multiply&, const Multiply&) = default;
};

/// Angles in degrees.
struct Rotate {
  double min = -3.0;
  double max = 3.0;
  int num = 2;
  friend bool operator==(const Rotate&, const Rotate&) = default;
};

}  // namespace augmentations

using AugmentationStep = std::variant<augmentations::Multiply, augmentations::Rotate>;

/// Each recording repeated `nr` times in a row.
inline std::vector<Recording> multiply(const std::vector<Recording>& recs, int nr) {
  if (nr < 1) throw ParameterError("multiply: nr must be >= 1");
  std::vector<Recording> out;
  out.reserve(recs.size() * static_cast<std::size_t>(nr));
  for (const auto& r : recs)
    for (int i = 0; i < nr; ++i) out.push_back(r);
  return out;
}

inline Point center_of_mass(const Recording& rec) {
  Point c{0.0, 0.0, 0.0, true};
  const auto n = static_cast<double>(rec.point_count());
  if (n == 0) return c;
  for (const auto& s : rec.strokes)
    for (const auto& p : s) {
      c.x += p.x;
      c.y += p.y;
    }
  c.x /= n;
  c.y /= n;
  return c;
}

/// Rotation by `degrees` around `center`; timestamps and pen state are kept.
inline Recording rotated(const Recording& rec, double degrees, const Point& center) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  Recording out = rec;
  for (auto& stroke : out.strokes)
    for (auto& p : stroke) {
      const double dx = p.x - center.x;
      const double dy = p.y - center.y;
      p.x = center.x + c * dx - s * dy;
      p.y = center.y + s * dx + c * dy;
    }
  return out;
}

/// The `num` angles used by rotate: inclusive equal spacing, the midpoint when num == 1.
inline std::vector<double> rotation_angles(double min, double max, int num) {
  std::vector<double> angles;
  if (num == 1) return {(min + max) / 2.0};
  for (int i = 0; i < num; ++i) angles.push_back(min + (max - min) * i / (num - 1));
  return angles;
}

/// Every original followed by its `num` rotated variants.
inline std::vector<Recording> rotate(const std::vector<Recording>& recs, double min, double max, int num,
                                     Diagnostics* diag = nullptr) {
  if (!(min <= max)) throw ParameterError("rotate: min must be <= max");
  if (num < 1) throw ParameterError("rotate: num must be >= 1");
  if (std::fabs(min) >= 22.5 || std::fabs(max) >= 22.5)
    warn(diag, "rotate: angles of 22.5 degrees or more can turn one symbol into another");
  const auto angles = rotation_angles(min, max, num);
  std::vector<Recording> out;
  out.reserve(recs.size() * (angles.size() + 1));
  for (const auto& r : recs) {
    out.push_back(r);
    const Point c = center_of_mass(r);
    for (double a : angles) out.push_back(rotated(r, a, c));
  }
  return out;
}

inline std::vector<Recording> apply_augmentation(const std::vector<Recording>& recs, const AugmentationStep& step,
                                                 Diagnostics* diag = nullptr) {
  if (const auto* m = std::get_if<augmentations::Multiply>(&step)) return multiply(recs, m->nr);
  const auto& r = std::get<augmentations::Rotate>(step);
  return rotate(recs, r.min, r.max, r.num, diag);
}

inline AugmentationStep augmentation_from_config(const std::string& name, const nlohmann::json& params) {
  auto number = [&](const char* key, double fallback) {
    if (params.is_null() || !params.contains(key)) return fallback;
    if (!params.at(key).is_number()) throw ConfigError(name + ": parameter '" + key + "' must be a number");
    return params.at(key).get<double>();
  };
  if (!params.is_null() && !params.is_object()) throw ConfigError(name + ": parameters must be a mapping");
  if (name == "Multiply") {
    if (!params.is_null())
      for (const auto& [k, _] : params.items())
        if (k != "nr") throw ConfigError("Multiply: unknown parameter '" + k + "'");
    const int nr = static_cast<int>(number("nr", 1));
    if (nr < 1) throw ConfigError("Multiply: nr must be >= 1");
    return augmentations::Multiply{nr};
  }
  if (name == "Rotate") {
    if (!params.is_null())
      for (const auto& [k, _] : params.items())
        if (k != "min" && k != "max" && k != "num") throw ConfigError("Rotate: unknown parameter '" + k + "'");
    augmentations::Rotate r{number("min", -3.0), number("max", 3.0), static_cast<int>(number("num", 2))};
    if (!(r.min <= r.max)) throw ConfigError("Rotate: min must be <= max");
    if (r.num < 1) throw ConfigError("Rotate: num must be >= 1");
    return r;
  }
  throw ConfigError("unknown data augmentation '" + name + "'");
}

inline nlohmann::json augmentation_to_json(const AugmentationStep& step) {
  if (const auto* m = std::get_if<augmentations::Multiply>(&step)) return {{"Multiply", {{"nr", m->nr}}}};
  const auto& r = std::get<augmentations::Rotate>(step);
  return {{"Rotate", {{"min", r.min}, {"max", r.max}, {"num", r.num}}}};
}

}  // namespace symrec
