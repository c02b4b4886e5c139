#pragma once

// Points, strokes and recordings, and the JSON recording format:
//
//   [[{"x":657,"y":600,"time":1411732873010}, ...], [...]]
//
// A recording is a list of strokes, a stroke a list of control points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "symrec/error.hpp"

namespace symrec {

using SymbolId = int;

struct Point {
  double x = 0.0;
  double y = 0.0;
  /// Milliseconds. Absolute (epoch) on ingestion, relative after scale-and-shift.
  /// Smoothing and resampling produce fractional times, hence double.
  double t = 0.0;
  /// False only for points interpolated between strokes by space_evenly.
  bool pen_down = true;

  friend bool operator==(const Point&, const Point&) = default;
};

using Stroke = std::vector<Point>;

struct Recording {
  std::optional<std::int64_t> id;
  std::vector<Stroke> strokes;
  std::optional<SymbolId> label;

  friend bool operator==(const Recording&, const Recording&) = default;

  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& s : strokes) n += s.size();
    return n;
  }

  /// All points in drawing order.
  std::vector<Point> flattened() const {
    std::vector<Point> out;
    out.reserve(point_count());
    for (const auto& s : strokes) out.insert(out.end(), s.begin(), s.end());
    return out;
  }
};

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Bidirectional map between symbol ids and their LaTeX commands.
class SymbolTable {
 public:
  SymbolTable() = default;

  void add(SymbolId id, std::string command) {
    if (by_id_.contains(id)) throw ValueError("duplicate symbol id " + std::to_string(id));
    if (by_command_.contains(command)) throw ValueError("duplicate symbol command " + command);
    by_command_.emplace(command, id);
    by_id_.emplace(id, std::move(command));
  }

  std::size_t size() const { return by_id_.size(); }
  bool empty() const { return by_id_.empty(); }
  bool contains(SymbolId id) const { return by_id_.contains(id); }

  const std::string& command(SymbolId id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw ValueError("unknown symbol id " + std::to_string(id));
    return it->second;
  }

  std::optional<SymbolId> find(std::string_view command) const {
    auto it = by_command_.find(std::string(command));
    if (it == by_command_.end()) return std::nullopt;
    return it->second;
  }

  /// Ids in ascending order; position i is the i-th output neuron of a classifier.
  std::vector<SymbolId> ids() const {
    std::vector<SymbolId> out;
    out.reserve(by_id_.size());
    for (const auto& [id, _] : by_id_) out.push_back(id);
    return out;
  }

  std::size_t index_of(SymbolId id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw ValueError("unknown symbol id " + std::to_string(id));
    return static_cast<std::size_t>(std::distance(by_id_.begin(), it));
  }

  const std::map<SymbolId, std::string>& entries() const { return by_id_; }

  friend bool operator==(const SymbolTable& a, const SymbolTable& b) { return a.by_id_ == b.by_id_; }

 private:
  std::map<SymbolId, std::string> by_id_;
  std::map<std::string, SymbolId> by_command_;
};

namespace detail {

inline double point_field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw StructuralError(std::string("control point without \"") + key + "\" key");
  if (!it->is_number()) throw ValueError(std::string("non-numeric \"") + key + "\" value: " + it->dump());
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ValueError(std::string("non-finite \"") + key + "\" value");
  return v;
}

/// Integral values print without a fraction so that integer input reproduces byte for byte.
inline void append_number(std::string& out, double v) {
  if (v == std::floor(v) && std::fabs(v) < 9007199254740992.0) {
    out += std::to_string(static_cast<std::int64_t>(v));
  } else {
    out += nlohmann::json(v).dump();
  }
}

}  // namespace detail

/// Builds a recording from an already-parsed JSON value (array of strokes).
inline Recording recording_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw StructuralError("recording must be a JSON array of strokes");
  if (doc.empty()) throw StructuralError("recording has no strokes");
  Recording rec;
  rec.strokes.reserve(doc.size());
  for (const auto& jstroke : doc) {
    if (!jstroke.is_array()) throw StructuralError("stroke must be a JSON array of points");
    if (jstroke.empty()) throw StructuralError("recording contains an empty stroke");
    Stroke stroke;
    stroke.reserve(jstroke.size());
    for (const auto& jp : jstroke) {
      if (!jp.is_object()) throw StructuralError("control point must be a JSON object");
      Point p;
      p.x = detail::point_field(jp, "x");
      p.y = detail::point_field(jp, "y");
      p.t = detail::point_field(jp, "time");
      if (p.t < 0) throw ValueError("negative timestamp");
      stroke.push_back(p);
    }
    rec.strokes.push_back(std::move(stroke));
  }
  return rec;
}

inline Recording parse_recording(std::string_view raw_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(raw_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed recording JSON: ") + e.what());
  }
  return recording_from_json(doc);
}

/// Compact JSON with key order x, y, time. Pen state is not part of the format.
inline std::string serialize_recording(const Recording& rec) {
  std::string out;
  out.reserve(rec.point_count() * 40 + 2);
  out += '[';
  for (std::size_t s = 0; s < rec.strokes.size(); ++s) {
    if (s) out += ',';
    out += '[';
    const auto& stroke = rec.strokes[s];
    for (std::size_t i = 0; i < stroke.size(); ++i) {
      if (i) out += ',';
      out += "{\"x\":";
      detail::append_number(out, stroke[i].x);
      out += ",\"y\":";
      detail::append_number(out, stroke[i].y);
      out += ",\"time\":";
      detail::append_number(out, stroke[i].t);
      out += '}';
    }
    out += ']';
  }
  out += ']';
  return out;
}

inline nlohmann::json recording_to_json(const Recording& rec) {
  return nlohmann::json::parse(serialize_recording(rec));
}

inline BoundingBox bounding_box(const Recording& rec) {
  if (rec.strokes.empty() || rec.strokes.front().empty())
    throw StructuralError("bounding box of an empty recording");
  const Point& first = rec.strokes.front().front();
  BoundingBox box{first.x, first.y, first.x, first.y};
  for (const auto& stroke : rec.strokes) {
    for (const auto& p : stroke) {
      box.x_min = std::min(box.x_min, p.x);
      box.y_min = std::min(box.y_min, p.y);
      box.x_max = std::max(box.x_max, p.x);
      box.y_max = std::max(box.y_max, p.y);
    }
  }
  return box;
}

inline BoundingBox bounding_box(const Stroke& stroke) {
  Recording tmp;
  tmp.strokes.push_back(stroke);
  return bounding_box(tmp);
}

/// Throws StructuralError unless the recording has at least one stroke and no empty stroke.
inline void validate(const Recording& rec) {
  if (rec.strokes.empty()) throw StructuralError("recording has no strokes");
  for (const auto& s : rec.strokes)
    if (s.empty()) throw StructuralError("recording contains an empty stroke");
}

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Summed euclidean length of consecutive segments.
inline double path_length(const Stroke& stroke) {
  double len = 0.0;
  for (std::size_t i = 1; i < stroke.size(); ++i) len += distance(stroke[i - 1], stroke[i]);
  return len;
}

}  // namespace symrec
