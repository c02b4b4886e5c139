#pragma once

// Feature catalog. Every feature has a dimension that depends only on its
// parameters, so a list of features maps each recording to a vector of fixed
// length. Strokes are taken in drawing order, points in temporal order.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "symrec/error.hpp"
#include "symrec/hash.hpp"
#include "symrec/recording.hpp"

namespace symrec {

using FeatureVector = std::vector<double>;

namespace features {

struct ConstantPointCoordinates {
  int strokes = 4;
  int points_per_stroke = 20;
  double fill_empty_with = 0.0;
  bool pen_down = false;
  friend bool operator==(const ConstantPointCoordinates&, const ConstantPointCoordinates&) = default;
};
struct FirstNPoints {
  int n = 81;
  double fill_empty_with = 0.0;
  friend bool operator==(const FirstNPoints&, const FirstNPoints&) = default;
};
struct StrokeCount {
  friend bool operator==(const StrokeCount&, const StrokeCount&) = default;
};
struct Bitmap {
  int n = 32;
  friend bool operator==(const Bitmap&, const Bitmap&) = default;
};
struct Ink {
  friend bool operator==(const Ink&, const Ink&) = default;
};
struct AspectRatio {
  friend bool operator==(const AspectRatio&, const AspectRatio&) = default;
};
struct Width {
  friend bool operator==(const Width&, const Width&) = default;
};
struct Height {
  friend bool operator==(const Height&, const Height&) = default;
};
struct Time {
  friend bool operator==(const Time&, const Time&) = default;
};
struct CenterOfMass {
  friend bool operator==(const CenterOfMass&, const CenterOfMass&) = default;
};
struct StrokeCenter {
  int strokes = 4;
  friend bool operator==(const StrokeCenter&, const StrokeCenter&) = default;
};
struct StrokeIntersections {
  int strokes = 4;
  friend bool operator==(const StrokeIntersections&, const StrokeIntersections&) = default;
};
struct ReCurvature {
  int strokes = 4;
  friend bool operator==(const ReCurvature&, const ReCurvature&) = default;
};
/// (cos, sin) of the writing direction at the first `points_per_stroke` interior points.
struct Direction {
  int strokes = 4;
  int points_per_stroke = 20;
  double fill_empty_with = 0.0;
  friend bool operator==(const Direction&, const Direction&) = default;
};
/// (cos, sin) of the change of direction at the first `points_per_stroke` points where it is defined.
struct Curvature {
  int strokes = 4;
  int points_per_stroke = 20;
  double fill_empty_with = 0.0;
  friend bool operator==(const Curvature&, const Curvature&) = default;
};

}  // namespace features

using FeatureSpec =
    std::variant<features::ConstantPointCoordinates, features::FirstNPoints, features::StrokeCount, features::Bitmap,
                 features::Ink, features::AspectRatio, features::Width, features::Height, features::Time,
                 features::CenterOfMass, features::StrokeCenter, features::StrokeIntersections,
                 features::ReCurvature, features::Direction, features::Curvature>;

using FeatureList = std::vector<FeatureSpec>;

// ---------------------------------------------------------------------------
// Local features

struct LocalFeature {
  std::size_t index = 0;  // point index within the stroke
  double cos_theta = 0.0;
  double sin_theta = 0.0;
  bool has_curvature = false;
  double cos_phi = 0.0;
  double sin_phi = 0.0;
};

/// Direction at every interior point of every stroke, from the central
/// difference of its neighbours; coincident neighbours give (0, 0). Curvature
/// phi(i) = theta(i+1) - theta(i-1) where both directions exist.
inline std::vector<std::vector<LocalFeature>> direction_and_curvature(const Recording& rec) {
  std::vector<std::vector<LocalFeature>> out;
  out.reserve(rec.strokes.size());
  for (const auto& stroke : rec.strokes) {
    std::vector<LocalFeature> local;
    const std::size_t n = stroke.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double dx = stroke[i + 1].x - stroke[i - 1].x;
      const double dy = stroke[i + 1].y - stroke[i - 1].y;
      const double ds = std::hypot(dx, dy);
      LocalFeature f;
      f.index = i;
      if (ds > 0) {
        f.cos_theta = dx / ds;
        f.sin_theta = dy / ds;
      }
      local.push_back(f);
    }
    // local[k] describes point k + 1, so theta(i -+ 1) are local[i - 2] and local[i].
    for (std::size_t k = 1; k + 1 < local.size(); ++k) {
      const LocalFeature& before = local[k - 1];
      const LocalFeature& after = local[k + 1];
      local[k].has_curvature = true;
      local[k].cos_phi = before.cos_theta * after.cos_theta + before.sin_theta * after.sin_theta;
      local[k].sin_phi = before.cos_theta * after.sin_theta - before.sin_theta * after.cos_theta;
    }
    out.push_back(std::move(local));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Global features

/// Total length of all pen-down segments.
inline double ink(const Recording& rec) {
  double total = 0.0;
  for (const auto& s : rec.strokes)
    for (std::size_t i = 1; i < s.size(); ++i)
      if (s[i - 1].pen_down && s[i].pen_down) total += distance(s[i - 1], s[i]);
  return total;
}

/// Height of a stroke divided by its path length; 0 for a stroke without length.
inline double re_curvature(const Stroke& stroke) {
  if (stroke.empty()) return 0.0;
  const double len = path_length(stroke);
  if (len == 0.0) return 0.0;
  return bounding_box(stroke).height() / len;
}

inline double aspect_ratio(const Recording& rec) {
  const BoundingBox box = bounding_box(rec);
  return (box.width() + 0.01) / (box.height() + 0.01);
}

namespace detail {

inline double orientation(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// True when the segments cross at a single point interior to both.
inline bool segments_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = orientation(p1, p2, q1);
  const double d2 = orientation(p1, p2, q2);
  const double d3 = orientation(q1, q2, p1);
  const double d4 = orientation(q1, q2, p2);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace detail

/// Number of crossing segment pairs between two strokes, or within one stroke when a == b.
inline int count_intersections(const Stroke& a, const Stroke& b, bool same_stroke) {
  int count = 0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    const std::size_t j_start = same_stroke ? i + 2 : 1;
    for (std::size_t j = j_start; j < b.size(); ++j)
      if (detail::segments_cross(a[i - 1], a[i], b[j - 1], b[j])) ++count;
  }
  return count;
}

namespace detail {

/// Marks every grid cell a segment passes through (cell traversal in grid units).
inline void rasterize_segment(std::vector<double>& grid, int n, double u0, double v0, double u1, double v1) {
  auto cell = [n](double u) { return std::clamp(static_cast<int>(std::floor(u)), 0, n - 1); };
  int cu = cell(u0), cv = cell(v0);
  const int eu = cell(u1), ev = cell(v1);
  grid[static_cast<std::size_t>(cv * n + cu)] = 1.0;
  const double du = u1 - u0, dv = v1 - v0;
  const int su = du > 0 ? 1 : (du < 0 ? -1 : 0);
  const int sv = dv > 0 ? 1 : (dv < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  // Boundaries of the (clamped) start cell, so a start on the far edge stays in cell n - 1.
  double t_max_u = su == 0 ? inf : ((su > 0 ? cu + 1.0 : double(cu)) - u0) / du;
  double t_max_v = sv == 0 ? inf : ((sv > 0 ? cv + 1.0 : double(cv)) - v0) / dv;
  const double t_delta_u = su == 0 ? inf : std::fabs(1.0 / du);
  const double t_delta_v = sv == 0 ? inf : std::fabs(1.0 / dv);
  for (int guard = 0; (cu != eu || cv != ev) && guard < 4 * n + 4; ++guard) {
    if (t_max_u < t_max_v) {
      cu = std::clamp(cu + su, 0, n - 1);
      t_max_u += t_delta_u;
    } else {
      cv = std::clamp(cv + sv, 0, n - 1);
      t_max_v += t_delta_v;
    }
    if (t_max_u > 1.0 + 1e-12 && t_max_v > 1.0 + 1e-12) {
      cu = eu;
      cv = ev;
    }
    grid[static_cast<std::size_t>(cv * n + cu)] = 1.0;
  }
}

}  // namespace detail

/// n x n binary raster, row-major with row 0 at the smallest y. The grid covers
/// a square centered on the bounding box with side max(width, height).
inline std::vector<double> bitmap(const Recording& rec, int n) {
  if (n < 1) throw ParameterError("bitmap: n must be >= 1");
  std::vector<double> grid(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  const BoundingBox box = bounding_box(rec);
  const double side = std::max(box.width(), box.height());
  const double cx = (box.x_min + box.x_max) / 2.0;
  const double cy = (box.y_min + box.y_max) / 2.0;
  auto to_grid = [&](double v, double center) {
    if (side == 0.0) return n / 2.0;
    return (v - (center - side / 2.0)) / side * n;
  };
  for (const auto& s : rec.strokes) {
    if (s.size() == 1) {
      detail::rasterize_segment(grid, n, to_grid(s[0].x, cx), to_grid(s[0].y, cy), to_grid(s[0].x, cx),
                                to_grid(s[0].y, cy));
      continue;
    }
    for (std::size_t i = 1; i < s.size(); ++i)
      detail::rasterize_segment(grid, n, to_grid(s[i - 1].x, cx), to_grid(s[i - 1].y, cy), to_grid(s[i].x, cx),
                                to_grid(s[i].y, cy));
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Feature specs

inline std::size_t dimension(const FeatureSpec& spec) {
  return std::visit(
      [](const auto& f) -> std::size_t {
        using T = std::decay_t<decltype(f)>;
        using features::ConstantPointCoordinates;
        if constexpr (std::is_same_v<T, ConstantPointCoordinates>) {
          const std::size_t per_point = f.pen_down ? 3 : 2;
          const std::size_t pps = static_cast<std::size_t>(f.points_per_stroke);
          return f.strokes == 0 ? per_point * pps : per_point * pps * static_cast<std::size_t>(f.strokes);
        } else if constexpr (std::is_same_v<T, features::FirstNPoints>) {
          return 2 * static_cast<std::size_t>(f.n);
        } else if constexpr (std::is_same_v<T, features::Bitmap>) {
          return static_cast<std::size_t>(f.n) * static_cast<std::size_t>(f.n);
        } else if constexpr (std::is_same_v<T, features::CenterOfMass>) {
          return 2;
        } else if constexpr (std::is_same_v<T, features::StrokeCenter>) {
          return 2 * static_cast<std::size_t>(f.strokes);
        } else if constexpr (std::is_same_v<T, features::StrokeIntersections>) {
          const auto s = static_cast<std::size_t>(f.strokes);
          return s * (s + 1) / 2;
        } else if constexpr (std::is_same_v<T, features::ReCurvature>) {
          return static_cast<std::size_t>(f.strokes);
        } else if constexpr (std::is_same_v<T, features::Direction> || std::is_same_v<T, features::Curvature>) {
          return 2 * static_cast<std::size_t>(f.strokes) * static_cast<std::size_t>(f.points_per_stroke);
        } else {
          return 1;
        }
      },
      spec);
}

inline std::size_t dimension(const FeatureList& specs) {
  std::size_t total = 0;
  for (const auto& s : specs) total += dimension(s);
  return total;
}

inline FeatureVector compute(const Recording& rec, const FeatureSpec& spec) {
  validate(rec);
  return std::visit(
      [&](const auto& f) -> FeatureVector {
        using T = std::decay_t<decltype(f)>;
        FeatureVector v;
        if constexpr (std::is_same_v<T, features::ConstantPointCoordinates>) {
          const auto pps = static_cast<std::size_t>(f.points_per_stroke);
          auto emit = [&](const Point* p) {
            v.push_back(p ? p->x : f.fill_empty_with);
            v.push_back(p ? p->y : f.fill_empty_with);
            if (f.pen_down) v.push_back(p ? (p->pen_down ? 1.0 : 0.0) : f.fill_empty_with);
          };
          if (f.strokes == 0) {
            const auto pts = rec.flattened();
            for (std::size_t i = 0; i < pps; ++i) emit(i < pts.size() ? &pts[i] : nullptr);
          } else {
            for (std::size_t s = 0; s < static_cast<std::size_t>(f.strokes); ++s)
              for (std::size_t i = 0; i < pps; ++i) {
                const bool present = s < rec.strokes.size() && i < rec.strokes[s].size();
                emit(present ? &rec.strokes[s][i] : nullptr);
              }
          }
        } else if constexpr (std::is_same_v<T, features::FirstNPoints>) {
          const auto pts = rec.flattened();
          for (std::size_t i = 0; i < static_cast<std::size_t>(f.n); ++i) {
            v.push_back(i < pts.size() ? pts[i].x : f.fill_empty_with);
            v.push_back(i < pts.size() ? pts[i].y : f.fill_empty_with);
          }
        } else if constexpr (std::is_same_v<T, features::StrokeCount>) {
          v.push_back(static_cast<double>(rec.strokes.size()));
        } else if constexpr (std::is_same_v<T, features::Bitmap>) {
          v = bitmap(rec, f.n);
        } else if constexpr (std::is_same_v<T, features::Ink>) {
          v.push_back(ink(rec));
        } else if constexpr (std::is_same_v<T, features::AspectRatio>) {
          v.push_back(aspect_ratio(rec));
        } else if constexpr (std::is_same_v<T, features::Width>) {
          v.push_back(bounding_box(rec).width());
        } else if constexpr (std::is_same_v<T, features::Height>) {
          v.push_back(bounding_box(rec).height());
        } else if constexpr (std::is_same_v<T, features::Time>) {
          double lo = rec.strokes.front().front().t, hi = lo;
          for (const auto& s : rec.strokes)
            for (const auto& p : s) {
              lo = std::min(lo, p.t);
              hi = std::max(hi, p.t);
            }
          v.push_back(hi - lo);
        } else if constexpr (std::is_same_v<T, features::CenterOfMass>) {
          double sx = 0, sy = 0;
          const auto n = static_cast<double>(rec.point_count());
          for (const auto& s : rec.strokes)
            for (const auto& p : s) {
              sx += p.x;
              sy += p.y;
            }
          v = {sx / n, sy / n};
        } else if constexpr (std::is_same_v<T, features::StrokeCenter>) {
          for (std::size_t s = 0; s < static_cast<std::size_t>(f.strokes); ++s) {
            if (s < rec.strokes.size()) {
              double sx = 0, sy = 0;
              for (const auto& p : rec.strokes[s]) {
                sx += p.x;
                sy += p.y;
              }
              const auto n = static_cast<double>(rec.strokes[s].size());
              v.push_back(sx / n);
              v.push_back(sy / n);
            } else {
              v.push_back(0.0);
              v.push_back(0.0);
            }
          }
        } else if constexpr (std::is_same_v<T, features::StrokeIntersections>) {
          const auto s_count = static_cast<std::size_t>(f.strokes);
          for (std::size_t i = 0; i < s_count; ++i)
            for (std::size_t j = i; j < s_count; ++j) {
              if (i < rec.strokes.size() && j < rec.strokes.size())
                v.push_back(count_intersections(rec.strokes[i], rec.strokes[j], i == j));
              else
                v.push_back(0.0);
            }
        } else if constexpr (std::is_same_v<T, features::ReCurvature>) {
          for (std::size_t s = 0; s < static_cast<std::size_t>(f.strokes); ++s)
            v.push_back(s < rec.strokes.size() ? re_curvature(rec.strokes[s]) : 0.0);
        } else if constexpr (std::is_same_v<T, features::Direction> || std::is_same_v<T, features::Curvature>) {
          constexpr bool curvature = std::is_same_v<T, features::Curvature>;
          const auto local = direction_and_curvature(rec);
          for (std::size_t s = 0; s < static_cast<std::size_t>(f.strokes); ++s) {
            std::vector<const LocalFeature*> usable;
            if (s < local.size())
              for (const auto& lf : local[s])
                if (!curvature || lf.has_curvature) usable.push_back(&lf);
            for (std::size_t i = 0; i < static_cast<std::size_t>(f.points_per_stroke); ++i) {
              if (i < usable.size()) {
                v.push_back(curvature ? usable[i]->cos_phi : usable[i]->cos_theta);
                v.push_back(curvature ? usable[i]->sin_phi : usable[i]->sin_theta);
              } else {
                v.push_back(f.fill_empty_with);
                v.push_back(f.fill_empty_with);
              }
            }
          }
        }
        return v;
      },
      spec);
}

/// Concatenation of the features in configured order.
inline FeatureVector compose(const Recording& rec, const FeatureList& specs) {
  if (specs.empty()) throw ConfigError("feature list is empty");
  FeatureVector out;
  out.reserve(dimension(specs));
  for (const auto& spec : specs) {
    const FeatureVector part = compute(rec, spec);
    if (part.size() != dimension(spec))
      throw std::logic_error("feature computed " + std::to_string(part.size()) + " values, declared " +
                             std::to_string(dimension(spec)));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration mapping

inline std::string feature_name(const FeatureSpec& spec) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        using namespace features;
        if constexpr (std::is_same_v<T, ConstantPointCoordinates>) return "ConstantPointCoordinates";
        else if constexpr (std::is_same_v<T, FirstNPoints>) return "FirstNPoints";
        else if constexpr (std::is_same_v<T, StrokeCount>) return "StrokeCount";
        else if constexpr (std::is_same_v<T, Bitmap>) return "Bitmap";
        else if constexpr (std::is_same_v<T, Ink>) return "Ink";
        else if constexpr (std::is_same_v<T, AspectRatio>) return "AspectRatio";
        else if constexpr (std::is_same_v<T, Width>) return "Width";
        else if constexpr (std::is_same_v<T, Height>) return "Height";
        else if constexpr (std::is_same_v<T, Time>) return "Time";
        else if constexpr (std::is_same_v<T, CenterOfMass>) return "CenterOfMass";
        else if constexpr (std::is_same_v<T, StrokeCenter>) return "StrokeCenter";
        else if constexpr (std::is_same_v<T, StrokeIntersections>) return "StrokeIntersections";
        else if constexpr (std::is_same_v<T, ReCurvature>) return "ReCurvature";
        else if constexpr (std::is_same_v<T, Direction>) return "Direction";
        else return "Curvature";
      },
      spec);
}

inline nlohmann::json feature_to_json(const FeatureSpec& spec) {
  nlohmann::json params = std::visit(
      [](const auto& f) -> nlohmann::json {
        using T = std::decay_t<decltype(f)>;
        using namespace features;
        if constexpr (std::is_same_v<T, ConstantPointCoordinates>)
          return {{"strokes", f.strokes},
                  {"points_per_stroke", f.points_per_stroke},
                  {"fill_empty_with", f.fill_empty_with},
                  {"pen_down", f.pen_down}};
        else if constexpr (std::is_same_v<T, FirstNPoints>)
          return {{"n", f.n}, {"fill_empty_with", f.fill_empty_with}};
        else if constexpr (std::is_same_v<T, Bitmap>) return {{"n", f.n}};
        else if constexpr (std::is_same_v<T, StrokeCenter> || std::is_same_v<T, StrokeIntersections> ||
                           std::is_same_v<T, ReCurvature>)
          return {{"strokes", f.strokes}};
        else if constexpr (std::is_same_v<T, Direction> || std::is_same_v<T, Curvature>)
          return {{"strokes", f.strokes},
                  {"points_per_stroke", f.points_per_stroke},
                  {"fill_empty_with", f.fill_empty_with}};
        else return nullptr;
      },
      spec);
  return {{feature_name(spec), params}};
}

inline FeatureSpec feature_from_config(const std::string& name, const nlohmann::json& params) {
  if (!params.is_null() && !params.is_object()) throw ConfigError(name + ": parameters must be a mapping");
  std::vector<std::string> known;
  auto number = [&](const char* key, double fallback) {
    known.emplace_back(key);
    if (params.is_null() || !params.contains(key)) return fallback;
    if (!params.at(key).is_number()) throw ConfigError(name + ": parameter '" + key + "' must be a number");
    return params.at(key).get<double>();
  };
  auto count = [&](const char* key, int fallback, int min) {
    const double v = number(key, fallback);
    if (v != std::floor(v) || v < min)
      throw ConfigError(name + ": parameter '" + key + "' must be an integer >= " + std::to_string(min));
    return static_cast<int>(v);
  };
  auto flag = [&](const char* key, bool fallback) {
    known.emplace_back(key);
    if (params.is_null() || !params.contains(key)) return fallback;
    if (!params.at(key).is_boolean()) throw ConfigError(name + ": parameter '" + key + "' must be true or false");
    return params.at(key).get<bool>();
  };

  FeatureSpec spec;
  using namespace features;
  if (name == "ConstantPointCoordinates") {
    ConstantPointCoordinates f;
    f.strokes = count("strokes", 4, 0);
    f.points_per_stroke = count("points_per_stroke", 20, 1);
    f.fill_empty_with = number("fill_empty_with", 0.0);
    f.pen_down = flag("pen_down", false);
    spec = f;
  } else if (name == "FirstNPoints") {
    FirstNPoints f;
    f.n = count("n", 81, 1);
    f.fill_empty_with = number("fill_empty_with", 0.0);
    spec = f;
  } else if (name == "StrokeCount") {
    spec = StrokeCount{};
  } else if (name == "Bitmap") {
    spec = Bitmap{count("n", 32, 1)};
  } else if (name == "Ink") {
    spec = Ink{};
  } else if (name == "AspectRatio") {
    spec = AspectRatio{};
  } else if (name == "Width") {
    spec = Width{};
  } else if (name == "Height") {
    spec = Height{};
  } else if (name == "Time") {
    spec = Time{};
  } else if (name == "CenterOfMass") {
    spec = CenterOfMass{};
  } else if (name == "StrokeCenter") {
    spec = StrokeCenter{count("strokes", 4, 1)};
  } else if (name == "StrokeIntersections") {
    spec = StrokeIntersections{count("strokes", 4, 1)};
  } else if (name == "ReCurvature") {
    spec = ReCurvature{count("strokes", 4, 1)};
  } else if (name == "Direction" || name == "Curvature") {
    const int strokes = count("strokes", 4, 1);
    const int pps = count("points_per_stroke", 20, 1);
    const double fill = number("fill_empty_with", 0.0);
    if (name == "Direction") spec = Direction{strokes, pps, fill};
    else spec = Curvature{strokes, pps, fill};
  } else {
    throw ConfigError("unknown feature '" + name + "'");
  }
  if (!params.is_null())
    for (const auto& [key, _] : params.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ConfigError(name + ": unknown parameter '" + key + "'");
  return spec;
}

inline nlohmann::json features_to_json(const FeatureList& specs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : specs) arr.push_back(feature_to_json(s));
  return arr;
}

inline FeatureList features_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw ConfigError("feature list must be a list");
  FeatureList specs;
  for (const auto& item : arr) {
    if (!item.is_object() || item.size() != 1) throw ConfigError("feature entry must be a single-key mapping");
    const auto it = item.begin();
    specs.push_back(feature_from_config(it.key(), it.value()));
  }
  return specs;
}

/// Fingerprint of a feature list, stable across runs.
inline std::string feature_hash(const FeatureList& specs) { return hex64(fnv1a64(features_to_json(specs).dump())); }

/// The 160-dimensional point-coordinate vector of the baseline systems.
inline FeatureList baseline_features() { return {features::ConstantPointCoordinates{4, 20, 0.0, false}}; }

/// Baseline coordinates plus re-curvature, ink, stroke count and aspect ratio (167 values).
inline FeatureList optimized_features() {
  return {features::ConstantPointCoordinates{4, 20, 0.0, false}, features::ReCurvature{4}, features::Ink{},
          features::StrokeCount{}, features::AspectRatio{}};
}

// ---------------------------------------------------------------------------
// Standardization

enum class StandardizationMode { none, mean_only, standardize };

/// Per-dimension centering and range scaling fitted on a training set.
struct Standardization {
  StandardizationMode mode = StandardizationMode::none;
  std::vector<double> mean;
  std::vector<double> scale;

  friend bool operator==(const Standardization&, const Standardization&) = default;
};

inline Standardization fit_standardization(const std::vector<FeatureVector>& train, StandardizationMode mode) {
  if (train.empty()) throw ParameterError("fit_standardization: training set is empty");
  const std::size_t dim = train.front().size();
  Standardization st;
  st.mode = mode;
  st.mean.assign(dim, 0.0);
  std::vector<double> lo(train.front()), hi(train.front());
  for (const auto& v : train) {
    if (v.size() != dim) throw ParameterError("fit_standardization: inconsistent feature dimensions");
    for (std::size_t i = 0; i < dim; ++i) {
      st.mean[i] += v[i];
      lo[i] = std::min(lo[i], v[i]);
      hi[i] = std::max(hi[i], v[i]);
    }
  }
  st.scale.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    st.mean[i] /= static_cast<double>(train.size());
    const double range = hi[i] - lo[i];
    st.scale[i] = range == 0.0 ? 1.0 : range;
  }
  return st;
}

inline FeatureVector apply_standardization(const Standardization& st, const FeatureVector& v) {
  if (st.mode == StandardizationMode::none) return v;
  if (v.size() != st.mean.size()) throw ParameterError("apply_standardization: dimension mismatch");
  FeatureVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] - st.mean[i];
    if (st.mode == StandardizationMode::standardize) out[i] /= st.scale[i];
  }
  return out;
}

inline std::string to_string(StandardizationMode m) {
  switch (m) {
    case StandardizationMode::none: return "none";
    case StandardizationMode::mean_only: return "mean_only";
    case StandardizationMode::standardize: return "standardize";
  }
  return "none";
}

inline StandardizationMode standardization_mode_from_string(const std::string& s) {
  if (s == "none") return StandardizationMode::none;
  if (s == "mean_only") return StandardizationMode::mean_only;
  if (s == "standardize") return StandardizationMode::standardize;
  throw ConfigError("unknown standardization mode '" + s + "'");
}

inline nlohmann::json standardization_to_json(const Standardization& st) {
  return {{"mode", to_string(st.mode)}, {"mean", st.mean}, {"scale", st.scale}};
}

inline Standardization standardization_from_json(const nlohmann::json& j) {
  try {
    Standardization st;
    st.mode = standardization_mode_from_string(j.at("mode").get<std::string>());
    st.mean = j.at("mean").get<std::vector<double>>();
    st.scale = j.at("scale").get<std::vector<double>>();
    if (st.mean.size() != st.scale.size()) throw LoadError("standardization mean/scale length mismatch");
    return st;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("bad standardization: ") + e.what());
  }
}

}  // namespace symrec
