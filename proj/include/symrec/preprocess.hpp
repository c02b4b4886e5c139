#pragma once

// Cleaning and normalization of recordings. Every operation is a pure
// function Recording -> Recording; a PreprocessingQueue applies a configured
// list of steps left to right.

#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "symrec/diagnostics.hpp"
#include "symrec/error.hpp"
#include "symrec/recording.hpp"

namespace symrec {

/// Where scale_and_shift moves the scaled recording.
///  I1: the dimension that limits the scale factor starts at 0, the other one is centered on 0.
///  I2: both dimensions start at 0.
///  I3: both dimensions are centered on 0.
enum class ScaleVariant { I1, I2, I3 };

enum class Interpolation { linear, cubic };

namespace steps {

struct RemoveDuplicateTime {
  friend bool operator==(const RemoveDuplicateTime&, const RemoveDuplicateTime&) = default;
};
struct RemoveDots {
  friend bool operator==(const RemoveDots&, const RemoveDots&) = default;
};
struct DotReduction {
  double threshold = 0.0;
  friend bool operator==(const DotReduction&, const DotReduction&) = default;
};
/// Threshold is a speed in pixels per millisecond.
struct WildPointFilter {
  double threshold = 3.0;
  friend bool operator==(const WildPointFilter&, const WildPointFilter&) = default;
};
struct StrokeConnect {
  double minimum_distance = 10.0;
  friend bool operator==(const StrokeConnect&, const StrokeConnect&) = default;
};
struct WeightedAverageSmoothing {
  std::array<double, 3> theta{1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0};
  friend bool operator==(const WeightedAverageSmoothing&, const WeightedAverageSmoothing&) = default;
};
/// Angle threshold in degrees, (0, 360].
struct Dehook {
  double angle_threshold = 90.0;
  friend bool operator==(const Dehook&, const Dehook&) = default;
};
struct DouglasPeucker {
  double epsilon = 0.05;
  friend bool operator==(const DouglasPeucker&, const DouglasPeucker&) = default;
};
struct ScaleAndShift {
  ScaleVariant variant = ScaleVariant::I1;
  double max_width = 1.0;
  double max_height = 1.0;
  friend bool operator==(const ScaleAndShift&, const ScaleAndShift&) = default;
};
struct SpaceEvenly {
  int number = 100;
  friend bool operator==(const SpaceEvenly&, const SpaceEvenly&) = default;
};
struct SpaceEvenlyPerStroke {
  int number = 20;
  Interpolation kind = Interpolation::linear;
  friend bool operator==(const SpaceEvenlyPerStroke&, const SpaceEvenlyPerStroke&) = default;
};

}  // namespace steps

using PreprocessingStep =
    std::variant<steps::RemoveDuplicateTime, steps::RemoveDots, steps::DotReduction, steps::WildPointFilter,
                 steps::StrokeConnect, steps::WeightedAverageSmoothing, steps::Dehook, steps::DouglasPeucker,
                 steps::ScaleAndShift, steps::SpaceEvenly, steps::SpaceEvenlyPerStroke>;

using PreprocessingQueue = std::vector<PreprocessingStep>;

// ---------------------------------------------------------------------------
// Individual operations

/// Within each stroke keeps only the first point carrying a given timestamp.
inline Recording remove_duplicate_time(const Recording& rec) {
  Recording out = rec;
  for (auto& stroke : out.strokes) {
    Stroke kept;
    kept.reserve(stroke.size());
    std::set<double> seen;
    for (const auto& p : stroke)
      if (seen.insert(p.t).second) kept.push_back(p);
    stroke = std::move(kept);
  }
  return out;
}

inline Recording scale_and_shift(const Recording& rec, ScaleVariant variant, double max_width = 1.0,
                                 double max_height = 1.0) {
  validate(rec);
  if (!(max_width > 0) || !(max_height > 0)) throw ParameterError("scale_and_shift: sizes must be positive");
  const BoundingBox box = bounding_box(rec);
  const double width = box.width();
  const double height = box.height();

  double factor = 1.0;
  bool x_limits = true;  // which dimension determines the factor
  if (width == 0.0 && height == 0.0) {
    factor = 1.0;
  } else if (width == 0.0) {
    factor = max_height / height;
    x_limits = false;
  } else if (height == 0.0) {
    factor = max_width / width;
  } else {
    const double fx = max_width / width;
    const double fy = max_height / height;
    // Near-ties resolve to x so that a second application picks the same axis.
    x_limits = fx <= fy * (1.0 + 1e-12);
    factor = x_limits ? fx : fy;
  }

  const double half_w = width * factor / 2.0;
  const double half_h = height * factor / 2.0;
  double add_x = 0.0;
  double add_y = 0.0;
  switch (variant) {
    case ScaleVariant::I1:
      (x_limits ? add_y : add_x) = x_limits ? half_h : half_w;
      break;
    case ScaleVariant::I2:
      break;
    case ScaleVariant::I3:
      add_x = half_w;
      add_y = half_h;
      break;
  }

  double t_min = rec.strokes.front().front().t;
  for (const auto& s : rec.strokes)
    for (const auto& p : s) t_min = std::min(t_min, p.t);

  Recording out = rec;
  for (auto& stroke : out.strokes) {
    for (auto& p : stroke) {
      p.x = (p.x - box.x_min) * factor - add_x;
      p.y = (p.y - box.y_min) * factor - add_y;
      p.t = p.t - t_min;
    }
  }
  return out;
}

namespace detail {

inline Point lerp(const Point& a, const Point& b, double t) {
  Point p = a;
  const double span = b.t - a.t;
  const double w = span == 0.0 ? 0.0 : (t - a.t) / span;
  p.x = a.x + w * (b.x - a.x);
  p.y = a.y + w * (b.y - a.y);
  p.t = t;
  return p;
}

/// n equally spaced values from first to last, both included.
inline std::vector<double> linspace(double first, double last, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  if (n == 1) {
    v[0] = first;
    return v;
  }
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = first + (last - first) * i / (n - 1);
  v.back() = last;
  return v;
}

/// Piecewise-linear evaluation of a time-ordered polyline at increasing sample times.
inline Stroke resample_linear(const Stroke& stroke, const std::vector<double>& times) {
  Stroke out;
  out.reserve(times.size());
  std::size_t seg = 0;
  for (double t : times) {
    while (seg + 1 < stroke.size() - 1 && stroke[seg + 1].t < t) ++seg;
    if (stroke.size() == 1 || t <= stroke.front().t) {
      Point p = stroke.front();
      p.t = t;
      out.push_back(p);
    } else if (t >= stroke.back().t) {
      Point p = stroke.back();
      p.t = t;
      out.push_back(p);
    } else {
      out.push_back(lerp(stroke[seg], stroke[seg + 1], t));
    }
  }
  return out;
}

/// Natural cubic spline through (ts[i], ys[i]); ts strictly increasing, size >= 3.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> ts, std::vector<double> ys) : t_(std::move(ts)), y_(std::move(ys)) {
    const std::size_t n = t_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Tridiagonal system for the second derivatives, natural boundary m0 = mn = 0.
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      a[i] = h0;
      b[i] = 2.0 * (h0 + h1);
      c[i] = h1;
      d[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }

  double operator()(double t) const {
    const std::size_t n = t_.size();
    std::size_t i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin());
    i = std::clamp<std::size_t>(i, 1, n - 1);
    const double h = t_[i] - t_[i - 1];
    const double u = (t_[i] - t) / h;
    const double v = (t - t_[i - 1]) / h;
    return m_[i - 1] * u * u * u * h * h / 6.0 + m_[i] * v * v * v * h * h / 6.0 +
           (y_[i - 1] - m_[i - 1] * h * h / 6.0) * u + (y_[i] - m_[i] * h * h / 6.0) * v;
  }

 private:
  std::vector<double> t_, y_, m_;
};

inline bool strictly_increasing_time(const Stroke& stroke) {
  for (std::size_t i = 1; i < stroke.size(); ++i)
    if (!(stroke[i].t > stroke[i - 1].t)) return false;
  return true;
}

}  // namespace detail

/// Resamples the whole recording into one stroke of `number` points equidistant in
/// time. Points that fall into the gap between two strokes get pen_down = false.
inline Recording space_evenly(const Recording& rec, int number) {
  validate(rec);
  if (number < 2) throw ParameterError("space_evenly: number must be >= 2");

  struct Knot {
    Point p;
    std::size_t stroke;
  };
  std::vector<Knot> knots;
  double t_min = rec.strokes.front().front().t;
  double t_max = t_min;
  for (std::size_t s = 0; s < rec.strokes.size(); ++s) {
    for (const auto& p : rec.strokes[s]) {
      knots.push_back({p, s});
      t_min = std::min(t_min, p.t);
      t_max = std::max(t_max, p.t);
    }
  }

  Recording out = rec;
  out.strokes.assign(1, Stroke{});
  Stroke& result = out.strokes.front();
  result.reserve(static_cast<std::size_t>(number));

  if (t_max == t_min || knots.size() == 1) {
    Point first = knots.front().p;
    first.pen_down = true;
    result.assign(static_cast<std::size_t>(number), first);
    return out;
  }

  std::size_t seg = 0;
  for (double t : detail::linspace(t_min, t_max, number)) {
    while (seg + 2 < knots.size() && knots[seg + 1].p.t < t) ++seg;
    const Knot& a = knots[seg];
    const Knot& b = knots[seg + 1];
    Point p;
    if (t <= a.p.t) {
      p = a.p;
      p.t = t;
    } else if (t >= b.p.t) {
      p = b.p;
      p.t = t;
    } else {
      p = detail::lerp(a.p, b.p, t);
    }
    const bool on_original = (t == a.p.t) || (t == b.p.t);
    p.pen_down = (a.stroke == b.stroke) || on_original;
    result.push_back(p);
  }
  return out;
}

/// Resamples every stroke with at least 4 points to `number` points equidistant in
/// time between its first and last timestamp. Shorter strokes pass through.
inline Recording space_evenly_per_stroke(const Recording& rec, int number, Interpolation kind,
                                         Diagnostics* diag = nullptr) {
  validate(rec);
  if (number < 2) throw ParameterError("space_evenly_per_stroke: number must be >= 2");
  Recording out = rec;
  for (std::size_t s = 0; s < out.strokes.size(); ++s) {
    Stroke& stroke = out.strokes[s];
    if (stroke.size() < 4) continue;
    const auto times = detail::linspace(stroke.front().t, stroke.back().t, number);
    if (kind == Interpolation::cubic) {
      if (detail::strictly_increasing_time(stroke)) {
        std::vector<double> ts, xs, ys;
        for (const auto& p : stroke) {
          ts.push_back(p.t);
          xs.push_back(p.x);
          ys.push_back(p.y);
        }
        const detail::CubicSpline fx(ts, xs);
        const detail::CubicSpline fy(std::move(ts), ys);
        Stroke resampled;
        resampled.reserve(times.size());
        for (double t : times) resampled.push_back(Point{fx(t), fy(t), t, true});
        stroke = std::move(resampled);
        continue;
      }
      warn(diag, "cubic resampling needs strictly increasing timestamps; stroke " + std::to_string(s) +
                     " resampled linearly");
    }
    stroke = detail::resample_linear(stroke, times);
  }
  return out;
}

/// Replaces every stroke whose largest pairwise point distance is below `threshold`
/// by its mean point; the time of the merged point is the floor of the mean time.
inline Recording dot_reduction(const Recording& rec, double threshold) {
  if (!(threshold >= 0)) throw ParameterError("dot_reduction: threshold must be >= 0");
  Recording out = rec;
  for (auto& stroke : out.strokes) {
    double max_dist = 0.0;
    for (std::size_t i = 0; i < stroke.size(); ++i)
      for (std::size_t j = i + 1; j < stroke.size(); ++j) max_dist = std::max(max_dist, distance(stroke[i], stroke[j]));
    if (max_dist < threshold && !stroke.empty()) {
      Point mean{0.0, 0.0, 0.0, true};
      for (const auto& p : stroke) {
        mean.x += p.x;
        mean.y += p.y;
        mean.t += p.t;
      }
      const double n = static_cast<double>(stroke.size());
      mean.x /= n;
      mean.y /= n;
      mean.t = std::floor(mean.t / n);
      stroke.assign(1, mean);
    }
  }
  return out;
}

/// Drops single-point strokes unless every stroke is a single point.
inline Recording remove_dots(const Recording& rec) {
  const bool all_dots =
      std::all_of(rec.strokes.begin(), rec.strokes.end(), [](const Stroke& s) { return s.size() == 1; });
  if (all_dots) return rec;
  Recording out = rec;
  std::erase_if(out.strokes, [](const Stroke& s) { return s.size() == 1; });
  return out;
}

/// Removes points whose speed from the last kept point exceeds `threshold` px/ms.
/// The first point of a stroke is always kept. A non-positive time step with a
/// non-zero move counts as infinitely fast.
inline Recording wild_point_filter(const Recording& rec, double threshold) {
  if (!(threshold > 0)) throw ParameterError("wild_point_filter: threshold must be > 0");
  Recording out = rec;
  for (auto& stroke : out.strokes) {
    if (stroke.size() < 2) continue;
    Stroke kept{stroke.front()};
    for (std::size_t i = 1; i < stroke.size(); ++i) {
      const Point& prev = kept.back();
      const double d = distance(prev, stroke[i]);
      const double dt = stroke[i].t - prev.t;
      const bool wild = dt > 0 ? d / dt > threshold : d > 0;
      if (!wild) kept.push_back(stroke[i]);
    }
    stroke = std::move(kept);
  }
  return out;
}

/// Concatenates consecutive strokes whose end and start are closer than
/// `minimum_distance`; a merged stroke can merge again with its successor.
inline Recording stroke_connect(const Recording& rec, double minimum_distance) {
  if (!(minimum_distance >= 0)) throw ParameterError("stroke_connect: minimum_distance must be >= 0");
  Recording out = rec;
  if (rec.strokes.empty()) return out;
  out.strokes.clear();
  out.strokes.push_back(rec.strokes.front());
  for (std::size_t i = 1; i < rec.strokes.size(); ++i) {
    const Stroke& next = rec.strokes[i];
    Stroke& last = out.strokes.back();
    if (!last.empty() && !next.empty() && distance(last.back(), next.front()) < minimum_distance)
      last.insert(last.end(), next.begin(), next.end());
    else
      out.strokes.push_back(next);
  }
  return out;
}

/// Three-point weighted average over x, y and t; endpoints are kept and every
/// interior point is computed from the original neighbours.
inline Recording weighted_average_smoothing(const Recording& rec, std::array<double, 3> theta) {
  for (double w : theta)
    if (!(w >= 0)) throw ParameterError("weighted_average_smoothing: weights must be >= 0");
  const double sum = theta[0] + theta[1] + theta[2];
  if (!(sum > 0)) throw ParameterError("weighted_average_smoothing: weights must not all be zero");
  for (double& w : theta) w /= sum;

  Recording out = rec;
  for (std::size_t s = 0; s < rec.strokes.size(); ++s) {
    const Stroke& src = rec.strokes[s];
    Stroke& dst = out.strokes[s];
    for (std::size_t i = 1; i + 1 < src.size(); ++i) {
      dst[i].x = theta[0] * src[i - 1].x + theta[1] * src[i].x + theta[2] * src[i + 1].x;
      dst[i].y = theta[0] * src[i - 1].y + theta[1] * src[i].y + theta[2] * src[i + 1].y;
      dst[i].t = theta[0] * src[i - 1].t + theta[1] * src[i].t + theta[2] * src[i + 1].t;
    }
  }
  return out;
}

/// Turning angle in degrees at `b` for the path a -> b -> c: 0 for a straight
/// continuation, 180 for a full reversal. Degenerate segments give 0.
inline double turning_angle_degrees(const Point& a, const Point& b, const Point& c) {
  const double ux = b.x - a.x, uy = b.y - a.y;
  const double vx = c.x - b.x, vy = c.y - b.y;
  const double nu = std::hypot(ux, uy);
  const double nv = std::hypot(vx, vy);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double cosine = std::clamp((ux * vx + uy * vy) / (nu * nv), -1.0, 1.0);
  return std::acos(cosine) * 180.0 / std::numbers::pi;
}

using AngleFunction = double (*)(const Point&, const Point&, const Point&);

/// The angle dehook compares against its threshold.
inline constexpr AngleFunction dehook_angle = &turning_angle_degrees;

namespace detail {

inline void dehook_tail(Stroke& stroke, double threshold, AngleFunction angle) {
  while (stroke.size() >= 3) {
    const std::size_t n = stroke.size();
    if (angle(stroke[n - 3], stroke[n - 2], stroke[n - 1]) < threshold) return;
    stroke.pop_back();
  }
}

}  // namespace detail

/// Removes trailing points while the last three points turn by at least
/// `angle_threshold` degrees, then does the same from the start of the stroke.
inline Recording dehook(const Recording& rec, double angle_threshold, AngleFunction angle = dehook_angle) {
  if (!(angle_threshold > 0 && angle_threshold <= 360)) throw ParameterError("dehook: threshold must be in (0, 360]");
  Recording out = rec;
  for (auto& stroke : out.strokes) {
    if (stroke.size() < 3) continue;
    detail::dehook_tail(stroke, angle_threshold, angle);
    std::reverse(stroke.begin(), stroke.end());
    detail::dehook_tail(stroke, angle_threshold, angle);
    std::reverse(stroke.begin(), stroke.end());
  }
  return out;
}

/// Distance of p to the line through a and b; point distance when a == b.
inline double point_line_distance(const Point& a, const Point& b, const Point& p) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return distance(a, p);
  return std::fabs(dy * (p.x - a.x) - dx * (p.y - a.y)) / len;
}

/// Indices kept by Douglas-Peucker simplification, ascending.
inline std::vector<std::size_t> douglas_peucker_indices(const Stroke& stroke, double epsilon) {
  if (stroke.empty()) return {};
  std::set<std::size_t> kept{0, stroke.size() - 1};
  std::vector<std::pair<std::size_t, std::size_t>> pending{{0, stroke.size() - 1}};
  while (!pending.empty()) {
    const auto [lo, hi] = pending.back();
    pending.pop_back();
    double d_max = 0.0;
    std::size_t i_max = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = point_line_distance(stroke[lo], stroke[hi], stroke[i]);
      if (d > d_max) {
        d_max = d;
        i_max = i;
      }
    }
    if (d_max > epsilon) {
      kept.insert(i_max);
      pending.emplace_back(lo, i_max);
      pending.emplace_back(i_max, hi);
    }
  }
  return {kept.begin(), kept.end()};
}

inline Recording douglas_peucker(const Recording& rec, double epsilon) {
  if (!(epsilon >= 0)) throw ParameterError("douglas_peucker: epsilon must be >= 0");
  Recording out = rec;
  for (auto& stroke : out.strokes) {
    Stroke simplified;
    for (std::size_t i : douglas_peucker_indices(stroke, epsilon)) simplified.push_back(stroke[i]);
    stroke = std::move(simplified);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Queue

inline std::string step_name(const PreprocessingStep& step) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, steps::RemoveDuplicateTime>) return "RemoveDuplicateTime";
        else if constexpr (std::is_same_v<T, steps::RemoveDots>) return "RemoveDots";
        else if constexpr (std::is_same_v<T, steps::DotReduction>) return "DotReduction";
        else if constexpr (std::is_same_v<T, steps::WildPointFilter>) return "WildPointFilter";
        else if constexpr (std::is_same_v<T, steps::StrokeConnect>) return "StrokeConnect";
        else if constexpr (std::is_same_v<T, steps::WeightedAverageSmoothing>) return "WeightedAverageSmoothing";
        else if constexpr (std::is_same_v<T, steps::Dehook>) return "Dehook";
        else if constexpr (std::is_same_v<T, steps::DouglasPeucker>) return "DouglasPeucker";
        else if constexpr (std::is_same_v<T, steps::ScaleAndShift>) return "ScaleAndShift";
        else if constexpr (std::is_same_v<T, steps::SpaceEvenly>) return "SpaceEvenly";
        else return "SpaceEvenlyPerStroke";
      },
      step);
}

/// Throws ConfigError when a parameter is outside its admissible range.
inline void validate_step(const PreprocessingStep& step) {
  const std::string name = step_name(step);
  auto fail = [&](const std::string& what) { throw ConfigError(name + ": " + what); };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, steps::DotReduction>) {
          if (!(s.threshold >= 0)) fail("threshold must be >= 0");
        } else if constexpr (std::is_same_v<T, steps::WildPointFilter>) {
          if (!(s.threshold > 0)) fail("threshold must be > 0");
        } else if constexpr (std::is_same_v<T, steps::StrokeConnect>) {
          if (!(s.minimum_distance >= 0)) fail("minimum_distance must be >= 0");
        } else if constexpr (std::is_same_v<T, steps::WeightedAverageSmoothing>) {
          for (double w : s.theta)
            if (!(w >= 0 && w <= 1)) fail("theta components must be in [0, 1]");
          if (!(s.theta[0] + s.theta[1] + s.theta[2] > 0)) fail("theta must not be all zero");
        } else if constexpr (std::is_same_v<T, steps::Dehook>) {
          if (!(s.angle_threshold > 0 && s.angle_threshold <= 360)) fail("threshold must be in (0, 360]");
        } else if constexpr (std::is_same_v<T, steps::DouglasPeucker>) {
          if (!(s.epsilon >= 0)) fail("epsilon must be >= 0");
        } else if constexpr (std::is_same_v<T, steps::ScaleAndShift>) {
          if (!(s.max_width > 0) || !(s.max_height > 0)) fail("max_width and max_height must be > 0");
        } else if constexpr (std::is_same_v<T, steps::SpaceEvenly> ||
                             std::is_same_v<T, steps::SpaceEvenlyPerStroke>) {
          if (s.number < 2) fail("number must be >= 2");
        }
      },
      step);
}

/// Warnings for step orders that work against each other. Non-fatal.
inline std::vector<std::string> check_queue_order(const PreprocessingQueue& queue) {
  std::vector<std::string> warnings;
  auto is = [](const PreprocessingStep& s, auto tag) {
    return std::holds_alternative<decltype(tag)>(s);
  };
  for (std::size_t i = 0; i < queue.size(); ++i) {
    for (std::size_t j = i + 1; j < queue.size(); ++j) {
      const auto& a = queue[i];
      const auto& b = queue[j];
      const std::string where = " (steps " + std::to_string(i) + " and " + std::to_string(j) + ")";
      if (is(a, steps::WildPointFilter{}) && is(b, steps::DotReduction{}))
        warnings.push_back("DotReduction should run before WildPointFilter" + where);
      if (is(a, steps::ScaleAndShift{}) &&
          (is(b, steps::WildPointFilter{}) || is(b, steps::WeightedAverageSmoothing{}) || is(b, steps::Dehook{})))
        warnings.push_back(step_name(b) + " changes the bounding box and should run before ScaleAndShift" + where);
      const bool resample = is(a, steps::SpaceEvenly{}) || is(a, steps::SpaceEvenlyPerStroke{});
      const bool changes_count = is(b, steps::RemoveDuplicateTime{}) || is(b, steps::RemoveDots{}) ||
                                 is(b, steps::DotReduction{}) || is(b, steps::WildPointFilter{}) ||
                                 is(b, steps::WeightedAverageSmoothing{}) || is(b, steps::Dehook{}) ||
                                 is(b, steps::DouglasPeucker{});
      if (resample && changes_count)
        warnings.push_back(step_name(b) + " should run before resampling with " + step_name(a) + where);
    }
  }
  return warnings;
}

inline Recording apply_step(const Recording& rec, const PreprocessingStep& step, Diagnostics* diag = nullptr) {
  return std::visit(
      [&](const auto& s) -> Recording {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, steps::RemoveDuplicateTime>) return remove_duplicate_time(rec);
        else if constexpr (std::is_same_v<T, steps::RemoveDots>) return remove_dots(rec);
        else if constexpr (std::is_same_v<T, steps::DotReduction>) return dot_reduction(rec, s.threshold);
        else if constexpr (std::is_same_v<T, steps::WildPointFilter>) return wild_point_filter(rec, s.threshold);
        else if constexpr (std::is_same_v<T, steps::StrokeConnect>) return stroke_connect(rec, s.minimum_distance);
        else if constexpr (std::is_same_v<T, steps::WeightedAverageSmoothing>)
          return weighted_average_smoothing(rec, s.theta);
        else if constexpr (std::is_same_v<T, steps::Dehook>) return dehook(rec, s.angle_threshold);
        else if constexpr (std::is_same_v<T, steps::DouglasPeucker>) return douglas_peucker(rec, s.epsilon);
        else if constexpr (std::is_same_v<T, steps::ScaleAndShift>)
          return scale_and_shift(rec, s.variant, s.max_width, s.max_height);
        else if constexpr (std::is_same_v<T, steps::SpaceEvenly>) return space_evenly(rec, s.number);
        else return space_evenly_per_stroke(rec, s.number, s.kind, diag);
      },
      step);
}

/// Validates every step, reports order warnings, then applies the steps in order.
inline Recording apply_queue(const Recording& rec, const PreprocessingQueue& queue, Diagnostics* diag = nullptr) {
  for (const auto& step : queue) validate_step(step);
  for (auto& w : check_queue_order(queue)) warn(diag, std::move(w));
  Recording out = rec;
  for (const auto& step : queue) out = apply_step(out, step, diag);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration mapping. Parameters arrive as a flat JSON object.

namespace detail {

inline double number_param(const nlohmann::json& params, const char* key, double fallback, const std::string& step) {
  if (params.is_null() || !params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw ConfigError(step + ": parameter '" + key + "' must be a number");
  return v.get<double>();
}

inline bool bool_param(const nlohmann::json& params, const char* key, bool fallback, const std::string& step) {
  if (params.is_null() || !params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_boolean()) throw ConfigError(step + ": parameter '" + key + "' must be true or false");
  return v.get<bool>();
}

inline void reject_unknown(const nlohmann::json& params, std::initializer_list<const char*> known,
                           const std::string& step) {
  if (params.is_null()) return;
  if (!params.is_object()) throw ConfigError(step + ": parameters must be a mapping");
  for (const auto& [key, _] : params.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      throw ConfigError(step + ": unknown parameter '" + key + "'");
  }
}

inline int count_param(const nlohmann::json& params, const char* key, int fallback, const std::string& step) {
  const double v = number_param(params, key, fallback, step);
  if (v != std::floor(v)) throw ConfigError(step + ": parameter '" + std::string(key) + "' must be an integer");
  return static_cast<int>(v);
}

}  // namespace detail

inline ScaleVariant scale_variant_from_string(const std::string& s) {
  if (s == "I1") return ScaleVariant::I1;
  if (s == "I2") return ScaleVariant::I2;
  if (s == "I3") return ScaleVariant::I3;
  throw ConfigError("unknown scale-and-shift variant '" + s + "'");
}

inline std::string to_string(ScaleVariant v) {
  switch (v) {
    case ScaleVariant::I1: return "I1";
    case ScaleVariant::I2: return "I2";
    case ScaleVariant::I3: return "I3";
  }
  return "I1";
}

/// Builds a step from its configuration name and parameter object; validates ranges.
inline PreprocessingStep step_from_config(const std::string& name, const nlohmann::json& params) {
  using namespace detail;
  PreprocessingStep step;
  if (name == "RemoveDuplicateTime") {
    reject_unknown(params, {}, name);
    step = steps::RemoveDuplicateTime{};
  } else if (name == "RemoveDots") {
    reject_unknown(params, {}, name);
    step = steps::RemoveDots{};
  } else if (name == "DotReduction") {
    reject_unknown(params, {"threshold"}, name);
    step = steps::DotReduction{number_param(params, "threshold", 0.0, name)};
  } else if (name == "WildPointFilter") {
    reject_unknown(params, {"threshold"}, name);
    step = steps::WildPointFilter{number_param(params, "threshold", 3.0, name)};
  } else if (name == "StrokeConnect") {
    reject_unknown(params, {"minimum_distance"}, name);
    step = steps::StrokeConnect{number_param(params, "minimum_distance", 10.0, name)};
  } else if (name == "WeightedAverageSmoothing") {
    reject_unknown(params, {"theta"}, name);
    steps::WeightedAverageSmoothing s;
    if (!params.is_null() && params.contains("theta")) {
      const auto& th = params.at("theta");
      if (!th.is_array() || th.size() != 3) throw ConfigError(name + ": theta must be a list of 3 numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!th[i].is_number()) throw ConfigError(name + ": theta must be a list of 3 numbers");
        s.theta[i] = th[i].get<double>();
      }
    }
    step = s;
  } else if (name == "Dehook") {
    reject_unknown(params, {"threshold"}, name);
    step = steps::Dehook{number_param(params, "threshold", 90.0, name)};
  } else if (name == "DouglasPeucker") {
    reject_unknown(params, {"epsilon"}, name);
    step = steps::DouglasPeucker{number_param(params, "epsilon", 0.05, name)};
  } else if (name == "ScaleAndShift") {
    reject_unknown(params, {"max_width", "max_height", "center", "center_other", "variant"}, name);
    steps::ScaleAndShift s;
    s.max_width = number_param(params, "max_width", 1.0, name);
    s.max_height = number_param(params, "max_height", 1.0, name);
    if (!params.is_null() && params.contains("variant")) {
      if (!params.at("variant").is_string()) throw ConfigError(name + ": variant must be I1, I2 or I3");
      s.variant = scale_variant_from_string(params.at("variant").get<std::string>());
    } else {
      const bool center = bool_param(params, "center", true, name);
      const bool center_other = bool_param(params, "center_other", false, name);
      if (center_other && !center) throw ConfigError(name + ": center_other requires center");
      s.variant = !center ? ScaleVariant::I2 : (center_other ? ScaleVariant::I3 : ScaleVariant::I1);
    }
    step = s;
  } else if (name == "SpaceEvenly") {
    reject_unknown(params, {"number"}, name);
    step = steps::SpaceEvenly{count_param(params, "number", 100, name)};
  } else if (name == "SpaceEvenlyPerStroke") {
    reject_unknown(params, {"number", "kind"}, name);
    steps::SpaceEvenlyPerStroke s;
    s.number = count_param(params, "number", 20, name);
    if (!params.is_null() && params.contains("kind")) {
      const auto& k = params.at("kind");
      if (k == "linear") s.kind = Interpolation::linear;
      else if (k == "cubic") s.kind = Interpolation::cubic;
      else throw ConfigError(name + ": kind must be linear or cubic");
    }
    step = s;
  } else {
    throw ConfigError("unknown preprocessing step '" + name + "'");
  }
  validate_step(step);
  return step;
}

/// Canonical `{"Name": {params}}` form; step_from_config inverts it.
inline nlohmann::json step_to_json(const PreprocessingStep& step) {
  nlohmann::json params = std::visit(
      [](const auto& s) -> nlohmann::json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, steps::DotReduction> || std::is_same_v<T, steps::WildPointFilter>)
          return {{"threshold", s.threshold}};
        else if constexpr (std::is_same_v<T, steps::StrokeConnect>) return {{"minimum_distance", s.minimum_distance}};
        else if constexpr (std::is_same_v<T, steps::WeightedAverageSmoothing>) return {{"theta", s.theta}};
        else if constexpr (std::is_same_v<T, steps::Dehook>) return {{"threshold", s.angle_threshold}};
        else if constexpr (std::is_same_v<T, steps::DouglasPeucker>) return {{"epsilon", s.epsilon}};
        else if constexpr (std::is_same_v<T, steps::ScaleAndShift>)
          return {{"max_width", s.max_width}, {"max_height", s.max_height}, {"variant", to_string(s.variant)}};
        else if constexpr (std::is_same_v<T, steps::SpaceEvenly>) return {{"number", s.number}};
        else if constexpr (std::is_same_v<T, steps::SpaceEvenlyPerStroke>)
          return {{"number", s.number}, {"kind", s.kind == Interpolation::linear ? "linear" : "cubic"}};
        else return nullptr;
      },
      step);
  return {{step_name(step), params}};
}

inline nlohmann::json queue_to_json(const PreprocessingQueue& queue) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : queue) arr.push_back(step_to_json(s));
  return arr;
}

inline PreprocessingQueue queue_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw ConfigError("preprocessing queue must be a list");
  PreprocessingQueue queue;
  for (const auto& item : arr) {
    if (!item.is_object() || item.size() != 1) throw ConfigError("queue entry must be a single-key mapping");
    const auto it = item.begin();
    queue.push_back(step_from_config(it.key(), it.value()));
  }
  return queue;
}

}  // namespace symrec
