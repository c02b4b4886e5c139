#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "generators.hpp"
#include "symrec/preprocess.hpp"

using namespace symrec;

namespace {

Recording one_stroke(Stroke s) {
  Recording r;
  r.strokes.push_back(std::move(s));
  return r;
}

void expect_point_near(const Point& a, const Point& b, double tol = 1e-9) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.t, b.t, tol);
}

void expect_box_near(const BoundingBox& a, const BoundingBox& b, double tol = 1e-9) {
  EXPECT_NEAR(a.x_min, b.x_min, tol);
  EXPECT_NEAR(a.y_min, b.y_min, tol);
  EXPECT_NEAR(a.x_max, b.x_max, tol);
  EXPECT_NEAR(a.y_max, b.y_max, tol);
}

// 0.8 wide, 1.0 high, not anchored at the origin.
Recording box_08_by_1() {
  return one_stroke({{3.0, 5.0, 100}, {3.8, 5.5, 110}, {3.4, 6.0, 120}, {3.1, 5.2, 130}});
}

}  // namespace

TEST(RemoveDuplicateTime, DropsRepeatedTimestamp) {
  const auto out = remove_duplicate_time(one_stroke({{0, 0, 5}, {1, 1, 5}, {2, 2, 6}}));
  EXPECT_EQ(out.strokes[0], (Stroke{{0, 0, 5}, {2, 2, 6}}));
}

TEST(RemoveDuplicateTime, IncreasingTimesUnchanged) {
  const auto in = one_stroke({{0, 0, 1}, {1, 1, 2}, {2, 2, 3}});
  EXPECT_EQ(remove_duplicate_time(in), in);
}

TEST(RemoveDuplicateTime, RandomDuplicatesReduceByCount) {
  gen::Rng rng(21);
  for (int it = 0; it < 200; ++it) {
    Stroke s;
    for (int i = 0; i < gen::integer(rng, 1, 40); ++i) s.push_back({double(i), 0, double(gen::integer(rng, 0, 15))});
    std::set<double> distinct;
    for (const auto& p : s) distinct.insert(p.t);
    const std::size_t duplicates = s.size() - distinct.size();
    ASSERT_EQ(remove_duplicate_time(one_stroke(s)).strokes[0].size(), s.size() - duplicates);
  }
}

TEST(ScaleAndShift, VariantBoxes) {
  const Recording in = box_08_by_1();
  expect_box_near(bounding_box(scale_and_shift(in, ScaleVariant::I1)), {-0.4, 0.0, 0.4, 1.0});
  expect_box_near(bounding_box(scale_and_shift(in, ScaleVariant::I2)), {0.0, 0.0, 0.8, 1.0});
  expect_box_near(bounding_box(scale_and_shift(in, ScaleVariant::I3)), {-0.4, -0.5, 0.4, 0.5});
}

TEST(ScaleAndShift, WideSymbolLimitedByWidth) {
  const Recording in = one_stroke({{0, 0, 0}, {200, 50, 1}});
  expect_box_near(bounding_box(scale_and_shift(in, ScaleVariant::I1)), {0.0, -0.125, 1.0, 0.125});
  expect_box_near(bounding_box(scale_and_shift(in, ScaleVariant::I3)), {-0.5, -0.125, 0.5, 0.125});
}

TEST(ScaleAndShift, TimeBecomesRelative) {
  const auto out = scale_and_shift(box_08_by_1(), ScaleVariant::I1);
  EXPECT_EQ(out.strokes[0][0].t, 0.0);
  EXPECT_EQ(out.strokes[0][3].t, 30.0);
}

TEST(ScaleAndShift, DegenerateBoxes) {
  // A single dot keeps factor 1 and lands on the shift target.
  const auto dot = scale_and_shift(one_stroke({{7, 9, 4}}), ScaleVariant::I1);
  expect_point_near(dot.strokes[0][0], {0, 0, 0});
  // A vertical line is scaled by its height only.
  const auto line = scale_and_shift(one_stroke({{2, 0, 0}, {2, 4, 1}}), ScaleVariant::I3);
  expect_box_near(bounding_box(line), {0, -0.5, 0, 0.5});
}

TEST(ScaleAndShift, RejectsBadParameters) {
  EXPECT_THROW(scale_and_shift(box_08_by_1(), ScaleVariant::I1, 0.0, 1.0), ParameterError);
  EXPECT_THROW(scale_and_shift(Recording{}, ScaleVariant::I1), StructuralError);
}

TEST(SpaceEvenly, LinearMidpoint) {
  const auto out = space_evenly(one_stroke({{0, 0, 0}, {10, 0, 10}}), 3);
  ASSERT_EQ(out.strokes.size(), 1u);
  EXPECT_EQ(out.strokes[0], (Stroke{{0, 0, 0}, {5, 0, 5}, {10, 0, 10}}));
}

TEST(SpaceEvenly, GapPointsArePenUp) {
  Recording in;
  in.strokes = {{{0, 0, 0}, {10, 0, 10}}, {{20, 0, 30}, {30, 0, 40}}};
  const auto out = space_evenly(in, 5);
  const Stroke& s = out.strokes[0];
  ASSERT_EQ(s.size(), 5u);
  EXPECT_TRUE(s[0].pen_down);
  EXPECT_TRUE(s[1].pen_down);   // t = 10, end of first stroke
  EXPECT_FALSE(s[2].pen_down);  // t = 20, between the strokes
  expect_point_near(s[2], {15, 0, 20});
  EXPECT_TRUE(s[3].pen_down);   // t = 30, start of second stroke
  EXPECT_TRUE(s[4].pen_down);
}

TEST(SpaceEvenly, TwoSamplesAreEndpoints) {
  gen::Rng rng(22);
  const Recording in = gen::recording(rng, {2, 3, 2, 10});
  const auto flat = in.flattened();
  const auto out = space_evenly(in, 2);
  expect_point_near(out.strokes[0][0], flat.front());
  expect_point_near(out.strokes[0][1], flat.back());
}

TEST(SpaceEvenlyPerStroke, ShortStrokePassesThrough) {
  const auto in = one_stroke({{0, 0, 0}, {1, 1, 1}, {2, 0, 2}});
  EXPECT_EQ(space_evenly_per_stroke(in, 20, Interpolation::linear), in);
  EXPECT_EQ(space_evenly_per_stroke(in, 20, Interpolation::cubic), in);
}

TEST(SpaceEvenlyPerStroke, LinearMatchesClosedForm) {
  // Constant velocity (2, 3) px/ms sampled at irregular times.
  Stroke s;
  for (double t : {0.0, 1.0, 3.0, 4.0, 8.0}) s.push_back({2 * t, 3 * t, t});
  const auto out = space_evenly_per_stroke(one_stroke(s), 5, Interpolation::linear);
  ASSERT_EQ(out.strokes[0].size(), 5u);
  for (int i = 0; i < 5; ++i) {
    const double t = 2.0 * i;
    expect_point_near(out.strokes[0][i], {2 * t, 3 * t, t});
  }
}

TEST(SpaceEvenlyPerStroke, CubicReproducesLines) {
  Stroke s;
  for (double t : {0.0, 2.0, 3.0, 7.0, 9.0, 10.0}) s.push_back({5 - t, 0.5 * t, t});
  const auto out = space_evenly_per_stroke(one_stroke(s), 11, Interpolation::cubic);
  ASSERT_EQ(out.strokes[0].size(), 11u);
  for (int i = 0; i < 11; ++i) expect_point_near(out.strokes[0][i], {5.0 - i, 0.5 * i, double(i)});
}

TEST(SpaceEvenlyPerStroke, CubicFallsBackWithRepeatedTimes) {
  const auto in = one_stroke({{0, 0, 0}, {1, 0, 1}, {2, 0, 1}, {3, 0, 2}, {4, 0, 3}});
  Diagnostics diag;
  const auto out = space_evenly_per_stroke(in, 4, Interpolation::cubic, &diag);
  EXPECT_EQ(out.strokes[0].size(), 4u);
  EXPECT_EQ(diag.warnings.size(), 1u);
}

TEST(SpaceEvenlyPerStroke, NumberTwoGivesEndpoints) {
  gen::Rng rng(23);
  const Recording in = gen::recording(rng, {1, 3, 4, 20});
  const auto out = space_evenly_per_stroke(in, 2, Interpolation::linear);
  for (std::size_t s = 0; s < in.strokes.size(); ++s) {
    ASSERT_EQ(out.strokes[s].size(), 2u);
    expect_point_near(out.strokes[s][0], in.strokes[s].front());
    expect_point_near(out.strokes[s][1], in.strokes[s].back());
  }
}

TEST(DotReduction, SmallStrokeCollapsesToMean) {
  const auto in = one_stroke({{0, 0, 10}, {1, 0, 11}, {0, 1, 12}, {-1, 0, 13}, {0, -0.5, 15}});
  const auto out = dot_reduction(in, 3);
  ASSERT_EQ(out.strokes[0].size(), 1u);
  expect_point_near(out.strokes[0][0], {0.0, 0.5 / 5, 12});  // floor(61 / 5)
}

TEST(DotReduction, ZeroThresholdAndFarPointsUnchanged) {
  const auto dot = one_stroke({{0, 0, 0}, {0, 0, 1}});
  EXPECT_EQ(dot_reduction(dot, 0), dot);
  const auto far = one_stroke({{0, 0, 0}, {10, 0, 1}});
  EXPECT_EQ(dot_reduction(far, 5), far);
}

TEST(RemoveDots, DropsDotsUnlessAllDots) {
  Recording in;
  in.strokes = {{{0, 0, 0}}, {{1, 1, 1}, {2, 2, 2}, {3, 3, 3}, {4, 4, 4}, {5, 5, 5}}};
  const auto out = remove_dots(in);
  ASSERT_EQ(out.strokes.size(), 1u);
  EXPECT_EQ(out.strokes[0].size(), 5u);

  Recording dots;
  dots.strokes = {{{0, 0, 0}}, {{5, 5, 5}}};
  EXPECT_EQ(remove_dots(dots), dots);
  EXPECT_EQ(remove_dots(out), out);
}

TEST(WildPointFilter, RemovesSpike) {
  const auto out = wild_point_filter(one_stroke({{0, 0, 0}, {1, 0, 10}, {500, 0, 11}, {2, 0, 20}}), 3);
  EXPECT_EQ(out.strokes[0], (Stroke{{0, 0, 0}, {1, 0, 10}, {2, 0, 20}}));
}

TEST(WildPointFilter, HugeThresholdAndSlowStrokesUnchanged) {
  const auto spike = one_stroke({{0, 0, 0}, {1, 0, 10}, {500, 0, 11}, {2, 0, 20}});
  EXPECT_EQ(wild_point_filter(spike, 1e9), spike);
  Stroke slow;
  for (int i = 0; i < 30; ++i) slow.push_back({i * 4.0, i * 2.0, i * 10.0});  // 0.447 px/ms
  EXPECT_EQ(wild_point_filter(one_stroke(slow), 0.5), one_stroke(slow));
}

TEST(StrokeConnect, MergesCloseStrokes) {
  Recording in;
  in.strokes = {{{0, 0, 0}, {10, 0, 1}}, {{14, 0, 2}, {20, 0, 3}}};
  EXPECT_EQ(stroke_connect(in, 5).strokes.size(), 1u);
  Recording far;
  far.strokes = {{{0, 0, 0}, {10, 0, 1}}, {{50, 0, 2}, {60, 0, 3}}};
  EXPECT_EQ(stroke_connect(far, 10), far);
}

TEST(StrokeConnect, Cascades) {
  Recording in;
  in.strokes = {{{0, 0, 0}, {10, 0, 1}}, {{14, 0, 2}, {20, 0, 3}}, {{24, 0, 4}, {30, 0, 5}}};
  const auto out = stroke_connect(in, 5);
  ASSERT_EQ(out.strokes.size(), 1u);
  EXPECT_EQ(out.strokes[0].size(), 6u);
}

TEST(WeightedAverageSmoothing, Examples) {
  const auto line = one_stroke({{0, 0, 0}, {3, 0, 3}, {6, 0, 6}});
  const auto a = weighted_average_smoothing(line, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  expect_point_near(a.strokes[0][1], {3, 0, 3});
  const auto corner = one_stroke({{0, 0, 0}, {6, 0, 3}, {6, 6, 6}});
  const auto b = weighted_average_smoothing(corner, {1.0 / 6, 4.0 / 6, 1.0 / 6});
  expect_point_near(b.strokes[0][1], {5, 1, 3});
  expect_point_near(b.strokes[0][0], {0, 0, 0});
  expect_point_near(b.strokes[0][2], {6, 6, 6});
}

TEST(WeightedAverageSmoothing, UsesOriginalNeighbours) {
  const auto in = one_stroke({{0, 0, 0}, {3, 0, 1}, {0, 0, 2}, {3, 0, 3}});
  const auto out = weighted_average_smoothing(in, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  EXPECT_NEAR(out.strokes[0][1].x, 1.0, 1e-12);
  EXPECT_NEAR(out.strokes[0][2].x, 2.0, 1e-12);
}

TEST(Dehook, StraightAndShortStrokesUnchanged) {
  Stroke straight;
  for (int i = 0; i < 5; ++i) straight.push_back({double(i), double(2 * i), double(i)});
  for (double thr : {1.0, 45.0, 90.0, 180.0}) EXPECT_EQ(dehook(one_stroke(straight), thr), one_stroke(straight));
  const auto two = one_stroke({{0, 0, 0}, {5, 5, 1}});
  EXPECT_EQ(dehook(two, 10), two);
}

TEST(Dehook, TerminalReversalRemoved) {
  // The last segment turns back by 170 degrees.
  const double a = 10.0 * std::numbers::pi / 180.0;
  Stroke s{{0, 0, 0}, {10, 0, 1}, {20, 0, 2}, {30, 0, 3}, {30 - 3 * std::cos(a), 3 * std::sin(a), 4}};
  EXPECT_NEAR(turning_angle_degrees(s[2], s[3], s[4]), 170.0, 1e-9);
  const auto out = dehook(one_stroke(s), 120);
  ASSERT_EQ(out.strokes[0].size(), 4u);
  EXPECT_EQ(out.strokes[0].back(), s[3]);
  EXPECT_EQ(dehook(one_stroke(s), 175), one_stroke(s));
}

TEST(DouglasPeucker, Examples) {
  Stroke collinear;
  for (int i = 0; i < 10; ++i) collinear.push_back({double(i), double(i) * 0.5, double(i)});
  const auto a = douglas_peucker(one_stroke(collinear), 0.01);
  EXPECT_EQ(a.strokes[0], (Stroke{collinear.front(), collinear.back()}));

  const Stroke v{{0, 0, 0}, {5, 5, 1}, {10, 0, 2}};
  EXPECT_EQ(douglas_peucker(one_stroke(v), 1).strokes[0], v);
  EXPECT_EQ(douglas_peucker(one_stroke(v), 6).strokes[0], (Stroke{v.front(), v.back()}));
}

TEST(DouglasPeucker, PointLineDistanceByHand) {
  EXPECT_DOUBLE_EQ(point_line_distance({0, 0, 0}, {10, 0, 0}, {5, 5, 0}), 5.0);
  EXPECT_DOUBLE_EQ(point_line_distance({0, 0, 0}, {0, 0, 0}, {3, 4, 0}), 5.0);
}

TEST(ApplyQueue, EmptyQueueIsIdentity) {
  gen::Rng rng(24);
  const Recording in = gen::recording(rng);
  EXPECT_EQ(apply_queue(in, {}), in);
}

TEST(ApplyQueue, BaselineQueueGives20PointsPerStroke) {
  gen::Rng rng(25);
  const PreprocessingQueue q{steps::ScaleAndShift{ScaleVariant::I1, 2.0, 2.0}, steps::SpaceEvenlyPerStroke{20}};
  for (int i = 0; i < 100; ++i) {
    const Recording in = gen::recording(rng, {1, 4, 1, 30});
    Diagnostics diag;
    const auto out = apply_queue(in, q, &diag);
    EXPECT_TRUE(diag.empty());
    for (std::size_t s = 0; s < in.strokes.size(); ++s)
      ASSERT_EQ(out.strokes[s].size(), in.strokes[s].size() < 4 ? in.strokes[s].size() : 20u);
  }
}

TEST(ApplyQueue, OrderWarning) {
  Diagnostics diag;
  gen::Rng rng(26);
  apply_queue(gen::recording(rng), {steps::WildPointFilter{}, steps::DotReduction{}}, &diag);
  ASSERT_EQ(diag.warnings.size(), 1u);
  EXPECT_NE(diag.warnings[0].find("DotReduction should run before WildPointFilter"), std::string::npos);
  EXPECT_TRUE(check_queue_order({steps::DotReduction{}, steps::WildPointFilter{}}).empty());
}

TEST(ApplyQueue, InvalidParameterRejected) {
  gen::Rng rng(27);
  EXPECT_THROW(apply_queue(gen::recording(rng), {steps::WeightedAverageSmoothing{{2, 0, 0}}}), ConfigError);
  EXPECT_THROW(apply_queue(gen::recording(rng), {steps::SpaceEvenly{1}}), ConfigError);
}

TEST(QueueConfig, RoundTripAndErrors) {
  const PreprocessingQueue q{steps::RemoveDuplicateTime{}, steps::DotReduction{2},
                             steps::ScaleAndShift{ScaleVariant::I3, 1.0, 1.0},
                             steps::SpaceEvenlyPerStroke{10, Interpolation::cubic}, steps::WeightedAverageSmoothing{}};
  EXPECT_EQ(queue_from_json(queue_to_json(q)), q);
  EXPECT_THROW(step_from_config("Nope", nullptr), ConfigError);
  EXPECT_THROW(step_from_config("DotReduction", {{"treshold", 1}}), ConfigError);
  EXPECT_THROW(step_from_config("Dehook", {{"threshold", 0}}), ConfigError);
  const auto s = step_from_config("ScaleAndShift", {{"center", true}, {"center_other", true}});
  EXPECT_EQ(std::get<steps::ScaleAndShift>(s).variant, ScaleVariant::I3);
}

// Properties over random recordings.

TEST(PreprocessProperty, ScaleKeepsAspectRatioAndIsIdempotent) {
  gen::Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    const Recording in = gen::recording(rng, {1, 4, 2, 30, i % 2 == 0});
    const BoundingBox b0 = bounding_box(in);
    if (b0.width() == 0 || b0.height() == 0) continue;
    for (auto v : {ScaleVariant::I1, ScaleVariant::I2, ScaleVariant::I3}) {
      const auto once = scale_and_shift(in, v);
      const BoundingBox b1 = bounding_box(once);
      ASSERT_NEAR(b1.width() / b1.height(), b0.width() / b0.height(), 1e-9);
      const auto twice = scale_and_shift(once, v);
      for (std::size_t s = 0; s < once.strokes.size(); ++s)
        for (std::size_t k = 0; k < once.strokes[s].size(); ++k) {
          ASSERT_NEAR(twice.strokes[s][k].x, once.strokes[s][k].x, 1e-9);
          ASSERT_NEAR(twice.strokes[s][k].y, once.strokes[s][k].y, 1e-9);
        }
    }
  }
}

TEST(PreprocessProperty, PerStrokeResamplingCountAndSpacing) {
  gen::Rng rng(32);
  for (int i = 0; i < 200; ++i) {
    // Relative times, as after ScaleAndShift; epoch milliseconds carry only ~2e-4 ms resolution.
    Recording in = gen::recording(rng, {1, 4, 1, 40, i % 2 == 0});
    const double t0 = in.strokes[0][0].t;
    for (auto& s : in.strokes)
      for (auto& p : s) p.t -= t0;
    const int n = gen::integer(rng, 2, 40);
    const auto kind = i % 3 == 0 ? Interpolation::cubic : Interpolation::linear;
    const auto out = space_evenly_per_stroke(in, n, kind);
    for (std::size_t s = 0; s < in.strokes.size(); ++s) {
      if (in.strokes[s].size() < 4) {
        ASSERT_EQ(out.strokes[s], in.strokes[s]);
        continue;
      }
      const Stroke& st = out.strokes[s];
      ASSERT_EQ(st.size(), std::size_t(n));
      const double dt = st[1].t - st[0].t;
      for (std::size_t k = 2; k < st.size(); ++k) ASSERT_NEAR(st[k].t - st[k - 1].t, dt, 1e-9);
    }
  }
}

TEST(PreprocessProperty, DouglasPeuckerSubsequenceAndMonotone) {
  gen::Rng rng(33);
  for (int i = 0; i < 300; ++i) {
    const Recording in = gen::recording(rng, {1, 1, 1, 60});
    const Stroke& s = in.strokes[0];
    const double big = gen::real(rng, 0, 20);
    const double small = gen::real(rng, 0, big);
    const auto ib = douglas_peucker_indices(s, big);
    const auto is = douglas_peucker_indices(s, small);
    ASSERT_TRUE(std::is_sorted(ib.begin(), ib.end()));
    ASSERT_EQ(ib.front(), 0u);
    ASSERT_EQ(ib.back(), s.size() - 1);
    ASSERT_TRUE(std::includes(is.begin(), is.end(), ib.begin(), ib.end()));
    const auto out = douglas_peucker(in, big).strokes[0];
    ASSERT_EQ(out.size(), ib.size());
    for (std::size_t k = 0; k < ib.size(); ++k) ASSERT_EQ(out[k], s[ib[k]]);
  }
}

TEST(PreprocessProperty, PointCounts) {
  gen::Rng rng(34);
  for (int i = 0; i < 300; ++i) {
    const Recording in = gen::recording(rng, {1, 5, 1, 20});
    const std::size_t n = in.point_count();
    ASSERT_EQ(stroke_connect(in, gen::real(rng, 0, 50)).point_count(), n);
    ASSERT_LE(remove_dots(in).point_count(), n);
    ASSERT_LE(dot_reduction(in, gen::real(rng, 0, 50)).point_count(), n);
    ASSERT_LE(wild_point_filter(in, gen::real(rng, 0.05, 5)).point_count(), n);
  }
}

TEST(PreprocessProperty, IdentitySmoothing) {
  gen::Rng rng(35);
  for (int i = 0; i < 200; ++i) {
    const Recording in = gen::recording(rng, {1, 4, 1, 30, i % 2 == 0});
    ASSERT_EQ(weighted_average_smoothing(in, {0, 1, 0}), in);
  }
}
