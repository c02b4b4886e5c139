#include <gtest/gtest.h>

#include <algorithm>

#include "generators.hpp"
#include "symrec/recording.hpp"

using namespace symrec;

TEST(ParseRecording, FixtureHasTwoStrokesAnd145Points) {
  const Recording rec = parse_recording(gen::fixture("292927.json"));
  ASSERT_EQ(rec.strokes.size(), 2u);
  EXPECT_EQ(rec.point_count(), 145u);
  EXPECT_EQ(rec.strokes[0].front(), (Point{657, 600, 1411732873010.0, true}));
}

TEST(ParseRecording, MinimalInput) {
  const Recording rec = parse_recording(R"([[{"x":0,"y":0,"time":0}]])");
  ASSERT_EQ(rec.strokes.size(), 1u);
  ASSERT_EQ(rec.point_count(), 1u);
  EXPECT_EQ(rec.strokes[0][0], (Point{0, 0, 0, true}));
}

TEST(ParseRecording, EmptyArrayIsStructuralError) {
  EXPECT_THROW(parse_recording("[]"), StructuralError);
}

TEST(ParseRecording, Rejections) {
  EXPECT_THROW(parse_recording("[[{\"x\":0,"), ParseError);
  EXPECT_THROW(parse_recording("[[]]"), StructuralError);
  EXPECT_THROW(parse_recording(R"([[{"x":0,"y":0}]])"), StructuralError);
  EXPECT_THROW(parse_recording(R"([[{"x":"a","y":0,"time":0}]])"), ValueError);
  EXPECT_THROW(parse_recording(R"([[{"x":0,"y":0,"time":-1}]])"), ValueError);
  EXPECT_THROW(parse_recording(R"({"x":0})"), StructuralError);
}

TEST(ParseRecording, UnknownKeysIgnored) {
  const Recording rec = parse_recording(R"([[{"x":1,"y":2,"time":3,"pressure":0.5}]])");
  EXPECT_EQ(rec.strokes[0][0], (Point{1, 2, 3, true}));
}

TEST(SerializeRecording, MinimalOutput) {
  Recording rec;
  rec.strokes = {{Point{0, 0, 0}}};
  EXPECT_EQ(serialize_recording(rec), R"([[{"x":0,"y":0,"time":0}]])");
}

TEST(SerializeRecording, FixtureRoundTripKeeps145Points) {
  const Recording rec = parse_recording(gen::fixture("292927.json"));
  const Recording again = parse_recording(serialize_recording(rec));
  EXPECT_EQ(again.point_count(), 145u);
  EXPECT_EQ(again, rec);
}

TEST(SerializeRecording, FractionalValuesRoundTripExactly) {
  Recording rec;
  rec.strokes = {{Point{0.1, -2.5e-7, 3.25}, Point{1.0 / 3.0, 2, 4}}};
  EXPECT_EQ(parse_recording(serialize_recording(rec)), rec);
}

TEST(RecordingProperty, ParseSerializeIdentity) {
  gen::Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    gen::RecordingShape shape;
    shape.integral = i % 2 == 0;
    const Recording rec = gen::recording(rng, shape);
    const std::string text = serialize_recording(rec);
    const Recording back = parse_recording(text);
    ASSERT_EQ(back, rec) << text;
    ASSERT_EQ(back.point_count(), rec.point_count());
    ASSERT_EQ(serialize_recording(back), text);
  }
}

TEST(BoundingBox, SinglePoint) {
  Recording rec;
  rec.strokes = {{Point{5, 7, 0}}};
  EXPECT_EQ(bounding_box(rec), (BoundingBox{5, 7, 5, 7}));
}

TEST(BoundingBox, TwoPoints) {
  Recording rec;
  rec.strokes = {{Point{0, 0, 0}, Point{10, 8, 1}}};
  EXPECT_EQ(bounding_box(rec), (BoundingBox{0, 0, 10, 8}));
}

TEST(BoundingBox, FixtureAgainstBruteForceScan) {
  const Recording rec = parse_recording(gen::fixture("292927.json"));
  // Independent scan over the raw JSON values.
  const auto doc = nlohmann::json::parse(gen::fixture("292927.json"));
  double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
  for (const auto& s : doc)
    for (const auto& p : s) {
      x0 = std::min(x0, p["x"].get<double>());
      x1 = std::max(x1, p["x"].get<double>());
      y0 = std::min(y0, p["y"].get<double>());
      y1 = std::max(y1, p["y"].get<double>());
    }
  EXPECT_EQ(bounding_box(rec), (BoundingBox{x0, y0, x1, y1}));
  EXPECT_EQ(bounding_box(rec), (BoundingBox{524, 596, 706, 742}));
}

TEST(BoundingBox, EmptyRecordingThrows) {
  EXPECT_THROW(bounding_box(Recording{}), StructuralError);
}

TEST(RecordingProperty, BoundingBoxInvariantUnderReordering) {
  gen::Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    Recording rec = gen::recording(rng);
    const BoundingBox box = bounding_box(rec);
    std::shuffle(rec.strokes.begin(), rec.strokes.end(), rng);
    for (auto& s : rec.strokes) std::shuffle(s.begin(), s.end(), rng);
    ASSERT_EQ(bounding_box(rec), box);
  }
}

TEST(SymbolTable, Lookups) {
  SymbolTable t;
  t.add(31, "\\alpha");
  t.add(1, "A");
  EXPECT_EQ(t.ids(), (std::vector<SymbolId>{1, 31}));
  EXPECT_EQ(t.index_of(31), 1u);
  EXPECT_EQ(t.command(31), "\\alpha");
  EXPECT_EQ(t.find("A"), 1);
  EXPECT_FALSE(t.find("B"));
  EXPECT_THROW(t.add(1, "B"), ValueError);
  EXPECT_THROW(t.add(2, "A"), ValueError);
  EXPECT_THROW(t.command(5), ValueError);
}
