#include <gtest/gtest.h>

#include <filesystem>

#include "generators.hpp"
#include "symrec/gtw.hpp"

using namespace symrec;

namespace {

// Dynamic-programming DTW over the steps (1,0), (1,1), (0,1) with squared euclidean cost.
double dtw(const std::vector<Point>& a, const std::vector<Point>& b) {
  const std::size_t n = a.size(), m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> D(n, std::vector<double>(m, inf));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double c = squared_distance(a[i], b[j]);
      if (i == 0 && j == 0) {
        D[i][j] = c;
        continue;
      }
      double best = inf;
      if (i > 0) best = std::min(best, D[i - 1][j]);
      if (j > 0) best = std::min(best, D[i][j - 1]);
      if (i > 0 && j > 0) best = std::min(best, D[i - 1][j - 1]);
      D[i][j] = c + best;
    }
  return D[n - 1][m - 1];
}

std::vector<Point> random_sequence(gen::Rng& rng, std::size_t n) {
  std::vector<Point> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({gen::real(rng, -5, 5), gen::real(rng, -5, 5), double(i)});
  return s;
}

double gtw(const std::vector<Point>& a, const std::vector<Point>& b) {
  return gtw_distance(std::span<const Point>(a), std::span<const Point>(b));
}

Recording line(double y, int n = 8) {
  Recording r;
  Stroke s;
  for (int i = 0; i < n; ++i) s.push_back({double(i), y, double(i)});
  r.strokes.push_back(s);
  return r;
}

}  // namespace

TEST(GtwDistance, Examples) {
  gen::Rng rng(61);
  const auto a = random_sequence(rng, 7);
  EXPECT_EQ(gtw(a, a), 0.0);
  EXPECT_EQ(gtw({{0, 0, 0}}, {{3, 4, 0}}), 25.0);
  EXPECT_THROW(gtw({}, a), ParameterError);
}

TEST(GtwDistance, GreedyStepsByHand) {
  // a = (0,0) (1,0) (2,0); b = (0,0) (2,0).
  // start 0; step: l = d(a1,b0) = 1, m = d(a1,b1) = 1, r = d(a0,b1) = 4 -> tie l wins, i = 1, d = 1.
  // step: l = d(a2,b0) = 4, m = d(a2,b1) = 0, r = d(a1,b1) = 1 -> m, both advance, d = 1.
  EXPECT_EQ(gtw({{0, 0, 0}, {1, 0, 1}, {2, 0, 2}}, {{0, 0, 0}, {2, 0, 1}}), 1.0);
  // Tail: b exhausted after one point, remaining a charged against b0.
  EXPECT_EQ(gtw({{0, 0, 0}, {1, 0, 1}, {3, 0, 2}}, {{0, 0, 0}}), 10.0);
  EXPECT_EQ(gtw({{0, 0, 0}}, {{0, 0, 0}, {1, 0, 1}, {3, 0, 2}}), 10.0);
}

TEST(GtwDistance, AtLeastOptimalDtw) {
  gen::Rng rng(62);
  for (int it = 0; it < 3000; ++it) {
    const auto a = random_sequence(rng, std::size_t(gen::integer(rng, 1, 8)));
    const auto b = random_sequence(rng, std::size_t(gen::integer(rng, 1, 8)));
    const double g = gtw(a, b);
    ASSERT_GE(g, 0.0);
    ASSERT_GE(g, dtw(a, b) - 1e-9);
    ASSERT_EQ(gtw(a, a), 0.0);
  }
}

TEST(GtwDistance, FivePointPairsAgainstDtw) {
  gen::Rng rng(63);
  for (int it = 0; it < 1000; ++it) {
    const auto a = random_sequence(rng, 5), b = random_sequence(rng, 5);
    ASSERT_GE(gtw(a, b), dtw(a, b) - 1e-9);
  }
}

TEST(ClassifyGtw, StoredTemplateRanksFirst) {
  GtwTemplateStore store;
  store.add(1, line(0));
  store.add(2, line(10));
  const auto res = classify_gtw(store, line(0), 10);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0].symbol, 1);
  EXPECT_EQ(res[0].score, 0.0);
  EXPECT_GT(res[0].probability, res[1].probability);
  EXPECT_NEAR(res[0].probability + res[1].probability, 1.0, 1e-12);
}

TEST(ClassifyGtw, NearerSymbolFirstAndClamp) {
  GtwTemplateStore store;
  store.add(7, line(0));
  store.add(3, line(20));
  store.add(5, line(-40));
  const auto res = classify_gtw(store, line(18), 2);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0].symbol, 3);
  EXPECT_EQ(res[1].symbol, 7);
  EXPECT_EQ(classify_gtw(store, line(18), 99).size(), 3u);
}

TEST(ClassifyGtw, TiesByAscendingId) {
  GtwTemplateStore store;
  store.add(9, line(1));
  store.add(4, line(-1));
  const auto res = classify_gtw(store, line(0), 2);
  EXPECT_EQ(res[0].symbol, 4);
  EXPECT_EQ(res[1].symbol, 9);
  EXPECT_DOUBLE_EQ(res[0].probability, 0.5);
}

TEST(ClassifyGtw, EmptyStoreIsStateError) {
  EXPECT_THROW(classify_gtw(GtwTemplateStore{}, line(0), 3), StateError);
}

TEST(ClassifyGtw, Deterministic) {
  gen::Rng rng(64);
  GtwTemplateStore store;
  for (int s = 1; s <= 5; ++s)
    for (int k = 0; k < 4; ++k) store.add(s, gen::recording(rng, {1, 2, 2, 10, false}));
  const Recording q = gen::recording(rng, {1, 2, 2, 10, false});
  const auto a = classify_gtw(store, q, 5), b = classify_gtw(store, q, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].symbol, b[i].symbol);
    EXPECT_EQ(a[i].probability, b[i].probability);
  }
}

TEST(GtwTemplateStore, CapAndPersistence) {
  GtwTemplateStore store(2);
  EXPECT_TRUE(store.add(1, line(0)));
  EXPECT_TRUE(store.add(1, line(1)));
  EXPECT_FALSE(store.add(1, line(2)));
  EXPECT_TRUE(store.add(2, line(5)));
  const auto dir = std::filesystem::temp_directory_path() / "symrec_gtw_store_test";
  std::filesystem::remove_all(dir);
  store.save(dir);
  const auto loaded = GtwTemplateStore::load(dir, 2);
  EXPECT_EQ(loaded.templates(), store.templates());
  std::filesystem::remove_all(dir);
  EXPECT_THROW(GtwTemplateStore::load(dir), LoadError);
  EXPECT_THROW(GtwTemplateStore(0), ParameterError);
}

TEST(RankOutliers, Examples) {
  const auto same = rank_outliers({line(0), line(0), line(0)});
  for (const auto& e : same.ranked) EXPECT_EQ(e.score, 0.0);
  EXPECT_EQ(same.evaluations, 6u);

  const auto far = rank_outliers({line(0), line(30), line(0)});
  EXPECT_EQ(far.ranked.front().index, 1u);
  EXPECT_GT(far.ranked.front().score, far.ranked[1].score);

  gen::Rng rng(65);
  for (std::size_t n : {2u, 5u, 9u}) {
    std::vector<Recording> recs;
    for (std::size_t i = 0; i < n; ++i) recs.push_back(gen::recording(rng));
    EXPECT_EQ(rank_outliers(recs).evaluations, n * (n - 1));
  }
}
