#pragma once

// Greedy time warping: a one-pass approximation of dynamic time warping used
// as the distance of a nearest-neighbour classifier and for ranking outliers
// among the recordings of one symbol.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symrec/error.hpp"
#include "symrec/recording.hpp"
#include "symrec/result.hpp"

namespace symrec {

/// Greedy warping distance with local cost = squared euclidean distance on (x, y).
/// At each step the cheapest of advancing A, advancing both, or advancing B is
/// taken (ties prefer A, then B). Once one side is exhausted the remaining
/// points of the other are charged against its last consumed point.
inline double gtw_distance(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty() || b.empty()) throw ParameterError("gtw_distance: empty point sequence");
  std::size_t i = 0, j = 0;
  double d = squared_distance(a[0], b[0]);
  while (i + 1 < a.size() && j + 1 < b.size()) {
    const double l = squared_distance(a[i + 1], b[j]);
    const double m = squared_distance(a[i + 1], b[j + 1]);
    const double r = squared_distance(a[i], b[j + 1]);
    const double mu = std::min({l, m, r});
    d += mu;
    if (l == mu) {
      ++i;
    } else if (r == mu) {
      ++j;
    } else {
      ++i;
      ++j;
    }
  }
  for (std::size_t k = j + 1; k < b.size(); ++k) d += squared_distance(a[i], b[k]);
  for (std::size_t k = i + 1; k < a.size(); ++k) d += squared_distance(a[k], b[j]);
  return d;
}

/// Recordings are matched as one point sequence in stroke order.
inline double gtw_distance(const Recording& a, const Recording& b) {
  const auto pa = a.flattened();
  const auto pb = b.flattened();
  return gtw_distance(std::span<const Point>(pa), std::span<const Point>(pb));
}

/// Labelled templates, at most `cap` per symbol, stored as flattened point sequences.
class GtwTemplateStore {
 public:
  explicit GtwTemplateStore(std::size_t cap = 50) : cap_(cap) {
    if (cap == 0) throw ParameterError("GtwTemplateStore: cap must be >= 1");
  }

  /// Returns false when the symbol already holds `cap` templates.
  bool add(SymbolId symbol, const Recording& rec) {
    validate(rec);
    auto& list = templates_[symbol];
    if (list.size() >= cap_) return false;
    list.push_back(rec);
    flat_[symbol].push_back(rec.flattened());
    return true;
  }

  std::size_t cap() const { return cap_; }
  bool empty() const { return templates_.empty(); }
  std::size_t symbol_count() const { return templates_.size(); }

  std::size_t template_count() const {
    std::size_t n = 0;
    for (const auto& [_, list] : templates_) n += list.size();
    return n;
  }

  const std::map<SymbolId, std::vector<Recording>>& templates() const { return templates_; }
  const std::map<SymbolId, std::vector<std::vector<Point>>>& flattened() const { return flat_; }

  /// One `<symbol id>.json` file per symbol holding a JSON array of recordings.
  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [symbol, list] : templates_) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : list) arr.push_back(recording_to_json(r));
      std::ofstream out(dir / (std::to_string(symbol) + ".json"));
      if (!out) throw LoadError("cannot write template file for symbol " + std::to_string(symbol));
      out << arr.dump() << '\n';
    }
  }

  static GtwTemplateStore load(const std::filesystem::path& dir, std::size_t cap = 50) {
    if (!std::filesystem::is_directory(dir)) throw LoadError("template directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    GtwTemplateStore store(cap);
    for (const auto& file : files) {
      SymbolId symbol = 0;
      try {
        symbol = std::stoi(file.stem().string());
      } catch (const std::exception&) {
        throw LoadError("template file name is not a symbol id: " + file.string());
      }
      std::ifstream in(file);
      std::stringstream buf;
      buf << in.rdbuf();
      nlohmann::json arr;
      try {
        arr = nlohmann::json::parse(buf.str());
      } catch (const nlohmann::json::exception& e) {
        throw LoadError(file.string() + ": " + e.what());
      }
      if (!arr.is_array()) throw LoadError(file.string() + ": expected a list of recordings");
      for (const auto& r : arr) store.add(symbol, recording_from_json(r));
    }
    return store;
  }

 private:
  std::size_t cap_;
  std::map<SymbolId, std::vector<Recording>> templates_;
  std::map<SymbolId, std::vector<std::vector<Point>>> flat_;
};

/// Per-symbol minimal template distance, ascending; ties by symbol id.
inline std::vector<std::pair<SymbolId, double>> gtw_symbol_distances(const GtwTemplateStore& store,
                                                                     const Recording& query) {
  if (store.empty()) throw StateError("classify_gtw: template store is empty");
  validate(query);
  const auto q = query.flattened();
  std::vector<std::pair<SymbolId, double>> best;
  for (const auto& [symbol, list] : store.flattened()) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& t : list) m = std::min(m, gtw_distance(std::span<const Point>(q), std::span<const Point>(t)));
    best.emplace_back(symbol, m);
  }
  std::stable_sort(best.begin(), best.end(), [](const auto& x, const auto& y) {
    return x.second < y.second || (x.second == y.second && x.first < y.first);
  });
  return best;
}

/// The k nearest symbols. probability = softmax(-d / tau) over those k, with
/// tau the mean of their distances (1 when that mean is 0).
inline ClassificationResult classify_gtw(const GtwTemplateStore& store, const Recording& query, std::size_t k) {
  auto best = gtw_symbol_distances(store, query);
  k = std::min(std::max<std::size_t>(k, 1), best.size());
  best.resize(k);
  double tau = 0.0;
  for (const auto& [_, d] : best) tau += d;
  tau /= static_cast<double>(k);
  if (!(tau > 0.0)) tau = 1.0;
  // Shift by the smallest distance so the largest exponent is 0.
  const double d0 = best.front().second;
  double z = 0.0;
  std::vector<double> e(k);
  for (std::size_t i = 0; i < k; ++i) {
    e[i] = std::exp(-(best[i].second - d0) / tau);
    z += e[i];
  }
  ClassificationResult out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({best[i].first, e[i] / z, best[i].second});
  return out;
}

struct OutlierEntry {
  std::size_t index = 0;  // position in the input list
  double score = 0.0;
};

struct OutlierRanking {
  std::vector<OutlierEntry> ranked;  // descending score; ties keep input order
  std::size_t evaluations = 0;
};

/// Scores each recording by the sum of warping distances to and from every other one.
inline OutlierRanking rank_outliers(const std::vector<Recording>& recs) {
  const std::size_t n = recs.size();
  std::vector<std::vector<Point>> flat;
  flat.reserve(n);
  for (const auto& r : recs) flat.push_back(r.flattened());
  OutlierRanking result;
  std::vector<double> score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = gtw_distance(std::span<const Point>(flat[i]), std::span<const Point>(flat[j]));
      ++result.evaluations;
      score[i] += d;
      score[j] += d;
    }
  for (std::size_t i = 0; i < n; ++i) result.ranked.push_back({i, score[i]});
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const OutlierEntry& a, const OutlierEntry& b) { return a.score > b.score; });
  return result;
}

}  // namespace symrec
