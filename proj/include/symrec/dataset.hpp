#pragma once

// Labelled recording collections on disk, stratified splitting and the binary
// feature cache.
//
// A recordings directory holds:
//   recordings.jsonl  one recording per line, either a bare stroke array
//                     (id = 1-based line number) or an object
//                     {"id": 7, "symbol": "\\alpha", "data": [[...]]}
//   labels.csv        optional `id,symbol_command` rows for lines without "symbol"
//   symbols.csv       optional `id,command` rows; otherwise ids 1..N are given to
//                     the distinct commands in sorted order

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "symrec/diagnostics.hpp"
#include "symrec/error.hpp"
#include "symrec/features.hpp"
#include "symrec/mlp.hpp"
#include "symrec/recording.hpp"

namespace symrec {

struct LabeledRecordings {
  SymbolTable symbols;
  std::vector<Recording> recordings;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw LoadError("cannot write " + p.string());
  out << content;
  if (!out) throw LoadError("failed writing " + p.string());
}

inline std::optional<long long> parse_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

/// Rows of `integer,text`, split at the first comma. A first row whose integer
/// column does not parse is taken as a header.
inline std::vector<std::pair<long long, std::string>> read_id_csv(const std::filesystem::path& p) {
  std::istringstream in(read_file(p));
  std::vector<std::pair<long long, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_ws(line).empty()) continue;
    const auto comma = line.find(',');
    const auto id = comma == std::string::npos ? std::nullopt : parse_integer(trim_ws(line.substr(0, comma)));
    if (!id) {
      if (rows.empty() && line_no == 1) continue;
      throw ParseError(p.string() + ":" + std::to_string(line_no) + ": expected `id,text`");
    }
    rows.emplace_back(*id, trim_ws(line.substr(comma + 1)));
  }
  return rows;
}

}  // namespace detail

inline LabeledRecordings load_recordings(const std::filesystem::path& dir, Diagnostics* diag = nullptr) {
  const auto jsonl = dir / "recordings.jsonl";
  if (!std::filesystem::exists(jsonl)) throw LoadError("no recordings.jsonl in " + dir.string());

  std::map<long long, std::string> labels;
  if (std::filesystem::exists(dir / "labels.csv"))
    for (auto& [id, cmd] : detail::read_id_csv(dir / "labels.csv")) labels[id] = cmd;

  struct Row {
    Recording rec;
    std::optional<std::string> command;
    std::optional<SymbolId> symbol_id;
  };
  std::vector<Row> rows;
  std::istringstream in(detail::read_file(jsonl));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim_ws(line).empty()) continue;
    const std::string where = jsonl.string() + ":" + std::to_string(line_no) + ": ";
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what());
    }
    Row row;
    try {
      if (doc.is_array()) {
        row.rec = recording_from_json(doc);
        row.rec.id = static_cast<std::int64_t>(line_no);
      } else if (doc.is_object() && doc.contains("data")) {
        row.rec = recording_from_json(doc.at("data"));
        row.rec.id = doc.contains("id") ? doc.at("id").get<std::int64_t>() : static_cast<std::int64_t>(line_no);
        if (doc.contains("symbol")) row.command = doc.at("symbol").get<std::string>();
        if (doc.contains("symbol_id")) row.symbol_id = doc.at("symbol_id").get<SymbolId>();
      } else {
        throw StructuralError("expected a stroke list or an object with \"data\"");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what());
    } catch (const Error& e) {
      throw ParseError(where + e.what());
    }
    if (!row.command && !row.symbol_id) {
      auto it = labels.find(*row.rec.id);
      if (it != labels.end()) row.command = it->second;
    }
    rows.push_back(std::move(row));
  }

  LabeledRecordings out;
  if (std::filesystem::exists(dir / "symbols.csv")) {
    for (auto& [id, cmd] : detail::read_id_csv(dir / "symbols.csv")) out.symbols.add(static_cast<SymbolId>(id), cmd);
  } else {
    std::set<std::string> commands;
    for (const auto& r : rows)
      if (r.command) commands.insert(*r.command);
    SymbolId next = 1;
    for (const auto& c : commands) out.symbols.add(next++, c);
  }

  std::size_t unlabeled = 0;
  for (auto& r : rows) {
    if (r.symbol_id) {
      if (!out.symbols.contains(*r.symbol_id)) throw ValueError("recording " + std::to_string(*r.rec.id) +
                                                                ": unknown symbol id " + std::to_string(*r.symbol_id));
      r.rec.label = *r.symbol_id;
    } else if (r.command) {
      const auto id = out.symbols.find(*r.command);
      if (!id) {
        warn(diag, "recording " + std::to_string(*r.rec.id) + ": unknown symbol '" + *r.command + "', skipped");
        continue;
      }
      r.rec.label = *id;
    } else {
      ++unlabeled;
    }
    out.recordings.push_back(std::move(r.rec));
  }
  if (unlabeled) warn(diag, std::to_string(unlabeled) + " recordings have no label");
  return out;
}

/// Writes recordings.jsonl (labels inline) and symbols.csv.
inline void save_recordings(const std::filesystem::path& dir, const LabeledRecordings& data) {
  std::string jsonl;
  for (const auto& r : data.recordings) {
    jsonl += "{\"id\":" + std::to_string(r.id.value_or(0));
    if (r.label) jsonl += ",\"symbol\":" + nlohmann::json(data.symbols.command(*r.label)).dump();
    jsonl += ",\"data\":" + serialize_recording(r) + "}\n";
  }
  detail::write_file(dir / "recordings.jsonl", jsonl);
  std::string csv = "id,command\n";
  for (const auto& [id, cmd] : data.symbols.entries()) csv += std::to_string(id) + "," + cmd + "\n";
  detail::write_file(dir / "symbols.csv", csv);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
  friend bool operator==(const SplitFractions&, const SplitFractions&) = default;
};

struct DatasetSplits {
  std::vector<Recording> train;
  std::vector<Recording> validation;
  std::vector<Recording> test;
};

/// Largest-remainder apportionment of n items by the given weights; ties go to the earlier part.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    used += counts[i];
    rem.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n && k < rem.size(); ++k, ++used) ++counts[rem[k].second];
  return counts;
}

/// Stratified by label, shuffled with a seeded generator, each symbol's
/// recordings apportioned to the three parts. Symbols with fewer recordings
/// than non-empty parts go entirely to training. Every part is sorted by id.
inline DatasetSplits split_dataset(const std::vector<Recording>& recs, const SplitFractions& f, std::uint64_t seed,
                                   Diagnostics* diag = nullptr) {
  if (f.train < 0 || f.validation < 0 || f.test < 0 || std::fabs(f.train + f.validation + f.test - 1.0) > 1e-9)
    throw ParameterError("split fractions must be non-negative and sum to 1");
  std::map<SymbolId, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!recs[i].label) throw ValueError("split_dataset: recording without label");
    by_label[*recs[i].label].push_back(i);
  }
  const std::vector<double> weights{f.train, f.validation, f.test};
  const std::size_t parts = static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0; }));
  Rng rng(seed);
  DatasetSplits out;
  std::vector<Recording>* targets[] = {&out.train, &out.validation, &out.test};
  for (const auto& [label, idx] : by_label) {
    const auto perm = permutation(idx.size(), rng);
    if (idx.size() < parts) {
      warn(diag, "symbol " + std::to_string(label) + " has only " + std::to_string(idx.size()) +
                     " recordings; all assigned to training");
      for (auto i : idx) out.train.push_back(recs[i]);
      continue;
    }
    const auto counts = apportion(idx.size(), weights);
    std::size_t pos = 0;
    for (std::size_t part = 0; part < 3; ++part)
      for (std::size_t c = 0; c < counts[part]; ++c) targets[part]->push_back(recs[idx[perm[pos++]]]);
  }
  for (auto* t : targets)
    std::stable_sort(t->begin(), t->end(),
                     [](const Recording& a, const Recording& b) { return a.id.value_or(0) < b.id.value_or(0); });
  return out;
}

// ---------------------------------------------------------------------------
// Parallel map with deterministic output order

inline unsigned resolve_threads(bool reference_mode, unsigned requested = 0) {
  if (reference_mode) return 1;
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n) on up to `threads` threads (contiguous chunks).
/// The exception of the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t t = std::min<std::size_t>(threads, n);
  std::vector<std::exception_ptr> errors(t);
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + t - 1) / t;
  for (std::size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Feature cache: "SYMF", u32 version, u64 dim, u64 count, 16 bytes spec hash,
// then per row an i32 symbol id followed by dim doubles. Host byte order.

struct FeatureSplit {
  std::vector<FeatureVector> x;
  std::vector<SymbolId> labels;
};

struct FeatureCache {
  std::string spec_hash;  // 16 hex digits
  std::size_t dim = 0;
  FeatureSplit data;
};

inline constexpr std::uint32_t kFeatureCacheVersion = 1;

inline void write_feature_cache(const std::filesystem::path& p, const FeatureCache& c) {
  if (c.spec_hash.size() != 16) throw ParameterError("feature cache: spec hash must have 16 characters");
  std::string buf = "SYMF";
  auto put = [&buf](const void* v, std::size_t n) { buf.append(static_cast<const char*>(v), n); };
  const std::uint32_t version = kFeatureCacheVersion;
  const std::uint64_t dim = c.dim, count = c.data.x.size();
  put(&version, sizeof version);
  put(&dim, sizeof dim);
  put(&count, sizeof count);
  buf += c.spec_hash;
  for (std::size_t i = 0; i < c.data.x.size(); ++i) {
    if (c.data.x[i].size() != c.dim) throw ParameterError("feature cache: row dimension mismatch");
    const std::int32_t label = c.data.labels.at(i);
    put(&label, sizeof label);
    put(c.data.x[i].data(), c.dim * sizeof(double));
  }
  detail::write_file(p, buf);
}

inline FeatureCache read_feature_cache(const std::filesystem::path& p) {
  const std::string buf = detail::read_file(p);
  std::size_t pos = 0;
  auto take = [&](void* dst, std::size_t n) {
    if (pos + n > buf.size()) throw LoadError(p.string() + ": truncated feature cache");
    std::memcpy(dst, buf.data() + pos, n);
    pos += n;
  };
  char magic[4];
  take(magic, 4);
  if (std::string(magic, 4) != "SYMF") throw LoadError(p.string() + ": not a feature cache");
  std::uint32_t version = 0;
  std::uint64_t dim = 0, count = 0;
  take(&version, sizeof version);
  if (version != kFeatureCacheVersion) throw LoadError(p.string() + ": unsupported feature cache version");
  take(&dim, sizeof dim);
  take(&count, sizeof count);
  FeatureCache c;
  c.spec_hash.resize(16);
  take(c.spec_hash.data(), 16);
  c.dim = static_cast<std::size_t>(dim);
  if (buf.size() - pos != count * (sizeof(std::int32_t) + dim * sizeof(double)))
    throw LoadError(p.string() + ": feature cache size does not match its header");
  c.data.x.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::int32_t label = 0;
    take(&label, sizeof label);
    FeatureVector v(c.dim);
    take(v.data(), c.dim * sizeof(double));
    c.data.labels.push_back(label);
    c.data.x.push_back(std::move(v));
  }
  return c;
}

/// Class indices (output positions) for symbol ids.
inline Dataset to_dataset(const FeatureSplit& s, const SymbolTable& symbols) {
  std::vector<std::size_t> y;
  y.reserve(s.labels.size());
  for (auto id : s.labels) y.push_back(symbols.index_of(id));
  return make_dataset(s.x, y);
}

}  // namespace symrec
