#pragma once

// Experiment stages: preprocess -> split -> augment -> featurize -> standardize
// -> train -> evaluate, in memory (run_experiment) or through the stage
// directories of an ExperimentConfig (run_*_stage).
//
// Stage directory contents:
//   preprocessed  recordings.jsonl, symbols.csv
//   features      train.symf, validation.symf, test.symf, standardization.json,
//                 split.json
//   model         model.json, training-log.csv (MLP) or templates/ (GTW), report.csv

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "symrec/augment.hpp"
#include "symrec/classifier.hpp"
#include "symrec/config.hpp"
#include "symrec/dataset.hpp"
#include "symrec/diagnostics.hpp"
#include "symrec/eval.hpp"
#include "symrec/features.hpp"
#include "symrec/gtw.hpp"
#include "symrec/mlp.hpp"
#include "symrec/preprocess.hpp"

namespace symrec {

/// A stage failed; what() names the stage and the cause.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause) : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the configured seed
  bool reference_mode = false;        // single-threaded
  unsigned threads = 0;               // 0 = hardware concurrency
  std::optional<std::filesystem::path> equivalences;
};

inline std::uint64_t effective_seed(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.seed) return *opts.seed;
  if (cfg.seed) return *cfg.seed;
  return cfg.model ? cfg.model->training.seed : 0;
}

namespace detail {

inline void merge_unique(Diagnostics* into, const std::vector<Diagnostics>& parts) {
  if (!into) return;
  std::set<std::string> seen(into->warnings.begin(), into->warnings.end());
  for (const auto& d : parts)
    for (const auto& w : d.warnings)
      if (seen.insert(w).second) into->warn(w);
}

template <class Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace detail

/// Applies the queue to every recording; output order equals input order.
inline std::vector<Recording> preprocess_all(const std::vector<Recording>& recs, const PreprocessingQueue& queue,
                                             unsigned threads, Diagnostics* diag = nullptr) {
  for (const auto& s : queue) validate_step(s);
  std::vector<Recording> out(recs.size());
  std::vector<Diagnostics> local(recs.size());
  parallel_for(recs.size(), threads, [&](std::size_t i) {
    try {
      out[i] = apply_queue(recs[i], queue, &local[i]);
    } catch (const Error& e) {
      throw ValueError("recording " + std::to_string(recs[i].id.value_or(-1)) + ": " + e.what());
    }
  });
  detail::merge_unique(diag, local);
  return out;
}

inline std::vector<FeatureVector> featurize_all(const std::vector<Recording>& recs, const FeatureList& features,
                                                unsigned threads) {
  std::vector<FeatureVector> out(recs.size());
  parallel_for(recs.size(), threads, [&](std::size_t i) {
    try {
      out[i] = compose(recs[i], features);
    } catch (const Error& e) {
      throw ValueError("recording " + std::to_string(recs[i].id.value_or(-1)) + ": " + e.what());
    }
  });
  return out;
}

struct FeatureSets {
  FeatureSplit train;
  FeatureSplit validation;
  FeatureSplit test;
  Standardization standardization;
  std::string spec_hash;
  std::size_t dim = 0;
};

/// Augments the training part only, featurizes all parts and standardizes with
/// statistics of the (augmented) training part.
inline FeatureSets build_feature_sets(const DatasetSplits& splits, const FeatureConfig& cfg, unsigned threads,
                                      Diagnostics* diag = nullptr) {
  if (splits.train.empty()) throw ValueError("training split is empty");
  std::vector<Recording> train = splits.train;
  for (const auto& step : cfg.augmentation) train = apply_augmentation(train, step, diag);
  FeatureSets fs;
  fs.dim = dimension(cfg.features);
  fs.spec_hash = feature_hash(cfg.features);
  auto fill = [&](const std::vector<Recording>& recs, FeatureSplit& out) {
    out.x = featurize_all(recs, cfg.features, threads);
    out.labels.clear();
    for (const auto& r : recs) out.labels.push_back(*r.label);
  };
  fill(train, fs.train);
  fill(splits.validation, fs.validation);
  fill(splits.test, fs.test);
  fs.standardization = fit_standardization(fs.train.x, cfg.standardization);
  for (auto* part : {&fs.train, &fs.validation, &fs.test})
    for (auto& v : part->x) v = apply_standardization(fs.standardization, v);
  return fs;
}

/// Sections stored in model.json so the model can classify raw recordings.
inline nlohmann::json pipeline_sections(const PreprocessingQueue& queue, const FeatureList& features,
                                        const Standardization& st) {
  return {{"preprocessing", queue_to_json(queue)},
          {"features", features_to_json(features)},
          {"feature_hash", feature_hash(features)},
          {"standardization", standardization_to_json(st)}};
}

struct TrainedMlp {
  MlpModel model;
  TrainingHistory history;
};

inline TrainedMlp train_mlp(const ModelConfig& mc, const FeatureSets& fs, const SymbolTable& symbols,
                            const nlohmann::json& pipeline, std::uint64_t seed) {
  if (mc.topology.size() < 2) throw ConfigError("MLP topology needs at least two widths");
  if (mc.topology.front() != fs.dim)
    throw ConfigError("topology input width " + std::to_string(mc.topology.front()) + " differs from feature dimension " +
                      std::to_string(fs.dim));
  if (mc.topology.back() != symbols.size())
    throw ConfigError("topology output width " + std::to_string(mc.topology.back()) + " differs from symbol count " +
                      std::to_string(symbols.size()));
  TrainConfig tc = mc.training;
  tc.seed = seed;
  const Dataset train_set = to_dataset(fs.train, symbols);
  const Dataset valid_set = to_dataset(fs.validation, symbols);
  TrainResult r;
  switch (mc.pretraining) {
    case Pretraining::none: {
      MlpModel m = init_model(mc.topology, seed, mc.hidden_activation);
      m.symbols = symbols;
      r = train(std::move(m), train_set, valid_set, tc);
      break;
    }
    case Pretraining::slp:
      r = slp_pretrain(mc.topology, train_set, valid_set, tc, mc.hidden_activation, {}, symbols);
      break;
    case Pretraining::dae: {
      DaeConfig dc = mc.dae;
      dc.seed = seed;
      MlpModel m = dae_pretrain(mc.topology, train_set.x, dc);
      m.symbols = symbols;
      r = train(std::move(m), train_set, valid_set, tc);
      break;
    }
  }
  r.model.pipeline = pipeline;
  return {std::move(r.model), std::move(r.history)};
}

inline std::string training_log_csv(const TrainingHistory& h) {
  std::string out = "epoch,eta,train_err,valid_err,loss\n";
  char buf[160];
  for (const auto& e : h) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.4f,%.4f,%.10g\n", e.epoch, e.eta, e.train_error, e.valid_error, e.loss);
    out += buf;
  }
  return out;
}

inline EquivalenceClasses equivalences_for(const SymbolTable& symbols, const RunOptions& opts,
                                           Diagnostics* diag = nullptr) {
  if (opts.equivalences) return load_equivalences(detail::read_file(*opts.equivalences), symbols, diag);
  // The bundled pairs mention many symbols a given dataset lacks; those warnings are noise.
  return load_equivalences(std::string(bundled_equivalences_csv()), symbols, nullptr);
}

inline ErrorReport evaluate_mlp(const MlpModel& m, const FeatureSplit& test, const EquivalenceClasses& classes) {
  std::vector<EvalCase> cases;
  cases.reserve(test.x.size());
  for (std::size_t i = 0; i < test.x.size(); ++i) cases.push_back({predict_topk(m, test.x[i], 10), test.labels[i]});
  return evaluate_cases(cases, classes);
}

inline ErrorReport evaluate_gtw(const GtwTemplateStore& store, const std::vector<Recording>& test,
                                const EquivalenceClasses& classes, unsigned threads) {
  std::vector<EvalCase> cases(test.size());
  parallel_for(test.size(), threads, [&](std::size_t i) { cases[i] = {classify_gtw(store, test[i], 10), *test[i].label}; });
  return evaluate_cases(cases, classes);
}

inline GtwTemplateStore build_gtw_store(const std::vector<Recording>& train, std::size_t cap) {
  GtwTemplateStore store(cap);
  for (const auto& r : train) store.add(*r.label, r);
  return store;
}

// ---------------------------------------------------------------------------
// In-memory experiment

struct ExperimentResult {
  std::optional<MlpModel> mlp;
  std::optional<GtwTemplateStore> gtw;
  TrainingHistory history;
  ErrorReport report;
  DatasetSplits splits;  // preprocessed, before augmentation
  Diagnostics diagnostics;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const LabeledRecordings& data,
                                       const RunOptions& opts = {}) {
  if (!cfg.model) throw ConfigError("experiment has no model section");
  if (!cfg.features) throw ConfigError("experiment has no features section");
  const PreprocessingQueue queue = cfg.preprocessing ? cfg.preprocessing->queue : PreprocessingQueue{};
  const unsigned threads = resolve_threads(opts.reference_mode, opts.threads);
  const std::uint64_t seed = effective_seed(cfg, opts);
  ExperimentResult res;
  auto pre = detail::in_stage("preprocess",
                              [&] { return preprocess_all(data.recordings, queue, threads, &res.diagnostics); });
  res.splits = detail::in_stage("split", [&] { return split_dataset(pre, cfg.features->split, seed, &res.diagnostics); });
  const auto classes = equivalences_for(data.symbols, opts, &res.diagnostics);
  if (cfg.model->type == "gtw") {
    res.gtw = build_gtw_store(res.splits.train, cfg.model->gtw_cap);
    res.report = detail::in_stage("evaluate", [&] { return evaluate_gtw(*res.gtw, res.splits.test, classes, threads); });
    return res;
  }
  const FeatureSets fs =
      detail::in_stage("featurize", [&] { return build_feature_sets(res.splits, *cfg.features, threads, &res.diagnostics); });
  auto trained = detail::in_stage("train", [&] {
    return train_mlp(*cfg.model, fs, data.symbols, pipeline_sections(queue, cfg.features->features, fs.standardization),
                     seed);
  });
  res.report = detail::in_stage("evaluate", [&] { return evaluate_mlp(trained.model, fs.test, classes); });
  res.history = std::move(trained.history);
  res.mlp = std::move(trained.model);
  return res;
}

// ---------------------------------------------------------------------------
// Stages on disk

namespace detail {

inline void require_dir(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("configuration does not define the ") + what + " directory");
}

inline nlohmann::json ids_of(const std::vector<Recording>& recs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : recs) arr.push_back(r.id.value_or(0));
  return arr;
}

inline std::vector<Recording> select_ids(const std::vector<Recording>& all, const nlohmann::json& ids) {
  std::map<std::int64_t, const Recording*> by_id;
  for (const auto& r : all) by_id[r.id.value_or(0)] = &r;
  std::vector<Recording> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id.get<std::int64_t>());
    if (it == by_id.end()) throw StateError("split refers to unknown recording " + id.dump());
    out.push_back(*it->second);
  }
  return out;
}

inline void write_report(const std::filesystem::path& dir, const ErrorReport& r) {
  write_file(dir / "report.csv", report_csv(r));
}

}  // namespace detail

inline void run_preprocess_stage(const ExperimentConfig& cfg, const RunOptions& opts, Diagnostics* diag = nullptr) {
  detail::in_stage("preprocess", [&] {
    detail::require_dir(cfg.preprocessed_dir, "preprocessing");
    const LabeledRecordings raw = load_recordings(cfg.raw_dir, diag);
    const PreprocessingQueue queue = cfg.preprocessing ? cfg.preprocessing->queue : PreprocessingQueue{};
    LabeledRecordings out{raw.symbols,
                          preprocess_all(raw.recordings, queue, resolve_threads(opts.reference_mode, opts.threads), diag)};
    save_recordings(cfg.preprocessed_dir, out);
    return 0;
  });
}

inline void run_featurize_stage(const ExperimentConfig& cfg, const RunOptions& opts, Diagnostics* diag = nullptr) {
  detail::in_stage("featurize", [&] {
    detail::require_dir(cfg.features_dir, "feature");
    const bool gtw_only = !cfg.features && cfg.model && cfg.model->type == "gtw";
    if (!cfg.features && !gtw_only) throw ConfigError("configuration has no feature section");
    if (!std::filesystem::exists(cfg.preprocessed_dir / "recordings.jsonl"))
      throw StateError("no preprocessed recordings in " + cfg.preprocessed_dir.string() + "; run preprocess first");
    const LabeledRecordings pre = load_recordings(cfg.preprocessed_dir, diag);
    const DatasetSplits splits = split_dataset(pre.recordings, cfg.features ? cfg.features->split : SplitFractions{},
                                               effective_seed(cfg, opts), diag);
    const nlohmann::json split = {{"train", detail::ids_of(splits.train)},
                                  {"validation", detail::ids_of(splits.validation)},
                                  {"test", detail::ids_of(splits.test)}};
    detail::write_file(cfg.features_dir / "split.json", split.dump() + "\n");
    if (gtw_only) return 0;
    const FeatureSets fs =
        build_feature_sets(splits, *cfg.features, resolve_threads(opts.reference_mode, opts.threads), diag);
    write_feature_cache(cfg.features_dir / "train.symf", {fs.spec_hash, fs.dim, fs.train});
    write_feature_cache(cfg.features_dir / "validation.symf", {fs.spec_hash, fs.dim, fs.validation});
    write_feature_cache(cfg.features_dir / "test.symf", {fs.spec_hash, fs.dim, fs.test});
    detail::write_file(cfg.features_dir / "standardization.json",
                       standardization_to_json(fs.standardization).dump() + "\n");
    return 0;
  });
}

inline void run_train_stage(const ExperimentConfig& cfg, const RunOptions& opts, Diagnostics* diag = nullptr) {
  detail::in_stage("train", [&] {
    detail::require_dir(cfg.model_dir, "model");
    if (!cfg.model) throw ConfigError("configuration has no model section");
    const PreprocessingQueue queue = cfg.preprocessing ? cfg.preprocessing->queue : PreprocessingQueue{};
    const LabeledRecordings pre = load_recordings(cfg.preprocessed_dir, diag);
    if (cfg.model->type == "gtw") {
      const auto split = nlohmann::json::parse(detail::read_file(cfg.features_dir / "split.json"));
      const auto store = build_gtw_store(detail::select_ids(pre.recordings, split.at("train")), cfg.model->gtw_cap);
      store.save(cfg.model_dir / "templates");
      nlohmann::json doc = {{"format_version", kGtwModelFormatVersion},
                            {"type", "gtw"},
                            {"templates", "templates"},
                            {"templates_per_symbol", cfg.model->gtw_cap},
                            {"preprocessing", queue_to_json(queue)}};
      nlohmann::json symbols = nlohmann::json::array();
      for (const auto& [id, command] : pre.symbols.entries()) symbols.push_back({{"id", id}, {"command", command}});
      doc["symbols"] = symbols;
      detail::write_file(cfg.model_dir / "model.json", doc.dump(1) + "\n");
      return 0;
    }
    if (!cfg.features) throw ConfigError("configuration has no feature section");
    FeatureSets fs;
    auto load_part = [&](const char* name, FeatureSplit& out) {
      const auto c = read_feature_cache(cfg.features_dir / name);
      if (c.spec_hash != feature_hash(cfg.features->features))
        throw StateError(std::string(name) + " was built with a different feature list; run featurize again");
      fs.dim = c.dim;
      fs.spec_hash = c.spec_hash;
      out = c.data;
    };
    load_part("train.symf", fs.train);
    load_part("validation.symf", fs.validation);
    fs.standardization =
        standardization_from_json(nlohmann::json::parse(detail::read_file(cfg.features_dir / "standardization.json")));
    auto trained = train_mlp(*cfg.model, fs, pre.symbols,
                             pipeline_sections(queue, cfg.features->features, fs.standardization),
                             effective_seed(cfg, opts));
    detail::write_file(cfg.model_dir / "model.json", serialize_model(trained.model));
    detail::write_file(cfg.model_dir / "training-log.csv", training_log_csv(trained.history));
    return 0;
  });
}

inline ErrorReport run_evaluate_stage(const ExperimentConfig& cfg, const RunOptions& opts, Diagnostics* diag = nullptr) {
  return detail::in_stage("evaluate", [&] {
    detail::require_dir(cfg.model_dir, "model");
    const auto model_path = cfg.model_dir / "model.json";
    if (!std::filesystem::exists(model_path)) throw StateError("no model in " + cfg.model_dir.string() + "; run train first");
    const auto doc = nlohmann::json::parse(detail::read_file(model_path));
    ErrorReport report;
    if (doc.value("type", "mlp") == "gtw") {
      const LabeledRecordings pre = load_recordings(cfg.preprocessed_dir, diag);
      const auto split = nlohmann::json::parse(detail::read_file(cfg.features_dir / "split.json"));
      const auto store = GtwTemplateStore::load(cfg.model_dir / doc.at("templates").get<std::string>(),
                                                doc.value("templates_per_symbol", std::size_t{50}));
      report = evaluate_gtw(store, detail::select_ids(pre.recordings, split.at("test")),
                            equivalences_for(pre.symbols, opts, diag), resolve_threads(opts.reference_mode, opts.threads));
    } else {
      const MlpModel m = model_from_json(doc);
      const auto test = read_feature_cache(cfg.features_dir / "test.symf");
      if (m.pipeline.value("feature_hash", "") != test.spec_hash)
        throw StateError("test features were built with a different feature list than the model");
      report = evaluate_mlp(m, test.data, equivalences_for(m.symbols, opts, diag));
    }
    detail::write_report(cfg.model_dir, report);
    return report;
  });
}

/// All four stages in order.
inline ErrorReport run_all_stages(const ExperimentConfig& cfg, const RunOptions& opts, Diagnostics* diag = nullptr) {
  run_preprocess_stage(cfg, opts, diag);
  run_featurize_stage(cfg, opts, diag);
  run_train_stage(cfg, opts, diag);
  return run_evaluate_stage(cfg, opts, diag);
}

}  // namespace symrec
