#pragma once

// Experiment configuration.
//
// Two layouts are accepted. The chained layout mirrors a project tree
//
//   <root>/models/<name>/info.yml          data-source: feature-files/<name>
//   <root>/feature-files/<name>/info.yml   data-source: preprocessed/<name>
//   <root>/preprocessed/<name>/info.yml    data-source: raw-datasets/<name>
//
// where each stage writes its outputs next to its info.yml. The combined layout
// is one file with `preprocessing`, `features` and `model` sections and a
// top-level `data-source` for the raw recordings; outputs go to `output`.
//
// Parameter lists may be written as mappings or as lists of single-key
// mappings. Dashes in keys are read as underscores.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>
#include <json.hpp>

#include "symrec/augment.hpp"
#include "symrec/dataset.hpp"
#include "symrec/error.hpp"
#include "symrec/features.hpp"
#include "symrec/mlp.hpp"
#include "symrec/preprocess.hpp"

namespace symrec {

struct PreprocessingConfig {
  PreprocessingQueue queue;
};

struct FeatureConfig {
  std::vector<AugmentationStep> augmentation;
  FeatureList features;
  StandardizationMode standardization = StandardizationMode::standardize;
  SplitFractions split;
};

enum class Pretraining { none, slp, dae };

struct ModelConfig {
  std::string type = "mlp";  // or "gtw"
  std::vector<std::size_t> topology;
  TrainConfig training;
  Activation hidden_activation = Activation::sigmoid;
  Pretraining pretraining = Pretraining::none;
  DaeConfig dae;
  std::size_t gtw_cap = 50;
};

struct ExperimentConfig {
  std::optional<PreprocessingConfig> preprocessing;
  std::optional<FeatureConfig> features;
  std::optional<ModelConfig> model;
  std::optional<std::uint64_t> seed;

  std::filesystem::path raw_dir;            // recordings directory
  std::filesystem::path preprocessed_dir;   // stage outputs
  std::filesystem::path features_dir;
  std::filesystem::path model_dir;
};

// ---------------------------------------------------------------------------
// YAML to JSON

namespace detail {

inline std::string normalize_key(std::string k) {
  for (auto& c : k)
    if (c == '-') c = '_';
  return k;
}

inline nlohmann::json yaml_scalar(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (const auto i = parse_integer(s)) return *i;
  try {
    std::size_t pos = 0;
    const double d = std::stod(s, &pos);
    if (pos == s.size()) return d;
  } catch (const std::exception&) {
  }
  return s;
}

}  // namespace detail

inline nlohmann::json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Scalar: return detail::yaml_scalar(n);
    case YAML::NodeType::Sequence: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& item : n) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      nlohmann::json obj = nlohmann::json::object();
      for (const auto& kv : n) obj[detail::normalize_key(kv.first.as<std::string>())] = yaml_to_json(kv.second);
      return obj;
    }
  }
  return nullptr;
}

/// A list of single-key mappings becomes one mapping; null and mappings pass through.
inline nlohmann::json flatten_params(const nlohmann::json& j) {
  if (!j.is_array()) return j;
  nlohmann::json obj = nlohmann::json::object();
  for (const auto& item : j) {
    if (!item.is_object()) throw ConfigError("parameter list entries must be `name: value` mappings");
    for (const auto& [k, v] : item.items()) obj[k] = v;
  }
  return obj;
}

namespace detail {

struct ConfigContext {
  std::string file;
  std::string where(const YAML::Node& n) const {
    return file + ":" + std::to_string(n.Mark().line + 1) + ": ";
  }
};

/// Each entry of a YAML list of `Name: params`, with its source line.
template <class T, class Make>
std::vector<T> parse_named_list(const YAML::Node& list, const ConfigContext& ctx, const char* what, Make make) {
  std::vector<T> out;
  if (!list || list.IsNull()) return out;
  if (!list.IsSequence()) throw ConfigError(ctx.where(list) + what + " must be a list");
  for (const auto& item : list) {
    try {
      if (item.IsScalar()) {
        out.push_back(make(item.Scalar(), nlohmann::json()));
        continue;
      }
      if (!item.IsMap() || item.size() != 1) throw ConfigError(std::string(what) + " entries must be `Name: parameters`");
      const auto kv = *item.begin();
      out.push_back(make(kv.first.as<std::string>(), flatten_params(yaml_to_json(kv.second))));
    } catch (const ConfigError& e) {
      throw ConfigError(ctx.where(item) + e.what());
    }
  }
  return out;
}

inline const nlohmann::json* find_key(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double get_number(const nlohmann::json& obj, const char* key, double fallback) {
  const auto* v = find_key(obj, key);
  if (!v || v->is_null()) return fallback;
  if (!v->is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return v->get<double>();
}

inline std::string get_string(const nlohmann::json& obj, const char* key, const std::string& fallback) {
  const auto* v = find_key(obj, key);
  if (!v || v->is_null()) return fallback;
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return std::to_string(v->get<long long>());
  throw ConfigError(std::string("'") + key + "' must be text");
}

inline bool get_bool(const nlohmann::json& obj, const char* key, bool fallback) {
  const auto* v = find_key(obj, key);
  if (!v || v->is_null()) return fallback;
  if (!v->is_boolean()) throw ConfigError(std::string("'") + key + "' must be true or false");
  return v->get<bool>();
}

inline void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!obj.is_object()) return;
  for (const auto& [k, _] : obj.items())
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }) == allowed.end())
      throw ConfigError(what + ": unknown key '" + k + "'");
}

/// Reads `--flag value` pairs from a command template such as
/// "{{nntoolkit}} train --epochs 1000 --learning-rate 0.1 --momentum 0.1 ...".
inline nlohmann::json parse_training_template(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string t; in >> t;) tokens.push_back(t);
  nlohmann::json obj = nlohmann::json::object();
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].rfind("--", 0) != 0) continue;
    const std::string key = normalize_key(tokens[i].substr(2));
    if (key != "epochs" && key != "learning_rate" && key != "momentum" && key != "batch_size") continue;
    const std::string& value = tokens[i + 1];
    if (value.rfind("--", 0) == 0) continue;
    try {
      std::size_t pos = 0;
      const double d = std::stod(value, &pos);
      if (pos == value.size()) obj[key] = d;
    } catch (const std::exception&) {
    }
  }
  return obj;
}

}  // namespace detail

inline TrainConfig parse_train_config(const nlohmann::json& j, TrainConfig t = {}) {
  detail::check_keys(j,
                     {"epochs", "learning_rate", "momentum", "batch_size", "mode", "newbob", "regularization", "seed",
                      "shuffle", "pretraining", "dae", "hidden_activation"},
                     "training");
  const double epochs = detail::get_number(j, "epochs", t.epochs);
  if (epochs < 0 || epochs != std::floor(epochs)) throw ConfigError("'epochs' must be a non-negative integer");
  t.epochs = static_cast<int>(epochs);
  t.learning_rate = detail::get_number(j, "learning_rate", t.learning_rate);
  t.momentum = detail::get_number(j, "momentum", t.momentum);
  const double b = detail::get_number(j, "batch_size", static_cast<double>(t.batch_size));
  if (b < 1 || b != std::floor(b)) throw ConfigError("'batch_size' must be an integer >= 1");
  t.batch_size = static_cast<std::size_t>(b);
  const std::string mode = detail::get_string(j, "mode", t.mode == TrainMode::newbob ? "newbob" : "fixed_epochs");
  if (mode == "newbob")
    t.mode = TrainMode::newbob;
  else if (mode == "fixed_epochs" || mode == "fixed")
    t.mode = TrainMode::fixed_epochs;
  else
    throw ConfigError("unknown training mode '" + mode + "'");
  if (const auto* nb = detail::find_key(j, "newbob"); nb && !nb->is_null()) {
    const auto p = flatten_params(*nb);
    detail::check_keys(p, {"decay", "threshold", "stop_threshold", "relative"}, "newbob");
    t.newbob.decay = detail::get_number(p, "decay", t.newbob.decay);
    t.newbob.threshold = detail::get_number(p, "threshold", t.newbob.threshold);
    t.newbob.stop_threshold = detail::get_number(p, "stop_threshold", t.newbob.stop_threshold);
    t.newbob.relative = detail::get_bool(p, "relative", t.newbob.relative);
  }
  if (const auto* reg = detail::find_key(j, "regularization"); reg && !reg->is_null()) {
    const auto p = flatten_params(*reg);
    detail::check_keys(p, {"kind", "lambda"}, "regularization");
    const std::string kind = detail::get_string(p, "kind", "none");
    if (kind == "none") t.regularization.kind = RegularizationKind::none;
    else if (kind == "l1" || kind == "L1") t.regularization.kind = RegularizationKind::l1;
    else if (kind == "l2" || kind == "L2") t.regularization.kind = RegularizationKind::l2;
    else throw ConfigError("unknown regularization '" + kind + "'");
    t.regularization.lambda = detail::get_number(p, "lambda", 0.0);
  }
  if (detail::find_key(j, "seed")) t.seed = static_cast<std::uint64_t>(detail::get_number(j, "seed", 0));
  t.shuffle = detail::get_bool(j, "shuffle", t.shuffle);
  validate_train_config(t);
  return t;
}

inline ModelConfig parse_model_section(const nlohmann::json& model, const nlohmann::json& training) {
  ModelConfig m;
  detail::check_keys(model, {"type", "topology", "templates_per_symbol", "data_source"}, "model");
  m.type = detail::get_string(model, "type", "mlp");
  if (m.type != "mlp" && m.type != "gtw") throw ConfigError("unknown model type '" + m.type + "'");
  if (m.type == "mlp") m.topology = parse_topology(detail::get_string(model, "topology", ""));
  const double cap = detail::get_number(model, "templates_per_symbol", 50);
  if (cap < 1) throw ConfigError("'templates_per_symbol' must be >= 1");
  m.gtw_cap = static_cast<std::size_t>(cap);

  nlohmann::json tr = training.is_string() ? detail::parse_training_template(training.get<std::string>())
                                           : flatten_params(training);
  if (tr.is_null()) tr = nlohmann::json::object();
  m.training = parse_train_config(tr);
  m.hidden_activation = activation_from_string(detail::get_string(tr, "hidden_activation", "sigmoid"));
  if (m.hidden_activation == Activation::softmax) throw ConfigError("softmax cannot be a hidden activation");
  const std::string pre = detail::get_string(tr, "pretraining", "none");
  if (pre == "none") m.pretraining = Pretraining::none;
  else if (pre == "slp") m.pretraining = Pretraining::slp;
  else if (pre == "dae") m.pretraining = Pretraining::dae;
  else throw ConfigError("unknown pretraining '" + pre + "'");
  if (const auto* dae = detail::find_key(tr, "dae"); dae && !dae->is_null()) {
    const auto p = flatten_params(*dae);
    detail::check_keys(p, {"learning_rate", "corruption", "l2", "epochs", "batch_size", "momentum"}, "dae");
    m.dae.learning_rate = detail::get_number(p, "learning_rate", m.dae.learning_rate);
    m.dae.corruption = detail::get_number(p, "corruption", m.dae.corruption);
    m.dae.l2 = detail::get_number(p, "l2", m.dae.l2);
    m.dae.epochs = static_cast<int>(detail::get_number(p, "epochs", m.dae.epochs));
    m.dae.batch_size = static_cast<std::size_t>(detail::get_number(p, "batch_size", static_cast<double>(m.dae.batch_size)));
    m.dae.momentum = detail::get_number(p, "momentum", m.dae.momentum);
    if (!(m.dae.corruption >= 0 && m.dae.corruption < 1)) throw ConfigError("dae corruption must lie in [0, 1)");
    if (m.dae.batch_size < 1) throw ConfigError("dae batch_size must be >= 1");
  }
  m.dae.activation = m.hidden_activation;
  return m;
}

namespace detail {

inline PreprocessingConfig parse_preprocessing_node(const YAML::Node& node, const ConfigContext& ctx) {
  PreprocessingConfig p;
  p.queue = parse_named_list<PreprocessingStep>(node["queue"], ctx, "queue", step_from_config);
  for (const auto& s : p.queue) validate_step(s);
  return p;
}

inline FeatureConfig parse_features_node(const YAML::Node& node, const ConfigContext& ctx) {
  FeatureConfig f;
  f.augmentation = parse_named_list<AugmentationStep>(node["data-multiplication"] ? node["data-multiplication"]
                                                                                   : node["data_multiplication"],
                                                      ctx, "data-multiplication", augmentation_from_config);
  f.features = parse_named_list<FeatureSpec>(node["features"], ctx, "features", feature_from_config);
  if (f.features.empty()) throw ConfigError(ctx.where(node) + "feature list is empty");
  if (const auto s = node["standardization"]; s) {
    try {
      f.standardization = standardization_mode_from_string(s.as<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(ctx.where(s) + e.what());
    }
  }
  if (const auto s = node["split"]; s) {
    try {
      const auto j = flatten_params(yaml_to_json(s));
      check_keys(j, {"train", "validation", "test"}, "split");
      f.split.train = get_number(j, "train", f.split.train);
      f.split.validation = get_number(j, "validation", f.split.validation);
      f.split.test = get_number(j, "test", f.split.test);
      if (f.split.train <= 0 || f.split.validation < 0 || f.split.test < 0 ||
          std::fabs(f.split.train + f.split.validation + f.split.test - 1.0) > 1e-9)
        throw ConfigError("split fractions must be non-negative, with a positive train part, and sum to 1");
    } catch (const ConfigError& e) {
      throw ConfigError(ctx.where(s) + e.what());
    }
  }
  return f;
}

inline ModelConfig parse_model_node(const YAML::Node& node, const ConfigContext& ctx) {
  try {
    return parse_model_section(yaml_to_json(node["model"]), yaml_to_json(node["training"]));
  } catch (const ConfigError& e) {
    throw ConfigError(ctx.where(node["model"] ? node["model"] : node) + e.what());
  }
}

inline YAML::Node load_yaml(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw ConfigError("config file not found: " + p.string());
  try {
    return YAML::LoadFile(p.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError(p.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

inline std::filesystem::path resolve_source(const std::string& source, const std::filesystem::path& root,
                                            const std::filesystem::path& config_file) {
  if (source.empty()) throw ConfigError(config_file.string() + ": missing data-source");
  const std::filesystem::path s(source);
  std::vector<std::filesystem::path> candidates;
  if (s.is_absolute()) {
    candidates.push_back(s);
  } else {
    candidates.push_back(root / s);
    candidates.push_back(config_file.parent_path() / s);
  }
  for (const auto& c : candidates)
    if (std::filesystem::exists(c)) return std::filesystem::weakly_canonical(c);
  std::string looked;
  for (const auto& c : candidates) looked += (looked.empty() ? "" : ", ") + c.string();
  throw ConfigError(config_file.string() + ": data-source '" + source + "' not found (looked in " + looked + ")");
}

inline std::filesystem::path stage_file(const std::filesystem::path& p) {
  return std::filesystem::is_directory(p) ? p / "info.yml" : p;
}

}  // namespace detail

/// Project root: explicit value, else $SYMREC_ROOT, else the working directory.
inline std::filesystem::path project_root(const std::optional<std::filesystem::path>& explicit_root = std::nullopt) {
  if (explicit_root && !explicit_root->empty()) return *explicit_root;
  if (const char* env = std::getenv("SYMREC_ROOT"); env && *env) return env;
  return std::filesystem::current_path();
}

/// Parses a combined experiment file or any info.yml of a chain, following
/// data-source links down to the raw recordings.
inline ExperimentConfig parse_config(const std::filesystem::path& path, const std::filesystem::path& root) {
  ExperimentConfig cfg;
  std::filesystem::path file = detail::stage_file(path);
  YAML::Node doc = detail::load_yaml(file);
  if (!doc.IsMap()) throw ConfigError(file.string() + ": expected a mapping at the top level");
  detail::ConfigContext ctx{file.string()};
  auto source_of = [&](const YAML::Node& n) {
    const auto s = n["data-source"] ? n["data-source"] : n["data_source"];
    return s ? s.as<std::string>() : std::string();
  };

  if (doc["preprocessing"] || (doc["features"] && doc["features"].IsMap())) {
    // Combined layout.
    if (doc["seed"]) cfg.seed = doc["seed"].as<std::uint64_t>();
    cfg.raw_dir = detail::resolve_source(source_of(doc), root, file);
    std::filesystem::path out = doc["output"] ? std::filesystem::path(doc["output"].as<std::string>())
                                              : std::filesystem::path("output");
    if (out.is_relative()) out = file.parent_path() / out;
    cfg.preprocessed_dir = out / "preprocessed";
    cfg.features_dir = out / "features";
    cfg.model_dir = out / "model";
    cfg.preprocessing = doc["preprocessing"] ? detail::parse_preprocessing_node(doc["preprocessing"], ctx)
                                             : PreprocessingConfig{};
    if (doc["features"]) cfg.features = detail::parse_features_node(doc["features"], ctx);
    if (doc["model"]) {
      try {
        nlohmann::json mj = yaml_to_json(doc["model"]);
        nlohmann::json tj = doc["training"] ? yaml_to_json(doc["training"])
                                            : (mj.contains("training") ? mj["training"] : nlohmann::json());
        mj.erase("training");
        cfg.model = parse_model_section(mj, tj);
      } catch (const ConfigError& e) {
        throw ConfigError(ctx.where(doc["model"]) + e.what());
      }
    }
    return cfg;
  }

  // Chained layout: walk model -> features -> preprocessing -> raw.
  if (doc["model"]) {
    cfg.model = detail::parse_model_node(doc, ctx);
    cfg.model_dir = file.parent_path();
    if (doc["seed"]) cfg.seed = doc["seed"].as<std::uint64_t>();
    file = detail::stage_file(detail::resolve_source(source_of(doc), root, file));
    doc = detail::load_yaml(file);
    ctx.file = file.string();
  }
  if (doc["features"]) {
    cfg.features = detail::parse_features_node(doc, ctx);
    cfg.features_dir = file.parent_path();
    file = detail::stage_file(detail::resolve_source(source_of(doc), root, file));
    doc = detail::load_yaml(file);
    ctx.file = file.string();
  } else if (cfg.model) {
    throw ConfigError(file.string() + ": expected a feature configuration (with a `features` list)");
  }
  if (doc["queue"]) {
    cfg.preprocessing = detail::parse_preprocessing_node(doc, ctx);
    cfg.preprocessed_dir = file.parent_path();
    cfg.raw_dir = detail::resolve_source(source_of(doc), root, file);
  } else {
    throw ConfigError(file.string() + ": expected a preprocessing configuration (with a `queue` list)");
  }
  return cfg;
}

}  // namespace symrec
