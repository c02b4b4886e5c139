#pragma once

// A trained model together with the preprocessing and features it was trained
// with, so raw recordings can be classified directly.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "symrec/dataset.hpp"
#include "symrec/diagnostics.hpp"
#include "symrec/features.hpp"
#include "symrec/gtw.hpp"
#include "symrec/hash.hpp"
#include "symrec/mlp.hpp"
#include "symrec/preprocess.hpp"

namespace symrec {

inline constexpr int kGtwModelFormatVersion = 1;

class Classifier {
 public:
  /// The model's pipeline sections (preprocessing, features, standardization) are required.
  static Classifier from_mlp(MlpModel m) {
    Classifier c;
    const auto& p = m.pipeline;
    try {
      if (p.contains("preprocessing")) c.queue_ = queue_from_json(p.at("preprocessing"));
      if (!p.contains("features")) throw LoadError("model has no feature section");
      c.features_ = features_from_json(p.at("features"));
      if (p.contains("standardization")) c.standardization_ = standardization_from_json(p.at("standardization"));
    } catch (const ConfigError& e) {
      throw LoadError(std::string("bad pipeline section in model: ") + e.what());
    }
    if (dimension(c.features_) != m.feature_dim())
      throw LoadError("feature dimension " + std::to_string(dimension(c.features_)) +
                      " does not match the model input width " + std::to_string(m.feature_dim()));
    c.symbols_ = m.symbols;
    c.topology_ = topology_string(m.topology());
    c.backend_ = std::make_shared<const MlpModel>(std::move(m));
    return c;
  }

  static Classifier from_gtw(GtwTemplateStore store, PreprocessingQueue queue, SymbolTable symbols) {
    Classifier c;
    c.queue_ = std::move(queue);
    c.symbols_ = std::move(symbols);
    c.topology_ = "gtw";
    c.backend_ = std::make_shared<const GtwTemplateStore>(std::move(store));
    return c;
  }

  /// Loads model.json of either kind. GTW templates are read from the directory
  /// named in the file, relative to it.
  static Classifier load(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(path.string() + ": " + e.what());
    }
    Classifier c;
    if (doc.is_object() && doc.value("type", "mlp") == "gtw") {
      if (doc.value("format_version", 0) != kGtwModelFormatVersion) throw LoadError("unsupported GTW model version");
      SymbolTable symbols;
      PreprocessingQueue queue;
      std::size_t cap = 50;
      std::string dir;
      try {
        for (const auto& s : doc.at("symbols")) symbols.add(s.at("id").get<SymbolId>(), s.at("command").get<std::string>());
        queue = queue_from_json(doc.value("preprocessing", nlohmann::json::array()));
        cap = doc.value("templates_per_symbol", std::size_t{50});
        dir = doc.at("templates").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
      } catch (const ConfigError& e) {
        throw LoadError(path.string() + ": " + e.what());
      }
      c = from_gtw(GtwTemplateStore::load(path.parent_path() / dir, cap), std::move(queue), std::move(symbols));
    } else {
      c = from_mlp(model_from_json(doc));
    }
    c.model_hash_ = hex64(fnv1a64(text));
    return c;
  }

  /// Preprocesses, extracts features, standardizes and ranks the k best symbols.
  ClassificationResult classify(const Recording& raw, std::size_t k = 10, Diagnostics* diag = nullptr) const {
    validate(raw);
    const Recording rec = apply_queue(raw, queue_, diag);
    if (const auto* mlp = std::get_if<std::shared_ptr<const MlpModel>>(&backend_)) {
      FeatureVector x = compose(rec, features_);
      if (standardization_) x = apply_standardization(*standardization_, x);
      return predict_topk(**mlp, x, k);
    }
    return classify_gtw(*std::get<std::shared_ptr<const GtwTemplateStore>>(backend_), rec, k);
  }

  bool is_mlp() const { return std::holds_alternative<std::shared_ptr<const MlpModel>>(backend_); }
  const SymbolTable& symbols() const { return symbols_; }
  const std::string& topology() const { return topology_; }
  std::string feature_hash() const { return is_mlp() ? symrec::feature_hash(features_) : std::string("none"); }
  /// Fingerprint of the model file bytes; empty for models built in memory.
  const std::string& model_hash() const { return model_hash_; }

 private:
  PreprocessingQueue queue_;
  FeatureList features_;
  std::optional<Standardization> standardization_;
  SymbolTable symbols_;
  std::string topology_;
  std::string model_hash_;
  std::variant<std::shared_ptr<const MlpModel>, std::shared_ptr<const GtwTemplateStore>> backend_;
};

}  // namespace symrec
