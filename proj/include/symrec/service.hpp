#pragma once

// HTTP classification worker.
//
//   POST /classify  {"recording": [[{"x":..,"y":..,"time":..}, ...], ...], "k": 10}
//                   -> [{"31": 0.888}, {"1": 0.109}, ...]   at most 10, best first
//   GET  /health    model identity, uptime, "ok" or "degraded"
//   GET  /symbols   {"31": "\\alpha", ...}
//   POST /reload    re-reads the model file
//   GET  /*         files from the static directory, when one is configured
//
// The handle_* functions are independent of the HTTP server and return status
// code and body.

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "symrec/classifier.hpp"
#include "symrec/error.hpp"
#include "symrec/recording.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen's product kernels.
#include <httplib.h>

namespace symrec {

struct ServiceConfig {
  std::optional<std::filesystem::path> model_path;
  std::optional<std::filesystem::path> static_dir;
  std::size_t max_body_bytes = 1 << 20;
  std::string cors_origin = "*";
  std::size_t max_results = 10;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class ClassificationService {
 public:
  explicit ClassificationService(ServiceConfig cfg = {}) : cfg_(std::move(cfg)), started_(std::chrono::steady_clock::now()) {}

  /// Loads cfg.model_path; throws LoadError and keeps the previous model on failure.
  void load_model() {
    if (!cfg_.model_path) throw LoadError("no model path configured");
    set_model(std::make_shared<const Classifier>(Classifier::load(*cfg_.model_path)));
  }

  void set_model(std::shared_ptr<const Classifier> model) {
    std::lock_guard<std::mutex> lock(mutex_);
    model_ = std::move(model);
  }

  std::shared_ptr<const Classifier> model() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return model_;
  }

  const ServiceConfig& config() const { return cfg_; }

  HttpResponse handle_classify(std::string_view body) const {
    if (body.size() > cfg_.max_body_bytes) return error(413, "request body exceeds " + std::to_string(cfg_.max_body_bytes) + " bytes");
    const auto snapshot = model();
    if (!snapshot) return error(503, "no model loaded");
    Recording rec;
    std::size_t k = cfg_.max_results;
    try {
      const auto doc = nlohmann::json::parse(body);
      const nlohmann::json* data = &doc;
      if (doc.is_object()) {
        if (!doc.contains("recording")) return error(400, "missing \"recording\"");
        data = &doc.at("recording");
        if (doc.contains("k")) {
          if (!doc.at("k").is_number_integer() || doc.at("k").get<long long>() < 1)
            return error(400, "\"k\" must be a positive integer");
          k = std::min<std::size_t>(doc.at("k").get<std::size_t>(), cfg_.max_results);
        }
      }
      rec = recording_from_json(*data);
    } catch (const nlohmann::json::exception& e) {
      return error(400, std::string("malformed request: ") + e.what());
    } catch (const Error& e) {
      return error(400, std::string("invalid recording: ") + e.what());
    }
    try {
      const auto result = snapshot->classify(rec, k);
      nlohmann::json out = nlohmann::json::array();
      for (const auto& p : result) {
        if (!(p.probability > 0.0)) continue;
        out.push_back({{std::to_string(p.symbol), p.probability}});
      }
      return {200, out.dump()};
    } catch (const std::exception& e) {
      return error(500, std::string("classification failed: ") + e.what());
    }
  }

  HttpResponse handle_health() const {
    const auto snapshot = model();
    const double uptime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    nlohmann::json doc = {{"status", snapshot ? "ok" : "degraded"}, {"uptime_seconds", uptime}};
    if (snapshot) {
      doc["backend"] = snapshot->is_mlp() ? "mlp" : "gtw";
      doc["topology"] = snapshot->topology();
      doc["feature_hash"] = snapshot->feature_hash();
      doc["model_hash"] = snapshot->model_hash();
      doc["symbols"] = snapshot->symbols().size();
    } else {
      doc["symbols"] = 0;
    }
    return {200, doc.dump()};
  }

  HttpResponse handle_symbols() const {
    const auto snapshot = model();
    if (!snapshot) return error(503, "no model loaded");
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [id, command] : snapshot->symbols().entries()) doc[std::to_string(id)] = command;
    return {200, doc.dump()};
  }

  HttpResponse handle_reload() {
    try {
      load_model();
    } catch (const std::exception& e) {
      return error(500, std::string("reload failed: ") + e.what());
    }
    return handle_health();
  }

  /// Registers all routes, CORS headers and the static mount on `server`.
  void mount(httplib::Server& server) {
    server.set_payload_max_length(cfg_.max_body_bytes);
    server.set_default_headers({{"Access-Control-Allow-Origin", cfg_.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    auto send = [](httplib::Response& res, const HttpResponse& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Post("/classify", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, handle_classify(req.body));
    });
    server.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_health()); });
    server.Get("/symbols", [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_symbols()); });
    server.Post("/reload", [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_reload()); });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    if (cfg_.static_dir) {
      if (!server.set_mount_point("/", cfg_.static_dir->string()))
        throw ConfigError("static directory not found: " + cfg_.static_dir->string());
    }
  }

 private:
  static HttpResponse error(int status, const std::string& message) {
    return {status, nlohmann::json{{"error", message}}.dump()};
  }

  ServiceConfig cfg_;
  std::chrono::steady_clock::time_point started_;
  mutable std::mutex mutex_;
  std::shared_ptr<const Classifier> model_;
};

}  // namespace symrec
