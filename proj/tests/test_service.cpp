#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "generators.hpp"
#include "symrec/service.hpp"

using namespace symrec;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kSymbols = 12;

// Zero weights make every output equal: softmax of a constant vector.
MlpModel uniform_model() {
  MlpModel m = init_model({1, kSymbols}, 1, Activation::sigmoid);
  m.layers[0].weights.setZero();
  for (SymbolId id = 1; id <= static_cast<SymbolId>(kSymbols); ++id) m.symbols.add(id * 10, "s" + std::to_string(id));
  m.pipeline = {{"preprocessing", queue_to_json({})},
                {"features", features_to_json({features::StrokeCount{}})}};
  return m;
}

// Trained-looking model whose ranking depends on the stroke count.
MlpModel stroke_count_model() {
  MlpModel m = uniform_model();
  for (std::size_t j = 0; j < kSymbols; ++j) m.layers[0].weights(0, static_cast<Eigen::Index>(j)) = 0.3 * j;
  return m;
}

std::shared_ptr<const Classifier> classifier(MlpModel m) {
  return std::make_shared<const Classifier>(Classifier::from_mlp(std::move(m)));
}

std::string request_body(const Recording& r, std::optional<int> k = std::nullopt) {
  std::string body = "{\"recording\":" + serialize_recording(r);
  if (k) body += ",\"k\":" + std::to_string(*k);
  return body + "}";
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("symrec-service-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Classify, ResponseSchema) {
  ClassificationService svc;
  svc.set_model(classifier(stroke_count_model()));
  gen::Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto res = svc.handle_classify(request_body(gen::recording(rng)));
    ASSERT_EQ(res.status, 200) << res.body;
    const auto doc = nlohmann::json::parse(res.body);
    ASSERT_TRUE(doc.is_array());
    ASSERT_LE(doc.size(), 10u);
    ASSERT_FALSE(doc.empty());
    double prev = 1.0, sum = 0.0;
    for (const auto& entry : doc) {
      ASSERT_TRUE(entry.is_object());
      ASSERT_EQ(entry.size(), 1u);
      const auto& [key, value] = *entry.items().begin();
      ASSERT_NO_THROW((void)std::stoi(key));
      ASSERT_TRUE(value.is_number());
      const double p = value.get<double>();
      ASSERT_GT(p, 0.0);
      ASSERT_LE(p, prev);
      prev = p;
      sum += p;
    }
    ASSERT_LE(sum, 1.0 + 1e-12);
  }
}

TEST(Classify, UniformModelTiesByIdAscending) {
  ClassificationService svc;
  svc.set_model(classifier(uniform_model()));
  Recording r;
  r.strokes = {{{0, 0, 0}, {5, 5, 10}}};
  const auto res = svc.handle_classify(request_body(r));
  ASSERT_EQ(res.status, 200);
  const auto doc = nlohmann::json::parse(res.body);
  ASSERT_EQ(doc.size(), 10u);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& [key, value] = *doc[i].items().begin();
    EXPECT_EQ(key, std::to_string((i + 1) * 10));
    EXPECT_NEAR(value.get<double>(), 1.0 / kSymbols, 1e-15);
  }
}

TEST(Classify, KAndBareArray) {
  ClassificationService svc;
  svc.set_model(classifier(uniform_model()));
  Recording r;
  r.strokes = {{{0, 0, 0}}};
  EXPECT_EQ(nlohmann::json::parse(svc.handle_classify(request_body(r, 3)).body).size(), 3u);
  EXPECT_EQ(nlohmann::json::parse(svc.handle_classify(request_body(r, 50)).body).size(), 10u);
  const auto bare = svc.handle_classify(serialize_recording(r));
  EXPECT_EQ(bare.status, 200);
  EXPECT_EQ(nlohmann::json::parse(bare.body).size(), 10u);
  EXPECT_EQ(svc.handle_classify(request_body(r, 0)).status, 400);
}

TEST(Classify, RejectsBadRequests) {
  ClassificationService svc;
  svc.set_model(classifier(uniform_model()));
  for (const char* body : {"not json", "{}", "[]", "[[]]", "[[{\"x\":1}]]", "{\"recording\": 5}",
                           "{\"recording\": [[{\"x\":0,\"y\":0,\"time\":0}]], \"k\": \"many\"}"}) {
    const auto res = svc.handle_classify(body);
    EXPECT_EQ(res.status, 400) << body;
    EXPECT_TRUE(nlohmann::json::parse(res.body).contains("error")) << body;
  }
}

TEST(Classify, OversizeBody) {
  ServiceConfig cfg;
  cfg.max_body_bytes = 64;
  ClassificationService svc(cfg);
  svc.set_model(classifier(uniform_model()));
  EXPECT_EQ(svc.handle_classify(std::string(65, ' ')).status, 413);
}

TEST(Classify, NoModel) {
  ClassificationService svc;
  EXPECT_EQ(svc.handle_classify("[[{\"x\":0,\"y\":0,\"time\":0}]]").status, 503);
  EXPECT_EQ(svc.handle_symbols().status, 503);
}

TEST(Health, DegradedThenOk) {
  ClassificationService svc;
  auto doc = nlohmann::json::parse(svc.handle_health().body);
  EXPECT_EQ(doc["status"], "degraded");
  svc.set_model(classifier(uniform_model()));
  doc = nlohmann::json::parse(svc.handle_health().body);
  EXPECT_EQ(doc["status"], "ok");
  EXPECT_EQ(doc["backend"], "mlp");
  EXPECT_EQ(doc["topology"], "1:12");
  EXPECT_EQ(doc["symbols"], kSymbols);
  EXPECT_EQ(doc["feature_hash"].get<std::string>().size(), 16u);
  const auto symbols = nlohmann::json::parse(svc.handle_symbols().body);
  EXPECT_EQ(symbols["30"], "s3");
}

TEST(Health, ReloadChangesModelHash) {
  TempDir dir("reload");
  const fs::path file = dir.path / "model.json";
  detail::write_file(file, serialize_model(uniform_model()));
  ServiceConfig cfg;
  cfg.model_path = file;
  ClassificationService svc(cfg);
  svc.load_model();
  const auto before = nlohmann::json::parse(svc.handle_health().body)["model_hash"].get<std::string>();
  detail::write_file(file, serialize_model(stroke_count_model()));
  const auto reload = svc.handle_reload();
  ASSERT_EQ(reload.status, 200) << reload.body;
  const auto after = nlohmann::json::parse(reload.body)["model_hash"].get<std::string>();
  EXPECT_NE(before, after);

  detail::write_file(file, "{broken");
  EXPECT_EQ(svc.handle_reload().status, 500);
  EXPECT_EQ(nlohmann::json::parse(svc.handle_health().body)["model_hash"], after);
}

TEST(Http, RoutesOverLoopback) {
  TempDir dir("http");
  detail::write_file(dir.path / "index.html", "<html>symrec</html>");
  ServiceConfig cfg;
  cfg.static_dir = dir.path;
  ClassificationService svc(cfg);
  svc.set_model(classifier(uniform_model()));
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(nlohmann::json::parse(health->body)["status"], "ok");
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");

  auto classify = client.Post("/classify", "{\"recording\":[[{\"x\":1,\"y\":2,\"time\":3}]],\"k\":2}", "application/json");
  ASSERT_TRUE(classify);
  EXPECT_EQ(classify->status, 200);
  EXPECT_EQ(nlohmann::json::parse(classify->body).size(), 2u);

  auto bad = client.Post("/classify", "not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  auto page = client.Get("/index.html");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->status, 200);
  EXPECT_EQ(page->body, "<html>symrec</html>");
  auto missing = client.Get("/nothing.js");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  worker.join();
}

TEST(Http, MissingStaticDirectoryIsConfigError) {
  ServiceConfig cfg;
  cfg.static_dir = "/definitely/not/here";
  ClassificationService svc(cfg);
  httplib::Server server;
  EXPECT_THROW(svc.mount(server), ConfigError);
}
